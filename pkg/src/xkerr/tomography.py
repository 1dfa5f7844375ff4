"""Two-mode (photon number x polarization) density-matrix tomography.

Basis ordering everywhere is ``(|0s 0c>, |0s 1c>, |1s 0c>, |1s 1c>)``: the
signal photon number is the most significant index, the control
polarization (0 = sigma-, 1 = sigma+) the least.
"""
from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

log = logging.getLogger(__name__)

BASIS = ("0s0c", "0s1c", "1s0c", "1s1c")
BASIS_LABEL = "|0s0c>,|0s1c>,|1s0c>,|1s1c>"

_HERM_TOL = 1e-12
_TRACE_TOL = 1e-9
_PSD_TOL = 1e-9

_S2 = 1.0 / math.sqrt(2.0)
ZERO = np.array([1.0, 0.0], complex)
ONE = np.array([0.0, 1.0], complex)
PLUS = _S2 * (ZERO + ONE)           # |0> + |1>
MINUS_I = _S2 * (ZERO - 1j * ONE)   # |0> - i|1>
PLUS_I = _S2 * (ZERO + 1j * ONE)    # |0> + i|1>

SIGMA_Y = np.array([[0, -1j], [1j, 0]])
_YY = np.kron(SIGMA_Y, SIGMA_Y)


class TomographyError(ValueError):
    pass


class MatrixMismatchError(TomographyError):
    """Transcribed and constructed reconstruction matrices disagree."""

    def __init__(self, msg, mismatched):
        super().__init__(msg)
        self.mismatched = mismatched


class NonConvergenceError(RuntimeError):
    """Maximum-likelihood search stopped at the evaluation cap.

    ``best`` holds the best result found.
    """

    def __init__(self, msg, best):
        super().__init__(msg)
        self.best = best


class DegenerateFringeError(TomographyError):
    pass


# --------------------------------------------------------------------------
# density matrices


@dataclass(frozen=True)
class DensityMatrix4:
    """Hermitian, unit-trace 4x4 matrix; ``is_psd`` flags physicality."""

    rho: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rho, dtype=complex)
        if r.shape != (4, 4):
            raise TomographyError(f"expected a 4x4 matrix, got {r.shape}")
        if np.max(np.abs(r - r.conj().T)) > _HERM_TOL * max(1.0, np.max(np.abs(r))):
            raise TomographyError("matrix is not Hermitian")
        if abs(np.trace(r).real - 1.0) > _TRACE_TOL:
            raise TomographyError(f"trace {np.trace(r).real:.12g} != 1")
        object.__setattr__(self, "rho", 0.5 * (r + r.conj().T))

    def __array__(self, dtype=None, copy=None):
        return self.rho if dtype is None else self.rho.astype(dtype)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.rho)

    @property
    def is_psd(self) -> bool:
        return bool(self.eigenvalues.min() >= -_PSD_TOL)


def as_density(rho, normalize: bool = False) -> DensityMatrix4:
    if isinstance(rho, DensityMatrix4):
        return rho
    r = np.asarray(rho, dtype=complex)
    if normalize:
        r = r / np.trace(r).real
    return DensityMatrix4(r)


def ket_to_rho(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


# --------------------------------------------------------------------------
# tomographic states


@dataclass(frozen=True)
class TomographicState:
    """One projection setting.

    ``theta_s`` is the signal reference phase (``None`` without reference);
    ``hwp``/``qwp`` are the analysis wave-plate angles after the cavity.
    ``fringe_angle`` is the phase at which the measured fringe is read:
    ``theta_s`` when the signal carries a reference, otherwise the
    relative control phase ``theta_c``.
    """

    index: int
    signal: np.ndarray = field(repr=False)
    control: np.ndarray = field(repr=False)
    signal_label: str
    control_label: str
    theta_s: float | None
    hwp: float
    qwp: float
    fringe_angle: float | None = None

    @property
    def ket(self) -> np.ndarray:
        return np.kron(self.signal, self.control)


_P = math.pi
_TABLE = [
    # nu, signal, control, theta_s, hwp, qwp, fringe angle
    (1, "0", "0", None, 0.0, _P / 4, None),
    (2, "0", "1", None, 0.0, -_P / 4, None),
    (3, "1", "1", None, 0.0, -_P / 4, None),
    (4, "1", "0", None, 0.0, _P / 4, None),
    (5, "0-i1", "0", 3 * _P / 2, 0.0, _P / 4, 3 * _P / 2),
    (6, "0-i1", "1", 3 * _P / 2, 0.0, -_P / 4, 3 * _P / 2),
    (7, "0+1", "1", 0.0, 0.0, -_P / 4, 0.0),
    (8, "0+1", "0", 0.0, 0.0, _P / 4, 0.0),
    (9, "0+1", "0-i1", 0.0, -_P / 8, 0.0, 0.0),
    (10, "0+1", "0+1", 0.0, 0.0, 0.0, 0.0),
    (11, "0-i1", "0+1", 3 * _P / 2, 0.0, 0.0, 3 * _P / 2),
    (12, "0", "0+1", None, 0.0, 0.0, 0.0),
    (13, "1", "0+1", None, 0.0, 0.0, 0.0),
    (14, "1", "0+i1", None, _P / 8, 0.0, _P / 2),
    (15, "0", "0+i1", None, _P / 8, 0.0, _P / 2),
    (16, "0-i1", "0+i1", 3 * _P / 2, _P / 8, 0.0, 3 * _P / 2),
]
_KETS = {"0": ZERO, "1": ONE, "0+1": PLUS, "0-i1": MINUS_I, "0+i1": PLUS_I}


def tomographic_states() -> list[TomographicState]:
    """The 16 projection settings, indexed 1..16."""
    return [
        TomographicState(nu, _KETS[s].copy(), _KETS[c].copy(), s, c, ts, h, q, fa)
        for nu, s, c, ts, h, q, fa in _TABLE
    ]


def projectors() -> np.ndarray:
    """Array of shape (16, 4) holding the projection kets."""
    return np.array([st.ket for st in tomographic_states()])


def projections(rho) -> np.ndarray:
    """``<psi_nu| rho |psi_nu>`` for the 16 settings."""
    kets = projectors()
    r = np.asarray(rho, dtype=complex)
    return np.einsum("ki,ij,kj->k", kets.conj(), r, kets).real


# --------------------------------------------------------------------------
# reconstruction matrices


def _pauli_basis() -> list[np.ndarray]:
    paulis = [np.eye(2), np.array([[0, 1], [1, 0]]), SIGMA_Y, np.diag([1.0, -1.0])]
    return [np.kron(a, b) / 2.0 for a in paulis for b in paulis]


def derived_m_matrices() -> np.ndarray:
    """Reconstruction matrices built from the projection kets.

    With an orthonormal operator basis ``G_mu`` and
    ``B[nu, mu] = <psi_nu|G_mu|psi_nu>``, ``M_nu = sum_mu (B^-1)[mu, nu] G_mu``
    so that ``sum_nu M_nu <psi_nu|rho|psi_nu> = rho``.
    """
    G = np.array(_pauli_basis())
    kets = projectors()
    B = np.einsum("ki,mij,kj->km", kets.conj(), G, kets)
    Binv = np.linalg.inv(B)
    return np.einsum("mn,mij->nij", Binv, G)


def _m(rows):
    return 0.5 * np.array(rows, dtype=complex)


_i = 1j
# as typeset, with the common 1/2 prefactor on every matrix
PRINTED_M = np.array([
    _m([[2, -(1 - _i), -(1 + _i), 1], [-(1 + _i), 0, _i, 0], [-(1 - _i), -_i, 0, 0], [1, 0, 0, 0]]),
    _m([[0, -(1 - _i), 0, 1], [-(1 + _i), 2, _i, -(1 + _i)], [0, -_i, 0, 0], [1, -(1 - _i), 0, 0]]),
    _m([[0, 0, 0, 1], [0, 0, _i, -(1 + _i)], [0, -_i, 0, -(1 - _i)], [1, -(1 - _i), -(1 + _i), 2]]),
    _m([[0, 0, -(1 + _i), 1], [0, 0, _i, 0], [-(1 - _i), -_i, 2, -(1 - _i)], [1, 0, -(1 + _i), 0]]),
    _m([[0, 0, 2 * _i, -(1 + _i)], [0, 0, (1 - _i), 0], [-2 * _i, (1 + _i), 0, 0], [-(1 - _i), 0, 0, 0]]),
    _m([[0, 0, 0, -(1 + _i)], [0, 0, (1 - _i), 2 * _i], [0, (1 + _i), 0, 0], [-(1 - _i), -2 * _i, 0, 0]]),
    _m([[0, 0, 0, -(1 + _i)], [0, 0, -(1 - _i), 2], [0, -(1 + _i), 0, 0], [-(1 - _i), 2, 0, 0]]),
    _m([[0, 0, 2, -(1 + _i)], [0, 0, -(1 - _i), 0], [2, -(1 + _i), 0, 0], [-(1 - _i), 0, 0, 0]]),
    _m([[0, 0, 0, _i], [0, 0, -_i, 0], [0, _i, 0, 0], [-_i, 0, 0, 0]]),
    _m([[0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0], [1, 0, 0, 0]]),
    _m([[0, 0, 0, _i], [0, 0, _i, 0], [0, -_i, 0, 0], [-_i, 0, 0, 0]]),
    _m([[0, 2, 0, -(1 + _i)], [2, 0, -(1 + _i), 0], [0, -(1 - _i), 0, 0], [-(1 - _i), 0, 0, 0]]),
    _m([[0, 0, 0, -(1 + _i)], [0, 0, -(1 + _i), 0], [0, -(1 - _i), 0, 2], [-(1 - _i), 0, 2, 0]]),
    _m([[0, 0, 0, -(1 - _i)], [0, 0, (1 - _i), 0], [0, (1 + _i), 0, -2 * _i], [-(1 + _i), 0, 2 * _i, 0]]),
    _m([[0, -2 * _i, 0, -(1 - _i)], [2 * _i, 0, (1 - _i), 0], [0, (1 + _i), 0, 0], [-(1 + _i), 0, 0, 0]]),
    _m([[0, 0, 0, 1], [0, 0, -1, 0], [0, -1, 0, 0], [1, 0, 0, 0]]),
])


def printed_m_matrices() -> np.ndarray:
    return PRINTED_M.copy()


def m_matrix_mismatches(tol: float = 1e-12) -> dict[int, float]:
    """Max element-wise deviation, keyed by 1-based index, for each printed
    matrix that differs from its constructed counterpart by more than ``tol``."""
    dev = np.abs(PRINTED_M - derived_m_matrices()).max(axis=(1, 2))
    return {nu + 1: float(d) for nu, d in enumerate(dev) if d > tol}


def check_m_matrices(tol: float = 1e-12) -> None:
    bad = m_matrix_mismatches(tol)
    if bad:
        raise MatrixMismatchError(
            "printed reconstruction matrices disagree with the projector construction for nu="
            + ", ".join(str(k) for k in bad),
            bad,
        )


def m_matrices(source: str = "derived") -> np.ndarray:
    """The 16 reconstruction matrices, shape (16, 4, 4).

    ``source="derived"`` builds them from the projection kets (used by the
    reconstruction); ``"printed"`` returns the typeset values after checking
    them against the construction.
    """
    if source == "derived":
        return derived_m_matrices()
    if source == "printed":
        check_m_matrices()
        return printed_m_matrices()
    raise ValueError(f"unknown source {source!r}")


# --------------------------------------------------------------------------
# coincidences


@dataclass
class CoincidenceSet:
    """Tomographic coincidence data.

    ``n`` holds n_1..n_16 (entries 5..16 may be NaN before reconstruction);
    ``interference`` holds I_5..I_16 and ``contrast_ref`` the fringe
    contrasts measured without interaction. ``fringe_phase`` keeps the
    fitted fringe phases, when fringes were fitted.
    """

    n: np.ndarray
    interference: np.ndarray | None = None
    contrast_ref: np.ndarray | float = 1.0
    fringe_phase: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.n = np.asarray(self.n, dtype=float).reshape(16)
        if np.any(self.n[~np.isnan(self.n)] < 0):
            raise TomographyError("coincidence counts must be >= 0")
        if np.any(np.isnan(self.n[:4])):
            raise TomographyError("n_1..n_4 are required")
        c = np.broadcast_to(np.asarray(self.contrast_ref, dtype=float), (12,)).copy()
        if np.any(c <= 0) or np.any(c > 1):
            raise TomographyError("contrast_ref must lie in (0, 1]")
        self.contrast_ref = c
        if self.interference is not None:
            ii = np.asarray(self.interference, dtype=float).reshape(12)
            if np.any(np.abs(ii) > 1.0 + 1e-9):
                raise TomographyError("interference parameters must lie in [-1, 1]")
            self.interference = ii


def fit_fringe(angles, counts):
    """Least-squares ``a + b cos(x) + c sin(x)``.

    Returns ``(a, b, c, cov)`` with ``cov`` the 3x3 parameter covariance.
    """
    x = np.asarray(angles, dtype=float)
    y = np.asarray(counts, dtype=float)
    if x.size < 3 or x.size != y.size:
        raise TomographyError("fringe needs >= 3 samples with matching angles")
    A = np.column_stack([np.ones_like(x), np.cos(x), np.sin(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = max(x.size - 3, 1)
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.pinv(A.T @ A)
    return coef[0], coef[1], coef[2], cov


def beat_phase(times, beat_frequency: float = 30e6) -> np.ndarray:
    """Phase of the signal/reference beatnote at sample ``times`` (s)."""
    return 2.0 * np.pi * beat_frequency * np.asarray(times, dtype=float)


def normalize_fringes(
    raw: dict,
    n_basic,
    conditioning_totals: dict | None = None,
    contrast_ref=1.0,
    strict: bool = True,
) -> CoincidenceSet:
    """Interference parameters from fringe records.

    Parameters
    ----------
    raw : dict
        ``{nu: (angles, counts)}`` for nu = 5..16; ``angles`` are signal
        reference phases (or control analysis phases for nu = 12..15).
    n_basic : sequence of 4 floats
        Coincidences n_1..n_4.
    conditioning_totals : dict, optional
        ``{nu: total conditioning-port counts over the record}``; defaults to
        the summed fringe counts.
    contrast_ref : float or sequence of 12
        Fringe amplitude measured without interaction.
    strict : bool
        Raise :class:`DegenerateFringeError` when a fitted amplitude is
        below three standard errors. Otherwise weak fringes are kept, and
        noisy parameters that land outside [-1, 1] are clipped with a
        warning.

    Notes
    -----
    For each nu the fitted fringe value at the setting's fringe angle has
    the record mean subtracted, is divided by the conditioning counts per
    sample, then by the reference contrast.
    """
    states = tomographic_states()
    contrast = np.broadcast_to(np.asarray(contrast_ref, dtype=float), (12,))
    interference = np.empty(12)
    phases = np.empty(12)
    for k, nu in enumerate(range(5, 17)):
        if nu not in raw:
            raise TomographyError(f"missing fringe record for nu={nu}")
        angles, counts = raw[nu]
        a, b, c, cov = fit_fringe(angles, counts)
        amp = math.hypot(b, c)
        if amp > 0:
            g = np.array([b, c]) / amp
            amp_err = math.sqrt(max(g @ cov[1:, 1:] @ g, 0.0))
        else:
            amp_err = math.sqrt(max(np.trace(cov[1:, 1:]) / 2, 0.0))
        # exact (noise-free) records have a round-off sized error
        if strict and amp_err > 1e-12 * abs(a) and amp < 3.0 * amp_err:
            raise DegenerateFringeError(
                f"nu={nu}: fringe amplitude {amp:.3g} below 3x its error {amp_err:.3g}")
        counts = np.asarray(counts, dtype=float)
        total = counts.sum() if conditioning_totals is None else conditioning_totals[nu]
        if not total > 0:
            raise TomographyError(f"nu={nu}: conditioning total must be > 0")
        per_sample = total / counts.size
        theta = states[nu - 1].fringe_angle
        value = b * math.cos(theta) + c * math.sin(theta)
        interference[k] = value / per_sample / contrast[k]
        phases[k] = math.atan2(-c, b)
    outside = np.abs(interference) > 1.0
    if not strict and outside.any():
        log.warning("clipping interference parameters for nu=%s to [-1, 1]",
                    ", ".join(str(5 + k) for k in np.flatnonzero(outside)))
        interference = np.clip(interference, -1.0, 1.0)
    return CoincidenceSet(
        n=np.concatenate([np.asarray(n_basic, dtype=float), np.full(12, np.nan)]),
        interference=interference,
        contrast_ref=contrast,
        fringe_phase=phases,
    )


def _cross_terms(n1, n2, n3, n4):
    r = math.sqrt
    both = 0.5 * r((r(n1 * n4) + r(n2 * n3)) ** 2 + (r(n2 * n4) - r(n1 * n3)) ** 2)
    dd_base = (n1 + n2 + n3 + n4 + 2 * r(n1 * n2) + 2 * r(n3 * n4)) / 4.0
    dd = 0.5 * (r(n1) + r(n2)) * (r(n3) + r(n4))
    quarter = (n1 + n2 + n3 + n4) / 4.0
    # (base, coefficient of I_nu) for nu = 5..16
    return [
        ((n1 + n4) / 2, r(n1 * n4)),
        ((n2 + n3) / 2, r(n2 * n3)),
        ((n2 + n3) / 2, r(n2 * n3)),
        ((n1 + n4) / 2, r(n1 * n4)),
        (quarter, both),
        (dd_base, dd),
        (dd_base, dd),
        ((n1 + n2) / 2, r(n1 * n2)),
        ((n3 + n4) / 2, r(n3 * n4)),
        ((n3 + n4) / 2, r(n3 * n4)),
        ((n1 + n2) / 2, r(n1 * n2)),
        (quarter, both),
    ]


def reconstruct_coincidences(cs: CoincidenceSet, epsilon_d: float = 1.0) -> np.ndarray:
    """All 16 coincidences from n_1..n_4 and the interference parameters.

    n_1..n_4 are first divided by ``epsilon_d``. Each of n_5..n_16 is
    ``base(n_1..n_4) + coef(n_1..n_4) * I_nu``.
    """
    if not 0 < epsilon_d <= 1:
        raise ValueError("epsilon_d must lie in (0, 1]")
    if cs.interference is None:
        raise TomographyError("interference parameters are required")
    n1, n2, n3, n4 = (cs.n[:4] / epsilon_d).tolist()
    out = np.empty(16)
    out[:4] = (n1, n2, n3, n4)
    for k, (base, coef) in enumerate(_cross_terms(n1, n2, n3, n4)):
        out[4 + k] = base + coef * cs.interference[k]
    if np.any(out < -1e-9 * max(out.max(), 1.0)):
        bad = [i + 1 for i in np.flatnonzero(out < 0)]
        raise TomographyError(f"reconstructed coincidences negative for nu={bad}")
    return np.clip(out, 0.0, None)


def interference_from_counts(n) -> np.ndarray:
    """Inverse of :func:`reconstruct_coincidences` at ``epsilon_d = 1``.

    Where the coefficient vanishes the parameter is set to 0.
    """
    n = np.asarray(n, dtype=float)
    out = np.zeros(12)
    for k, (base, coef) in enumerate(_cross_terms(*n[:4])):
        if coef > 0:
            out[k] = (n[4 + k] - base) / coef
    return out


# --------------------------------------------------------------------------
# linear inversion and maximum likelihood


def linear_inversion(n) -> DensityMatrix4:
    """``sum_nu M_nu n_nu / (n_1 + n_2 + n_3 + n_4)``; may be non-PSD."""
    n = np.asarray(n, dtype=float).reshape(16)
    norm = n[:4].sum()
    if not norm > 0:
        raise ZeroDivisionError("n_1 + n_2 + n_3 + n_4 must be > 0")
    rho = np.einsum("n,nij->ij", n, derived_m_matrices()) / norm
    return DensityMatrix4(rho)


# T is lower triangular; (row, col, index of real part, index of imag part)
_T_OFFDIAG = [(1, 0, 4, 5), (2, 1, 6, 7), (3, 2, 8, 9), (2, 0, 10, 11), (3, 1, 12, 13), (3, 0, 14, 15)]


def t_to_matrix(t) -> np.ndarray:
    T = np.zeros((4, 4), complex)
    T[np.diag_indices(4)] = t[:4]
    for r, c, a, b in _T_OFFDIAG:
        T[r, c] = t[a] + 1j * t[b]
    return T


def matrix_to_t(T) -> np.ndarray:
    t = np.empty(16)
    t[:4] = np.diag(T).real
    for r, c, a, b in _T_OFFDIAG:
        t[a], t[b] = T[r, c].real, T[r, c].imag
    return t


def rho_from_t(t) -> np.ndarray:
    T = t_to_matrix(t)
    A = T.conj().T @ T
    return A / np.trace(A).real


def t_from_rho(rho, floor: float = 1e-10) -> np.ndarray:
    """Lower-triangular ``T`` parameters with ``T^dag T`` proportional to ``rho``.

    Negative eigenvalues are raised to ``floor`` first so the
    factorization exists for a non-physical linear-inversion estimate.
    """
    r = np.asarray(rho, dtype=complex)
    r = 0.5 * (r + r.conj().T)
    w, v = np.linalg.eigh(r)
    w = np.clip(w, floor, None)
    r = (v * w) @ v.conj().T
    J = np.eye(4)[::-1]
    L = np.linalg.cholesky(J @ r @ J)
    U = J @ L @ J  # upper triangular, r = U U^dag
    return matrix_to_t(U.conj().T)


@dataclass(frozen=True)
class MaxLikParams:
    t: np.ndarray

    @property
    def T(self) -> np.ndarray:
        return t_to_matrix(self.t)

    @property
    def rho(self) -> np.ndarray:
        return rho_from_t(self.t)


@dataclass(frozen=True)
class MaxLikResult:
    rho: DensityMatrix4
    params: MaxLikParams
    likelihood: float
    n_fev: int
    converged: bool


def poisson_sigma(n) -> np.ndarray:
    """Per-setting standard deviation ``sqrt(n)``, floored at 1."""
    return np.sqrt(np.maximum(np.asarray(n, dtype=float), 1.0))


def _objective(n, sigma, N):
    kets = projectors()
    P = np.einsum("ki,kj->kij", kets, kets.conj())  # |psi><psi|
    w = 1.0 / (2.0 * N * sigma**2)

    def f(t):
        T = t_to_matrix(t)
        A = T.conj().T @ T
        tr = np.trace(A).real
        p = np.einsum("ki,ij,kj->k", kets.conj(), A, kets).real / tr
        r = N * p - n
        return float(np.sum(w * r * r))

    def grad(t):
        T = t_to_matrix(t)
        A = T.conj().T @ T
        tr = np.trace(A).real
        p = np.einsum("ki,ij,kj->k", kets.conj(), A, kets).real / tr
        r = N * p - n
        c = 2.0 * w * r * N / tr
        # dL/dA, Hermitian
        G = np.einsum("k,kij->ij", c, P) - np.sum(c * p) * np.eye(4)
        return matrix_to_t(2.0 * T @ G)

    return f, grad


def likelihood(rho_or_t, n) -> float:
    """Weighted squared residual of the predicted coincidences."""
    n = np.asarray(n, dtype=float)
    N = n[:4].sum()
    x = np.asarray(rho_or_t)
    rho = x if x.shape == (4, 4) else rho_from_t(x)
    r = N * projections(rho) - n
    return float(np.sum(r * r / (2.0 * N * poisson_sigma(n) ** 2)))


def maxlik_reconstruct(n, init=None, max_fev: int = 100_000, simplex_fev: int = 3000) -> MaxLikResult:
    """Physical density matrix minimizing the weighted residual.

    ``rho = T^dag T / Tr[T^dag T]`` with ``T`` lower triangular. The search
    starts from the factorization of ``init`` (default: the linear-inversion
    estimate), runs a Nelder-Mead simplex, then polishes with BFGS on the
    analytic gradient.

    Raises
    ------
    NonConvergenceError
        If ``max_fev`` evaluations pass without meeting the tolerances
        (relative decrease below 1e-10 and step below 1e-8); ``best`` is
        attached.
    """
    n = np.asarray(n, dtype=float).reshape(16)
    if np.any(n < 0):
        raise TomographyError("coincidences must be >= 0")
    N = n[:4].sum()
    if not N > 0:
        raise ZeroDivisionError("n_1 + n_2 + n_3 + n_4 must be > 0")
    start = linear_inversion(n) if init is None else init
    t0 = t_from_rho(np.asarray(start))
    scale = np.sqrt(np.sum(t0**2))
    t0 = t0 / scale
    f, grad = _objective(n, poisson_sigma(n), N)

    fev = 0
    nm = optimize.minimize(
        f, t0, method="Nelder-Mead",
        options={"maxfev": min(simplex_fev, max_fev), "xatol": 1e-8, "fatol": 1e-14, "adaptive": True},
    )
    fev += nm.nfev
    x, fx = (nm.x, nm.fun) if nm.fun <= f(t0) else (t0, f(t0))

    converged = False
    prev = fx
    while fev < max_fev:
        # gtol is below what the line search can resolve; convergence is judged below
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", optimize.OptimizeWarning)
            warnings.filterwarnings("ignore", message="The line search algorithm did not converge")
            res = optimize.minimize(
                f, x, jac=grad, method="BFGS",
                options={"gtol": 1e-14, "maxiter": 2000},
            )
        fev += res.nfev
        step = float(np.max(np.abs(res.x - x)))
        if res.fun <= fx:
            x, fx = res.x, res.fun
        rel = (prev - fx) / max(abs(prev), 1e-300)
        if fx < 1e-20 or (rel < 1e-10 and step < 1e-8):
            converged = True
            break
        prev = fx

    rho = DensityMatrix4(rho_from_t(x))
    out = MaxLikResult(rho, MaxLikParams(x / np.sqrt(np.sum(x**2))), float(fx), fev, converged)
    if not converged:
        raise NonConvergenceError(f"maximum likelihood not converged after {fev} evaluations", out)
    return out


# --------------------------------------------------------------------------
# metrics


def remove_local_phases(rho) -> np.ndarray:
    """Rotate the single-mode phases so rho[0,1] and rho[0,2] are real >= 0.

    Applies ``D rho D^dag`` with ``D = diag(1, e^{ia}, e^{ib}, e^{i(a+b)})``,
    a product of signal and control phase shifts, so entanglement and the
    interaction phase are unchanged.
    """
    r = np.asarray(rho, dtype=complex)
    a = np.angle(r[0, 1]) if abs(r[0, 1]) > 0 else 0.0
    b = np.angle(r[0, 2]) if abs(r[0, 2]) > 0 else 0.0
    d = np.exp(1j * np.array([0.0, a, b, a + b]))
    return d[:, None] * r * d.conj()[None, :]


def concurrence(rho) -> float:
    """Two-qubit concurrence ``max(0, l1 - l2 - l3 - l4)``.

    ``l_i`` are the square roots of the eigenvalues of ``rho (Y x Y) rho* (Y x Y)``
    in decreasing order.

    Raises
    ------
    TomographyError
        If ``rho`` has an eigenvalue below -1e-9.
    """
    r = np.asarray(rho, dtype=complex)
    w, v = np.linalg.eigh(0.5 * (r + r.conj().T))
    if w.min() < -_PSD_TOL:
        raise TomographyError("concurrence needs a positive semidefinite matrix")
    # l_i are the singular values of sqrt(rho) (Y x Y) sqrt(rho)*, which
    # stays accurate for rank-deficient states where eigvals(rho rho~) does not
    sq = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    lam = np.linalg.svd(sq @ _YY @ sq.conj(), compute_uv=False)
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def purity(rho) -> float:
    r = np.asarray(rho, dtype=complex)
    return float(np.einsum("ij,ji->", r, r).real)


def nonlinear_phase(rho) -> float:
    """Phase of the ``|1s1c>`` amplitude relative to ``|0s0c>``.

    Equals ``-Arg(rho[0, 3])`` (``Arg`` of the element in row 4, column 1),
    so a state ``p00|00> + ... + p11 e^{i theta}|11>`` with real ``p_ij``
    returns ``theta``.
    """
    c = np.asarray(rho, dtype=complex)[3, 0]
    if abs(c) <= 1e-9:
        raise TomographyError("corner element vanishes; phase undefined")
    return float(np.angle(c))


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``."""
    r = np.asarray(rho, dtype=complex)
    s = np.asarray(sigma, dtype=complex)
    w, v = np.linalg.eigh(0.5 * (r + r.conj().T))
    sr = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    m = sr @ s @ sr
    ev = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    return float(np.sum(np.sqrt(np.clip(ev, 0, None))) ** 2)


def phase_entangled_state(phi: float, n_s: float, n_c: float) -> np.ndarray:
    """Qubit-truncated product of coherent states with a cross phase.

    Amplitudes ``(1, sqrt(n_c), sqrt(n_s), sqrt(n_s n_c) e^{i phi})``,
    normalized.
    """
    if n_s < 0 or n_c < 0:
        raise ValueError("mean photon numbers must be >= 0")
    psi = np.array([1.0, math.sqrt(n_c), math.sqrt(n_s), math.sqrt(n_s * n_c) * np.exp(1j * phi)])
    return psi / np.linalg.norm(psi)


def ideal_concurrence_bound(phi: float, n_s: float | None = None, n_c: float | None = None) -> float:
    """Concurrence reachable with a cross phase ``phi``.

    Without photon numbers the inputs are equal superpositions and the
    result is ``|sin(phi/2)|``. With ``n_s``, ``n_c`` the qubit-truncated
    coherent state of :func:`phase_entangled_state` is built and its
    concurrence evaluated.
    """
    if n_s is None and n_c is None:
        return abs(math.sin(0.5 * phi))
    if n_s is None or n_c is None:
        raise ValueError("give both n_s and n_c for the coherent-state bound")
    return concurrence(ket_to_rho(phase_entangled_state(phi, n_s, n_c)))


def state_metrics(rho) -> dict:
    r = remove_local_phases(rho)
    out = {"concurrence": concurrence(r), "purity": purity(r)}
    try:
        out["nonlinear_phase_rad"] = nonlinear_phase(r)
    except TomographyError:
        out["nonlinear_phase_rad"] = float("nan")
    return out


# --------------------------------------------------------------------------
# bootstrap


@dataclass(frozen=True)
class BootstrapResult:
    std_concurrence: float
    std_phase: float
    n_ok: int
    n_failed: int
    concurrences: np.ndarray = field(repr=False)
    phases: np.ndarray = field(repr=False)


def reconstruct_metrics(n) -> dict:
    """Linear inversion, maximum likelihood and metrics for one data set."""
    ml = maxlik_reconstruct(n)
    return state_metrics(ml.rho)


def bootstrap_errors(counts, n_resamples: int = 100, seed: int = 0, threads: int = 1) -> BootstrapResult:
    """Half-sample spread of the concurrence and nonlinear phase.

    ``counts`` are integer event numbers per setting. Each resample draws
    half of all events without replacement (multivariate hypergeometric)
    and reruns the reconstruction. Resample ``i`` uses its own Philox
    stream keyed by ``(seed, i)``. Failed resamples are logged and counted.
    """
    counts = np.asarray(counts)
    if counts.shape != (16,) or np.any(counts < 0):
        raise TomographyError("counts must be 16 non-negative integers")
    if not np.all(np.equal(np.mod(counts, 1), 0)):
        raise TomographyError("bootstrap needs integer event counts")
    counts = counts.astype(np.int64)
    if counts.sum() >= 10**9:
        raise TomographyError("half-sampling supports fewer than 1e9 events in total")
    half = int(counts.sum()) // 2

    def one(i):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(i,))))
        sub = rng.multivariate_hypergeometric(counts, half, method="marginals")
        try:
            m = reconstruct_metrics(sub.astype(float))
        except (TomographyError, NonConvergenceError, ZeroDivisionError, np.linalg.LinAlgError) as exc:
            log.warning("bootstrap resample %d failed: %s", i, exc)
            return None
        return m["concurrence"], m["nonlinear_phase_rad"]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(one, range(n_resamples)))
    else:
        results = [one(i) for i in range(n_resamples)]
    ok = [r for r in results if r is not None]
    conc = np.array([r[0] for r in ok])
    ph = np.array([r[1] for r in ok])
    ddof = 1 if len(ok) > 1 else 0
    return BootstrapResult(
        float(np.std(conc, ddof=ddof)) if ok else float("nan"),
        float(np.std(ph, ddof=ddof)) if ok else float("nan"),
        len(ok),
        len(results) - len(ok),
        conc,
        ph,
    )
