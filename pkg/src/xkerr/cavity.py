"""Closed-form dispersive atom-cavity model.

All detunings and linewidths are angular frequencies in rad/s. Functions
accept scalar or array detunings and broadcast with numpy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

TWO_PI = 2.0 * np.pi

# slack on |chi| <= 1 for round-off
_CHI_SLACK = 1e-9


@dataclass(frozen=True)
class CavityParams:
    """Physical constants of the atom-cavity system.

    Parameters
    ----------
    kappa0 : float
        Empty-cavity linewidth (rad/s).
    g : float
        Single-photon coupling, half the vacuum Rabi frequency (rad/s).
    Gamma : float
        Excited-state decay rate (rad/s).
    eta : float
        Cooperativity. Kept independent of ``g`` because the ensemble
        average differs from the single-atom value.
    delta_c : float
        Light-cavity detuning (rad/s).
    finesse, waist, wavelength : float
        Cavity finesse, mode waist (m) and wavelength (m).
    check_consistency : bool
        If set, require ``eta`` to match ``4 g**2 / (kappa0 Gamma)`` within 5 %.
    """

    kappa0: float
    g: float
    Gamma: float
    eta: float
    delta_c: float = 0.0
    finesse: float = 77.1e3
    waist: float = 35.5e-6
    wavelength: float = 852.347e-9
    check_consistency: bool = field(default=False, compare=False)

    def __post_init__(self):
        for name in ("kappa0", "Gamma", "finesse", "waist", "wavelength"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)!r}")
        if not self.g >= 0:
            raise ValueError(f"g must be >= 0, got {self.g!r}")
        if not self.eta >= 0:
            raise ValueError(f"eta must be >= 0, got {self.eta!r}")
        if not np.isfinite(self.delta_c):
            raise ValueError("delta_c must be finite")
        if self.check_consistency:
            single = self.single_atom_cooperativity
            if abs(single - self.eta) > 0.05 * self.eta:
                raise ValueError(
                    f"eta={self.eta:.4g} inconsistent with 4g^2/(kappa0 Gamma)={single:.4g}"
                )

    @classmethod
    def cs_experiment(cls, **overrides) -> "CavityParams":
        """Parameters of the Cs cavity experiment (eta = 3.8)."""
        base = cls(
            kappa0=TWO_PI * 150e3,
            g=TWO_PI * 0.8e6,
            Gamma=TWO_PI * 5.2e6,
            eta=3.8,
        )
        return replace(base, **overrides) if overrides else base

    @property
    def single_atom_cooperativity(self) -> float:
        return 4.0 * self.g**2 / (self.kappa0 * self.Gamma)

    @property
    def k(self) -> float:
        return TWO_PI / self.wavelength


@dataclass(frozen=True)
class Susceptibility:
    """Complex atomic response; ``re`` and ``im`` may be arrays."""

    re: np.ndarray | float
    im: np.ndarray | float

    def __post_init__(self):
        im = np.asarray(self.im)
        mag2 = np.asarray(self.re) ** 2 + im**2
        if np.any(im < 0) or np.any(mag2 > 1.0 + _CHI_SLACK):
            raise ValueError("susceptibility outside the Lorentzian range")

    @property
    def value(self):
        return np.asarray(self.re) + 1j * np.asarray(self.im)


@dataclass(frozen=True)
class AtomCloud:
    """Gaussian atomic density around the cavity-mode centre.

    ``sigma_radial`` is the rms radius transverse to the cavity axis,
    ``sigma_axial`` along it; ``offset`` is (x, y, z) in metres.
    """

    sigma_radial: float
    sigma_axial: float
    offset: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not (self.sigma_radial > 0 and self.sigma_axial > 0):
            raise ValueError("cloud rms radii must be > 0")
        if len(self.offset) != 3:
            raise ValueError("offset must be a 3-vector")

    @classmethod
    def cs_experiment(cls) -> "AtomCloud":
        return cls(sigma_radial=5e-6, sigma_axial=19e-6)


def _chi(delta, Gamma):
    x = 2.0 * np.asarray(delta, dtype=float) / Gamma
    den = 1.0 + x * x
    return x / den, 1.0 / den


def susceptibility(delta, params: CavityParams) -> Susceptibility:
    """Lorentzian susceptibility ``(2D/G + i) / (1 + (2D/G)**2)``."""
    re, im = _chi(delta, params.Gamma)
    return Susceptibility(re=re, im=im)


def conditional_signal_phase(delta, params: CavityParams):
    """Single-photon phase on the stored signal, ``(eta/2) Re chi / (1 + eta Im chi)``."""
    re, im = _chi(delta, params.Gamma)
    return 0.5 * params.eta * re / (1.0 + params.eta * im)


def optimal_detuning(params: CavityParams) -> float:
    """Detuning maximizing :func:`conditional_signal_phase`.

    The phase is ``(eta/2) x / (1 + eta + x**2)`` with ``x = 2 D / G``, which
    peaks at ``x = sqrt(1 + eta)``.
    """
    return 0.5 * params.Gamma * math.sqrt(1.0 + params.eta)


def max_signal_phase(eta: float) -> float:
    return eta / (4.0 * math.sqrt(1.0 + eta))


def cavity_linewidth(delta, n_s, params: CavityParams):
    """Cavity linewidth with ``n_s`` stored excitations, ``kappa0 (1 + n_s eta Im chi)``."""
    if np.any(np.asarray(n_s) < 0):
        raise ValueError("n_s must be >= 0")
    _, im = _chi(delta, params.Gamma)
    return params.kappa0 * (1.0 + n_s * params.eta * im)


def conditional_phase_full(delta, params: CavityParams):
    """Phase including a light-cavity detuning ``delta_c``.

    ``arctan(2 dc / kappa + phi) - arctan(2 dc / kappa0)`` with ``kappa`` the
    linewidth for one stored excitation. For ``delta_c = 0`` this is
    ``arctan(phi)``, not ``phi``.
    """
    phi = conditional_signal_phase(delta, params)
    kappa = cavity_linewidth(delta, 1.0, params)
    dc = params.delta_c
    return np.arctan(2.0 * dc / kappa + phi) - np.arctan(2.0 * dc / params.kappa0)


def conditional_signal_transmission(delta, params: CavityParams):
    """Signal survival after one control photon, ``exp(-eta Im chi kappa0 / kappa)``."""
    _, im = _chi(delta, params.Gamma)
    kappa_ratio = 1.0 + params.eta * im
    return np.exp(-params.eta * im / kappa_ratio)


def cavity_transmission(delta, n_s, params: CavityParams):
    """Atom-induced cavity transmission for a mean stored photon number ``n_s``.

    The light-cavity detuning enters as ``2 delta_c / kappa0``.
    """
    if np.any(np.asarray(n_s) < 0):
        raise ValueError("n_s must be >= 0")
    re, im = _chi(delta, params.Gamma)
    a = 1.0 + n_s * params.eta * im
    b = 2.0 * params.delta_c / params.kappa0 + n_s * params.eta * re
    return 1.0 / (a * a + b * b)


def blocking_factor(delta, params: CavityParams):
    re, im = _chi(delta, params.Gamma)
    return (1.0 + params.eta * im) ** 2 + (params.eta * re) ** 2


def _rotation_contrast(B):
    B = np.asarray(B, dtype=float)
    if np.any(B < 1.0 - 1e-12):
        raise ValueError("blocking factor must be >= 1")
    return 2.0 * np.sqrt(B) / (1.0 + B)


def polarization_rotation_signal(psi, B):
    """Normalized detector asymmetry ``(d1 - d2)/(d1 + d2)`` for control phase ``psi``."""
    return _rotation_contrast(B) * np.sin(psi)


def extract_control_phase(asymmetry, B):
    """Invert :func:`polarization_rotation_signal` for ``psi`` in [-pi/2, pi/2].

    Raises
    ------
    ValueError
        If ``|asymmetry|`` exceeds the contrast ``2 sqrt(B) / (1 + B)``.
    """
    c = _rotation_contrast(B)
    s = np.asarray(asymmetry, dtype=float) / c
    if np.any(np.abs(s) > 1.0 + 1e-12):
        raise ValueError("asymmetry exceeds the contrast allowed by the blocking factor")
    return np.arcsin(np.clip(s, -1.0, 1.0))


def effective_coupling(delta, params: CavityParams):
    """Dispersive coupling ``g**2 D / (D**2 + (G/2)**2)`` (rad/s)."""
    d = np.asarray(delta, dtype=float)
    return params.g**2 * d / (d * d + 0.25 * params.Gamma**2)


def light_shift(delta, params: CavityParams):
    """Light shift of one cavity photon on the stored spin wave, ``eta (kappa0/2) Re chi``."""
    re, _ = _chi(delta, params.Gamma)
    return params.eta * 0.5 * params.kappa0 * re


def peak_cooperativity(finesse: float, waist: float, wavelength: float) -> float:
    """On-axis antinode cooperativity ``(24 F / pi) / (k w)**2``."""
    if not (finesse > 0 and waist > 0 and wavelength > 0):
        raise ValueError("finesse, waist and wavelength must be > 0")
    k = TWO_PI / wavelength
    return (24.0 * finesse / np.pi) / (k * waist) ** 2


MODE_EXPONENTS = {
    # coefficient c in exp(-c (x^2 + y^2)), in units of 1 / waist^2
    "printed": 0.5,
    "gaussian": 2.0,
}


class QuadratureError(RuntimeError):
    pass


def _gauss_avg(f, mu, sigma, rtol, n0=65, max_level=16):
    """Trapezoid average of ``f`` over N(mu, sigma) on a +-5 sigma box.

    The grid is doubled until the relative change drops below ``rtol``.
    """
    lo, hi = mu - 5.0 * sigma, mu + 5.0 * sigma
    prev = None
    n = n0
    for _ in range(max_level):
        x = np.linspace(lo, hi, n)
        w = np.exp(-0.5 * ((x - mu) / sigma) ** 2)
        # normalize by the truncated weight so the box cut cancels
        val = np.trapezoid(w * f(x), x) / np.trapezoid(w, x)
        if prev is not None and abs(val - prev) <= rtol * max(abs(val), 1e-300):
            return val
        prev = val
        n = 2 * n - 1
    raise QuadratureError(f"trapezoid did not converge to rtol={rtol} after {max_level} levels")


def effective_cooperativity(
    eta0: float,
    cloud: AtomCloud,
    waist: float,
    wavelength: float,
    mode_exponent: str | float = "printed",
    rtol: float = 1e-4,
) -> float:
    """Density-weighted average of ``eta0 cos^2(kz) exp(-c (x^2+y^2))``.

    Parameters
    ----------
    mode_exponent : {"printed", "gaussian"} or float
        Radial coefficient ``c`` in units of ``1/waist**2``. ``"printed"`` is
        ``1/2`` and ``"gaussian"`` the intensity profile of a TEM00 mode, ``2``.
    rtol : float
        Relative convergence target of each 1-D quadrature.

    Notes
    -----
    The Gaussian cloud factorizes, so the 3-D integral is a product of three
    1-D averages. When ``sigma_axial > 10 wavelength`` the standing wave is
    replaced by its period average 1/2.
    """
    if isinstance(mode_exponent, str):
        try:
            coef = MODE_EXPONENTS[mode_exponent]
        except KeyError:
            raise ValueError(f"unknown mode_exponent {mode_exponent!r}") from None
    else:
        coef = float(mode_exponent)
    if coef < 0:
        raise ValueError("mode_exponent must be >= 0")
    c = coef / waist**2
    k = TWO_PI / wavelength
    x0, y0, z0 = cloud.offset

    radial = lambda x: np.exp(-c * x * x)  # noqa: E731
    ix = _gauss_avg(radial, x0, cloud.sigma_radial, rtol)
    iy = _gauss_avg(radial, y0, cloud.sigma_radial, rtol)
    if cloud.sigma_axial > 10.0 * wavelength:
        iz = 0.5
    else:
        # resolve the standing wave: start with ~16 points per period
        periods = 10.0 * cloud.sigma_axial / (wavelength / 2.0)
        n0 = int(max(65, 16 * periods)) | 1
        iz = _gauss_avg(lambda z: np.cos(k * z) ** 2, z0, cloud.sigma_axial, rtol, n0=n0)
    return eta0 * ix * iy * iz
