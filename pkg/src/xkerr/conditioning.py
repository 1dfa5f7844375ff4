"""Photon statistics of heralded detection from weak coherent states."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

# omitted Poisson tail when truncating sums over photon number
TAIL = 1e-12

# efficiencies of the control detection path
DETECTOR_EFF = 0.45
FIBER_EFF = 0.7
OUTCOUPLING_EFF = 0.66


class DegeneratePhaseError(ValueError):
    """The phasor sum is too small for its argument to be meaningful."""


@dataclass(frozen=True)
class DetectionChannel:
    """Heralding detector.

    Parameters
    ----------
    efficiency : float
        Detection efficiency of the conditioning path.
    background_rate : float
        Detected background rate (counts/s).
    window : float
        Conditioning window (s).
    """

    efficiency: float
    background_rate: float = 0.0
    window: float = 2e-6

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError("efficiency must lie in [0, 1]")
        if not self.background_rate >= 0:
            raise ValueError("background_rate must be >= 0")
        if not self.window > 0:
            raise ValueError("window must be > 0")

    @property
    def n_bg(self) -> float:
        """Mean background counts in the window."""
        return self.background_rate * self.window


@dataclass(frozen=True)
class CoherentInput:
    mean_photons: float

    def __post_init__(self):
        if not self.mean_photons >= 0:
            raise ValueError("mean_photons must be >= 0")


@dataclass(frozen=True)
class CalibrationChain:
    atom_transmission: float = 1.0
    detector_eff: float = DETECTOR_EFF
    fiber_eff: float = FIBER_EFF
    outcoupling_eff: float = OUTCOUPLING_EFF

    def __post_init__(self):
        for name in ("detector_eff", "fiber_eff", "outcoupling_eff", "atom_transmission"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {v!r}")

    @property
    def total(self) -> float:
        return self.detector_eff * self.fiber_eff * self.outcoupling_eff * self.atom_transmission


def photon_cutoff(mean: float, tail: float = TAIL) -> int:
    """Smallest ``m_max`` with Poisson(mean) mass above ``m_max`` below ``tail``."""
    if mean <= 0:
        return 1
    return max(int(poisson.isf(tail, mean)) + 1, 1)


def _log_binom(a, n):
    # generalized binomial for real a >= n
    return gammaln(a + 1.0) - gammaln(n + 1.0) - gammaln(a - n + 1.0)


def conditional_weights(n: int, mean: float, channel: DetectionChannel, m_max: int | None = None):
    """Unnormalized ``P(m|n)`` for ``m = 0..m_max``.

    ``C(m + n_bg, n) eps**n (1 - eps)**(n_bg + m - n) P(m)`` with the
    binomial coefficient continued through the gamma function; zero where
    ``m + n_bg < n``.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if m_max is None:
        m_max = photon_cutoff(mean) + n
    m = np.arange(m_max + 1, dtype=float)
    eps = channel.efficiency
    a = m + channel.n_bg
    ok = a >= n
    w = np.zeros_like(m)
    if mean > 0:
        logp = poisson.logpmf(m, mean)
    else:
        logp = np.where(m == 0, 0.0, -np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        logw = _log_binom(a[ok], n) + logp[ok]
        if n > 0:
            logw += n * math.log(eps) if eps > 0 else -np.inf
        rest = a[ok] - n
        if eps < 1:
            logw += rest * math.log1p(-eps)
        else:
            logw = np.where(rest > 0, -np.inf, logw)
    w[ok] = np.exp(logw)
    return w


def conditional_photon_distribution(m, n: int, input: CoherentInput, channel: DetectionChannel):
    """Probability of ``m`` photons given ``n`` detected clicks.

    ``m`` may be an integer or array. Normalization runs over ``m`` up to
    a cutoff where the omitted Poisson tail is below 1e-12.

    Raises
    ------
    ValueError
        If every ``m`` gives zero weight (``n`` outside the support).
    """
    m_arr = np.asarray(m)
    m_max = max(photon_cutoff(input.mean_photons) + n, int(np.max(m_arr)) if m_arr.size else 0)
    w = conditional_weights(n, input.mean_photons, channel, m_max)
    total = w.sum()
    if not total > 0:
        raise ValueError(f"n={n} detections has zero probability for this input")
    p = w / total
    out = p[m_arr.astype(int)]
    return out.item() if np.ndim(m) == 0 else out


def _arg(z: complex) -> float:
    if abs(z) < 1e-12:
        raise DegeneratePhaseError("phasor sum magnitude below 1e-12")
    return math.atan2(z.imag, z.real)


def conditional_phase_coherent(
    phi_single: float, n_detected: int, input: CoherentInput, channel: DetectionChannel
) -> float:
    """Signal phase conditioned on ``n_detected`` heralding clicks.

    ``Arg[sum_m P(m|n) exp(i m phi)]``.
    """
    w = conditional_weights(n_detected, input.mean_photons, channel)
    if not w.sum() > 0:
        raise ValueError(f"n={n_detected} detections has zero probability for this input")
    m = np.arange(w.size)
    return _arg(complex(np.sum(w / w.sum() * np.exp(1j * m * phi_single))))


def mean_phase_coherent(phi_single: float, input: CoherentInput) -> float:
    """Unconditioned signal phase, ``Arg[sum_m P(m) exp(i m phi)]``.

    For a Poisson distribution the sum is ``exp(n (e^{i phi} - 1))``; the
    explicit sum is kept so that it is the same estimator as the
    conditioned case.
    """
    mean = input.mean_photons
    if mean == 0:
        return 0.0
    m = np.arange(photon_cutoff(mean) + 1)
    p = poisson.pmf(m, mean)
    return _arg(complex(np.sum(p * np.exp(1j * m * phi_single))))


def calibrate_input_photons(detected_mean: float, chain: CalibrationChain) -> CoherentInput:
    """Input control photon number from the mean detected transmission."""
    if detected_mean < 0:
        raise ValueError("detected_mean must be >= 0")
    if chain.atom_transmission < 1e-6:
        raise ZeroDivisionError("atom-induced transmission below 1e-6")
    return CoherentInput(detected_mean / chain.total)
