"""Synthetic tomography data from a known two-mode state."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .tomography import (
    CoincidenceSet,
    DensityMatrix4,
    TomographyError,
    interference_from_counts,
    ket_to_rho,
    phase_entangled_state,
    projections,
    tomographic_states,
)

log = logging.getLogger(__name__)

FRINGE_SAMPLES = 64
FRINGE_PERIODS = 2


@dataclass(frozen=True)
class GroundTruth:
    """State and acquisition settings for a synthetic run.

    ``counts_scale`` is the expected n_1 + ... + n_4; ``noise`` is ``"none"``
    or ``"poisson"``.
    """

    rho: np.ndarray
    counts_scale: float = 4000.0
    noise: str = "none"
    contrast_ref: float = 1.0

    def __post_init__(self):
        r = DensityMatrix4(np.asarray(self.rho, dtype=complex))
        if not r.is_psd:
            raise TomographyError("ground-truth state must be positive semidefinite")
        object.__setattr__(self, "rho", r.rho)
        if not self.counts_scale > 0:
            raise ValueError("counts_scale must be > 0")
        if self.noise not in ("none", "poisson"):
            raise ValueError(f"unknown noise model {self.noise!r}")
        if not 0 < self.contrast_ref <= 1:
            raise ValueError("contrast_ref must lie in (0, 1]")


def entangled_state_from_physics(phi: float, n_s: float, n_c: float, **kwargs) -> GroundTruth:
    """Ground truth for coherent signal/control inputs sharing a cross phase ``phi``.

    See :func:`xkerr.tomography.phase_entangled_state`; extra keyword
    arguments go to :class:`GroundTruth`.
    """
    return GroundTruth(ket_to_rho(phase_entangled_state(phi, n_s, n_c)), **kwargs)


def expected_counts(gt: GroundTruth) -> np.ndarray:
    return gt.counts_scale * projections(gt.rho)


def _fringe_angles():
    return np.linspace(0.0, 2 * np.pi * FRINGE_PERIODS, FRINGE_SAMPLES, endpoint=False)


def project_counts(gt: GroundTruth, seed: int = 0) -> CoincidenceSet:
    """Coincidences ``n_nu = N <psi_nu|rho|psi_nu>`` plus fringe records.

    In ``poisson`` mode each count and each fringe bin is drawn
    independently from a Philox stream seeded with ``seed``. Fringe records
    for nu = 5..16 follow ``A (1 + I_nu c cos(x - x_nu))`` with ``c`` the
    reference contrast and ``A`` the mean coincidences per bin; they are
    stored in ``meta["fringes"]`` in the format read by
    :func:`xkerr.tomography.normalize_fringes`. States whose interference
    parameters fall outside [-1, 1] get no fringe records.
    """
    mean = expected_counts(gt)
    rng = np.random.Generator(np.random.Philox(seed))
    n = rng.poisson(mean).astype(float) if gt.noise == "poisson" else mean.copy()

    interference = interference_from_counts(mean)
    meta = {"expected": mean, "noise": gt.noise, "seed": seed}
    if np.any(np.abs(interference) > 1.0 + 1e-9):
        log.warning("interference parameters outside [-1, 1]; fringe records omitted")
        return CoincidenceSet(n=n, contrast_ref=gt.contrast_ref, meta=meta)
    interference = np.clip(interference, -1.0, 1.0)

    x = _fringe_angles()
    level = gt.counts_scale / FRINGE_SAMPLES
    fringes = {}
    states = tomographic_states()
    for k, nu in enumerate(range(5, 17)):
        x0 = states[nu - 1].fringe_angle
        shape = level * (1.0 + interference[k] * gt.contrast_ref * np.cos(x - x0))
        counts = rng.poisson(shape).astype(float) if gt.noise == "poisson" else shape
        fringes[nu] = (x.copy(), counts)
    meta["fringes"] = fringes
    return CoincidenceSet(n=n, interference=interference, contrast_ref=gt.contrast_ref, meta=meta)
