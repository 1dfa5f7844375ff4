"""Monte Carlo of control photons transiting the cavity.

Each trial draws a Poisson number of control photons from a pulse
envelope; every photon dwells in the cavity for an exponential time with
mean ``1/kappa`` and imprints a phase proportional to that dwell time on the
stored signal. Background clicks arrive uniformly in the record window.

Random numbers come from numpy's Philox4x64 counter-based generator. Trials
are grouped in fixed-size blocks and block ``b`` draws from
``SeedSequence(seed, spawn_key=(b,))``, so a stream depends only on
``(seed, block index)`` and not on how blocks are scheduled over threads.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .conditioning import DetectionChannel

BLOCK_SIZE = 1 << 16
MAX_EXPECTED_EVENTS = 1e9
_FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


class EmptySelectionError(ValueError):
    """No trial was heralded inside the conditioning window."""


@dataclass(frozen=True)
class PulseShape:
    """Control pulse envelope.

    ``square`` pulses are flat on ``[0, duration]``; ``gaussian`` pulses have
    an intensity FWHM of ``duration`` and are centred at ``duration / 2``.
    ``amplitude`` is the mean photon number per pulse.
    """

    kind: str = "square"
    duration: float = 2e-6
    amplitude: float = 0.4

    def __post_init__(self):
        if self.kind not in ("square", "gaussian"):
            raise ValueError(f"unknown pulse kind {self.kind!r}")
        if not self.duration > 0:
            raise ValueError("duration must be > 0")
        if not self.amplitude >= 0:
            raise ValueError("amplitude must be >= 0")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "square":
            return rng.uniform(0.0, self.duration, size)
        return rng.normal(0.5 * self.duration, self.duration * _FWHM_TO_SIGMA, size)


@dataclass(frozen=True)
class DetectionRecord:
    trial: int
    entry_time: float
    exit_time: float
    is_background: bool
    detected: bool


@dataclass
class RecordTable:
    """Column store of detection events for ``n_trials`` trials.

    Photon rows carry entry and exit times; background rows have
    ``entry_time == exit_time`` and are always ``detected``.
    """

    n_trials: int
    trial: np.ndarray
    entry_time: np.ndarray
    exit_time: np.ndarray
    is_background: np.ndarray
    detected: np.ndarray

    def __len__(self) -> int:
        return int(self.trial.size)

    def __iter__(self) -> Iterator[DetectionRecord]:
        for i in range(len(self)):
            yield DetectionRecord(
                int(self.trial[i]),
                float(self.entry_time[i]),
                float(self.exit_time[i]),
                bool(self.is_background[i]),
                bool(self.detected[i]),
            )

    @property
    def dwell(self) -> np.ndarray:
        return self.exit_time - self.entry_time

    @property
    def photons(self) -> np.ndarray:
        return ~self.is_background

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["trial", "entry_time_s", "exit_time_s", "is_background", "detected"])
            for r in self:
                w.writerow([r.trial, repr(r.entry_time), repr(r.exit_time),
                            int(r.is_background), int(r.detected)])

    @classmethod
    def from_csv(cls, path, n_trials: int | None = None) -> "RecordTable":
        data = np.genfromtxt(path, delimiter=",", names=True, dtype=None, encoding="utf-8")
        data = np.atleast_1d(data)
        trial = data["trial"].astype(np.int64)
        if n_trials is None:
            n_trials = int(trial.max()) + 1 if trial.size else 0
        return cls(
            n_trials,
            trial,
            data["entry_time_s"].astype(float),
            data["exit_time_s"].astype(float),
            data["is_background"].astype(bool),
            data["detected"].astype(bool),
        )


@dataclass(frozen=True)
class DwellResult:
    mean_phase: float
    visibility: float
    n_events: int
    stderr_phase: float
    background_fraction: float = 0.0


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def _blocks(n_trials: int, block_size: int):
    return [(b, s, min(block_size, n_trials - s)) for b, s in enumerate(range(0, n_trials, block_size))]


def _map_blocks(fn, blocks, threads: int):
    if threads <= 1 or len(blocks) <= 1:
        return [fn(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, blocks))


def simulate_records(
    pulse: PulseShape,
    kappa: float,
    channel: DetectionChannel,
    n_trials: int,
    seed: int,
    *,
    threads: int = 1,
    block_size: int = BLOCK_SIZE,
) -> RecordTable:
    """Draw control-photon transits and background clicks.

    Parameters
    ----------
    kappa : float
        Cavity energy decay rate (rad/s); dwell times are Exponential with
        mean ``1/kappa``.
    channel : DetectionChannel
        ``efficiency`` thins exiting photons, ``background_rate`` and
        ``window`` set the background clicks, uniform on ``[0, window]``.
    threads : int
        Worker threads; the output does not depend on it.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    if not kappa > 0:
        raise ValueError("kappa must be > 0")
    expected = n_trials * (pulse.amplitude + channel.n_bg)
    if expected > MAX_EXPECTED_EVENTS:
        raise ValueError(f"expected {expected:.3g} events exceeds the limit {MAX_EXPECTED_EVENTS:.0e}")

    def run(block):
        b, start, nb = block
        rng = block_rng(seed, b)
        counts = rng.poisson(pulse.amplitude, nb)
        n_ph = int(counts.sum())
        trial = np.repeat(np.arange(start, start + nb, dtype=np.int64), counts)
        entry = pulse.sample(rng, n_ph)
        exit_ = entry + rng.exponential(1.0 / kappa, n_ph)
        det = rng.random(n_ph) < channel.efficiency
        bg_counts = rng.poisson(channel.n_bg, nb)
        n_bg = int(bg_counts.sum())
        bg_trial = np.repeat(np.arange(start, start + nb, dtype=np.int64), bg_counts)
        bg_t = rng.uniform(0.0, channel.window, n_bg)
        return (
            np.concatenate([trial, bg_trial]),
            np.concatenate([entry, bg_t]),
            np.concatenate([exit_, bg_t]),
            np.concatenate([np.zeros(n_ph, bool), np.ones(n_bg, bool)]),
            np.concatenate([det, np.ones(n_bg, bool)]),
        )

    parts = _map_blocks(run, _blocks(n_trials, block_size), threads)
    cols = [np.concatenate([p[i] for p in parts]) for i in range(5)]
    order = np.lexsort((cols[2], cols[0]))
    return RecordTable(n_trials, *(c[order] for c in cols))


def _linear_phase(delta):
    return lambda dwell: delta * dwell


def trial_phases(records: RecordTable, delta_light_shift: float,
                 phi_per_photon_model: Callable | None = None) -> np.ndarray:
    """Total signal phase per trial; photon contributions add."""
    model = phi_per_photon_model or _linear_phase(delta_light_shift)
    ph = records.photons
    return np.bincount(records.trial[ph], weights=model(records.dwell[ph]), minlength=records.n_trials)


def circular_summary(phases: np.ndarray, weights=None) -> tuple[float, float, float]:
    """Circular mean, resultant length and standard error of the mean phase."""
    phases = np.asarray(phases, dtype=float)
    n = phases.size
    if n == 0:
        raise EmptySelectionError("no phases to average")
    # numpy sums pairwise, which keeps the reduction order-stable
    z = np.sum(np.exp(1j * phases)) / n
    mean = math.atan2(z.imag, z.real)
    vis = min(float(abs(z)), 1.0)
    if n > 1 and vis > 0:
        spread = np.sum(np.sin(phases - mean) ** 2) / (n - 1)
        stderr = math.sqrt(float(spread) / n) / vis
    else:
        stderr = 0.0
    return mean, vis, stderr


def _heralds(records: RecordTable, lo: float, hi: float):
    """Earliest detected click per trial inside ``[lo, hi]``.

    Returns the heralded trial indices and whether each herald was a
    background click.
    """
    sel = records.detected & (records.exit_time >= lo) & (records.exit_time <= hi)
    trials = records.trial[sel]
    times = records.exit_time[sel]
    bg = records.is_background[sel]
    order = np.lexsort((times, trials))
    trials, bg = trials[order], bg[order]
    first = np.ones(trials.size, bool)
    first[1:] = trials[1:] != trials[:-1]
    return trials[first], bg[first]


def conditioned_phase_vs_exit_time(
    records: RecordTable,
    delta_light_shift: float,
    window_start: float,
    window_len: float,
    phi_per_photon_model: Callable | None = None,
    *,
    phases: np.ndarray | None = None,
) -> DwellResult:
    """Signal phase of trials heralded by a click in a conditioning window.

    Each photon contributes ``delta_light_shift * dwell`` (or
    ``phi_per_photon_model(dwell)``). Trials heralded by background still
    carry whatever phase their undetected photons imprinted, so they pull
    the result toward the unconditioned mean.

    Parameters
    ----------
    phases : array, optional
        Precomputed :func:`trial_phases`, to reuse across windows.
    """
    if not window_len > 0:
        raise ValueError("window_len must be > 0")
    if len(records) == 0:
        raise EmptySelectionError("record table is empty")
    if phases is None:
        phases = trial_phases(records, delta_light_shift, phi_per_photon_model)
    trials, bg = _heralds(records, window_start, window_start + window_len)
    if trials.size == 0:
        raise EmptySelectionError(
            f"no heralds in [{window_start:.3g}, {window_start + window_len:.3g}] s"
        )
    mean, vis, err = circular_summary(phases[trials])
    return DwellResult(mean, vis, int(trials.size), err, float(bg.mean()))


def phase_vs_conditioning_time(records, delta_light_shift, centers, window_len,
                               phi_per_photon_model=None) -> list[DwellResult | None]:
    """:func:`conditioned_phase_vs_exit_time` over windows centred at ``centers``.

    Empty windows give ``None``.
    """
    phases = trial_phases(records, delta_light_shift, phi_per_photon_model)
    out = []
    for c in np.atleast_1d(centers):
        try:
            out.append(conditioned_phase_vs_exit_time(
                records, delta_light_shift, c - 0.5 * window_len, window_len, phases=phases))
        except EmptySelectionError:
            out.append(None)
    return out


def unconditioned_phase(records: RecordTable, delta_light_shift: float) -> DwellResult:
    mean, vis, err = circular_summary(trial_phases(records, delta_light_shift))
    return DwellResult(mean, vis, records.n_trials, err)


def long_pulse_visibility(
    pulse: PulseShape,
    kappa: float,
    phi: float,
    n_trials: int,
    seed: int,
    *,
    threads: int = 1,
    block_size: int = BLOCK_SIZE,
) -> DwellResult:
    """Fringe visibility left by cavity entry/exit timing jitter.

    A heralded photon of a pulse of length ``tau_p`` interacts for
    ``T = tau_p + (x_out - x_in) / kappa`` with ``x_in``, ``x_out`` independent
    Exponential(1) delays at the cavity input and output. Its phase is
    ``phi * T / <T>``, so the relative jitter is of order ``1/(kappa tau_p)``
    and the visibility tends to ``1 / (1 + (phi / (kappa tau_p))**2)``.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    if not kappa > 0:
        raise ValueError("kappa must be > 0")
    tau = pulse.duration
    if kappa * tau < 1.0:
        raise ValueError("long-pulse model needs kappa * tau_p >= 1")
    if n_trials > MAX_EXPECTED_EVENTS:
        raise ValueError("n_trials exceeds the event limit")

    def run(block):
        b, _, nb = block
        rng = block_rng(seed, b)
        x = rng.standard_exponential((2, nb))
        return tau + (x[1] - x[0]) / kappa

    T = np.concatenate(_map_blocks(run, _blocks(n_trials, block_size), threads))
    mean, vis, err = circular_summary(phi * T / T.mean())
    return DwellResult(mean, vis, n_trials, err)
