"""Cavity cross-phase modulation models, photon-conditioning statistics,
dwell-time Monte Carlo and two-mode state tomography."""

from .cavity import (
    AtomCloud,
    CavityParams,
    Susceptibility,
    blocking_factor,
    cavity_linewidth,
    cavity_transmission,
    conditional_phase_full,
    conditional_signal_phase,
    conditional_signal_transmission,
    effective_cooperativity,
    extract_control_phase,
    light_shift,
    max_signal_phase,
    optimal_detuning,
    peak_cooperativity,
    polarization_rotation_signal,
    susceptibility,
)
from .conditioning import (
    CalibrationChain,
    CoherentInput,
    DetectionChannel,
    calibrate_input_photons,
    conditional_phase_coherent,
    conditional_photon_distribution,
    mean_phase_coherent,
)
from .dwell import (
    PulseShape,
    RecordTable,
    conditioned_phase_vs_exit_time,
    long_pulse_visibility,
    simulate_records,
)
from .synthdata import GroundTruth, project_counts
from .tomography import (
    CoincidenceSet,
    DensityMatrix4,
    bootstrap_errors,
    concurrence,
    fidelity,
    linear_inversion,
    maxlik_reconstruct,
    nonlinear_phase,
    purity,
)

__version__ = "0.1.0"
