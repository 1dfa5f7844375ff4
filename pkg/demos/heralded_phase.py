"""Heralding on a detector click with an attenuated laser as the control.

A coherent control pulse contains a Poisson number of photons. Averaging
over it gives a mean phase proportional to the photon number; selecting
trials with one click shifts the photon-number distribution and with it
the phase. Background clicks dilute the selection.
"""
import numpy as np

from xkerr import (
    CalibrationChain,
    CoherentInput,
    DetectionChannel,
    calibrate_input_photons,
    conditional_phase_coherent,
    conditional_photon_distribution,
    mean_phase_coherent,
)

phi = 0.39
clean = DetectionChannel(efficiency=0.2)
noisy = DetectionChannel(efficiency=0.2, background_rate=25e3, window=2e-6)

print("  <n>   mean phase   heralded (no bg)   heralded (n_bg=0.05)")
for n in np.linspace(0.1, 1.5, 8):
    inp = CoherentInput(float(n))
    print(f"  {n:4.2f}  {mean_phase_coherent(phi, inp):10.3f}  {conditional_phase_coherent(phi, 1, inp, clean):16.3f}"
          f"  {conditional_phase_coherent(phi, 1, inp, noisy):20.3f}")

inp = CoherentInput(0.4)
p = conditional_photon_distribution(np.arange(5), 1, inp, clean)
print("\nP(m photons | one click), <n>=0.4:", np.round(p, 4))

det = 0.0832
print(f"detected mean {det} -> input mean {calibrate_input_photons(det, CalibrationChain()).mean_photons:.3f}")
