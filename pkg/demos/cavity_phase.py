"""How big a phase does one stored photon imprint on the cavity light?

Walks through the closed-form cavity model: the phase and transmission
versus atom-light detuning, where the phase is largest, and how much the
linewidth broadens when the atoms absorb.
"""
import numpy as np

from xkerr import (
    CavityParams,
    cavity_linewidth,
    conditional_signal_phase,
    conditional_signal_transmission,
    max_signal_phase,
    optimal_detuning,
    peak_cooperativity,
)
from xkerr.cavity import TWO_PI

p = CavityParams.cs_experiment()
print(f"cooperativity eta = {p.eta}, Gamma/2pi = {p.Gamma / TWO_PI / 1e6:.1f} MHz")
print(f"peak cooperativity from finesse and waist: {peak_cooperativity(77.1e3, 35.5e-6, 852.347e-9):.2f}")

print("\n  D/2pi [MHz]   phi [rad]   Ts/T0   kappa/kappa0")
for mhz in (-20, -8, -4, -2, 0, 2, 4, 8, 20):
    d = TWO_PI * 1e6 * mhz
    print(f"  {mhz:+10.1f}  {conditional_signal_phase(d, p):+9.3f}  {conditional_signal_transmission(d, p):6.3f}"
          f"  {cavity_linewidth(d, 1.0, p) / p.kappa0:9.3f}")

d_opt = optimal_detuning(p)
print(f"\nlargest phase {max_signal_phase(p.eta):.3f} rad at D/Gamma = {d_opt / p.Gamma:.3f}"
      f" (D/2pi = {d_opt / TWO_PI / 1e6:.2f} MHz); transmission there {conditional_signal_transmission(d_opt, p):.3f}")

# phase gain trades against loss: phi / (1 - Ts) over detuning
d = TWO_PI * 1e6 * np.linspace(1, 20, 5)
ratio = conditional_signal_phase(d, p) / (1 - conditional_signal_transmission(d, p))
print("phase per unit loss grows with detuning:", np.round(ratio, 2))
