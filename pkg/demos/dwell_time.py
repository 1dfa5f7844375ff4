"""Phase accumulated while the control photon sits in the cavity.

The photon leaves after an exponentially distributed dwell time, so the
phase it imprints grows linearly with the time between the pulse and the
heralding click. Late windows are dominated by background clicks, which
pull the heralded phase back toward the unconditioned mean.
"""
from xkerr import CavityParams, DetectionChannel, PulseShape, cavity_linewidth, light_shift, simulate_records
from xkerr.cavity import TWO_PI
from xkerr.dwell import long_pulse_visibility, phase_vs_conditioning_time, unconditioned_phase

p = CavityParams.cs_experiment()
d = -TWO_PI * 8e6
kappa = float(cavity_linewidth(d, 1.0, p))
delta = float(light_shift(d, p))
print(f"kappa = {kappa:.3g} rad/s (mean dwell {1e6 / kappa:.2f} us), light shift = {delta:.3g} rad/s")

pulse = PulseShape("square", 200e-9, 0.8)
channel = DetectionChannel(0.2, background_rate=20e3, window=8e-6)
rec = simulate_records(pulse, kappa, channel, 400_000, seed=1, threads=4)
taus = [0.5e-6, 1e-6, 2e-6, 3e-6, 5e-6]
print("\n  tau [us]  phase [rad]  visibility  background")
for tau, r in zip(taus, phase_vs_conditioning_time(rec, delta, taus, 0.5e-6)):
    if r is None:
        print(f"  {tau * 1e6:7.1f}  (no heralds)")
        continue
    print(f"  {tau * 1e6:7.1f}  {r.mean_phase:10.3f}  {r.visibility:10.3f}  {r.background_fraction:10.3f}")
print(f"unconditioned mean phase: {unconditioned_phase(rec, delta).mean_phase:.3f} rad")

# a long control pulse averages over the dwell time and the phase blurs only slightly
kt = 4.0
v = long_pulse_visibility(PulseShape(duration=kt / kappa), kappa, 0.4, 1_000_000, seed=2, threads=4)
print(f"\nlong pulse, kappa*tau = {kt}: visibility {v.visibility:.4f}")
