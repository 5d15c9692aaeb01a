"""Simulate the source and look at the interference histogram.

Shows the arcsine pileup at the fringe extremes for a diffused phase and
how it collapses toward a spike when the phase barely diffuses.
"""

import numpy as np

from pdqrng import (
    ConditionVector,
    LaserRateParams,
    QuantumPhaseModel,
    constant_drift,
    generate_pulse_train,
    interference_support,
    phase_diffusion_sigma,
)

x = ConditionVector(p_s=0.22, p_l=0.21, visibility=0.95, phi_c=0.0)
lo, hi = interference_support(x)
print(f"conditions: p_s={x.p_s} p_l={x.p_l} V={x.visibility}")
print(f"interference support: [{lo:.4f}, {hi:.4f}]")

for sigma in (0.3, 1.5, 2 * np.pi):
    train = generate_pulse_train(
        constant_drift(x), QuantumPhaseModel(sigma_q=sigma, seed=7), 40_000
    )
    counts, edges = np.histogram(train.power, bins=24, range=(lo, hi))
    peak = counts.max()
    print(f"\nsigma_q = {sigma:.3f}")
    for k, c in enumerate(counts):
        bar = "#" * int(round(40 * c / peak))
        print(f"  {edges[k]:.3f} {bar}")

print("\nphase width from the laser rate equations at a few pulse periods:")
params = LaserRateParams()
for period_ns in (1.0, 4.0, 16.0):
    sigma = phase_diffusion_sigma(params, period_ns * 1e-9)
    print(f"  {period_ns:4.0f} ns between pulses -> sigma_q = {sigma:.3f} rad")
