"""
Large deviations of the emitted heat
====================================

In the damped model ``|2>`` decays to ``|0>`` at rate ``gamma`` and each
jump emits ``2B``.  The leading eigenvalue of the tilted generator is the
scaled CGF ``theta(eta)``.  For a weak pump the system spends long stretches
in a dark configuration, and ``theta`` develops a near-kink at ``eta = 0``.
"""

import numpy as np

from heatcount import lindblad
from heatcount.vmodel import ModelParams

etas = np.linspace(-1.0, 1.0, 9)

for om in (0.01, 0.1, 1.0):
    p = ModelParams(J=1.0, gamma=4.0, omega1=om, beta=1.0)
    curve = lindblad.ldf(p, etas)
    current = lindblad.heat_current(p)
    slope = lindblad.derivative_at_zero(lambda e: lindblad.scgf(p, e))
    print(f"omega1 = {om}: kink = {curve.kink:.4f}, current = {current:.6f}, -theta'(0) = {-slope:.6f}")
    print("   " + " ".join(f"{t:+.4f}" for t in curve.theta))

# the spectral value agrees with propagating the tilted state for a long time
p = ModelParams(J=1.0, gamma=4.0, omega1=0.1, beta=1.0)
th = lindblad.scgf(p, 0.5)
for t_max in (10.0, 25.0, 50.0):
    s = lindblad.finite_time_cgf_slope(p, 0.5, t_max)
    print(f"t_max = {t_max:5.1f}: slope = {s:.10f}  spectral = {th:.10f}")
