"""
Exact master equation of the cold V-system
==========================================

When the qubit starts in its ground state the reduced dynamics obeys a
time-local master equation with two jump channels out of ``|2>``.  The rates
diverge at isolated times, so the equation is integrated between poles and
checked against the full unitary dynamics.
"""

import math

import numpy as np

from heatcount import lindblad
from heatcount.vmodel import ModelParams, system_op

rho0 = system_op(2, 2)

for om in (0.0, 0.5, 2.5):
    p = ModelParams(omega1=om, beta=math.inf)
    poles = lindblad.me_poles(p, 6.0)
    times = np.linspace(0.0, 6.0, 241)
    states = lindblad.evolve_across_poles(p, rho0, times)
    ok = ~np.isnan(states[:, 0, 0].real)
    err = max(lindblad.trace_distance(r, lindblad.exact_cold_state(p, rho0, t))
              for t, r in zip(times[ok], states[ok]))
    print(f"omega1 = {om}: {len(poles)} poles in (0, 6], {ok.sum()}/{times.size} times integrated, "
          f"max trace distance = {err:.2e}")

# without a pump the general equation is single-channel amplitude damping
p = ModelParams(omega1=0.0, beta=math.inf)
rho = np.diag([0.7, 0.0, 0.3]).astype(complex)
t = 0.3
full = lindblad.me_rhs(p, rho, t).matrix
quoted = lindblad.amplitude_damping_rhs(p, rho, t).matrix
fixed = lindblad.amplitude_damping_rhs(p, rho, t, corrected=True).matrix
print(f"\nrate 2J tan(2Jt): mismatch {np.abs(full - quoted).max():.3e}")
print(f"rate 4J tan(2Jt): mismatch {np.abs(full - fixed).max():.3e}")
