"""
Mean heat against its CGF bounds
================================

A three-level V-system starts in its top level and exchanges one energy
quantum ``2B`` with a qubit prepared at inverse temperature ``beta``.  The
mean dissipated heat is compared with the bound ``-(beta/eta) Theta(eta)``
from the two-time-measurement cumulant generating function.
"""

import math

import numpy as np

from heatcount import fcs, vmodel

# a cold qubit and a weak pump
p = vmodel.ModelParams(B=1.0, J=1.0, omega1=0.5, beta=10.0)
times = np.linspace(0.0, 2 * math.pi, 630)

# beta <Q> and the eta = beta bound at every time
heat = np.array([p.beta * vmodel.mean_heat(p, t) for t in times])
bound = np.array([-vmodel.cgf(p, p.beta, t) for t in times])
assert np.all(bound <= heat + 1e-12)

print(f"{'t':>6} {'beta<Q>':>10} {'bound':>10}")
for k in range(0, times.size, 63):
    print(f"{times[k]:6.3f} {heat[k]:10.5f} {bound[k]:10.5f}")

# the peaks are narrow when the qubit is cold, so refine them before comparing
t_q, q_max = vmodel.locate_maximum(lambda t: p.beta * vmodel.mean_heat(p, t), times)
t_b, b_max = vmodel.locate_maximum(lambda t: -vmodel.cgf(p, p.beta, t), times)
print(f"\nmax beta<Q> = {q_max:.6f} at t = {t_q:.4f}")
print(f"max bound   = {b_max:.6f} at t = {t_b:.4f}")
print(f"gap         = {q_max - b_max:.6f}  (ln 2 = {math.log(2):.6f})")

# the family decreases with eta; small eta approaches beta<Q> itself
t0 = t_q
dist = vmodel.heat_distribution(p, t0)
for eta in (1.0, 3.0, 10.0, 30.0):
    b = -(p.beta / eta) * fcs.cgf_from_distribution(dist, eta).theta
    print(f"eta = {eta:5.1f}: bound = {b:.6f}")
