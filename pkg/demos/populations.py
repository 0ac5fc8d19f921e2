"""
Populations of the V-system
===========================

Without a pump the excitation in ``|2>`` oscillates into ``|0>`` while the
qubit absorbs it.  A hot qubit is often already excited and blocks the
transfer, so the top level never empties completely.
"""

import math

import numpy as np

from heatcount import vmodel

times = np.linspace(0.0, math.pi / 2, 9)

for beta in (10.0, 1.0):
    p = vmodel.ModelParams(omega1=0.0, beta=beta)
    print(f"beta = {beta}")
    print(f"{'t':>6} {'rho00':>8} {'rho11':>8} {'rho22':>8}  closed rho22")
    for t in times:
        r00, r11, r22 = vmodel.populations(p, t)
        closed = 1 - p.ground_weight * math.sin(2 * p.J * t) ** 2
        print(f"{t:6.3f} {r00:8.5f} {r11:8.5f} {r22:8.5f}  {closed:8.5f}")
    print()

# a pump feeds |1> as well
p = vmodel.ModelParams(omega1=1.2, beta=10.0)
grid = np.linspace(0.0, 2 * math.pi, 2000)
t_min, neg = vmodel.locate_maximum(lambda t: -vmodel.populations(p, t)[2], grid)
print(f"pumped, omega1 = {p.omega1}: min rho22 = {-neg:.3e} at t = {t_min:.4f}")
