"""
Dissipation gap against pump strength
=====================================

``D`` is the difference between the largest ``beta <Q>`` and the largest
bound over a time window.  Below the critical pump ``omega1 = 2J`` the
excitation can be fully transferred and ``D`` sits near ``ln 2`` for a cold
qubit.  Above it the transfer is incomplete and the bound loosens.
"""

import math

import numpy as np

from heatcount import vmodel

times = np.linspace(0.0, 2 * math.pi, 1000)
pumps = np.array([0.25, 0.5, 1.0, 1.5, 1.9, 2.1, 2.5, 3.0])

for beta in (10.0, 1.0):
    scan = vmodel.gap_scan(vmodel.ModelParams(beta=beta), pumps, times)
    print(f"beta = {beta}")
    for om, d in zip(scan.omega1_values, scan.d_values):
        print(f"  omega1 = {om:4.2f}  D = {d:.6f}")
print(f"\nln 2 = {math.log(2):.6f}")
