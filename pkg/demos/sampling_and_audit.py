"""
Sampled heat and the entropy-production audit
=============================================

The two-time-measurement protocol is sampled outcome by outcome and the
histogram is compared with the exact distribution.  The same protocol closes
the identity ``beta <Q> = Delta S + I(S:E) + D(rho_E || rho_beta)``.
"""

import math

from heatcount import fcs, vmodel

p = vmodel.ModelParams(omega1=0.7, beta=1.0, phi=math.pi / 3, alpha=0.4)
t = 1.1
u, rho0, h_env = vmodel.protocol(p, t)

exact = fcs.heat_distribution_from_protocol(u, rho0, h_env, p.beta)
n = 200_000
sample = fcs.mc_sample_heat(u, rho0, h_env, p.beta, n, seed=7)
print(f"{'Q':>5} {'exact':>9} {'sampled':>9} {'z':>6}")
for q, pe in zip(exact.q, exact.prob):
    pm = sample.probability(float(q))
    z = (pm - pe) / math.sqrt(pe * (1 - pe) / n)
    print(f"{q:5.1f} {pe:9.6f} {pm:9.6f} {z:6.2f}")

h = vmodel.build_interaction_hamiltonian(p)
audit = fcs.landauer_audit(h, rho0, h_env, p.beta, t)
print(f"\nbeta<Q> = {audit.beta_mean_q:.6f}")
print(f"Delta S = {audit.delta_s:.6f}, I = {audit.mutual_info:.6f}, D = {audit.env_relative_entropy:.6f}")
print(f"residual = {audit.residual:.2e}")
