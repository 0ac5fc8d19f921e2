"""Pumped three-level V-system exchanging energy with a thermal qubit.

The system levels are ``|0>`` (ground), ``|1>`` (pumped from ``|0>`` at Rabi
frequency ``omega1``) and ``|2>`` (coupled to the environment qubit by an XX
exchange of strength ``J``).  Work happens in the interaction picture of the
rotating-wave Hamiltonian; the heat statistics do not depend on the picture
because the free Hamiltonian commutes with the environment energy.

Matrix conventions
------------------
Composite vectors are ordered ``(|21>, |20>, |11>, |10>, |01>, |00>)`` with
the system label first.  This is the Kronecker product of the system order
``(|2>, |1>, |0>)`` with the environment order ``(|1>, |0>)``.  The
environment Pauli matrices follow the same sign convention as the Gell-Mann
generators: ``sigma_z = |0><0| - |1><1|``, ``sigma_y = i(|0><1| - |1><0|)``,
so ``H_E = -B sigma_z`` puts ``|0>_E`` at energy ``-B`` and every emission
into the environment carries heat ``2B``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import fcs
from .quantum import (
    INFINITE_BETA,
    DensityMatrix,
    Operator,
    propagator,
    pure_state,
)

SYSTEM_ORDER = (2, 1, 0)
ENV_ORDER = (1, 0)
STATE_LABELS = ("21", "20", "11", "10", "01", "00")
CLOSED_FORM_TOL = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the pumped V-system.

    ``beta`` may be ``math.inf`` for an environment prepared in its ground
    state.  ``gamma`` is only used by the damped generator of
    :mod:`heatcount.lindblad`.  The initial system state is
    ``cos(phi)|0> + sin(phi) sin(alpha)|1> + sin(phi) cos(alpha)|2>``; the
    defaults give ``|2>``.
    """

    B: float = 1.0
    J: float = 1.0
    omega1: float = 0.0
    beta: float = 1.0
    gamma: float = 4.0
    phi: float = math.pi / 2
    alpha: float = 0.0

    def __post_init__(self):
        if self.B < 0 or self.J < 0:
            raise ValueError(f"B and J must be non-negative, got B={self.B}, J={self.J}")
        if self.omega1 < 0:
            raise ValueError(f"omega1 must be non-negative, got {self.omega1}")
        if not self.beta >= 0:
            raise ValueError(f"beta must be non-negative, got {self.beta}")

    @property
    def rabi(self) -> float:
        """Characteristic frequency ``sqrt(4 J^2 + omega1^2)``."""
        return math.sqrt(4 * self.J**2 + self.omega1**2)

    @property
    def ground_weight(self) -> float:
        """Thermal population ``p`` of ``|0>_E``."""
        if self.B == 0:
            return 0.5
        return 0.5 * (1.0 + math.tanh(self.beta * self.B))

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class VOperators:
    """Gell-Mann generators of the V-system and the qubit Pauli matrices."""

    s_x: dict[int, np.ndarray]
    s_y: dict[int, np.ndarray]
    s_z: dict[int, np.ndarray]
    sigma_x: np.ndarray
    sigma_y: np.ndarray
    sigma_z: np.ndarray
    s_plus_10: np.ndarray
    s_minus_10: np.ndarray


@dataclass(frozen=True)
class GapScan:
    omega1_values: np.ndarray
    d_values: np.ndarray
    t_grid: tuple[float, float, int]
    t_heat_max: np.ndarray
    t_bound_max: np.ndarray


# ---------------------------------------------------------------------------
# operators


def system_ket(level: int) -> np.ndarray:
    v = np.zeros(3, dtype=complex)
    v[SYSTEM_ORDER.index(level)] = 1.0
    return v


def env_ket(level: int) -> np.ndarray:
    v = np.zeros(2, dtype=complex)
    v[ENV_ORDER.index(level)] = 1.0
    return v


def system_op(i: int, j: int) -> np.ndarray:
    """``|i><j|`` on the V-system."""
    return np.outer(system_ket(i), system_ket(j).conj())


def env_op(i: int, j: int) -> np.ndarray:
    return np.outer(env_ket(i), env_ket(j).conj())


def v_operators() -> VOperators:
    s_x = {j: system_op(0, j) + system_op(j, 0) for j in (1, 2)}
    s_y = {j: 1j * (system_op(0, j) - system_op(j, 0)) for j in (1, 2)}
    s_z = {j: system_op(0, 0) - system_op(j, j) for j in (1, 2)}
    return VOperators(
        s_x=s_x,
        s_y=s_y,
        s_z=s_z,
        sigma_x=env_op(0, 1) + env_op(1, 0),
        sigma_y=1j * (env_op(0, 1) - env_op(1, 0)),
        sigma_z=env_op(0, 0) - env_op(1, 1),
        s_plus_10=0.5 * (s_x[1] + 1j * s_y[1]),
        s_minus_10=0.5 * (s_x[1] - 1j * s_y[1]),
    )


def system_hamiltonian(p: ModelParams) -> Operator:
    return Operator(-p.B * v_operators().s_z[2])


def env_hamiltonian(p: ModelParams) -> Operator:
    return Operator(-p.B * v_operators().sigma_z)


def free_hamiltonian(p: ModelParams) -> Operator:
    """``H_S (x) 1 + 1 (x) H_E`` on the composite space."""
    return Operator(
        np.kron(system_hamiltonian(p).matrix, np.eye(2))
        + np.kron(np.eye(3), env_hamiltonian(p).matrix),
        (3, 2),
    )


def build_interaction_hamiltonian(p: ModelParams) -> Operator:
    """Rotating-wave interaction Hamiltonian (exchange plus pump), 6x6."""
    ops = v_operators()
    h = p.J * (np.kron(ops.s_x[2], ops.sigma_x) + np.kron(ops.s_y[2], ops.sigma_y))
    h = h + p.omega1 * np.kron(ops.s_x[1], np.eye(2))
    return Operator(h, (3, 2))


def model_propagator(p: ModelParams, t: float) -> Operator:
    return propagator(build_interaction_hamiltonian(p), t)


def printed_propagator(J: float, omega1: float, t: float) -> np.ndarray:
    """Closed-form interaction-picture propagator in the composite order above."""
    w = math.sqrt(4 * J**2 + omega1**2)
    c, s = math.cos(w * t), math.sin(w * t)
    cp, sp = math.cos(omega1 * t), math.sin(omega1 * t)
    u = np.zeros((6, 6), dtype=complex)
    u[0, 0] = 1.0
    u[1, 1] = (4 * c * J**2 + omega1**2) / w**2
    u[1, 2] = u[2, 1] = 2 * J * (c - 1) * omega1 / w**2
    u[1, 4] = u[4, 1] = -2j * J * s / w
    u[2, 2] = (4 * J**2 + c * omega1**2) / w**2
    u[2, 4] = u[4, 2] = -1j * s * omega1 / w
    u[3, 3] = u[5, 5] = cp
    u[3, 5] = u[5, 3] = -1j * sp
    u[4, 4] = c
    return u


def initial_state(p: ModelParams) -> DensityMatrix:
    psi = (
        math.cos(p.phi) * system_ket(0)
        + math.sin(p.phi) * math.sin(p.alpha) * system_ket(1)
        + math.sin(p.phi) * math.cos(p.alpha) * system_ket(2)
    )
    return pure_state(psi)


def _require_excited_start(p: ModelParams):
    rho = initial_state(p).matrix
    target = system_op(2, 2)
    if np.max(np.abs(rho - target)) > CLOSED_FORM_TOL:
        raise ValueError(
            "closed-form expressions hold only for the initial state |2><2| "
            f"(phi = pi/2, alpha = 0); got phi={p.phi}, alpha={p.alpha}"
        )


# ---------------------------------------------------------------------------
# numerical route


def protocol(p: ModelParams, t: float):
    """``(U, rho_S(0), H_E)`` ready for the functions of :mod:`heatcount.fcs`."""
    return model_propagator(p, t), initial_state(p), env_hamiltonian(p)


def heat_distribution(p: ModelParams, t: float) -> fcs.HeatDistribution:
    return fcs.heat_distribution_from_protocol(*protocol(p, t), p.beta)


def mean_heat(p: ModelParams, t: float) -> float:
    return fcs.mean_heat(*protocol(p, t), p.beta)


def cgf(p: ModelParams, eta: float, t: float) -> float:
    """Numerical CGF through the tilted propagator."""
    return fcs.cgf_tilted(*protocol(p, t), p.beta, eta, t=t).theta


def non_unitality(p: ModelParams, t: float) -> float:
    u, rho, h_env = protocol(p, t)
    return fcs.non_unitality(u, rho, h_env)


def reduced_state(p: ModelParams, t: float) -> DensityMatrix:
    u, rho, h_env = protocol(p, t)
    return fcs.evolve_reduced(u, rho, h_env, p.beta)[0]


def populations(p: ModelParams, t: float) -> tuple[float, float, float]:
    """``(rho_S^00, rho_S^11, rho_S^22)`` at time ``t``."""
    diag = np.real(np.diag(reduced_state(p, t).matrix))
    return tuple(float(diag[SYSTEM_ORDER.index(k)]) for k in (0, 1, 2))


def heat_and_bound(p: ModelParams, t: float, eta: float | None = None) -> tuple[float, float]:
    """``beta <Q>_t`` and the lower bound at ``eta`` (default ``eta = beta``)."""
    eta = p.beta if eta is None else eta
    dist = heat_distribution(p, t)
    theta = fcs.cgf_from_distribution(dist, eta).theta
    return p.beta * dist.mean(), -(p.beta / eta) * theta


# ---------------------------------------------------------------------------
# closed forms for rho_S(0) = |2><2|


def _transfer_probability(p: ModelParams, t: float) -> float:
    """Probability that the excitation leaves ``|2>`` when the qubit starts in ``|0>``."""
    w = p.rabi
    if w == 0:
        return 0.0
    s2 = math.sin(0.5 * w * t) ** 2
    return 16 * p.J**2 * s2 * (w**2 - 4 * p.J**2 * s2) / w**4


def mean_heat_closed(p: ModelParams, t: float) -> float:
    _require_excited_start(p)
    return 2 * p.ground_weight * p.B * _transfer_probability(p, t)


def cgf_closed(p: ModelParams, eta: float, t: float) -> float:
    """Analytic CGF for the excited initial state.

    The middle numerator term carries the coefficient ``4 J^2 omega1^2``,
    which is what normalizes ``Theta(0) = 0``.
    """
    _require_excited_start(p)
    J, om, w, B = p.J, p.omega1, p.rabi, p.B
    th = 2 * p.ground_weight - 1  # tanh(beta B), safe for B = 0 at infinite beta
    if w == 0:
        return 0.0
    boltz = math.exp(-2 * B * eta)
    c = math.cos(w * t)
    numer = (
        16 * J**2 * om**2 * boltz * math.sin(0.5 * w * t) ** 4
        + 4 * J**2 * w**2 * boltz * math.sin(w * t) ** 2
        + (4 * J**2 * c + om**2) ** 2
    )
    return math.log((1 + th) * numer / (2 * w**4) + 0.5 * (1 - th))


def non_unitality_closed(p: ModelParams, t: float) -> float:
    _require_excited_start(p)
    return math.sqrt(2) * _transfer_probability(p, t)


# ---------------------------------------------------------------------------
# dissipation gap


def _golden_max(f, t_left: float, t_mid: float, t_right: float, xtol: float) -> tuple[float, float]:
    res = minimize_scalar(
        lambda t: -f(t), bracket=(t_left, t_mid, t_right), method="golden",
        options={"xtol": xtol},
    )
    t_best, f_best = float(res.x), float(-res.fun)
    f_mid = f(t_mid)
    if f_mid > f_best or not t_left <= t_best <= t_right:
        return t_mid, f_mid
    return t_best, f_best


def locate_maximum(f, t_grid: np.ndarray, xtol: float = 1e-10) -> tuple[float, float]:
    """Grid scan followed by golden-section refinement around the best point."""
    values = np.array([f(t) for t in t_grid])
    k = int(np.argmax(values))
    if k == 0 or k == len(t_grid) - 1:
        return float(t_grid[k]), float(values[k])
    # absolute xtol on t: golden uses a relative one, so rescale by |t|
    rel = xtol / max(abs(t_grid[k]), 1e-300)
    return _golden_max(f, t_grid[k - 1], t_grid[k], t_grid[k + 1], rel)


def dissipation_gap(p: ModelParams, t_grid: np.ndarray) -> tuple[float, float, float]:
    """``max_t beta<Q>_t - max_t B^beta_Q(t)`` with the locations of both maxima."""
    t_q, q_max = locate_maximum(lambda t: heat_and_bound(p, t)[0], t_grid)
    t_b, b_max = locate_maximum(lambda t: heat_and_bound(p, t)[1], t_grid)
    return q_max - b_max, t_q, t_b


def gap_scan(p: ModelParams, omega1_grid: Sequence[float], t_grid: Sequence[float]) -> GapScan:
    """Dissipation gap as a function of the pump strength.

    The bound is taken at ``eta = beta``.  ``t_grid`` must resolve the maxima;
    a step of ``0.01 / J`` or finer is required.
    """
    omega1_grid = np.asarray(omega1_grid, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    if omega1_grid.size == 0 or t_grid.size < 3:
        raise ValueError("gap scan needs a non-empty pump grid and at least three times")
    if math.isinf(p.beta) or p.beta <= 0:
        raise ValueError("gap scan needs a finite positive beta")
    step = float(np.max(np.diff(t_grid)))
    if p.J > 0 and step > 0.01 / p.J + 1e-15:
        raise ValueError(f"time step {step} too coarse, need <= {0.01 / p.J}")
    d, tq, tb = [], [], []
    for om in omega1_grid:
        gap, t_q, t_b = dissipation_gap(p.with_(omega1=float(om)), t_grid)
        d.append(gap)
        tq.append(t_q)
        tb.append(t_b)
    return GapScan(
        omega1_values=omega1_grid,
        d_values=np.array(d),
        t_grid=(float(t_grid[0]), float(t_grid[-1]), int(t_grid.size)),
        t_heat_max=np.array(tq),
        t_bound_max=np.array(tb),
    )


__all__ = [
    "ENV_ORDER",
    "GapScan",
    "INFINITE_BETA",
    "ModelParams",
    "STATE_LABELS",
    "SYSTEM_ORDER",
    "VOperators",
    "build_interaction_hamiltonian",
    "cgf",
    "cgf_closed",
    "dissipation_gap",
    "env_hamiltonian",
    "env_ket",
    "env_op",
    "free_hamiltonian",
    "gap_scan",
    "heat_and_bound",
    "heat_distribution",
    "initial_state",
    "locate_maximum",
    "mean_heat",
    "mean_heat_closed",
    "model_propagator",
    "non_unitality",
    "non_unitality_closed",
    "populations",
    "printed_propagator",
    "protocol",
    "reduced_state",
    "system_hamiltonian",
    "system_ket",
    "system_op",
    "v_operators",
]
