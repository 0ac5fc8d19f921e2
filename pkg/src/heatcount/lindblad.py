"""Master equations of the V-system and the large-deviation function of heat.

Two generators live here.

* The exact time-local master equation of the V-system when the environment
  qubit starts in its ground state.  Its rates are periodic in time and
  diverge at isolated poles, so it is only integrated between poles.
* A time-independent damped generator whose jump term is tilted by the
  counting parameter.  Its leading eigenvalue is the large-deviation function
  of the emitted heat.

System matrices use the ordering ``(|2>, |1>, |0>)`` of :mod:`heatcount.vmodel`.
Superoperators act on row-major vectorized density matrices, so
``vec(A rho B) = kron(A, B.T) vec(rho)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from . import fcs
from .quantum import DensityMatrix, Operator, as_density
from .vmodel import ModelParams, env_hamiltonian, model_propagator, system_op

POLE_RTOL = 1e-12
ODE_RTOL = 1e-9
ODE_ATOL = 1e-12
KINK_STEP = 1e-3


class PoleError(ValueError):
    """Raised when a master-equation rate is evaluated at or across a pole."""

    def __init__(self, message: str, t_pole: float):
        super().__init__(message)
        self.t_pole = t_pole


@dataclass(frozen=True)
class MECoefficients:
    """Rates and mixing angles of the exact master equation at one time."""

    t: float
    a: float
    b: float
    d1: float
    d2: float
    v_plus: float
    v_minus: float


@dataclass(frozen=True)
class LindbladSet:
    """Effective Hamiltonian plus ``(jump operator, rate, heat per jump)`` triples."""

    h_eff: Operator
    jumps: tuple[tuple[np.ndarray, float, float], ...]


@dataclass(frozen=True)
class LDFCurve:
    """Large-deviation function on a grid of counting parameters.

    ``lower_stationary`` holds ``-(beta/eta) theta`` for ``eta > 0`` and
    ``upper_stationary`` holds ``(beta/|eta|) theta`` for ``eta < 0``; other
    entries are NaN.  ``bound_scale`` is the ``beta`` used for both, and
    ``kink`` is ``theta'(0+) - theta'(0-)`` from one-sided differences.
    """

    etas: np.ndarray
    theta: np.ndarray
    lower_stationary: np.ndarray
    upper_stationary: np.ndarray
    kink: float
    bound_scale: float


# ---------------------------------------------------------------------------
# exact master equation for a cold environment


def _require_cold(p: ModelParams):
    if not math.isinf(p.beta):
        raise ValueError(
            f"the exact master equation is derived for a ground-state environment; got beta={p.beta}"
        )


def me_poles(p: ModelParams, t_max: float) -> list[float]:
    """Times in ``(0, t_max]`` where the shared rate denominator vanishes."""
    if p.J == 0:
        return []
    w = p.rabi
    c_star = 1.0 - w**2 / (4 * p.J**2)
    if c_star < -1.0:
        return []
    phase = math.acos(max(c_star, -1.0))
    poles = []
    k = 0
    while 2 * math.pi * k - phase <= w * t_max:
        for x in (2 * math.pi * k - phase, 2 * math.pi * k + phase):
            t = x / w
            if 0 < t <= t_max and (not poles or t - poles[-1] > 1e-12):
                poles.append(t)
        k += 1
    return poles


def first_pole(p: ModelParams) -> float:
    """Earliest pole, or ``inf`` when the pump exceeds ``2 J``."""
    if p.J == 0:
        return math.inf
    w = p.rabi
    c_star = 1.0 - w**2 / (4 * p.J**2)
    if c_star < -1.0:
        return math.inf
    return math.acos(c_star) / w


def me_coefficients(p: ModelParams, t: float) -> MECoefficients:
    """Time-dependent rates ``d_1 <= 0 <= d_2`` and the jump mixing ``v_+-``.

    Raises :class:`PoleError` where the rate denominator vanishes.
    """
    J, om, w = p.J, p.omega1, p.rabi
    if w == 0:
        return MECoefficients(t, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0)
    one_minus_c = 1.0 - math.cos(w * t)
    den = w**2 - 4 * J**2 * one_minus_c
    if abs(den) <= POLE_RTOL * w**2:
        raise PoleError(f"master-equation rates diverge at t={t!r}", t)
    a = 2 * J**2 * om * one_minus_c / den
    b = 4 * J**2 * w * math.sin(w * t) / den
    r = math.hypot(b, 2 * a)
    if r == 0:
        v_plus, v_minus = 0.0, -1.0
    else:
        # cancellation-free forms of the mixing coefficients; sign(0) taken as +1
        sgn = 1.0 if a >= 0 else -1.0
        # (r - b)(r + b) = 4 a^2; take the small factor from the large one
        if b >= 0:
            r_plus = r + b
            r_minus = 4 * a * a / r_plus
        else:
            r_minus = r - b
            r_plus = 4 * a * a / r_minus
        v_plus = sgn * math.sqrt(r_minus / (2 * r))
        v_minus = -sgn * math.sqrt(r_plus / (2 * r))
    return MECoefficients(t, a, b, b - r, b + r, v_plus, v_minus)


def jump_operators(c: MECoefficients) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal lowering operators ``G_-`` and ``H_-`` out of ``|2>``.

    ``G_-`` carries ``+v_-`` on ``|1><2|``; that sign makes the pair
    orthogonal and reproduces the unitary dynamics.
    """
    # v_+^2 + v_-^2 = 1, so each partner amplitude is the other coefficient's modulus
    g = c.v_minus * system_op(1, 2) + 1j * abs(c.v_plus) * system_op(0, 2)
    h = c.v_plus * system_op(1, 2) + 1j * abs(c.v_minus) * system_op(0, 2)
    return g, h


def pump_hamiltonian(p: ModelParams) -> np.ndarray:
    """Pump term ``omega1 (|0><1| + |1><0|)`` of the reduced dynamics."""
    return p.omega1 * (system_op(0, 1) + system_op(1, 0))


def lindblad_set(p: ModelParams, t: float) -> LindbladSet:
    c = me_coefficients(p, t)
    g, h = jump_operators(c)
    eps = 2 * p.B
    return LindbladSet(Operator(pump_hamiltonian(p)), ((g, c.d1, eps), (h, c.d2, eps)))


def dissipator(jump: np.ndarray, rho: np.ndarray) -> np.ndarray:
    jd = jump.conj().T
    jdj = jd @ jump
    return jump @ rho @ jd - 0.5 * (jdj @ rho + rho @ jdj)


def _me_rhs_matrix(p: ModelParams, rho: np.ndarray, t: float) -> np.ndarray:
    c = me_coefficients(p, t)
    g, h = jump_operators(c)
    hp = pump_hamiltonian(p)
    return -1j * (hp @ rho - rho @ hp) + c.d1 * dissipator(g, rho) + c.d2 * dissipator(h, rho)


def me_rhs(p: ModelParams, rho, t: float) -> Operator:
    """Right-hand side of the exact master equation at time ``t``."""
    _require_cold(p)
    rho = as_density(rho).matrix
    return Operator(_me_rhs_matrix(p, rho, t))


def amplitude_damping_rhs(p: ModelParams, rho, t: float, corrected: bool = False) -> Operator:
    """Single-channel amplitude damping of ``|2> -> |0>`` at rate ``2J tan(2Jt)``.

    This is the commonly quoted unpumped form.  With ``corrected`` the rate is
    ``4J tan(2Jt) = d_2(t)``, which is what the general equation reduces to at
    ``omega1 = 0`` and what the exact population ``cos^2(2Jt)`` requires.
    """
    rho = np.asarray(as_density(rho).matrix)
    rate = (4 if corrected else 2) * p.J * math.tan(2 * p.J * t)
    return Operator(rate * dissipator(system_op(0, 2), rho))


def integrate_master_equation(p: ModelParams, rho0, times: Sequence[float],
                              rtol: float = ODE_RTOL, atol: float = ODE_ATOL) -> np.ndarray:
    """Integrate the exact master equation from ``times[0]`` over ``times``.

    The window must not contain a pole; a :class:`PoleError` is raised if it
    does.  Returns an array of shape ``(len(times), 3, 3)``.
    """
    _require_cold(p)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or np.any(np.diff(times) < 0):
        raise ValueError("times must be a non-empty increasing sequence")
    t0, t1 = float(times[0]), float(times[-1])
    for tp in me_poles(p, t1):
        if t0 <= tp <= t1:
            raise PoleError(f"integration window [{t0}, {t1}] crosses the pole at t={tp:.12g}", tp)
    rho0 = as_density(rho0).matrix
    if t1 == t0:
        return np.repeat(rho0[None], times.size, axis=0)

    def f(t, y):
        return _me_rhs_matrix(p, y.reshape(3, 3), t).ravel()

    uniq, inverse = np.unique(times, return_inverse=True)
    sol = solve_ivp(f, (t0, t1), rho0.ravel(), method="DOP853", t_eval=uniq, rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(f"master-equation integration failed: {sol.message}")
    return sol.y.T.reshape(-1, 3, 3)[inverse]


def exact_cold_state(p: ModelParams, rho0, t: float) -> np.ndarray:
    """Reduced state from the full unitary with the qubit in its ground state."""
    u = model_propagator(p, t)
    rho_s = fcs.evolve_reduced(u, as_density(rho0), env_hamiltonian(p), math.inf)[0]
    return rho_s.matrix


def evolve_across_poles(p: ModelParams, rho0, times: Sequence[float],
                        margin: float = 0.1) -> np.ndarray:
    """Integrate pole-free windows, restarting from the exact state after each pole.

    Between consecutive poles ``t_k < t_{k+1}`` only the window that stays a
    fraction ``margin`` of the gap away from both poles is integrated; it is
    started from the exact unitary state at its left edge.  Times outside
    every window come back as NaN matrices.
    """
    _require_cold(p)
    times = np.asarray(times, dtype=float)
    rho0 = as_density(rho0)
    out = np.full((times.size, 3, 3), np.nan, dtype=complex)
    edges = [0.0] + me_poles(p, float(times.max()) + 1.0)
    edges.append(math.inf)
    prev_gap = 1.0
    for left, right in zip(edges[:-1], edges[1:]):
        # the unbounded last interval borrows the width of the one before it
        gap = right - left if math.isfinite(right) else prev_gap
        prev_gap = gap
        lo = left if left == 0.0 else left + margin * gap
        hi = right - margin * gap if math.isfinite(right) else math.inf
        mask = (times >= lo) & (times <= hi)
        if not mask.any():
            continue
        start = rho0.matrix if lo == 0.0 else exact_cold_state(p, rho0, lo)
        window = np.concatenate(([lo], times[mask]))
        states = integrate_master_equation(p, start, window)
        out[mask] = states[1:]
    return out


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    diff = np.asarray(a) - np.asarray(b)
    diff = 0.5 * (diff + diff.conj().T)
    return 0.5 * float(np.abs(np.linalg.eigvalsh(diff)).sum())


# ---------------------------------------------------------------------------
# damped generator and large deviations


def _spre(a):
    return np.kron(a, np.eye(a.shape[0]))


def _spost(a):
    return np.kron(np.eye(a.shape[0]), a.T)


def ldf_hamiltonian(p: ModelParams, exchange: bool = True) -> np.ndarray:
    """Coherent part of the damped generator.

    With ``exchange`` the ``|0> <-> |2>`` transition also carries the
    coherent exchange ``2J S_x^{20}``, giving the Hamiltonian the
    eigenfrequencies ``0, +-sqrt(4J^2 + omega1^2)``.  Without it the damped
    level ``|2>`` is never refilled and the LDF vanishes identically.
    """
    h = pump_hamiltonian(p)
    if exchange:
        h = h + 2 * p.J * (system_op(0, 2) + system_op(2, 0))
    return h


def dissipative_generator(p: ModelParams, eta: float, exchange: bool = True) -> np.ndarray:
    """Tilted 9x9 generator with the emission term dressed by ``exp(-eta 2B)``."""
    if not p.gamma > 0:
        raise ValueError(f"damping rate gamma must be positive, got {p.gamma}")
    h = ldf_hamiltonian(p, exchange)
    lower = system_op(0, 2)
    ldl = lower.conj().T @ lower
    eps = 2 * p.B
    return (
        -1j * (_spre(h) - _spost(h))
        + p.gamma * math.exp(-eta * eps) * _spre(lower) @ _spost(lower.conj().T)
        - 0.5 * p.gamma * (_spre(ldl) + _spost(ldl))
    )


def no_jump_abscissa(p: ModelParams, exchange: bool = True) -> float:
    """Largest real part in the spectrum of the generator without its jump term."""
    h = ldf_hamiltonian(p, exchange)
    ldl = system_op(2, 2)
    heff = h - 0.5j * p.gamma * ldl
    sup = -1j * (_spre(heff) - _spost(heff.conj().T))
    return float(np.max(np.linalg.eigvals(sup).real))


def leading_eigenvalue(generator: np.ndarray) -> float:
    try:
        ev = np.linalg.eigvals(generator)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigensolver failed for the tilted generator: {exc}") from exc
    return float(np.max(ev.real))


def scgf(p: ModelParams, eta: float, exchange: bool = True) -> float:
    """Large-deviation function ``theta(eta)``; exactly zero at ``eta = 0``."""
    if eta == 0:
        return 0.0
    return leading_eigenvalue(dissipative_generator(p, eta, exchange))


def ldf(p: ModelParams, eta_grid: Sequence[float], exchange: bool = True,
        delta: float = KINK_STEP) -> LDFCurve:
    etas = np.asarray(eta_grid, dtype=float)
    theta = np.array([scgf(p, e, exchange) for e in etas])
    scale = p.beta if math.isfinite(p.beta) and p.beta > 0 else 1.0
    lower = np.full_like(theta, np.nan)
    upper = np.full_like(theta, np.nan)
    pos, neg = etas > 0, etas < 0
    lower[pos] = -(scale / etas[pos]) * theta[pos]
    upper[neg] = (scale / np.abs(etas[neg])) * theta[neg]
    kink = (scgf(p, delta, exchange) + scgf(p, -delta, exchange)) / delta
    return LDFCurve(etas, theta, lower, upper, kink, scale)


def stationary_state(p: ModelParams, exchange: bool = True) -> DensityMatrix:
    """Unique fixed point of the untilted generator."""
    gen = dissipative_generator(p, 0.0, exchange)
    a = gen.copy()
    # replace one equation by the trace condition
    a[0, :] = np.eye(3).ravel()
    rhs = np.zeros(9, dtype=complex)
    rhs[0] = 1.0
    rho = np.linalg.solve(a, rhs).reshape(3, 3)
    return DensityMatrix(0.5 * (rho + rho.conj().T))


def heat_current(p: ModelParams, exchange: bool = True) -> float:
    """Stationary heat flow ``gamma * 2B * rho_ss^{22}``."""
    rho = stationary_state(p, exchange).matrix
    i2 = 0  # |2> is the first basis state
    return p.gamma * 2 * p.B * float(rho[i2, i2].real)


def _log_trace_growth(gen: np.ndarray, rho0: np.ndarray, t: float, max_step: float):
    """Propagate ``vec(rho0)`` for time ``t``; return the state and log of accumulated trace."""
    n = max(1, math.ceil(t / max_step))
    step = expm(gen * (t / n))
    vec = rho0.ravel().astype(complex)
    log_tr = 0.0
    trace_vec = np.eye(3).ravel()
    for _ in range(n):
        vec = step @ vec
        tr = float(np.real(trace_vec @ vec))
        log_tr += math.log(tr)
        vec = vec / tr
    return vec, log_tr


def finite_time_cgf_slope(p: ModelParams, eta: float, t_max: float, rho0=None,
                          exchange: bool = True) -> float:
    """Growth rate of the finite-time CGF over the window ``[t_max/2, t_max]``.

    The tilted state starts from ``rho0`` (the untilted stationary state by
    default).  The result is ``[Theta(t_max) - Theta(t_max/2)] / (t_max/2)``,
    whose distance to the spectral value decays like the spectral gap.
    """
    if not t_max > 0:
        raise ValueError(f"t_max must be positive, got {t_max}")
    if eta == 0:
        return 0.0
    gen = dissipative_generator(p, eta, exchange)
    rho0 = stationary_state(p, exchange).matrix if rho0 is None else as_density(rho0).matrix
    norm = np.linalg.norm(gen, 2)
    max_step = 20.0 / norm if norm > 0 else t_max
    half = 0.5 * t_max
    vec, _ = _log_trace_growth(gen, rho0, half, max_step)
    _, growth = _log_trace_growth(gen, vec.reshape(3, 3), half, max_step)
    return growth / half


def finite_time_cgf(p: ModelParams, eta: float, t: float, rho0=None,
                    exchange: bool = True) -> float:
    """``Theta(eta, t) = ln Tr[exp(L_eta t) rho0]``."""
    if t < 0:
        raise ValueError(f"time must be non-negative, got {t}")
    if t == 0 or eta == 0:
        return 0.0
    gen = dissipative_generator(p, eta, exchange)
    rho0 = stationary_state(p, exchange).matrix if rho0 is None else as_density(rho0).matrix
    norm = np.linalg.norm(gen, 2)
    return _log_trace_growth(gen, rho0, t, 20.0 / norm if norm > 0 else t)[1]


def derivative_at_zero(f: Callable[[float], float], h: float = 1e-6) -> float:
    """Richardson-extrapolated central difference at the origin."""
    d1 = (f(h) - f(-h)) / (2 * h)
    d2 = (f(h / 2) - f(-h / 2)) / h
    return (4 * d2 - d1) / 3


__all__ = [
    "LDFCurve",
    "LindbladSet",
    "MECoefficients",
    "PoleError",
    "amplitude_damping_rhs",
    "derivative_at_zero",
    "dissipative_generator",
    "dissipator",
    "evolve_across_poles",
    "exact_cold_state",
    "finite_time_cgf",
    "finite_time_cgf_slope",
    "first_pole",
    "heat_current",
    "integrate_master_equation",
    "jump_operators",
    "ldf",
    "ldf_hamiltonian",
    "leading_eigenvalue",
    "lindblad_set",
    "me_coefficients",
    "me_poles",
    "me_rhs",
    "no_jump_abscissa",
    "pump_hamiltonian",
    "scgf",
    "stationary_state",
    "trace_distance",
]
