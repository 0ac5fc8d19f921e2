"""Full counting statistics of heat under the two-time measurement protocol.

The environment energy is measured projectively before and after a joint
unitary acting on ``S (x) E``; the heat is the difference of the outcomes.
Subsystem 0 of every composite operator is the system, subsystem 1 the
environment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import comb, logsumexp

from .quantum import (
    INFINITE_BETA,
    DensityMatrix,
    Operator,
    as_density,
    as_operator,
    frobenius_norm,
    hermitian_eigh,
    hermitian_function,
    mutual_information,
    partial_trace,
    propagator,
    relative_entropy,
    tensor_product,
    thermal_state,
    von_neumann_entropy,
)

BINNING_RTOL = 1e-9
KRAUS_CUTOFF = 1e-14
UNITARY_TOL = 1e-10
MC_CHUNK_SIZE = 1 << 16
# atoms below this are rounding residue of exactly forbidden transitions
PROB_FLOOR = 1e-15


@dataclass(frozen=True)
class EnergyLevel:
    """One eigenvalue cluster of the environment Hamiltonian."""

    energy: float
    rank: int
    projector: np.ndarray
    weight: float  # Gibbs population of the whole cluster
    gibbs_block: np.ndarray = field(default=None, repr=False)  # Pi rho_beta Pi from eigenpairs


@dataclass(frozen=True)
class JointOutcomeDistribution:
    """Born probabilities ``P[E_m, E_n]`` of the two measurement outcomes.

    ``entries`` holds ``(E_n, E_m, prob)`` triples; ``env_spectrum`` holds
    ``(energy, rank)`` of every measured level.
    """

    entries: tuple[tuple[float, float, float], ...]
    env_spectrum: tuple[tuple[float, int], ...]

    def __post_init__(self):
        probs = np.array([p for _, _, p in self.entries])
        if probs.size and probs.min() < -1e-12:
            raise ValueError(f"negative joint probability {probs.min():.3g}")
        if abs(probs.sum() - 1.0) > 1e-10:
            raise ValueError(f"joint probabilities sum to {probs.sum()!r}")

    def matrix(self) -> np.ndarray:
        """Probabilities as an array indexed ``[m, n]`` over ``env_spectrum``."""
        energies = [e for e, _ in self.env_spectrum]
        out = np.zeros((len(energies), len(energies)))
        for e_n, e_m, p in self.entries:
            out[energies.index(e_m), energies.index(e_n)] += p
        return out


@dataclass(frozen=True)
class HeatDistribution:
    """Discrete heat distribution with strictly increasing atoms."""

    q: np.ndarray
    prob: np.ndarray
    n_samples: int | None = None

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        p = np.asarray(self.prob, dtype=float)
        if q.shape != p.shape or q.ndim != 1:
            raise ValueError("heat values and probabilities must be matching 1-d arrays")
        if q.size == 0:
            raise ValueError("empty heat distribution")
        if np.any(np.diff(q) <= 0):
            raise ValueError("heat values must be strictly increasing")
        if abs(p.sum() - 1.0) > 1e-10:
            raise ValueError(f"heat probabilities sum to {p.sum()!r}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "prob", p)

    @property
    def entries(self) -> list[tuple[float, float]]:
        return list(zip(self.q.tolist(), self.prob.tolist()))

    def probability(self, q: float, atol: float = 1e-9) -> float:
        hit = np.abs(self.q - q) <= atol
        return float(self.prob[hit].sum())

    def mean(self) -> float:
        return float(np.dot(self.q, self.prob))


@dataclass(frozen=True)
class CGFSample:
    eta: float
    beta: float
    t: float | None
    theta: float


@dataclass(frozen=True)
class BoundReport:
    """Lower and upper bounds on ``beta <Q>`` at one time.

    ``lower`` maps each positive counting parameter to its lower bound and
    ``upper`` maps each negative one to its upper bound.
    """

    beta_mean_q: float
    lower: dict[float, float]
    upper: dict[float, float]
    delta_s: float | None = None


@dataclass(frozen=True)
class LandauerAudit:
    beta_mean_q: float
    delta_s: float
    mutual_info: float
    env_relative_entropy: float

    @property
    def residual(self) -> float:
        return self.beta_mean_q - self.delta_s - self.mutual_info - self.env_relative_entropy


@dataclass(frozen=True)
class ConditionalChannelOperator:
    a_eta: Operator
    eta: float
    kraus: tuple[np.ndarray, ...] = field(default=(), repr=False)


# ---------------------------------------------------------------------------
# helpers


def _check_unitary(u: Operator):
    m = u.matrix
    err = np.linalg.norm(m @ m.conj().T - np.eye(m.shape[0]))
    if err > UNITARY_TOL:
        raise ValueError(f"evolution operator is not unitary (||UU^+ - I|| = {err:.3g})")


def _composite(u, rho_s0, h_env):
    """Coerce the protocol inputs and attach an ``S (x) E`` factorization."""
    rho_s0 = as_density(rho_s0)
    h_env = as_operator(h_env)
    d_s, d_e = rho_s0.dim, h_env.dim
    u = as_operator(u)
    if u.dim != d_s * d_e:
        raise ValueError(
            f"unitary has dimension {u.dim}, expected {d_s} x {d_e} = {d_s * d_e}"
        )
    u = as_operator(u.matrix, (d_s, d_e))
    _check_unitary(u)
    return u, rho_s0, h_env


def energy_levels(h_env, beta: float) -> list[EnergyLevel]:
    """Eigenvalue clusters of ``h_env`` with their Gibbs weights.

    Eigenvalues closer than ``BINNING_RTOL`` times the spectral width are
    treated as one degenerate level.
    """
    th = thermal_state(h_env, beta)
    w, v, g = th.energies, th.vectors, th.weights
    width = w[-1] - w[0]
    tol = BINNING_RTOL * width if width > 0 else BINNING_RTOL
    levels = []
    start = 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > tol:
            vecs = v[:, start:i]
            levels.append(
                EnergyLevel(
                    energy=float(np.mean(w[start:i])),
                    rank=i - start,
                    projector=vecs @ vecs.conj().T,
                    weight=float(g[start:i].sum()),
                    gibbs_block=(vecs * g[start:i]) @ vecs.conj().T,
                )
            )
            start = i
    return levels


def _bin_heat(q_values, probs, scale: float) -> HeatDistribution:
    """Merge heat values closer than ``BINNING_RTOL * scale`` into one atom."""
    order = np.argsort(q_values, kind="stable")
    q_sorted = np.asarray(q_values, dtype=float)[order]
    p_sorted = np.asarray(probs, dtype=float)[order]
    tol = BINNING_RTOL * scale if scale > 0 else BINNING_RTOL
    # a new atom starts wherever the gap to the previous value exceeds tol
    starts = np.flatnonzero(np.concatenate(([True], np.diff(q_sorted) > tol)))
    atoms_q = np.array([seg.mean() for seg in np.split(q_sorted, starts[1:])])
    atoms_p = np.clip(np.add.reduceat(p_sorted, starts), 0.0, None)
    keep = atoms_p > PROB_FLOOR
    return HeatDistribution(atoms_q[keep], atoms_p[keep] / atoms_p[keep].sum())


def _shifted_env(h_env: Operator) -> np.ndarray:
    # constants cancel in e^{-x H} U e^{x H}; centring keeps the exponentials small
    w, _ = hermitian_eigh(h_env)
    return h_env.matrix - 0.5 * (w[0] + w[-1]) * np.eye(h_env.dim)


def _env_exp(h_env_shifted: np.ndarray, x: float) -> np.ndarray:
    """``exp(x H_E)`` through the eigenbasis of the environment Hamiltonian."""
    w, v = np.linalg.eigh(h_env_shifted)
    return (v * np.exp(x * w)) @ v.conj().T


# ---------------------------------------------------------------------------
# distributions


def joint_distribution(u, rho_s0, h_env, beta: float) -> JointOutcomeDistribution:
    """Probability of measuring ``E_n`` at time 0 and ``E_m`` after ``u``."""
    u, rho_s0, h_env = _composite(u, rho_s0, h_env)
    levels = energy_levels(h_env, beta)
    d_s = rho_s0.dim
    eye_s = np.eye(d_s)
    entries = []
    for lev_n in levels:
        if lev_n.weight == 0.0:
            for lev_m in levels:
                entries.append((lev_n.energy, lev_m.energy, 0.0))
            continue
        # built from eigenpairs so that tiny populations keep full relative precision
        start = np.kron(rho_s0.matrix, lev_n.gibbs_block)
        evolved = u.matrix @ start @ u.matrix.conj().T
        for lev_m in levels:
            p = np.trace(np.kron(eye_s, lev_m.projector) @ evolved).real
            entries.append((lev_n.energy, lev_m.energy, float(p)))
    spectrum = tuple((lev.energy, lev.rank) for lev in levels)
    return JointOutcomeDistribution(tuple(entries), spectrum)


def heat_distribution(joint: JointOutcomeDistribution) -> HeatDistribution:
    """Aggregate joint outcomes into atoms at ``Q = E_m - E_n``."""
    energies = [e for e, _ in joint.env_spectrum]
    width = max(energies) - min(energies)
    q = [e_m - e_n for e_n, e_m, _ in joint.entries]
    p = [prob for _, _, prob in joint.entries]
    return _bin_heat(q, p, width)


def heat_distribution_from_protocol(u, rho_s0, h_env, beta: float) -> HeatDistribution:
    return heat_distribution(joint_distribution(u, rho_s0, h_env, beta))


# ---------------------------------------------------------------------------
# cumulant generating function


def cgf_from_distribution(dist: HeatDistribution, eta: float, beta: float = math.nan,
                          t: float | None = None) -> CGFSample:
    """``ln sum_Q p(Q) exp(-eta Q)`` evaluated with log-sum-exp."""
    mask = dist.prob > 0
    if eta == 0:
        theta = 0.0
    else:
        theta = float(logsumexp(-eta * dist.q[mask], b=dist.prob[mask]))
    return CGFSample(eta=eta, beta=beta, t=t, theta=theta)


def cgf_tilted(u, rho_s0, h_env, beta: float, eta: float, t: float | None = None) -> CGFSample:
    """CGF from the tilted propagator ``exp(-eta H_E/2) U exp(eta H_E/2)``.

    The trace of the tilted state equals the squared Frobenius norm of
    ``exp(-eta H_E/2) U (rho_S^1/2 (x) exp(eta H_E/2) rho_beta^1/2)``.  It is
    evaluated in the eigenbasis of ``H_E`` where both exponentials are
    diagonal, so every contribution is a non-negative term computed to full
    relative precision.
    """
    u, rho_s0, h_env = _composite(u, rho_s0, h_env)
    th = thermal_state(h_env, beta)
    d_s = rho_s0.dim
    e = th.energies - 0.5 * (th.energies[0] + th.energies[-1])
    v = np.kron(np.eye(d_s), th.vectors)
    u_eig = v.conj().T @ u.matrix @ v
    left = np.tile(np.exp(-0.5 * eta * e), d_s)
    right = np.exp(0.5 * eta * e) * np.sqrt(th.weights)
    sqrt_rho = hermitian_function(rho_s0, lambda lam: np.sqrt(np.clip(lam, 0.0, None)))
    m = (left[:, None] * u_eig) @ np.kron(sqrt_rho, np.diag(right))
    total = float(np.sum(m.real**2 + m.imag**2))
    return CGFSample(eta=eta, beta=beta, t=t, theta=math.log(total))


def cumulants(dist: HeatDistribution, order: int) -> float:
    """Heat cumulant of the given order from exact raw moments."""
    if order < 1:
        raise ValueError(f"cumulant order must be at least 1, got {order}")
    # centring first keeps the recursion well conditioned; only order 1 sees the shift
    mean = dist.mean()
    if order == 1:
        return mean
    dq = dist.q - mean
    mu = [1.0] + [float(np.dot(dq**k, dist.prob)) for k in range(1, order + 1)]
    kappa = [0.0] * (order + 1)
    for n in range(1, order + 1):
        kappa[n] = mu[n] - sum(
            comb(n - 1, k - 1, exact=True) * kappa[k] * mu[n - k] for k in range(1, n)
        )
    return kappa[order]


def cumulant_by_differentiation(cgf: Callable[[float], float], order: int,
                                step: float | None = None, levels: int = 3) -> float:
    """``(-1)^n d^n Theta / d eta^n`` at zero by Richardson-extrapolated central differences.

    The default step ``0.01 n^1.7`` balances truncation against the
    ``eps / h^n`` roundoff of an ``n``-th difference for heat of order one;
    rescale it inversely with the heat scale.
    """
    if order < 1:
        raise ValueError(f"cumulant order must be at least 1, got {order}")
    if step is None:
        step = 0.01 * order**1.7

    def central(h):
        # n-th central difference on the symmetric stencil of n+1 (n even) or n+2 points
        k = np.arange(order + 1)
        weights = np.array([(-1) ** int(j) * comb(order, int(j), exact=True) for j in k])
        nodes = (order / 2.0 - k) * h
        return float(np.dot(weights, [cgf(x) for x in nodes])) / h**order

    table = [central(step / 2**i) for i in range(levels)]
    for j in range(1, levels):
        factor = 4.0**j
        table = [(factor * table[i + 1] - table[i]) / (factor - 1) for i in range(len(table) - 1)]
    return (-1) ** order * table[0]


# ---------------------------------------------------------------------------
# bounds


def bound_family(cgf: Callable[[float], float], beta: float, etas: Sequence[float],
                 beta_mean_q: float | None = None, delta_s: float | None = None) -> BoundReport:
    """One-parameter family of bounds on ``beta <Q>`` from a convex CGF.

    Positive counting parameters give lower bounds ``-(beta/eta) Theta(eta)``;
    negative ones give upper bounds ``(beta/|eta|) Theta(eta)``.  When
    ``beta_mean_q`` is not supplied it is taken from the first cumulant by
    Richardson-extrapolated differentiation of ``cgf``.
    """
    if not beta > 0 or math.isinf(beta):
        raise ValueError(f"bounds need a finite positive beta, got {beta}")
    lower, upper = {}, {}
    for eta in etas:
        if eta == 0:
            raise ValueError("counting parameter eta = 0 gives no bound")
        theta = cgf(eta)
        if eta > 0:
            lower[eta] = -(beta / eta) * theta
        else:
            upper[eta] = (beta / abs(eta)) * theta
    if beta_mean_q is None:
        beta_mean_q = beta * cumulant_by_differentiation(cgf, 1)
    return BoundReport(beta_mean_q=beta_mean_q, lower=lower, upper=upper, delta_s=delta_s)


def bound_report(u, rho_s0, h_env, beta: float, etas: Sequence[float]) -> BoundReport:
    """Bounds from the exact heat distribution, with ``beta <Q>`` from its mean."""
    dist = heat_distribution_from_protocol(u, rho_s0, h_env, beta)
    rho_s0 = as_density(rho_s0)
    rho_t = evolve_reduced(u, rho_s0, h_env, beta)[0]
    delta_s = von_neumann_entropy(rho_s0) - von_neumann_entropy(rho_t)
    return bound_family(
        lambda eta: cgf_from_distribution(dist, eta).theta,
        beta,
        etas,
        beta_mean_q=beta * dist.mean(),
        delta_s=delta_s,
    )


# ---------------------------------------------------------------------------
# environment channel


def environment_kraus(u, rho_s0, h_env) -> list[np.ndarray]:
    """Kraus operators ``sqrt(lambda_j) <i|U|j>`` of the map on the environment."""
    u, rho_s0, h_env = _composite(u, rho_s0, h_env)
    d_s, d_e = rho_s0.dim, h_env.dim
    lam, vecs = rho_s0.eigh()
    blocks = u.matrix.reshape(d_s, d_e, d_s, d_e)
    kraus = []
    for lam_j, v_j in zip(lam, vecs.T):
        if lam_j < KRAUS_CUTOFF:
            continue
        # <i| U |j> as an operator on E, with |j> the eigenvector of rho_S(0)
        col = np.einsum("iajb,j->iab", blocks, v_j)
        for i in range(d_s):
            kraus.append(math.sqrt(lam_j) * col[i])
    return kraus


def conditional_channel(u, rho_s0, h_env, beta: float, eta: float) -> ConditionalChannelOperator:
    """Environment operator whose Gibbs average is ``exp Theta(eta)``.

    It is the system trace of ``U' (rho_S (x) 1) U'^+`` with the propagator
    conjugated by ``exp(-(eta - beta) H_E / 2)``.  At ``eta = beta`` it is the
    plain Kraus sum ``sum_k A_k A_k^+``.
    """
    if math.isinf(beta):
        raise ValueError("conditional channel needs a finite beta")
    u, rho_s0, h_env = _composite(u, rho_s0, h_env)
    d_s = rho_s0.dim
    kraus = tuple(environment_kraus(u, rho_s0, h_env))
    if eta == beta:
        a = sum(k @ k.conj().T for k in kraus)
    else:
        h = _shifted_env(h_env)
        x = 0.5 * (eta - beta)
        left = np.kron(np.eye(d_s), _env_exp(h, -x))
        right = np.kron(np.eye(d_s), _env_exp(h, x))
        u_c = left @ u.matrix @ right
        rho = u_c @ np.kron(rho_s0.matrix, np.eye(h_env.dim)) @ u_c.conj().T
        a = partial_trace(Operator(rho, (d_s, h_env.dim)), 1).matrix
    a = 0.5 * (a + a.conj().T)
    return ConditionalChannelOperator(Operator(a, h_env.space), eta, kraus)


def cgf_from_channel(channel: ConditionalChannelOperator, h_env, beta: float) -> float:
    """``ln Tr_E[rho_beta A^eta]``."""
    rho_beta = thermal_state(h_env, beta).rho.matrix
    return math.log(np.trace(rho_beta @ channel.a_eta.matrix).real)


def non_unitality(u, rho_s0, h_env) -> float:
    """Frobenius distance of the environment Kraus sum from the identity."""
    kraus = environment_kraus(u, rho_s0, h_env)
    a = sum(k @ k.conj().T for k in kraus)
    return frobenius_norm(a - np.eye(a.shape[0]))


# ---------------------------------------------------------------------------
# Landauer identity


def evolve_reduced(u, rho_s0, h_env, beta: float):
    """Return ``(rho_S(t), rho_E(t), rho_SE(t))`` after the joint unitary."""
    u, rho_s0, h_env = _composite(u, rho_s0, h_env)
    rho_beta = thermal_state(h_env, beta).rho
    rho0 = tensor_product(rho_s0, rho_beta).matrix
    rho_t = u.matrix @ rho0 @ u.matrix.conj().T
    rho_t = 0.5 * (rho_t + rho_t.conj().T)
    rho_se = DensityMatrix(rho_t, (rho_s0.dim, h_env.dim))
    return (
        as_density(partial_trace(rho_se, 0)),
        as_density(partial_trace(rho_se, 1)),
        rho_se,
    )


def mean_heat(u, rho_s0, h_env, beta: float) -> float:
    """``Tr[H_E (rho_E(t) - rho_beta)]``."""
    h_env = as_operator(h_env)
    _, rho_e, _ = evolve_reduced(u, rho_s0, h_env, beta)
    rho_beta = thermal_state(h_env, beta).rho
    return float(np.trace(h_env.matrix @ (rho_e.matrix - rho_beta.matrix)).real)


def landauer_audit(h_total, rho_s0, h_env, beta: float, t: float) -> LandauerAudit:
    """Evaluate every term of the entropy-production identity at time ``t``.

    ``beta <Q> = Delta S + I(S:E) + D(rho_E(t) || rho_beta)`` holds exactly
    for the unitary dynamics generated by ``h_total``.
    """
    if math.isinf(beta):
        raise ValueError("the audit needs a finite beta")
    rho_s0 = as_density(rho_s0)
    h_env = as_operator(h_env)
    u = propagator(as_operator(h_total, (rho_s0.dim, h_env.dim)), t)
    rho_s, rho_e, rho_se = evolve_reduced(u, rho_s0, h_env, beta)
    rho_beta = thermal_state(h_env, beta).rho
    q = float(np.trace(h_env.matrix @ (rho_e.matrix - rho_beta.matrix)).real)
    return LandauerAudit(
        beta_mean_q=beta * q,
        delta_s=von_neumann_entropy(rho_s0) - von_neumann_entropy(rho_s),
        mutual_info=mutual_information(rho_se),
        env_relative_entropy=relative_entropy(rho_e, rho_beta),
    )


# ---------------------------------------------------------------------------
# Monte Carlo oracle


def mc_sample_heat(u, rho_s0, h_env, beta: float, n_samples: int, seed: int = 0,
                   chunk_size: int = MC_CHUNK_SIZE) -> HeatDistribution:
    """Empirical heat distribution from simulated measurement records.

    Each record draws an eigenvector ``|j>`` of ``rho_S(0)``, an environment
    eigenvector with its Gibbs weight, and a final energy level from the Born
    rule after applying ``u``.  Chunk ``k`` uses a generator seeded from
    ``(seed, k)``, so output depends only on ``seed`` and ``chunk_size``.
    """
    if n_samples < 1:
        raise ValueError(f"need at least one sample, got {n_samples}")
    u, rho_s0, h_env = _composite(u, rho_s0, h_env)
    th = thermal_state(h_env, beta)
    levels = energy_levels(h_env, beta)
    level_energy = np.array([lev.energy for lev in levels])
    d_s, d_e = rho_s0.dim, h_env.dim

    lam, svecs = rho_s0.eigh()
    lam = np.clip(lam, 0.0, None)
    lam = lam / lam.sum()
    gibbs = th.weights
    # energy of each environment eigenvector, snapped to its cluster
    env_level = np.array([
        int(np.argmin(np.abs(level_energy - e))) for e in th.energies
    ])

    # Born table P[m | j, n]
    born = np.zeros((d_s, d_e, len(levels)))
    eye_s = np.eye(d_s)
    for j in range(d_s):
        for n in range(d_e):
            psi = u.matrix @ np.kron(svecs[:, j], th.vectors[:, n])
            for m, lev in enumerate(levels):
                proj = np.kron(eye_s, lev.projector)
                born[j, n, m] = np.vdot(psi, proj @ psi).real
    born = np.clip(born, 0.0, None)
    born /= born.sum(axis=2, keepdims=True)
    cdf = np.cumsum(born, axis=2)
    cdf[..., -1] = 1.0

    counts = np.zeros((len(levels), len(levels)), dtype=np.int64)  # [n_level, m_level]
    root = np.random.SeedSequence(seed)
    n_chunks = -(-n_samples // chunk_size)
    for k in range(n_chunks):
        size = min(chunk_size, n_samples - k * chunk_size)
        rng = np.random.default_rng(np.random.SeedSequence(root.entropy, spawn_key=(k,)))
        j = rng.choice(d_s, size=size, p=lam)
        n = rng.choice(d_e, size=size, p=gibbs)
        r = rng.random(size)
        m = (r[:, None] > cdf[j, n]).sum(axis=1)
        np.add.at(counts, (env_level[n], m), 1)

    width = level_energy.max() - level_energy.min()
    q, p = [], []
    for a in range(len(levels)):
        for b in range(len(levels)):
            if counts[a, b]:
                q.append(level_energy[b] - level_energy[a])
                p.append(counts[a, b] / n_samples)
    dist = _bin_heat(q, p, width)
    return HeatDistribution(dist.q, dist.prob, n_samples=n_samples)


__all__ = [
    "BoundReport",
    "CGFSample",
    "ConditionalChannelOperator",
    "EnergyLevel",
    "HeatDistribution",
    "INFINITE_BETA",
    "JointOutcomeDistribution",
    "LandauerAudit",
    "bound_family",
    "bound_report",
    "cgf_from_channel",
    "cgf_from_distribution",
    "cgf_tilted",
    "conditional_channel",
    "cumulant_by_differentiation",
    "cumulants",
    "energy_levels",
    "environment_kraus",
    "evolve_reduced",
    "heat_distribution",
    "heat_distribution_from_protocol",
    "joint_distribution",
    "landauer_audit",
    "mc_sample_heat",
    "mean_heat",
    "non_unitality",
]
