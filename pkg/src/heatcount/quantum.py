"""Dense operators, states and entropies on factorized Hilbert spaces.

Everything here works on small dense complex matrices.  Operators carry the
tensor factorization of their space so that partial traces know which
indices to contract.  Subsystem 0 is always the leftmost Kronecker factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

# inverse temperature of an environment prepared in its ground space
INFINITE_BETA = math.inf

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-10
ENTROPY_CUTOFF = 1e-14
SUPPORT_TOL = 1e-12


@dataclass(frozen=True)
class HilbertFactorization:
    """Ordered subsystem dimensions of a composite Hilbert space."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 1 for d in dims):
            raise ValueError(f"subsystem dimensions must be positive, got {self.dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def total(self) -> int:
        return math.prod(self.dims)

    def __len__(self):
        return len(self.dims)


@dataclass(frozen=True, eq=False)
class Operator:
    """Square complex matrix acting on a factorized Hilbert space."""

    matrix: np.ndarray
    space: HilbertFactorization = field(default=None)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"operator matrix must be square, got shape {m.shape}")
        space = self.space
        if space is None:
            space = HilbertFactorization((m.shape[0],))
        elif not isinstance(space, HilbertFactorization):
            space = HilbertFactorization(tuple(space))
        if space.total != m.shape[0]:
            raise ValueError(
                f"matrix dimension {m.shape[0]} does not match factorization {space.dims}"
            )
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "space", space)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.space.dims

    @property
    def dim(self) -> int:
        return self.space.total

    def dag(self) -> "Operator":
        return Operator(self.matrix.conj().T, self.space)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0) <= tol)

    def __matmul__(self, other):
        other = as_operator(other)
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return Operator(self.matrix @ other.matrix, self.space)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    def __repr__(self):
        return f"Operator(dims={self.dims})\n{self.matrix!r}"


class DensityMatrix(Operator):
    """Hermitian, positive semidefinite, unit-trace operator.

    Validation happens at construction; a ``ValueError`` names the failed
    property.
    """

    def __post_init__(self):
        super().__post_init__()
        m = self.matrix
        herm_err = np.max(np.abs(m - m.conj().T), initial=0.0)
        if herm_err > HERMITIAN_TOL:
            raise ValueError(f"density matrix is not Hermitian (deviation {herm_err:.3g})")
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace is {tr!r}, expected 1")
        lam_min = np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0]
        if lam_min < -POSITIVITY_TOL:
            raise ValueError(f"density matrix has negative eigenvalue {lam_min:.3g}")

    def eigh(self):
        """Eigenvalues (ascending) and eigenvectors of the Hermitian part."""
        m = self.matrix
        return np.linalg.eigh(0.5 * (m + m.conj().T))


@dataclass(frozen=True, eq=False)
class ThermalState:
    """Gibbs state of an environment Hamiltonian.

    ``ground_weight`` is the total population of the lowest energy level
    (the ``p`` of a qubit environment).  ``partition_fn`` is ``Z_E``; the
    state itself never depends on it, so it may saturate to ``inf`` (or be
    ``0`` for an infinite ``beta``) without harm.
    """

    rho: DensityMatrix
    beta: float
    partition_fn: float
    ground_weight: float
    energies: np.ndarray
    weights: np.ndarray
    vectors: np.ndarray


def as_operator(x, dims=None) -> Operator:
    if isinstance(x, Operator):
        if dims is not None and tuple(dims) != x.dims:
            return Operator(x.matrix, HilbertFactorization(tuple(dims)))
        return x
    m = np.asarray(x, dtype=complex)
    return Operator(m, None if dims is None else HilbertFactorization(tuple(dims)))


def as_density(x, dims=None) -> DensityMatrix:
    if isinstance(x, DensityMatrix) and (dims is None or tuple(dims) == x.dims):
        return x
    op = as_operator(x, dims)
    return DensityMatrix(op.matrix, op.space)


def pure_state(psi, dims=None) -> DensityMatrix:
    """Projector onto the normalized vector ``psi``."""
    psi = np.asarray(psi, dtype=complex).ravel()
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValueError("cannot build a state from the zero vector")
    psi = psi / norm
    return as_density(np.outer(psi, psi.conj()), dims)


def identity(dims) -> Operator:
    space = HilbertFactorization(tuple(np.atleast_1d(dims)))
    return Operator(np.eye(space.total), space)


def tensor_product(a, b) -> Operator:
    """Kronecker product with concatenated factorization."""
    a = as_operator(a)
    b = as_operator(b)
    return Operator(np.kron(a.matrix, b.matrix), HilbertFactorization(a.dims + b.dims))


def tensor(*ops) -> Operator:
    return reduce(tensor_product, ops)


def partial_trace(op, keep) -> Operator:
    """Trace out every subsystem except those listed in ``keep``.

    ``keep`` may be a single subsystem index or a sequence of indices; the
    kept factors stay in their original order.
    """
    op = as_operator(op)
    dims = op.dims
    if len(dims) < 2:
        raise ValueError("partial trace needs at least two tensor factors")
    keep = [keep] if np.isscalar(keep) else list(keep)
    n = len(dims)
    for k in keep:
        if not -n <= k < n:
            raise IndexError(f"subsystem index {k} out of range for {n} factors")
    keep = sorted({k % n for k in keep})
    if not keep:
        return Operator(np.array([[op.trace()]]))

    t = op.matrix.reshape(dims + dims)
    # trace one subsystem at a time, highest index first so axes stay valid
    current = n
    for k in reversed(range(n)):
        if k in keep:
            continue
        t = np.trace(t, axis1=k, axis2=k + current)
        current -= 1
    kept_dims = tuple(dims[k] for k in keep)
    d = math.prod(kept_dims)
    return Operator(t.reshape(d, d), HilbertFactorization(kept_dims))


def hermitian_eigh(h, tol: float = HERMITIAN_TOL):
    """``numpy.linalg.eigh`` after checking Hermiticity to ``tol``."""
    m = as_operator(h).matrix
    err = np.max(np.abs(m - m.conj().T), initial=0.0)
    if err > tol:
        raise ValueError(f"operator is not Hermitian (deviation {err:.3g})")
    return np.linalg.eigh(0.5 * (m + m.conj().T))


def hermitian_function(h, fn) -> np.ndarray:
    """Apply a scalar function through the spectral decomposition of ``h``."""
    w, v = hermitian_eigh(h)
    return (v * fn(w)) @ v.conj().T


def propagator(h, t: float) -> Operator:
    """Unitary ``exp(-i h t)`` of a Hermitian generator."""
    h = as_operator(h)
    w, v = hermitian_eigh(h)
    u = (v * np.exp(-1j * w * t)) @ v.conj().T
    return Operator(u, h.space)


def thermal_state(h_env, beta: float) -> ThermalState:
    """Gibbs state ``exp(-beta H) / Z`` built in the eigenbasis of ``H``.

    ``beta = INFINITE_BETA`` gives the normalized projector onto the ground
    space.  Energies are shifted by the ground energy before exponentiating,
    so large ``beta`` cannot overflow.
    """
    h_env = as_operator(h_env)
    if beta < 0 or math.isnan(beta):
        raise ValueError(f"inverse temperature must be non-negative, got {beta}")
    w, v = hermitian_eigh(h_env)
    e0 = w[0]
    width = max(w[-1] - w[0], 1.0)
    is_ground = (w - e0) <= 1e-12 * width
    if math.isinf(beta):
        boltz = is_ground.astype(float)
        log_z = -math.inf
    else:
        boltz = np.exp(-beta * (w - e0))
        log_z = -beta * e0 + math.log(boltz.sum())
    weights = boltz / boltz.sum()
    rho = (v * weights) @ v.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    with np.errstate(over="ignore"):
        z = math.exp(log_z) if log_z < 700 else math.inf
    return ThermalState(
        rho=DensityMatrix(rho, h_env.space),
        beta=beta,
        partition_fn=z,
        ground_weight=float(weights[is_ground].sum()),
        energies=w,
        weights=weights,
        vectors=v,
    )


def _entropy_from_eigs(lam) -> float:
    lam = lam[lam > ENTROPY_CUTOFF]
    return float(max(-np.sum(lam * np.log(lam)), 0.0))


def von_neumann_entropy(rho) -> float:
    """Entropy ``-Tr rho ln rho`` in nats."""
    rho = as_density(rho)
    return _entropy_from_eigs(rho.eigh()[0])


def relative_entropy(rho, sigma) -> float:
    """Quantum relative entropy ``D(rho || sigma)`` in nats.

    Returns ``inf`` when the support of ``rho`` is not contained in the
    support of ``sigma``.
    """
    rho = as_density(rho)
    sigma = as_density(sigma)
    if rho.dim != sigma.dim:
        raise ValueError(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
    ls, vs = sigma.eigh()
    in_support = ls > SUPPORT_TOL
    r = vs.conj().T @ rho.matrix @ vs
    kernel_weight = np.real(np.trace(r[np.ix_(~in_support, ~in_support)]))
    if kernel_weight > SUPPORT_TOL:
        return math.inf
    lr = rho.eigh()[0]
    lr = lr[lr > ENTROPY_CUTOFF]
    neg_entropy = float(np.sum(lr * np.log(lr)))
    cross = float(np.sum(np.real(np.diag(r))[in_support] * np.log(ls[in_support])))
    return max(neg_entropy - cross, 0.0)


def mutual_information(rho_se) -> float:
    """``S(rho_S) + S(rho_E) - S(rho_SE)`` for a bipartite state."""
    rho_se = as_density(rho_se)
    if len(rho_se.dims) != 2:
        raise ValueError(f"mutual information needs a bipartite factorization, got {rho_se.dims}")
    s_a = von_neumann_entropy(as_density(partial_trace(rho_se, 0)))
    s_b = von_neumann_entropy(as_density(partial_trace(rho_se, 1)))
    return s_a + s_b - von_neumann_entropy(rho_se)


def frobenius_norm(op) -> float:
    return float(np.linalg.norm(as_operator(op).matrix, "fro"))


def commutator(a, b) -> np.ndarray:
    a = as_operator(a).matrix
    b = as_operator(b).matrix
    return a @ b - b @ a


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return scale * 0.5 * (z + z.conj().T)


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
