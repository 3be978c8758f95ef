"""
Quantum finite mixtures: linear mixtures sum_r lambda_r rho_r and generalized
mixtures sum_alpha c_alpha(lambda) rho_alpha with polynomial coefficients.
"""
import logging
from dataclasses import dataclass, field
from math import factorial
from typing import Dict, Iterator, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .errors import ArgumentError, ModelInconsistencyError, SizeError
from .hermitian import (PAULI_I, PAULI_X, PAULI_Y, PAULI_Z, PAULIS, as_density, min_eigenvalue,
                        symmetrize)
from . import util

logger = logging.getLogger(__name__)

WEIGHT_ATOL = 1e-12
COEFFICIENT_TOL = 1e-10
IDENTIFIABILITY_TOL = 1e-9
STATE_PSD_TOL = 1e-8

Exponents = Tuple[int, ...]


def as_weights(lam, M: Optional[int] = None, atol: float = WEIGHT_ATOL) -> np.ndarray:
    """Validate a point of the unit simplex."""
    lam = np.asarray(lam, dtype=float)
    if lam.ndim != 1 or (M is not None and lam.shape[0] != M):
        raise ArgumentError(f'expected a weight vector of length {M}, got shape {lam.shape}')
    if np.any(lam < -atol) or np.any(lam > 1 + atol):
        raise ArgumentError(f'weights must lie in [0, 1]: {lam}')
    if abs(lam.sum() - 1) > atol:
        raise ArgumentError(f'weights must sum to 1, got {lam.sum():.15g}')
    return lam


@dataclass(frozen=True)
class CoefficientPolynomial:
    """Polynomial in the weights, stored as {exponent vector: coefficient}."""
    terms: Dict[Exponents, float]
    n_params: int

    @classmethod
    def monomial(cls, exponents: Sequence[int], coeff: float = 1.0) -> 'CoefficientPolynomial':
        exponents = tuple(int(e) for e in exponents)
        return cls({exponents: float(coeff)}, len(exponents))

    @classmethod
    def constant(cls, value: float, n_params: int) -> 'CoefficientPolynomial':
        return cls({(0,) * n_params: float(value)}, n_params)

    def __call__(self, lam):
        pts = np.atleast_2d(np.asarray(lam, dtype=float))
        total = np.zeros(pts.shape[0])
        for exps, coeff in self.terms.items():
            total += coeff * np.prod(pts ** np.asarray(exps), axis=1)
        return total if np.ndim(lam) == 2 else float(total[0])

    def __add__(self, other: 'CoefficientPolynomial') -> 'CoefficientPolynomial':
        terms = dict(self.terms)
        for exps, coeff in other.terms.items():
            terms[exps] = terms.get(exps, 0.0) + coeff
        return CoefficientPolynomial(terms, self.n_params)

    def scale(self, factor: float) -> 'CoefficientPolynomial':
        return CoefficientPolynomial({e: factor * c for e, c in self.terms.items()}, self.n_params)

    def times_monomial(self, exponents: Sequence[int]) -> 'CoefficientPolynomial':
        return CoefficientPolynomial(
            {tuple(a + b for a, b in zip(e, exponents)): c for e, c in self.terms.items()}, self.n_params)

    def derivative(self, r: int) -> 'CoefficientPolynomial':
        terms = {}
        for exps, coeff in self.terms.items():
            if exps[r] == 0:
                continue
            lowered = exps[:r] + (exps[r] - 1,) + exps[r + 1:]
            terms[lowered] = terms.get(lowered, 0.0) + coeff * exps[r]
        if not terms:
            return CoefficientPolynomial.constant(0.0, self.n_params)
        return CoefficientPolynomial(terms, self.n_params)


@dataclass(frozen=True, eq=False)
class GeneralizedMixture:
    components: Tuple[np.ndarray, ...]
    coefficients: Tuple[CoefficientPolynomial, ...]
    param_count: int
    labels: Optional[Tuple[str, ...]] = field(default=None, compare=False)

    def __post_init__(self):
        if len(self.components) == 0:
            raise ArgumentError('a mixture needs at least one component')
        if len(self.components) != len(self.coefficients):
            raise ArgumentError(
                f'{len(self.components)} components but {len(self.coefficients)} coefficient functions')
        dims = {c.shape[0] for c in self.components}
        if len(dims) != 1:
            raise ArgumentError(f'components have different dimensions: {sorted(dims)}')
        for i, c in enumerate(self.coefficients):
            if c.n_params != self.param_count:
                raise ArgumentError(f'coefficient {i} has {c.n_params} parameters, expected {self.param_count}')
        if self.labels is not None and len(self.labels) != len(self.components):
            raise ArgumentError('labels must match the number of components')
        # coefficients must form a partition of unity on the simplex
        points = np.random.default_rng(0).dirichlet(np.ones(self.param_count), size=10)
        sums = self.coefficient_values(points).sum(axis=1)
        if np.max(np.abs(sums - 1)) > COEFFICIENT_TOL:
            raise ModelInconsistencyError(
                f'coefficient functions do not sum to 1 on the simplex (max deviation {np.max(np.abs(sums - 1)):.3g})')

    @property
    def dim(self) -> int:
        return self.components[0].shape[0]

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def is_linear(self) -> bool:
        if self.n_components != self.param_count:
            return False
        M = self.param_count
        return all(c.terms == {tuple(int(a == r) for r in range(M)): 1.0} for a, c in enumerate(self.coefficients))

    @property
    def stacked(self) -> np.ndarray:
        return np.stack(self.components)

    def coefficient_values(self, lam) -> np.ndarray:
        """c_alpha evaluated at one point (shape (A,)) or many points (shape (K, A))."""
        pts = np.atleast_2d(np.asarray(lam, dtype=float))
        values = np.stack([c(pts) for c in self.coefficients], axis=1)
        return values if np.ndim(lam) == 2 else values[0]

    def coefficient_gradients(self, lam) -> np.ndarray:
        """d c_alpha / d lambda_r as an (M, A) array."""
        return np.array([[c.derivative(r)(lam) for c in self.coefficients] for r in range(self.param_count)])

    def state(self, lam) -> np.ndarray:
        return np.tensordot(self.coefficient_values(lam), self.stacked, axes=1)


def linear_mixture(states: Sequence, labels: Optional[Sequence[str]] = None) -> GeneralizedMixture:
    states = tuple(as_density(s) for s in states)
    M = len(states)
    coefficients = tuple(CoefficientPolynomial.monomial(np.eye(M, dtype=int)[r]) for r in range(M))
    return GeneralizedMixture(states, coefficients, M, None if labels is None else tuple(labels))


def average_state(mix: GeneralizedMixture, lam, psd_tol: float = STATE_PSD_TOL) -> np.ndarray:
    lam = as_weights(lam, mix.param_count, atol=1e-9)
    rho = mix.state(lam)
    low = min_eigenvalue(rho)
    if low < -psd_tol:
        raise ModelInconsistencyError(f'average state is not positive at {lam} (min eigenvalue {low:.3g})')
    return rho


# Identifiability

@dataclass(frozen=True)
class IdentifiabilityReport:
    identifiable: bool
    kernel_basis: Tuple[np.ndarray, ...]
    rank: int
    singular_values: np.ndarray


def zero_sum_basis(M: int) -> np.ndarray:
    """Orthonormal basis (M x (M-1)) of the vectors orthogonal to (1, ..., 1)."""
    return scipy.linalg.null_space(np.ones((1, M)))


def _real_vectorize(stack: np.ndarray) -> np.ndarray:
    flat = stack.reshape(stack.shape[0], -1)
    return np.concatenate([flat.real, flat.imag], axis=1).T


def orient(v: np.ndarray) -> np.ndarray:
    """Fix the sign so that the largest-magnitude entry is positive."""
    return v if v[np.argmax(np.abs(v))] >= 0 else -v


def restricted_state_map(mix: GeneralizedMixture) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """SVD of v -> sum v_r rho_r on zero-sum v; returns (Q, s, W, B) with s padded to M-1."""
    M = mix.param_count
    Q = zero_sum_basis(M)
    B = _real_vectorize(mix.stacked) @ Q
    if M == 1:
        return Q, np.zeros(0), np.zeros((0, 0)), B
    _, s, Wt = np.linalg.svd(B, full_matrices=True)
    s = np.concatenate([s, np.zeros(M - 1 - len(s))])
    return Q, s, Wt.T, B


def identifiability(mix: GeneralizedMixture, tol: float = IDENTIFIABILITY_TOL) -> IdentifiabilityReport:
    if not mix.is_linear:
        raise ArgumentError('identifiability is defined for linear mixtures only')
    Q, s, W, _ = restricted_state_map(mix)
    rank = int(np.sum(s > tol))
    kernel = tuple(orient(Q @ W[:, j]) for j in range(rank, len(s)))
    report = IdentifiabilityReport(len(kernel) == 0, kernel, rank, s)
    logger.debug(f'identifiability: rank {rank}, kernel dim {len(kernel)}, singular values {s}')
    return report


# Multi-copy expansion

def occupation_vectors(M: int, N: int) -> Iterator[Tuple[int, ...]]:
    """All k with sum N, ordered with the first entry descending: (N,0,..), (N-1,1,..), ..."""
    if M == 1:
        yield (N,)
        return
    for first in range(N, -1, -1):
        for rest in occupation_vectors(M - 1, N - first):
            yield (first,) + rest


def multinomial(k: Sequence[int]) -> int:
    out = factorial(sum(k))
    for kr in k:
        out //= factorial(kr)
    return out


def multicopy_expand(mix: GeneralizedMixture, N: int, dim_cap: Optional[int] = None) -> GeneralizedMixture:
    """Write rho_lambda^(x)N as sum_k c_k(lambda) S(rho_1^(x)k_1 (x) ... (x) rho_M^(x)k_M)."""
    if N < 1:
        raise ArgumentError(f'number of copies must be positive, got {N}')
    if not mix.is_linear:
        raise ArgumentError('multi-copy expansion needs a linear mixture')
    cap = util.get_dim_cap() if dim_cap is None else dim_cap
    if mix.dim ** N > cap:
        raise SizeError(f'{N} copies of dimension {mix.dim} exceed the cap {cap}')
    if N == 1:
        return mix

    M = mix.param_count
    components, coefficients, labels = [], [], []
    for k in occupation_vectors(M, N):
        parts = [mix.components[r] for r in range(M) for _ in range(k[r])]
        components.append(symmetrize(parts, dim_cap=cap))
        coefficients.append(CoefficientPolynomial.monomial(k, multinomial(k)))
        labels.append('k=' + ','.join(map(str, k)))
    logger.info(f'expanded {M}-component mixture to {N} copies: {len(components)} components, dim {mix.dim ** N}')
    return GeneralizedMixture(tuple(components), tuple(coefficients), M, tuple(labels))


# Qubits

def bloch_to_density(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape != (3,):
        raise ArgumentError(f'Bloch vector must have 3 entries, got shape {r.shape}')
    if np.linalg.norm(r) > 1 + 1e-12:
        raise ArgumentError(f'Bloch vector has length {np.linalg.norm(r):.12g} > 1')
    return (PAULI_I + sum(x * s for x, s in zip(r, PAULIS))) / 2


def density_to_bloch(rho: np.ndarray) -> np.ndarray:
    if rho.shape != (2, 2):
        raise ArgumentError(f'Bloch vectors are defined for qubits, got shape {rho.shape}')
    return np.array([np.trace(rho @ s).real for s in PAULIS])


def pure_state(vector) -> np.ndarray:
    v = np.asarray(vector, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


# Standard mixtures

TETRAHEDRON = np.array([[1, -1, -1], [-1, 1, -1], [-1, -1, 1], [1, 1, 1]]) / np.sqrt(3)


def tetrahedron_mixture() -> GeneralizedMixture:
    """Pure qubit states on the vertices of a regular tetrahedron."""
    return linear_mixture([bloch_to_density(n) for n in TETRAHEDRON], labels=['n1', 'n2', 'n3', 'n4'])


def orthogonal_mixture(M: int, dim: Optional[int] = None) -> GeneralizedMixture:
    dim = M if dim is None else dim
    return linear_mixture([pure_state(np.eye(dim)[r]) for r in range(M)], labels=[f'e{r}' for r in range(M)])


def four_state_mixture() -> GeneralizedMixture:
    """{|0>, |1>, |+>, |->}: an unidentifiable qubit mixture."""
    s = 1 / np.sqrt(2)
    return linear_mixture([pure_state([1, 0]), pure_state([0, 1]), pure_state([s, s]), pure_state([s, -s])],
                          labels=['0', '1', '+', '-'])


def qubit_pair(r1, r2) -> GeneralizedMixture:
    return linear_mixture([bloch_to_density(r1), bloch_to_density(r2)], labels=['rho1', 'rho2'])


def commuting_pair(eps: float) -> GeneralizedMixture:
    """rho_1 = diag(1 - eps, eps), rho_2 = |0><0|."""
    return linear_mixture([np.diag([1 - eps, eps]), np.diag([1.0, 0.0])], labels=['rho1', 'rho2'])


def symmetric_pure_pair(theta: float) -> GeneralizedMixture:
    """Pure states with Bloch vectors (+-sin(theta), 0, cos(theta)); overlap cos(theta)."""
    return qubit_pair([np.sin(theta), 0, np.cos(theta)], [-np.sin(theta), 0, np.cos(theta)])


def pauli_channel_mixture() -> GeneralizedMixture:
    """Choi states of the identity, X, Y and Z channels on one qubit (the four Bell states)."""
    phi = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
    states = [pure_state(np.kron(PAULI_I, P) @ phi) for P in (PAULI_I, PAULI_X, PAULI_Y, PAULI_Z)]
    return linear_mixture(states, labels=['I', 'X', 'Y', 'Z'])
