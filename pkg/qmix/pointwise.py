"""
Pointwise (local) bounds at a fixed weight vector: Fisher and quantum Fisher
information of rho_lambda, their compression onto the simplex tangent space,
the averaged asymptotic error (1/N) <H^-1>, and the two-component closed forms.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from math import comb, fsum, lcm
from typing import Optional, Tuple

import numpy as np

from .bayes import OUTCOME_CUTOFF, Povm, qfi, sld
from .errors import ArgumentError, InternalConsistencyError, IrregularOutcomeError, RankDeficiencyError
from .mixture import (GeneralizedMixture, as_weights, average_state, identifiability, occupation_vectors,
                      zero_sum_basis)
from .prior import DEFAULT_RESOLUTION, Prior, simplex_average

logger = logging.getLogger(__name__)

INTERIOR_CUTOFF = 1e-6
RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class PointwiseModel:
    """rho_lambda and its partial derivatives in the full weight coordinates."""
    mixture: GeneralizedMixture
    weights: np.ndarray
    state: np.ndarray
    partials: Tuple[np.ndarray, ...]

    @classmethod
    def at(cls, mix: GeneralizedMixture, lam, interior_cutoff: float = INTERIOR_CUTOFF) -> 'PointwiseModel':
        lam = as_weights(lam, mix.param_count, atol=1e-9)
        if np.any(lam < interior_cutoff):
            raise ArgumentError(f'pointwise bounds need an interior point (all weights >= {interior_cutoff:g}): {lam}')
        state = average_state(mix, lam)
        grads = mix.coefficient_gradients(lam)
        partials = tuple(np.tensordot(grads, mix.stacked, axes=1))
        return cls(mix, lam, state, partials)

    @property
    def M(self) -> int:
        return self.mixture.param_count

    @property
    def dim(self) -> int:
        return self.mixture.dim

    def eliminated_partials(self, drop_index: int = -1) -> Tuple[np.ndarray, ...]:
        """Derivatives with lambda_drop = 1 - sum of the others: d_r rho - d_drop rho."""
        drop = _drop(self.M, drop_index)
        return tuple(self.partials[r] - self.partials[drop] for r in range(self.M) if r != drop)


def _drop(M: int, drop_index: int) -> int:
    if not -M <= drop_index < M:
        raise ArgumentError(f'drop index {drop_index} out of range for {M} weights')
    return drop_index % M


def elimination_matrix(M: int, drop_index: int = -1) -> np.ndarray:
    """M x (M-1) matrix J with columns e_r - e_drop, so that d lambda = J d xi."""
    drop = _drop(M, drop_index)
    J = np.zeros((M, M - 1))
    for col, r in enumerate(r for r in range(M) if r != drop):
        J[r, col] = 1
        J[drop, col] = -1
    return J


def eliminate(matrix: np.ndarray, drop_index: int = -1) -> np.ndarray:
    """J^T matrix J: an information (or weight) matrix in eliminated coordinates."""
    J = elimination_matrix(matrix.shape[0], drop_index)
    return J.T @ matrix @ J


# Information matrices

def fisher_info(model: PointwiseModel, povm: Povm, cutoff: float = OUTCOME_CUTOFF) -> np.ndarray:
    if povm.dim != model.dim:
        raise ArgumentError(f'POVM acts on dimension {povm.dim} but the model has dimension {model.dim}')
    p = povm.probabilities(model.state)
    t = povm.expectations(model.partials)
    keep = p >= cutoff
    for chi in np.flatnonzero(~keep):
        if np.max(np.abs(t[chi])) > 1e-10:
            raise IrregularOutcomeError(f'outcome {chi} has probability {p[chi]:.3g} but nonzero derivative')
    F = (t[keep] / p[keep, None]).T @ t[keep]
    return (F + F.T) / 2


def qfi_pointwise(model: PointwiseModel) -> np.ndarray:
    return qfi(sld(model.state, model.partials), model.state)


@dataclass(frozen=True, eq=False)
class ProjectedMatrix:
    full: np.ndarray
    projected: np.ndarray
    pseudo_inverse: np.ndarray
    determinant: float  # of the compression onto the zero-sum subspace


def project_and_invert(m: np.ndarray, tol: float = RANK_TOL) -> ProjectedMatrix:
    """Compress m onto the vectors orthogonal to (1, ..., 1) and invert it there."""
    m = np.asarray(m, dtype=float)
    M = m.shape[0]
    Q = zero_sum_basis(M)
    C = Q.T @ m @ Q
    C = (C + C.T) / 2
    w = np.linalg.eigvalsh(C)
    if len(w) == 0 or np.min(np.abs(w)) <= tol * max(1.0, np.max(np.abs(w))):
        raise RankDeficiencyError(
            f'information matrix is singular on the simplex (eigenvalues {w}); the mixture may be unidentifiable')
    inverse = Q @ np.linalg.solve(C, Q.T)
    return ProjectedMatrix(m, Q @ C @ Q.T, (inverse + inverse.T) / 2, float(np.prod(w)))


# Averaged asymptotic error

def asymptotic_bayes_error(mix: GeneralizedMixture, prior: Optional[Prior] = None, N: int = 1,
                           resolution: int = DEFAULT_RESOLUTION, n_jobs: int = 1,
                           extrapolate: bool = False, progress: bool = False) -> np.ndarray:
    """Leading-order error matrix (1/N) <pinv(P H_1 P)> under the prior."""
    if N < 1:
        raise ArgumentError(f'number of copies must be positive, got {N}')
    report = identifiability(mix)
    if not report.identifiable:
        raise RankDeficiencyError(
            f'mixture is unidentifiable (kernel dimension {len(report.kernel_basis)}); use unidentifiable_error')

    def integrand(lam):
        return project_and_invert(qfi_pointwise(PointwiseModel.at(mix, lam))).pseudo_inverse

    avg = simplex_average(integrand, mix.param_count, resolution, prior=prior, n_jobs=n_jobs, extrapolate=extrapolate,
                         progress=progress)
    logger.info(f'asymptotic error coefficient (trace): {np.trace(avg):.10g}')
    return avg / N


# Two-component closed forms

def two_state_qfi_bloch(r1, r2, lam: float) -> float:
    """|r1 - r2|^2 + ((r1 - r2).r)^2 / (1 - |r|^2) with r = lam r1 + (1 - lam) r2."""
    r1, r2 = np.asarray(r1, dtype=float), np.asarray(r2, dtype=float)
    d = r1 - r2
    r = lam * r1 + (1 - lam) * r2
    return float(d @ d + (d @ r) ** 2 / (1 - r @ r))


def pure_pair_qfi(overlap: float, lam: float) -> float:
    """(1 - |<phi_1|phi_2>|^2) / (lam (1 - lam))."""
    return (1 - overlap ** 2) / (lam * (1 - lam))


def pure_pair_asymptotic_error(overlap: float) -> float:
    """Coefficient of 1/N in Delta_11 for two pure states, flat prior."""
    return 1 / (6 * (1 - overlap ** 2))


def qubit_pair_asymptotic_error(r1, r2) -> float:
    """Coefficient of 1/N in Delta_11 for two qubit states, flat prior (Bloch form)."""
    r1, r2 = np.asarray(r1, dtype=float), np.asarray(r2, dtype=float)
    s, d = r1 + r2, r1 - r2
    num = 6 - s @ s - r1 @ r1 - r2 @ r2
    den = d @ d - (r1 @ r1) * (r2 @ r2) + (r1 @ r2) ** 2
    return float(num / (6 * den))


def qubit_pair_asymptotic_error_trace(rho1: np.ndarray, rho2: np.ndarray) -> float:
    """Same coefficient written with purities and the overlap tr rho1 rho2."""
    p1 = np.trace(rho1 @ rho1).real
    p2 = np.trace(rho2 @ rho2).real
    o = np.trace(rho1 @ rho2).real
    return float((3 - p1 - p2 - o) / (6 * (p1 + p2 - p1 * p2 - (2 - o) * o)))


def commuting_asymptotic_error(eps: float) -> float:
    return 1 / (2 * eps) - 1 / 3


def orthogonal_asymptotic_error(M: int) -> Fraction:
    """Coefficient of 1/N in tr Delta for orthogonal components, flat prior."""
    return Fraction(M - 1, M + 1)


def commuting_exact_error(eps: float, N: int) -> float:
    """Exact Delta_11 for rho_1 = diag(1 - eps, eps), rho_2 = |0><0|, N copies, flat prior.

    Delta = 1/12 - (1/4) sum_k B_k^2 / A_k, where A_k and B_k are Beta integrals of
    (eps lam)^k (1 - eps lam)^(N-k). They are expanded binomially and summed as
    integers over the common denominator q^N lcm(1..N+2), eps = p/q.
    """
    if not 0 < eps <= 1:
        raise ArgumentError(f'eps must lie in (0, 1], got {eps}')
    if N < 1:
        raise ArgumentError(f'number of copies must be positive, got {N}')
    e = Fraction(str(eps)) if isinstance(eps, float) else Fraction(eps)
    p, q = e.numerator, e.denominator
    L = lcm(*range(1, N + 3))
    p_pow = [p ** i for i in range(N + 1)]
    q_pow = [q ** i for i in range(N + 1)]

    terms = []
    for k in range(N + 1):
        a, b2 = 0, 0
        for j in range(N - k + 1):
            c = comb(N - k, j) * p_pow[k + j] * q_pow[N - k - j]
            if j % 2:
                c = -c
            a += c * (L // (k + j + 1))
            b2 += c * (L // (k + j + 2))
        a *= comb(N, k)
        b = 2 * comb(N, k) * b2 - a
        # B_k^2 / A_k = b^2 / (a D), D = q^N L
        terms.append((b * b) / (a * q_pow[N] * L))
    return 1 / 12 - fsum(terms) / 4


def occupation_sum_check(M: int, N: int) -> int:
    """sum over occupation vectors k of sum_r k_r^2, by formula, checked against enumeration."""
    if M < 1 or N < 1:
        raise ArgumentError(f'need M >= 1 and N >= 1, got M={M}, N={N}')
    formula = Fraction(2 * N + M - 1, M + 1) * comb(M + N - 1, N) * N
    brute = sum(sum(kr * kr for kr in k) for k in occupation_vectors(M, N))
    if formula != brute:
        raise InternalConsistencyError(f'occupation sum formula gives {formula}, enumeration {brute}')
    return brute
