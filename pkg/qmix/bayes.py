"""
Bayesian weight estimation: effective state, SLDs and quantum Fisher
information at the prior mean, the error identity Delta = Lambda - F, the
optimal estimator and optimal projective measurements.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import (ArgumentError, InternalConsistencyError, IrregularOutcomeError, NoInformationError,
                     PreconditionError, SingularModelError)
from .hermitian import as_hermitian, commutator_norm, eig_hermitian, kron_all, min_eigenvalue
from .mixture import CoefficientPolynomial, GeneralizedMixture, as_weights
from .prior import DEFAULT_RESOLUTION, Prior, PriorMoments, prior_average_polynomial, prior_moments

logger = logging.getLogger(__name__)

SUPPORT_RTOL = 1e-10
OUTCOME_CUTOFF = 1e-12
IRREGULAR_TOL = 1e-8
MERGE_TOL = 1e-9
POVM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Povm:
    elements: Tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.elements) == 0:
            raise ArgumentError('a POVM needs at least one element')
        d = self.elements[0].shape[0]
        for i, E in enumerate(self.elements):
            if E.shape != (d, d):
                raise ArgumentError(f'POVM element {i} has shape {E.shape}, expected {(d, d)}')
            low = min_eigenvalue(E)
            if low < -POVM_TOL:
                raise ArgumentError(f'POVM element {i} is not positive (min eigenvalue {low:.3g})')
        dev = np.max(np.abs(sum(self.elements) - np.eye(d)))
        if dev > POVM_TOL:
            raise ArgumentError(f'POVM elements do not sum to the identity (max deviation {dev:.3g})')

    @classmethod
    def from_elements(cls, elements: Sequence) -> 'Povm':
        return cls(tuple(as_hermitian(E, atol=POVM_TOL) for E in elements))

    @classmethod
    def identity(cls, d: int) -> 'Povm':
        return cls((np.eye(d, dtype=complex),))

    @classmethod
    def computational(cls, d: int) -> 'Povm':
        return cls(tuple(np.diag(np.eye(d)[i]).astype(complex) for i in range(d)))

    @classmethod
    def from_basis(cls, vectors: np.ndarray) -> 'Povm':
        """Rank-one projectors onto the columns of a unitary."""
        return cls(tuple(np.outer(v, v.conj()) for v in np.asarray(vectors, dtype=complex).T))

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    @property
    def n_outcomes(self) -> int:
        return len(self.elements)

    @property
    def stacked(self) -> np.ndarray:
        return np.stack(self.elements)

    def expectations(self, operators: Sequence[np.ndarray]) -> np.ndarray:
        """tr(E_chi O_j) as an (outcomes, operators) real array."""
        return np.einsum('xij,aji->xa', self.stacked, np.stack(operators)).real

    def probabilities(self, state: np.ndarray) -> np.ndarray:
        return self.expectations([state])[:, 0]

    def tensor_power(self, N: int) -> 'Povm':
        """Product measurement of N copies; outcomes in lexicographic order."""
        if N == 1:
            return self
        idx = np.indices((self.n_outcomes,) * N).reshape(N, -1).T
        return Povm(tuple(kron_all([self.elements[i] for i in row]) for row in idx))


@dataclass(frozen=True, eq=False)
class SldSet:
    operators: Tuple[np.ndarray, ...]
    support_projector: np.ndarray
    support_basis: np.ndarray


def sld(state: np.ndarray, derivatives: Sequence[np.ndarray], support_rtol: float = SUPPORT_RTOL,
        irregular_tol: float = IRREGULAR_TOL) -> SldSet:
    """Solve (L state + state L)/2 = D for each derivative D in the eigenbasis of state."""
    w, V = eig_hermitian(state)
    cutoff = support_rtol * w[-1]
    denom = w[:, None] + w[None, :]
    regular = denom > cutoff
    safe = np.where(regular, denom, 1.0)
    ops = []
    for r, D in enumerate(derivatives):
        Dt = V.conj().T @ D @ V
        bad = ~regular & (np.abs(Dt) > irregular_tol)
        if bad.any():
            n, m = np.argwhere(bad)[0]
            raise SingularModelError(
                f'derivative {r} has weight {abs(Dt[n, m]):.3g} outside the support (eigenpair ({n}, {m}))')
        ops.append(V @ np.where(regular, 2 * Dt / safe, 0) @ V.conj().T)
    basis = V[:, w > cutoff]
    return SldSet(tuple(ops), basis @ basis.conj().T, basis)


def qfi(slds: SldSet, state: np.ndarray) -> np.ndarray:
    L = np.stack(slds.operators)
    H = np.einsum('rij,sjk,ki->rs', L, L, state).real
    return (H + H.T) / 2


@dataclass(frozen=True, eq=False)
class EffectiveStateModel:
    mixture: GeneralizedMixture
    moments: PriorMoments
    mean_state: np.ndarray
    direction_operators: Tuple[np.ndarray, ...]

    @classmethod
    def from_prior(cls, mix: GeneralizedMixture, prior: Prior, resolution: int = DEFAULT_RESOLUTION):
        moments = prior_moments(prior, mix, resolution=resolution)
        return cls.from_moments(mix, moments)

    @classmethod
    def from_moments(cls, mix: GeneralizedMixture, moments: PriorMoments):
        stack = mix.stacked
        mean_state = np.tensordot(moments.coefficient_means, stack, axes=1)
        D = np.tensordot(moments.cross.T, stack, axes=1)
        return cls(mix, moments, mean_state, tuple(D))

    @property
    def M(self) -> int:
        return self.mixture.param_count

    @property
    def dim(self) -> int:
        return self.mixture.dim


def effective_state(model: EffectiveStateModel, lam, psd_tol: float = 1e-8) -> np.ndarray:
    lam = as_weights(lam, model.M, atol=1e-9)
    sigma = model.mean_state + np.tensordot(lam - model.moments.mean, np.stack(model.direction_operators), axes=1)
    low = min_eigenvalue(sigma)
    if low < -psd_tol:
        raise InternalConsistencyError(f'effective state at {lam} is not positive (min eigenvalue {low:.3g})')
    return sigma


def sld_at_mean(model: EffectiveStateModel) -> SldSet:
    return sld(model.mean_state, model.direction_operators)


def qfi_at_mean(model: EffectiveStateModel) -> np.ndarray:
    return qfi(sld_at_mean(model), model.mean_state)


@dataclass(frozen=True, eq=False)
class ErrorReport:
    delta: np.ndarray
    lambda_cov: np.ndarray
    fisher_at_mean: np.ndarray
    qfi_at_mean: np.ndarray

    @property
    def mse(self) -> float:
        return float(np.trace(self.delta))

    @property
    def qfi_bound(self) -> np.ndarray:
        return self.lambda_cov - self.qfi_at_mean


def _check_dim(model: EffectiveStateModel, povm: Povm):
    if povm.dim != model.dim:
        raise ArgumentError(f'POVM acts on dimension {povm.dim} but the model has dimension {model.dim}')


def _retained_outcomes(model: EffectiveStateModel, povm: Povm, cutoff: float, irregular_tol: float = 1e-10):
    p = povm.probabilities(model.mean_state)
    t = povm.expectations(model.direction_operators)
    keep = p >= cutoff
    dropped = np.flatnonzero(~keep)
    for chi in dropped:
        if np.max(np.abs(t[chi])) > irregular_tol:
            raise IrregularOutcomeError(f'outcome {chi} has probability {p[chi]:.3g} but nonzero derivative')
    return p, t, keep


def fisher_at_mean(model: EffectiveStateModel, povm: Povm, cutoff: float = OUTCOME_CUTOFF) -> np.ndarray:
    """Fisher information of p(chi) = tr E_chi sigma_lambda at the prior mean."""
    _check_dim(model, povm)
    p, t, keep = _retained_outcomes(model, povm, cutoff)
    F = (t[keep] / p[keep, None]).T @ t[keep]
    return (F + F.T) / 2


def bayes_error(model: EffectiveStateModel, povm: Povm, cutoff: float = OUTCOME_CUTOFF) -> ErrorReport:
    F = fisher_at_mean(model, povm, cutoff=cutoff)
    H = qfi_at_mean(model)
    Lam = model.moments.covariance
    report = ErrorReport(Lam - F, Lam, F, H)
    gap = min_eigenvalue((H - F).astype(complex))
    if gap < -1e-8:
        raise InternalConsistencyError(f'classical Fisher information exceeds the quantum one (gap {gap:.3g})')
    logger.debug(f'bayes error: mse {report.mse:.12g}, qfi bound {np.trace(report.qfi_bound):.12g}')
    return report


def estimator_table(model: EffectiveStateModel, povm: Povm, cutoff: float = OUTCOME_CUTOFF) -> np.ndarray:
    """Optimal estimate for every outcome (rows); NaN for outcomes of probability below cutoff."""
    _check_dim(model, povm)
    p, t, keep = _retained_outcomes(model, povm, cutoff)
    table = np.full((povm.n_outcomes, model.M), np.nan)
    table[keep] = model.moments.mean + t[keep] / p[keep, None]
    return table


def optimal_estimator(model: EffectiveStateModel, povm: Povm, outcome: int,
                      cutoff: float = OUTCOME_CUTOFF) -> np.ndarray:
    _check_dim(model, povm)
    p = povm.probabilities(model.mean_state)[outcome]
    if p < cutoff:
        raise IrregularOutcomeError(f'outcome {outcome} has probability {p:.3g}')
    t = povm.expectations(model.direction_operators)[outcome]
    estimate = model.moments.mean + t / p
    try:
        return as_weights(estimate, model.M, atol=1e-9)
    except ArgumentError as e:
        raise InternalConsistencyError(f'estimate for outcome {outcome} left the simplex: {estimate}') from e


def _eigenspace_povm(slds: SldSet, L: np.ndarray, merge_tol: float) -> Povm:
    Vs = slds.support_basis
    w, U = eig_hermitian(Vs.conj().T @ L @ Vs)
    groups, start = [], 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > merge_tol:
            groups.append(slice(start, i))
            start = i
    projectors = []
    for g in groups:
        B = Vs @ U[:, g]
        projectors.append(B @ B.conj().T)
    d = L.shape[0]
    if Vs.shape[1] < d:
        projectors.append(np.eye(d) - slds.support_projector)
    return Povm(tuple(projectors))


def optimal_measurement(model: EffectiveStateModel, direction: Sequence[float], merge_tol: float = MERGE_TOL) -> Povm:
    """Projectors onto the eigenspaces of L_a = sum_r a_r L_r; optimal for the error a^T Delta a."""
    a = np.asarray(direction, dtype=float)
    if a.shape != (model.M,):
        raise ArgumentError(f'direction must have {model.M} entries, got {a.shape}')
    slds = sld_at_mean(model)
    L = np.tensordot(a, np.stack(slds.operators), axes=1)
    if np.linalg.norm(L) < 1e-12:
        raise NoInformationError(f'the measurement carries no information about direction {a}')
    return _eigenspace_povm(slds, L, merge_tol)


def _primes(count: int):
    out, n = [], 2
    while len(out) < count:
        if all(n % p for p in out):
            out.append(n)
        n += 1
    return out


def commuting_measurement(model: EffectiveStateModel, tol: float = 1e-8, merge_tol: float = MERGE_TOL) -> Povm:
    """Joint eigenbasis measurement of commuting SLDs, which attains Lambda - H for every direction."""
    slds = sld_at_mean(model)
    L = slds.operators
    worst = max((commutator_norm(L[r], L[s]) for r in range(len(L)) for s in range(r)), default=0.0)
    if worst > tol:
        raise PreconditionError(f'SLDs do not commute (max commutator norm {worst:.3g})')
    a = np.sqrt(_primes(model.M))  # generic weights separate every joint eigenspace
    return _eigenspace_povm(slds, np.tensordot(a, np.stack(L), axes=1), merge_tol)


def direction_error(model: EffectiveStateModel, direction: Sequence[float],
                    support_rtol: float = SUPPORT_RTOL) -> float:
    """E_a = a^T Lambda a - 2 sum |<phi_m|D_a|phi_n>|^2 / (nu_m + nu_n)."""
    a = np.asarray(direction, dtype=float)
    D = np.tensordot(a, np.stack(model.direction_operators), axes=1)
    w, V = eig_hermitian(model.mean_state)
    denom = w[:, None] + w[None, :]
    regular = denom > support_rtol * w[-1]
    Dt = V.conj().T @ D @ V
    info = 2 * np.sum(np.abs(Dt[regular]) ** 2 / denom[regular])
    return float(a @ model.moments.covariance @ a - info)


def direct_error_matrix(mix: GeneralizedMixture, prior: Prior, povm: Povm,
                        resolution: int = DEFAULT_RESOLUTION) -> np.ndarray:
    """<lambda lambda^T> - sum_chi p(chi) <lambda>_chi <lambda>_chi^T, by averaging over outcomes."""
    M = mix.param_count
    unit = np.eye(M, dtype=int)

    def avg(p: CoefficientPolynomial) -> float:
        return prior_average_polynomial(prior, p, resolution=resolution)

    second = np.array([[avg(CoefficientPolynomial.monomial(unit[r] + unit[s])) for s in range(M)] for r in range(M)])
    joint = np.array([[avg(c.times_monomial(unit[r])) for r in range(M)] for c in mix.coefficients])  # (A, M)
    c_mean = np.array([avg(c) for c in mix.coefficients])
    overlaps = povm.expectations(mix.components)  # (chi, A)
    p = overlaps @ c_mean
    m = overlaps @ joint  # <lambda p(chi|lambda)>
    keep = p >= OUTCOME_CUTOFF
    return second - (m[keep] / p[keep, None]).T @ m[keep]


def orthogonal_mse(M: int, N: int) -> Fraction:
    """(M - 1) / ((M + 1)(M + N)): the flat-prior MSE for orthogonal components."""
    if M < 2 or N < 1:
        raise ArgumentError(f'need M >= 2 and N >= 1, got M={M}, N={N}')
    return Fraction(M - 1, (M + 1) * (M + N))


def orthogonal_mse_general(mix: GeneralizedMixture, prior: Prior, tol: float = 1e-10,
                           resolution: int = DEFAULT_RESOLUTION) -> float:
    """tr Lambda - sum_alpha |cross_alpha|^2 / <c_alpha> for mutually orthogonal components."""
    comps = mix.components
    for a in range(len(comps)):
        for b in range(a):
            overlap = np.linalg.norm(comps[a] @ comps[b])
            if overlap > tol:
                raise PreconditionError(f'components {b} and {a} are not orthogonal (|rho_a rho_b| = {overlap:.3g})')
    moments = prior_moments(prior, mix, resolution=resolution)
    keep = moments.coefficient_means > 0
    info = np.sum(np.sum(moments.cross[keep] ** 2, axis=1) / moments.coefficient_means[keep])
    return float(np.trace(moments.covariance) - info)


def equal_purity_bayes_error(rho1: np.ndarray, rho2: np.ndarray, tol: float = 1e-9) -> float:
    """Single-copy optimal Delta_11 for two qubits of equal purity, flat prior.

    (3 - tr rho^2 + tr rho1 rho2) / 36, which is (2 + tr rho1 rho2) / 36 for pure states.
    """
    if rho1.shape != (2, 2) or rho2.shape != (2, 2):
        raise PreconditionError(f'equal-purity closed form is for qubits, got shapes {rho1.shape}, {rho2.shape}')
    p1, p2 = np.trace(rho1 @ rho1).real, np.trace(rho2 @ rho2).real
    if abs(p1 - p2) > tol:
        raise PreconditionError(f'purities differ: tr rho1^2 = {p1:.12g}, tr rho2^2 = {p2:.12g}')
    return float((3 - p1 + np.trace(rho1 @ rho2).real) / 36)


def attaining_measurement(model: EffectiveStateModel, a: Optional[Sequence[float]] = None) -> Povm:
    """Optimal measurement for tr Delta where attainable: commuting SLDs, or a single free weight."""
    if model.M == 2:
        return optimal_measurement(model, [1.0, 0.0] if a is None else a)
    return commuting_measurement(model)
