"""
Holevo bound for the weights: the constrained operator family X, the matrix
Z[X], the nonsmooth objective and its minimization over the residual freedom.
Also the pipeline for unidentifiable mixtures, which splits the weights into
informative coordinates xi and redundant coordinates eta by an orthogonal map.
"""
import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple, Union

import numpy as np
import scipy.linalg
import scipy.optimize

from . import util
from .bayes import qfi, sld
from .errors import ArgumentError, InternalConsistencyError, RankDeficiencyError
from .hermitian import PAULI_I, PAULIS, commutator_norm, gell_mann_basis, psd_sqrt, trace_norm
from .mixture import (TETRAHEDRON, CoefficientPolynomial, GeneralizedMixture, identifiability, orient,
                      restricted_state_map)
from .pointwise import PointwiseModel, eliminate, elimination_matrix, project_and_invert, qfi_pointwise
from .prior import DEFAULT_RESOLUTION, Prior, flat_average_polynomial, prior_moments, simplex_average

logger = logging.getLogger(__name__)

CONSTRAINT_TOL = 1e-10
DEFAULT_RESTARTS = 8
HEURISTIC_CAVEAT = ('averaging the pointwise Holevo bound over the prior is supported by heuristic arguments '
                    'but has no rigorous proof')


@dataclass(frozen=True, eq=False)
class LocalModel:
    """A state and its derivatives with respect to independent parameters."""
    state: np.ndarray
    partials: Tuple[np.ndarray, ...]

    @classmethod
    def from_pointwise(cls, model: PointwiseModel, drop_index: int = -1) -> 'LocalModel':
        return cls(model.state, model.eliminated_partials(drop_index))

    @property
    def n_params(self) -> int:
        return len(self.partials)

    @property
    def dim(self) -> int:
        return self.state.shape[0]


def _local(model: Union[PointwiseModel, LocalModel], drop_index: int = -1) -> LocalModel:
    if isinstance(model, PointwiseModel):
        return LocalModel.from_pointwise(model, drop_index)
    return model


# Constraints

@dataclass(frozen=True, eq=False)
class XFamily:
    """Solutions of tr(rho X_r) = 0, tr(d_s rho X_r) = delta_rs: particular + span(null_basis) per row."""
    particular: Tuple[np.ndarray, ...]
    null_basis: Tuple[np.ndarray, ...]
    free_dim: int
    basis: np.ndarray  # (d*d, d, d) Hermitian operator basis
    particular_coefficients: np.ndarray  # (k, d*d)
    null_coefficients: np.ndarray  # (d*d, n0)

    def operators(self, free: Optional[np.ndarray] = None) -> Tuple[np.ndarray, ...]:
        """X_r for free coordinates of shape (k, n0) (or flat); particular solution when omitted."""
        coeffs = self.coefficients(free)
        return tuple(np.tensordot(coeffs, self.basis, axes=1))

    def coefficients(self, free: Optional[np.ndarray] = None) -> np.ndarray:
        if free is None or self.free_dim == 0:
            return self.particular_coefficients
        k = self.particular_coefficients.shape[0]
        return self.particular_coefficients + np.reshape(free, (k, -1)) @ self.null_coefficients.T


def _expectations(ops: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """tr(O_i B_a) as a real (ops, basis) array."""
    return np.einsum('iab,kba->ik', ops, basis).real


def solve_constraints(model: Union[PointwiseModel, LocalModel], drop_index: int = -1,
                      tol: float = CONSTRAINT_TOL) -> XFamily:
    local = _local(model, drop_index)
    basis = gell_mann_basis(local.dim)
    C = _expectations(np.stack((local.state,) + tuple(local.partials)), basis)
    k = local.n_params
    rhs = np.vstack([np.zeros((1, k)), np.eye(k)])
    x0 = (np.linalg.pinv(C) @ rhs).T
    residual = np.max(np.abs(x0 @ C.T - rhs.T))
    if residual > tol:
        raise RankDeficiencyError(
            f'constraints are inconsistent (residual {residual:.3g}); the parameters are not identifiable, '
            f'reparametrize the mixture first')
    null = scipy.linalg.null_space(C)
    family = XFamily(tuple(np.tensordot(x0, basis, axes=1)), tuple(np.tensordot(null.T, basis, axes=1)),
                     k * null.shape[1], basis, x0, null)
    logger.debug(f'constraints: {k} parameters, dim {local.dim}, free dimension {family.free_dim}')
    return family


# Z matrix and objective

class ZMatrix(NamedTuple):
    re: np.ndarray
    im: np.ndarray

    @property
    def complex(self) -> np.ndarray:
        return self.re + 1j * self.im


def z_matrix(model: Union[PointwiseModel, LocalModel], X, drop_index: int = -1) -> ZMatrix:
    """Z_rs = tr(rho X_r X_s)."""
    state = _local(model, drop_index).state
    X = np.stack(X)
    Z = np.einsum('ij,rjk,ski->rs', state, X, X)
    return ZMatrix((Z.real + Z.real.T) / 2, (Z.imag - Z.imag.T) / 2)


def holevo_objective(G: np.ndarray, z: ZMatrix) -> float:
    """tr(G Re Z) + || sqrt(G) Im Z sqrt(G) ||_1."""
    root = psd_sqrt(np.asarray(G, dtype=complex)).real
    A = root @ z.im @ root
    return float(np.trace(G @ z.re) + trace_norm(1j * A))


def _operator_gram(state: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """K_ab = tr(rho B_a B_b), so that Z = x K x^T for X = x . B."""
    return np.einsum('ij,ajk,bki->ab', state, basis, basis)


@dataclass(frozen=True, eq=False)
class HolevoResult:
    value: float
    re_part: float
    im_part: float
    z: ZMatrix
    x_operators: Tuple[np.ndarray, ...]
    free_dim: int
    converged: bool


def eliminated_weight(G_full: np.ndarray, drop_index: int = -1) -> np.ndarray:
    """Weight matrix for the full weight vector, expressed in eliminated coordinates."""
    return eliminate(np.asarray(G_full, dtype=float), drop_index)


def holevo_bound(model: Union[PointwiseModel, LocalModel], G: Optional[np.ndarray] = None, drop_index: int = -1,
                 restarts: int = DEFAULT_RESTARTS, family: Optional[XFamily] = None) -> HolevoResult:
    """Minimize the Holevo objective over the constrained X family.

    G is in the independent coordinates of the model (eliminated weights for a
    PointwiseModel); identity when omitted.
    """
    local = _local(model, drop_index)
    k = local.n_params
    G = np.eye(k) if G is None else np.asarray(G, dtype=float)
    if G.shape != (k, k):
        raise ArgumentError(f'weight matrix must be {k} x {k}, got {G.shape}')
    family = solve_constraints(local) if family is None else family
    K = _operator_gram(local.state, family.basis)
    root = psd_sqrt(G.astype(complex)).real

    def parts(free):
        x = family.coefficients(free)
        Z = x @ K @ x.T
        re, im = (Z.real + Z.real.T) / 2, (Z.imag - Z.imag.T) / 2
        return float(np.trace(G @ re)), trace_norm(1j * (root @ im @ root)), ZMatrix(re, im)

    def objective(free):
        re, im, _ = parts(free)
        return re + im

    converged = True
    if family.free_dim == 0:
        best = None
    else:
        # minimizer of the smooth part tr(G Re Z) over each row's null coordinates
        Nc = family.null_coefficients
        KR = K.real
        smooth = -family.particular_coefficients @ KR @ Nc @ np.linalg.pinv(Nc.T @ KR @ Nc)
        start = smooth.ravel()
        candidates = [(objective(np.zeros_like(start)), np.zeros_like(start)), (objective(start), start)]
        scale = 0.5 * (1 + np.max(np.abs(start)))
        options = dict(fatol=1e-10, xatol=1e-9, maxiter=400 * family.free_dim)
        for i in range(restarts):
            x0 = start if i == 0 else start + scale * util.block_rng(0, i).normal(size=start.shape)
            res = scipy.optimize.minimize(objective, x0, method='Nelder-Mead', options=options)
            candidates.append((float(res.fun), res.x))
            converged &= bool(res.success)
        best = min(candidates, key=lambda c: c[0])[1]
        if not converged:
            logger.warning(f'Holevo minimization did not fully converge (free dimension {family.free_dim})')

    re, im, z = parts(best)
    return HolevoResult(re + im, re, im, z, family.operators(best), family.free_dim, converged)


# Averaging and checks

@dataclass(frozen=True, eq=False)
class AveragedHolevo:
    coefficient: float  # of 1/N
    re_part: float
    im_part: float
    resolution: int
    caveat: str = HEURISTIC_CAVEAT


def averaged_holevo_mse(mix: GeneralizedMixture, prior: Optional[Prior] = None, G: Optional[np.ndarray] = None,
                        resolution: int = DEFAULT_RESOLUTION, drop_index: int = -1,
                        restarts: int = DEFAULT_RESTARTS, extrapolate: bool = False, n_jobs: int = 1,
                        progress: bool = False) -> AveragedHolevo:
    """Prior average of the pointwise Holevo bound, the coefficient of 1/N."""
    report = identifiability(mix)
    if not report.identifiable:
        raise RankDeficiencyError(
            f'mixture is unidentifiable (kernel dimension {len(report.kernel_basis)}); use unidentifiable_error')

    def integrand(lam):
        res = holevo_bound(PointwiseModel.at(mix, lam), G, drop_index=drop_index, restarts=restarts)
        return np.array([res.value, res.re_part, res.im_part])

    value, re, im = simplex_average(integrand, mix.param_count, resolution, prior=prior, n_jobs=n_jobs,
                                    extrapolate=extrapolate, progress=progress)
    logger.info(f'averaged Holevo coefficient {value:.8g} (re {re:.8g}, im {im:.8g}) at resolution {resolution}')
    return AveragedHolevo(float(value), float(re), float(im), resolution)


class RelationCheck(NamedTuple):
    distance: float
    max_commutator: float


def cr_holevo_relation_check(model: PointwiseModel, drop_index: int = -1) -> RelationCheck:
    """Distance between pinv(P H P) and J Re Z J^T, and the largest SLD commutator norm.

    With a unique X the distance measures the relation Re Z[X] = H^-1. Otherwise
    X is built from the SLDs, X_r = sum_s (H^-1)_rs L_s, which satisfies the
    constraints by construction.
    """
    family = solve_constraints(model, drop_index)
    local = _local(model, drop_index)
    if family.free_dim == 0:
        X = family.particular
    else:
        slds = sld(local.state, local.partials)
        H = qfi(slds, local.state)
        X = tuple(np.tensordot(np.linalg.inv(H), np.stack(slds.operators), axes=1))
    z = z_matrix(local, X)
    J = elimination_matrix(model.M, drop_index)
    expected = project_and_invert(qfi_pointwise(model)).pseudo_inverse
    distance = float(np.linalg.norm(J @ z.re @ J.T - expected))
    full = sld(model.state, model.partials).operators
    worst = max((commutator_norm(full[r], full[s]) for r in range(len(full)) for s in range(r)), default=0.0)
    return RelationCheck(distance, worst)


# Unidentifiable mixtures

@dataclass(frozen=True, eq=False)
class Reparametrization:
    orthogonal_map: np.ndarray  # rows: xi directions, eta directions, u / sqrt(M)
    informative_count: int
    redundant_directions: np.ndarray  # (n_eta, M)
    offset: np.ndarray  # sum_r rho_r / M
    informative_operators: Tuple[np.ndarray, ...]  # R_j = sum_r O_jr rho_r
    singular_values: np.ndarray

    @property
    def informative_directions(self) -> np.ndarray:
        return self.orthogonal_map[:self.informative_count]

    def xi(self, lam) -> np.ndarray:
        return self.informative_directions @ np.asarray(lam, dtype=float)

    def state(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        if len(self.informative_operators) == 0:
            return self.offset
        return self.offset + np.tensordot(xi, np.stack(self.informative_operators), axes=1)

    def local_model(self, lam) -> LocalModel:
        return LocalModel(self.state(self.xi(lam)), self.informative_operators)


def check_redundant(kernel: np.ndarray, stack: np.ndarray, tol: float = 1e-8):
    """Raise unless the state is constant along every row of kernel."""
    scale = max(1.0, float(np.linalg.norm(stack)))
    for i, eta in enumerate(kernel):
        drift = float(np.linalg.norm(np.tensordot(eta, stack, axes=1)))
        if drift > tol * scale:
            raise InternalConsistencyError(f'redundant direction {i} moves the state by {drift:.3g}')


def reparametrize(mix: GeneralizedMixture, prior: Optional[Prior] = None, tol: float = 1e-9) -> Reparametrization:
    """Split the weights into coordinates the state depends on and redundant ones.

    Redundant directions are the eigenvectors of the prior covariance restricted to
    the kernel, ordered by descending variance.
    """
    if not mix.is_linear:
        raise ArgumentError('reparametrization is defined for linear mixtures only')
    M = mix.param_count
    Q, s, W, _ = restricted_state_map(mix)
    m = int(np.sum(s > tol))
    xi_rows = [orient(Q @ W[:, j]) for j in range(m)]
    kernel = np.array([Q @ W[:, j] for j in range(m, M - 1)]).reshape(-1, M)
    if len(kernel):
        cov = prior_moments(prior if prior is not None else Prior.flat(M), mix).covariance
        w, V = np.linalg.eigh(kernel @ cov @ kernel.T)
        kernel = np.array([orient(v) for v in (V[:, ::-1].T @ kernel)])
    O = np.vstack([np.array(xi_rows).reshape(-1, M), kernel, np.ones((1, M)) / np.sqrt(M)])
    stack = mix.stacked
    check_redundant(kernel, stack)
    R = tuple(np.tensordot(O[j], stack, axes=1) for j in range(m))
    rep = Reparametrization(O, m, kernel, stack.mean(axis=0), R, s)
    if len(kernel):
        logger.warning(f'mixture is unidentifiable: {len(kernel)} redundant direction(s), {m} informative')
    return rep


@dataclass(frozen=True, eq=False)
class UnidentifiableError:
    intrinsic: float
    asymptotic_coeff: float
    total: float
    reparametrization: Reparametrization


def unidentifiable_error(mix: GeneralizedMixture, prior: Optional[Prior] = None, N: int = 1,
                         resolution: int = DEFAULT_RESOLUTION, restarts: int = DEFAULT_RESTARTS,
                         extrapolate: bool = False, n_jobs: int = 1, progress: bool = False) -> UnidentifiableError:
    """tr Delta = sum of eta prior variances + (1/N) <C^H on the xi model> + o(1/N)."""
    if N < 1:
        raise ArgumentError(f'number of copies must be positive, got {N}')
    M = mix.param_count
    prior = Prior.flat(M) if prior is None else prior
    rep = reparametrize(mix, prior)
    cov = prior_moments(prior, mix).covariance
    intrinsic = float(sum(v @ cov @ v for v in rep.redundant_directions))

    if rep.informative_count == 0:
        coeff = 0.0
    else:
        def integrand(lam):
            return holevo_bound(rep.local_model(lam), restarts=restarts).value

        coeff = float(simplex_average(integrand, M, resolution, prior=prior,
                                      n_jobs=n_jobs, extrapolate=extrapolate, progress=progress))
    logger.info(f'unidentifiable error: intrinsic {intrinsic:.10g}, coefficient {coeff:.8g}')
    return UnidentifiableError(intrinsic, coeff, intrinsic + coeff / N, rep)


# Tetrahedron

def tetrahedron_x_operators(lam) -> Tuple[np.ndarray, ...]:
    """X_r = (1 - 4 lam_r + 3 n_r . sigma) / 4, r = 1..3, with lam_4 eliminated."""
    return tuple(((1 - 4 * lam[r]) * PAULI_I + 3 * sum(x * s for x, s in zip(TETRAHEDRON[r], PAULIS))) / 4
                 for r in range(3))


def tetrahedron_z_matrix(lam) -> ZMatrix:
    lam = np.asarray(lam, dtype=float)
    a = (1 - 4 * lam[:3]) / 4
    n = TETRAHEDRON[:3]
    r = lam @ TETRAHEDRON
    re = -np.outer(a, a) + 9 / 16 * n @ n.T
    im = np.array([[9 / 16 * np.cross(n[i], n[j]) @ r for j in range(3)] for i in range(3)])
    return ZMatrix(re, im)


def tetrahedron_objective(lam) -> float:
    """(1/2)(3 + sum lam_r (1 - 2 lam_r)) + (sqrt 3 / 2) sqrt(sum (lam_4 - lam_r)^2), G = I."""
    lam = np.asarray(lam, dtype=float)
    re = (3 + np.sum(lam[:3] * (1 - 2 * lam[:3]))) / 2
    return float(re + tetrahedron_im_integrand(lam[None, :])[0])


def tetrahedron_im_integrand(points: np.ndarray) -> np.ndarray:
    """Vectorized trace-norm part of the tetrahedron objective over (K, 4) points."""
    diff = points[:, 3:4] - points[:, :3]
    return np.sqrt(3) / 2 * np.sqrt(np.sum(diff ** 2, axis=1))


def tetrahedron_re_average() -> float:
    """Flat average of tr Re Z, by exact polynomial moments (63/40)."""
    unit = np.eye(4, dtype=int)
    p = CoefficientPolynomial.constant(1.5, 4)
    for r in range(3):
        p = p + CoefficientPolynomial.monomial(unit[r], 0.5) + CoefficientPolynomial.monomial(2 * unit[r], -1.0)
    return flat_average_polynomial(p)
