"""
Priors over the weight simplex, exact Dirichlet moments for polynomial
integrands, a deterministic midpoint quadrature for everything else, and the
prior moment bundle (mean, covariance, cross-moments with the coefficients).
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from math import comb, factorial
from typing import Callable, Iterator, Optional, Sequence

import numpy as np
from scipy.special import gammaln
from tqdm import tqdm

from . import util
from .errors import ArgumentError, PriorError
from .mixture import CoefficientPolynomial, GeneralizedMixture

logger = logging.getLogger(__name__)

DEFAULT_RESOLUTION = 200
EXACT_FACTORIAL_LIMIT = 40
NORMALIZATION_TOL = 1e-3


# Exact moments

def dirichlet_moment_exact(exponents: Sequence[int]) -> Fraction:
    """prod k_r! / (M - 1 + sum k_r)! as an exact fraction."""
    exponents = [int(k) for k in exponents]
    if any(k < 0 for k in exponents):
        raise ArgumentError(f'exponents must be nonnegative, got {exponents}')
    num = 1
    for k in exponents:
        num *= factorial(k)
    return Fraction(num, factorial(len(exponents) - 1 + sum(exponents)))


def dirichlet_moment(exponents: Sequence[int]) -> float:
    exponents = [int(k) for k in exponents]
    if sum(exponents) + len(exponents) - 1 <= EXACT_FACTORIAL_LIMIT:
        return float(dirichlet_moment_exact(exponents))
    if any(k < 0 for k in exponents):
        raise ArgumentError(f'exponents must be nonnegative, got {exponents}')
    k = np.asarray(exponents, dtype=float)
    return float(np.exp(np.sum(gammaln(k + 1)) - gammaln(len(k) + k.sum())))


def flat_average_polynomial(p: CoefficientPolynomial) -> float:
    M = p.n_params
    total = 0.0
    for exps, coeff in p.terms.items():
        if sum(exps) + M - 1 <= EXACT_FACTORIAL_LIMIT:
            total += coeff * float(factorial(M - 1) * dirichlet_moment_exact(exps))
        else:
            total += coeff * factorial(M - 1) * dirichlet_moment(exps)
    return total


# Quadrature

def _sorted_corners(lo: int, n: int, d: int) -> Iterator[np.ndarray]:
    """Chunks of integer tuples lo <= c_1 <= ... <= c_d < n."""
    if d == 1:
        yield np.arange(lo, n)[:, None]
    elif d == 2:
        i, j = np.triu_indices(n - lo)
        yield np.stack([i, j], axis=1) + lo
    else:
        for first in range(lo, n):
            for rest in _sorted_corners(first, n, d - 1):
                yield np.hstack([np.full((len(rest), 1), first), rest])


def _cell_centroids(corners: np.ndarray, n: int) -> np.ndarray:
    # Kuhn cells of the ordered simplex 0 <= t_1 <= ... <= t_d <= 1, mapped to weights by differences
    d = corners.shape[1]
    out = []
    for perm in permutations(range(d)):
        s = np.empty(d)
        s[list(perm)] = (d - np.arange(d)) / (d + 1)
        mask = np.ones(len(corners), dtype=bool)
        for i in range(d - 1):
            if s[i] > s[i + 1]:
                mask &= corners[:, i] < corners[:, i + 1]
        out.append((corners[mask] + s) / n)
    t = np.concatenate(out)
    zeros, ones = np.zeros((len(t), 1)), np.ones((len(t), 1))
    return np.diff(np.concatenate([zeros, t, ones], axis=1), axis=1)


def simplex_grid(M: int, resolution: int = DEFAULT_RESOLUTION) -> Iterator[np.ndarray]:
    """Midpoints of resolution**(M-1) equal-volume cells of the open simplex, in fixed chunks."""
    if resolution < 2:
        raise ArgumentError(f'quadrature resolution must be at least 2, got {resolution}')
    if M == 1:
        yield np.ones((1, 1))
        return
    for corners in _sorted_corners(0, resolution, M - 1):
        yield _cell_centroids(corners, resolution)


def simplex_quadrature(f: Callable[[np.ndarray], np.ndarray], M: int, resolution: int = DEFAULT_RESOLUTION,
                       progress: bool = False):
    """Flat-prior average of a vectorized integrand f: (K, M) points -> (K, ...) values."""
    total, count = 0.0, 0
    for points in tqdm(simplex_grid(M, resolution), desc='Quadrature', disable=not progress, leave=False):
        total = total + np.sum(f(points), axis=0)
        count += len(points)
    return total / count


# Priors

@dataclass(frozen=True, eq=False)
class Prior:
    kind: str  # 'flat' | 'custom'
    M: int
    density: Optional[Callable[[np.ndarray], np.ndarray]] = None
    polynomial_density: Optional[CoefficientPolynomial] = None
    alpha: Optional[np.ndarray] = None

    @classmethod
    def flat(cls, M: int) -> 'Prior':
        return cls('flat', M)

    @classmethod
    def custom(cls, M: int, density: Callable[[np.ndarray], np.ndarray], resolution: int = DEFAULT_RESOLUTION,
               tol: float = NORMALIZATION_TOL) -> 'Prior':
        """A vectorized density (K, M) -> (K,) over the simplex; must already be normalized."""
        prior = cls('custom', M, density=density)
        mass = simplex_quadrature(prior.relative_density, M, resolution)
        if abs(mass - 1) > tol:
            raise PriorError(f'custom prior integrates to {mass:.6g}, expected 1 (within {tol:g})')
        return prior

    @classmethod
    def dirichlet(cls, alpha: Sequence[float]) -> 'Prior':
        alpha = np.asarray(alpha, dtype=float)
        if alpha.ndim != 1 or len(alpha) < 1:
            raise PriorError(f'Dirichlet concentration must be a vector, got {alpha}')
        if np.any(alpha < 1):
            raise PriorError(f'Dirichlet concentrations below 1 make the density singular: {alpha}')
        M = len(alpha)
        if np.all(alpha == 1):
            return cls.flat(M)
        log_norm = gammaln(alpha.sum()) - np.sum(gammaln(alpha))

        def density(points):
            return np.exp(log_norm + np.sum(np.log(points) * (alpha - 1), axis=1))

        poly = None
        if np.all(alpha == np.round(alpha)):
            poly = CoefficientPolynomial.monomial((alpha - 1).astype(int), np.exp(log_norm))
        return cls('custom', M, density=density, polynomial_density=poly, alpha=alpha)

    @property
    def is_flat(self) -> bool:
        return self.kind == 'flat'

    def relative_density(self, points: np.ndarray) -> np.ndarray:
        """pi(lambda) / (M-1)!, the weight against the flat average."""
        if self.is_flat:
            return np.ones(len(points))
        return self.density(points) / factorial(self.M - 1)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.is_flat:
            u = np.sort(rng.random((size, self.M - 1)), axis=1)
            return np.diff(np.concatenate([np.zeros((size, 1)), u, np.ones((size, 1))], axis=1), axis=1)
        if self.alpha is not None:
            return rng.dirichlet(self.alpha, size=size)
        raise PriorError('sampling is only available for flat and Dirichlet priors')


def prior_average_polynomial(prior: Prior, p: CoefficientPolynomial, resolution: int = DEFAULT_RESOLUTION) -> float:
    """<p> under the prior; exact whenever the prior density is itself a polynomial."""
    if prior.is_flat:
        return flat_average_polynomial(p)
    if prior.polynomial_density is not None:
        (exps, coeff), = prior.polynomial_density.terms.items()
        return flat_average_polynomial(p.times_monomial(exps).scale(coeff / factorial(prior.M - 1)))
    return float(simplex_quadrature(lambda x: p(x) * prior.relative_density(x), prior.M, resolution))


def simplex_average(fn: Callable[[np.ndarray], np.ndarray], M: int, resolution: int, prior: Optional[Prior] = None,
                    n_jobs: int = 1, extrapolate: bool = False, progress: bool = False):
    """Prior average of a per-point integrand (values may be arrays).

    With extrapolate, the midpoint results at resolution and resolution // 2 are
    combined as (4 Q(n) - Q(n/2)) / 3.
    """
    if extrapolate:
        fine = simplex_average(fn, M, resolution, prior, n_jobs=n_jobs, progress=progress)
        coarse = simplex_average(fn, M, resolution // 2, prior, n_jobs=n_jobs, progress=progress)
        return (4 * fine - coarse) / 3
    points = np.concatenate(list(simplex_grid(M, resolution)))
    weights = np.ones(len(points)) if prior is None else prior.relative_density(points)
    values = util.parallel_map(fn, points, n_jobs=n_jobs, desc=f'Simplex average (res {resolution})',
                               progress=progress)
    return np.tensordot(weights, np.asarray(values), axes=1) / len(points)


# Moments

@dataclass(frozen=True, eq=False)
class PriorMoments:
    mean: np.ndarray  # (M,)
    covariance: np.ndarray  # (M, M)
    cross: np.ndarray  # (A, M): row alpha is <lambda c_alpha> - <lambda><c_alpha>
    coefficient_means: np.ndarray  # (A,)


def prior_moments(prior: Prior, mix: GeneralizedMixture, resolution: int = DEFAULT_RESOLUTION) -> PriorMoments:
    M = mix.param_count
    if prior.M != M:
        raise ArgumentError(f'prior is over {prior.M} weights but the mixture has {M}')
    unit = np.eye(M, dtype=int)

    if prior.is_flat or prior.polynomial_density is not None:
        def avg(p):
            return prior_average_polynomial(prior, p)
        mean = np.array([avg(CoefficientPolynomial.monomial(unit[r])) for r in range(M)])
        second = np.array([[avg(CoefficientPolynomial.monomial(unit[r] + unit[s])) for s in range(M)]
                           for r in range(M)])
        coeff_means = np.array([avg(c) for c in mix.coefficients])
        joint = np.array([[avg(c.times_monomial(unit[r])) for r in range(M)] for c in mix.coefficients])
    else:
        total_w, count = 0.0, 0
        mean = np.zeros(M)
        second = np.zeros((M, M))
        coeff_means = np.zeros(mix.n_components)
        joint = np.zeros((mix.n_components, M))
        for points in simplex_grid(M, resolution):
            w = prior.relative_density(points)
            c = mix.coefficient_values(points)
            total_w += w.sum()
            count += len(points)
            mean += w @ points
            second += (points * w[:, None]).T @ points
            coeff_means += w @ c
            joint += (c * w[:, None]).T @ points
        logger.debug(f'custom prior mass on the grid: {total_w / count:.8f}')
        mean, second, coeff_means, joint = (x / count for x in (mean, second, coeff_means, joint))

    covariance = second - np.outer(mean, mean)
    cross = joint - np.outer(coeff_means, mean)
    return PriorMoments(mean, (covariance + covariance.T) / 2, cross, coeff_means)


def flat_linear_covariance(M: int) -> np.ndarray:
    """(delta_rs - 1/M) / (M (M + 1))."""
    return (np.eye(M) - 1 / M) / (M * (M + 1))


def flat_multicopy_cross(M: int, N: int, occupations: Sequence[Sequence[int]]) -> np.ndarray:
    """(k_r - N/M) / (N + M) * <c_k> with <c_k> = 1 / binomial(N + M - 1, N)."""
    k = np.asarray(occupations, dtype=float)
    return (k - N / M) / (N + M) / comb(N + M - 1, N)
