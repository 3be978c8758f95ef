"""
Monte Carlo validation: Born-rule sampling, the empirical error of the optimal
Bayesian estimator, and the two-step adaptive protocol for two pure qubit states.

Trials run in fixed-size blocks; block b draws from a Philox stream keyed by
(seed, b), and block sums are reduced in block order, so results do not depend
on the number of workers.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import util
from .bayes import EffectiveStateModel, Povm, estimator_table
from .errors import ArgumentError, DegenerateModelError, InternalConsistencyError
from .mixture import GeneralizedMixture, as_weights, multicopy_expand
from .prior import Prior

logger = logging.getLogger(__name__)

PROBABILITY_TOL = 1e-8
RNG_ALGORITHM = 'numpy.random.Philox (SeedSequence([seed, block]))'


@dataclass(frozen=True)
class SimConfig:
    trials: int = 100000
    seed: int = 20100101
    n_copies: int = 1
    weights: Optional[Tuple[float, ...]] = None  # fixed lambda; None draws lambda from the prior
    block_size: int = 10000
    n_jobs: int = 1
    progress: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ArgumentError(f'trials must be positive, got {self.trials}')
        if self.block_size < 1:
            raise ArgumentError(f'block size must be positive, got {self.block_size}')
        if self.n_copies < 1:
            raise ArgumentError(f'number of copies must be positive, got {self.n_copies}')

    def blocks(self):
        for b, start in enumerate(range(0, self.trials, self.block_size)):
            yield b, min(self.block_size, self.trials - start)


def _check_probabilities(p: np.ndarray) -> np.ndarray:
    total = p.sum(axis=-1)
    if np.any(np.abs(total - 1) > PROBABILITY_TOL):
        raise InternalConsistencyError(f'outcome probabilities sum to {np.ravel(total)[0]:.12g}, expected 1')
    if np.any(p < -PROBABILITY_TOL):
        raise InternalConsistencyError(f'negative outcome probability {p.min():.3g}')
    return np.clip(p, 0, None)


def sample_outcomes(probabilities: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One outcome per row of a (K, outcomes) probability array, by inverse CDF in element order."""
    p = _check_probabilities(np.atleast_2d(probabilities))
    cdf = np.cumsum(p, axis=1)
    u = rng.random(len(p))
    idx = np.sum(u[:, None] >= cdf, axis=1)
    return np.minimum(idx, p.shape[1] - 1)


def sample_outcome(povm: Povm, state: np.ndarray, rng: np.random.Generator) -> int:
    return int(sample_outcomes(povm.probabilities(state)[None, :], rng)[0])


@dataclass(frozen=True, eq=False)
class SimulationResult:
    delta: np.ndarray
    standard_error: np.ndarray  # per entry
    mse: float
    mse_standard_error: float
    trials: int
    seed: int
    rng: str = RNG_ALGORITHM


def simulate_bayes_mse(mix: GeneralizedMixture, prior: Prior, povm: Povm, cfg: SimConfig) -> SimulationResult:
    """Empirical error matrix of the optimal Bayesian estimator for the given measurement."""
    expanded = multicopy_expand(mix, cfg.n_copies)
    if povm.dim != expanded.dim:
        raise ArgumentError(f'POVM acts on dimension {povm.dim} but {cfg.n_copies} copies have dimension '
                            f'{expanded.dim}')
    M = mix.param_count
    model = EffectiveStateModel.from_prior(expanded, prior)
    table = estimator_table(model, povm)
    for chi, row in enumerate(table):
        if not np.isnan(row).any():
            try:
                as_weights(row, M, atol=1e-9)
            except ArgumentError as e:
                raise InternalConsistencyError(f'estimate for outcome {chi} left the simplex: {row}') from e
    overlaps = povm.expectations(expanded.components).T  # (A, outcomes)
    fixed = None if cfg.weights is None else as_weights(cfg.weights, M, atol=1e-9)

    def run_block(block):
        b, size = block
        rng = util.block_rng(cfg.seed, b)
        lam = prior.sample(rng, size) if fixed is None else np.tile(fixed, (size, 1))
        probs = expanded.coefficient_values(lam) @ overlaps
        estimates = table[sample_outcomes(probs, rng)]
        if np.isnan(estimates).any():
            raise InternalConsistencyError('sampled an outcome with zero probability under the prior')
        err = lam - estimates
        outer = err[:, :, None] * err[:, None, :]
        sq = np.sum(err ** 2, axis=1)
        return outer.sum(axis=0), (outer ** 2).sum(axis=0), sq.sum(), (sq ** 2).sum()

    sums = util.parallel_map(run_block, cfg.blocks(), n_jobs=cfg.n_jobs, desc='Simulation blocks',
                             progress=cfg.progress)
    s1 = sum(s[0] for s in sums)
    s2 = sum(s[1] for s in sums)
    t1 = sum(s[2] for s in sums)
    t2 = sum(s[3] for s in sums)
    n = cfg.trials
    delta = s1 / n
    se = np.sqrt(np.clip(s2 / n - delta ** 2, 0, None) / max(n - 1, 1))
    trace_se = np.sqrt(max(t2 / n - (t1 / n) ** 2, 0) / max(n - 1, 1))
    logger.info(f'simulated {n} trials: tr Delta = {np.trace(delta):.8g} +- {trace_se:.2g}')
    return SimulationResult(delta, se, float(np.trace(delta)), float(trace_se), n, cfg.seed)


# Two-step adaptive protocol

@dataclass(frozen=True)
class TwoStepConfig:
    """Pure qubit states with Bloch vectors (+-sin theta, 0, cos theta); sqrt(N) copies in stage 1."""
    theta: float
    n_copies: int
    trials: int = 2000
    seed: int = 20100101
    block_size: int = 10000

    def __post_init__(self):
        if self.n_copies < 16:
            raise ArgumentError(f'the two-step protocol needs at least 16 copies, got {self.n_copies}')
        if self.trials < 1:
            raise ArgumentError(f'trials must be positive, got {self.trials}')
        if abs(np.sin(self.theta)) < 1e-12:
            raise DegenerateModelError(f'sin(theta) = 0 at theta = {self.theta}: the two states coincide')

    @property
    def rough_copies(self) -> int:
        return int(np.floor(np.sqrt(self.n_copies)))


@dataclass(frozen=True, eq=False)
class TwoStepResult:
    estimates: np.ndarray
    rough_estimates: np.ndarray
    nmse: float  # N * empirical MSE
    nmse_standard_error: float
    conditional_nmse: float  # N * mean stage-2 variance given the rough estimate
    bound: float  # lambda (1 - lambda) / sin^2 theta
    rough_constant: float  # sqrt(N) * stage-1 MSE

    @property
    def relative_gap(self) -> float:
        return abs(self.nmse - self.bound) / self.bound

    @property
    def conditional_gap(self) -> float:
        return abs(self.conditional_nmse - self.bound) / self.bound


def two_step_bound(theta: float, weight: float) -> float:
    return weight * (1 - weight) / np.sin(theta) ** 2


def two_step_adaptive(cfg: TwoStepConfig, weight: float) -> TwoStepResult:
    """Rough estimate from sqrt(N) copies in the sigma_x basis, then the SLD eigenbasis at that estimate.

    The stage-2 estimate inverts the frequency of the + outcome, whose probability
    is (1 + n.r_lambda)/2 with n the SLD direction (sin theta, 0, (2 lam_ini - 1) cos theta).
    """
    if not 0 < weight < 1:
        raise ArgumentError(f'weight must lie in (0, 1), got {weight}')
    N, n1 = cfg.n_copies, cfg.rough_copies
    n2 = N - n1
    s, c = np.sin(cfg.theta), np.cos(cfg.theta)
    p1 = (1 + (2 * weight - 1) * s) / 2

    def run_block(block):
        b, size = block
        rng = util.block_rng(cfg.seed, b)
        f1 = rng.binomial(n1, p1, size=size) / n1
        rough = np.clip(((2 * f1 - 1) / s + 1) / 2, 1 / N, 1 - 1 / N)
        nz = (2 * rough - 1) * c
        norm = np.sqrt(s ** 2 + nz ** 2)
        p2 = (1 + ((2 * weight - 1) * s ** 2 + nz * c) / norm) / 2
        f2 = rng.binomial(n2, p2) / n2
        est = 0.5 + ((2 * f2 - 1) * norm - nz * c) / (2 * s ** 2)
        cond = (norm / s ** 2) ** 2 * p2 * (1 - p2) / n2
        return est, rough, cond

    blocks = [(b, min(cfg.block_size, cfg.trials - start))
              for b, start in enumerate(range(0, cfg.trials, cfg.block_size))]
    results = [run_block(blk) for blk in blocks]
    est = np.concatenate([r[0] for r in results])
    rough = np.concatenate([r[1] for r in results])
    cond = np.concatenate([r[2] for r in results])
    sq = (est - weight) ** 2
    result = TwoStepResult(
        estimates=est, rough_estimates=rough,
        nmse=float(N * sq.mean()),
        nmse_standard_error=float(N * sq.std(ddof=1) / np.sqrt(len(sq))) if len(sq) > 1 else 0.0,
        conditional_nmse=float(N * cond.mean()),
        bound=two_step_bound(cfg.theta, weight),
        rough_constant=float(np.sqrt(N) * np.mean((rough - weight) ** 2)))
    logger.info(f'two-step (theta {cfg.theta:.4g}, N {N}): N*MSE {result.nmse:.6g}, bound {result.bound:.6g}')
    return result
