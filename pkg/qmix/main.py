import functools
import logging
import sys
from typing import Optional, Sequence

import fire
import numpy as np
from omegaconf import DictConfig, OmegaConf

from . import util
from .bayes import (EffectiveStateModel, attaining_measurement, bayes_error, optimal_measurement, qfi_at_mean)
from .cases import CASES, run_case
from .errors import ArgumentError, PreconditionError, PriorError, QmixError, SizeError
from .hermitian import min_eigenvalue
from .holevo import averaged_holevo_mse, holevo_bound, unidentifiable_error
from .mixture import GeneralizedMixture, identifiability, multicopy_expand
from .mixture_io import load_mixture, load_povm
from .pointwise import PointwiseModel, asymptotic_bayes_error, eliminate, project_and_invert, qfi_pointwise
from .prior import Prior, prior_moments
from .report import FORMATS, RunReport
from .simulate import SimConfig, simulate_bayes_mse

logger = logging.getLogger('qmix')


def _command(fn):
    """Exit with 2 on library errors and 1 when a report check fails."""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            report, cfg = fn(*args, **kwargs)
            report.write(cfg.output.format, cfg.output.out)
        except QmixError as e:
            logger.error(f'{type(e).__name__}: {e}')
            sys.exit(2)
        if not report.passed:
            sys.exit(1)
    return wrapper


def _setup(**overrides) -> DictConfig:
    cfg = util.load_config(**overrides)
    util.setup_logging(cfg.log_level)
    if cfg.output.format not in FORMATS:
        raise ArgumentError(f'unknown output format {cfg.output.format!r}, expected one of {FORMATS}')
    logger.info('\n' + OmegaConf.to_yaml(cfg))
    return cfg


def _prior(cfg: DictConfig, M: int) -> Prior:
    if cfg.prior == 'flat':
        return Prior.flat(M)
    if cfg.prior == 'dirichlet':
        if cfg.alpha is None:
            raise PriorError('--prior dirichlet needs --alpha')
        alpha = list(cfg.alpha) if not isinstance(cfg.alpha, (int, float)) else [cfg.alpha] * M
        if len(alpha) != M:
            raise PriorError(f'--alpha has {len(alpha)} entries but the mixture has {M} components')
        return Prior.dirichlet(alpha)
    raise ArgumentError(f'unknown prior {cfg.prior!r}, expected flat or dirichlet')


@_command
def reproduce(
    case: str,
    m: Optional[int] = None,
    n: Optional[int] = None,
    eps: Optional[Sequence[float]] = None,
    theta: Optional[float] = None,
    weight: Optional[float] = None,
    trials: Optional[int] = None,
    seed: Optional[int] = None,
    resolution: Optional[int] = None,
    engine_resolution: Optional[int] = None,
    n_jobs: Optional[int] = None,
    format: Optional[str] = None,
    out: Optional[str] = None,
    progress: Optional[bool] = None,
    log_level: Optional[str] = None,
):
    """
    Reproduce one of the worked examples and check it against its closed form.

    Cases: orthogonal, two-pure, tetrahedron, unidentifiable, commuting, adaptive.

    Example:
        python -m qmix reproduce orthogonal --m 3 --n 2
        python -m qmix reproduce tetrahedron --resolution 200
        python -m qmix reproduce commuting --eps "[0.3,0.5]" --n 256 --format csv
    """
    if case not in CASES:
        raise ArgumentError(f'unknown case {case!r}, expected one of {sorted(CASES)}')
    key = case.replace('-', '_')
    if eps is not None and np.ndim(eps) == 0:
        eps = [eps]
    base = util.load_config()
    overrides = {'name': case, 'simulation.seed': seed, 'resolution': resolution,
                 'engine_resolution': engine_resolution, 'simulation.n_jobs': n_jobs, 'output.format': format,
                 'output.out': out, 'progress': progress, 'log_level': log_level}
    for flag, value in dict(m=m, n=n, eps=eps, theta=theta, weight=weight, trials=trials).items():
        if value is None:
            continue
        if flag in base.cases[key]:
            overrides[f'cases.{key}.{flag}'] = value
        elif flag == 'trials':
            overrides['simulation.trials'] = value
        else:
            raise ArgumentError(f'--{flag} does not apply to case {case!r}')
    cfg = _setup(**overrides)
    return run_case(case, cfg), cfg


def _bound_report(mix: GeneralizedMixture, prior: Prior, cfg: DictConfig) -> RunReport:
    M, N = mix.param_count, int(cfg.n_copies)
    report = RunReport('bound', dict(M=M, N=N, resolution=cfg.engine_resolution))
    moments = prior_moments(prior, mix, resolution=cfg.resolution)
    report.add('prior mean', moments.mean)
    report.add('Lambda', moments.covariance)

    # Finite N, Bayesian
    try:
        expanded = multicopy_expand(mix, N, dim_cap=cfg.dim_cap)
    except SizeError as e:
        report.note(f'finite-N Bayesian error skipped: {e}')
        expanded = None
    if expanded is not None:
        model = EffectiveStateModel.from_prior(expanded, prior, resolution=cfg.resolution)
        lower = moments.covariance - qfi_at_mean(model)
        report.add('Lambda - H', lower)
        report.add('tr(Lambda - H)', np.trace(lower))
        try:
            err = bayes_error(model, attaining_measurement(model))
        except PreconditionError as e:
            report.note(f'no measurement attains Lambda - H for every direction ({e}); it remains a lower bound')
        else:
            report.add('Delta', err.delta)
            report.add('tr Delta', err.mse)
            report.at_least('Delta >= Lambda - H', min_eigenvalue((err.delta - lower).astype(complex)), -1e-8)

    # Asymptotic, pointwise
    ident = identifiability(mix)
    report.add('identifiable', ident.identifiable)
    if not ident.identifiable:
        report.note(f'mixture is unidentifiable (kernel dimension {len(ident.kernel_basis)}); '
                    f'reporting the reparametrized error')
        result = unidentifiable_error(mix, prior, N, resolution=cfg.engine_resolution, restarts=cfg.holevo.restarts,
                                      extrapolate=True, n_jobs=cfg.simulation.n_jobs, progress=cfg.progress)
        rep = result.reparametrization
        report.add('informative parameters', rep.informative_count)
        report.add('redundant directions', rep.redundant_directions)
        report.add('intrinsic error', result.intrinsic)
        report.add('asymptotic coefficient', result.asymptotic_coeff)
        report.add('total', result.total)
        return report

    asym = asymptotic_bayes_error(mix, prior, N, resolution=cfg.engine_resolution, n_jobs=cfg.simulation.n_jobs,
                                  extrapolate=True, progress=cfg.progress)
    report.add('projected CR (averaged)', asym)
    report.add('tr projected CR (averaged)', np.trace(asym))
    point = PointwiseModel.at(mix, moments.mean, interior_cutoff=cfg.tol.interior_cutoff)
    H1 = qfi_pointwise(point)
    report.add('projected CR at the prior mean', project_and_invert(H1).pseudo_inverse / N)

    if cfg.holevo.enabled:
        report.note(f'Holevo weight matrix: identity on the first {M - 1} weights')
        local = holevo_bound(point, restarts=cfg.holevo.restarts)
        report.add('Holevo bound at the prior mean', local.value / N)
        report.at_least('Holevo bound dominates CR at the prior mean',
                        local.value - np.trace(np.linalg.inv(eliminate(H1))), -1e-8)
        if not local.converged:
            report.note('Holevo minimization at the prior mean did not converge; the value is the best found')
        averaged = averaged_holevo_mse(mix, prior, resolution=cfg.engine_resolution, restarts=cfg.holevo.restarts,
                                       extrapolate=True, n_jobs=cfg.simulation.n_jobs, progress=cfg.progress)
        report.add('Holevo coefficient (averaged)', averaged.coefficient)
        report.add('Holevo error (averaged)', averaged.coefficient / N)
        report.note(averaged.caveat)
    return report


@_command
def bound(
    mixture: str,
    prior: Optional[str] = None,
    alpha: Optional[Sequence[float]] = None,
    n_copies: Optional[int] = None,
    holevo: Optional[bool] = None,
    resolution: Optional[int] = None,
    engine_resolution: Optional[int] = None,
    n_jobs: Optional[int] = None,
    format: Optional[str] = None,
    out: Optional[str] = None,
    progress: Optional[bool] = None,
    log_level: Optional[str] = None,
):
    """
    Bounds on the weight-estimation error for a mixture file: the Bayesian error at
    N copies, Lambda - H, the averaged projected CR bound and optionally the Holevo bound.

    Example:
        python -m qmix bound data/orthogonal_qubits.yaml
        python -m qmix bound data/tetrahedron.yaml --holevo
        python -m qmix bound data/two_pure.yaml --prior dirichlet --alpha "[2,2]" --n-copies 3
    """
    cfg = _setup(name='bound', prior=prior, alpha=alpha, n_copies=n_copies, resolution=resolution,
                 engine_resolution=engine_resolution, progress=progress, log_level=log_level,
                 **{'holevo.enabled': holevo, 'simulation.n_jobs': n_jobs, 'output.format': format, 'output.out': out})
    mix = load_mixture(mixture)
    return _bound_report(mix, _prior(cfg, mix.param_count), cfg), cfg


@_command
def simulate(
    mixture: str,
    povm: Optional[str] = None,
    optimal: bool = False,
    direction: Optional[Sequence[float]] = None,
    weights: Optional[Sequence[float]] = None,
    prior: Optional[str] = None,
    alpha: Optional[Sequence[float]] = None,
    n_copies: Optional[int] = None,
    trials: Optional[int] = None,
    seed: Optional[int] = None,
    block_size: Optional[int] = None,
    n_jobs: Optional[int] = None,
    format: Optional[str] = None,
    out: Optional[str] = None,
    progress: Optional[bool] = None,
    log_level: Optional[str] = None,
):
    """
    Monte Carlo error of the optimal Bayesian estimator for a measurement, compared
    with the exact error Lambda - F.

    Example:
        python -m qmix simulate data/two_pure.yaml --optimal --trials 100000
        python -m qmix simulate data/orthogonal_qubits.yaml --povm data/trivial_povm.yaml
        python -m qmix simulate data/two_pure.yaml --optimal --weights "[0.3,0.7]"
    """
    if (povm is None) == (not optimal):
        raise ArgumentError('pass exactly one of a POVM file (--povm) or --optimal')
    cfg = _setup(name='simulate', prior=prior, alpha=alpha, n_copies=n_copies, progress=progress,
                 log_level=log_level, **{'simulation.trials': trials, 'simulation.seed': seed,
                                         'simulation.block_size': block_size, 'simulation.n_jobs': n_jobs,
                                         'output.format': format, 'output.out': out})
    mix = load_mixture(mixture)
    M, N = mix.param_count, int(cfg.n_copies)
    prior_ = _prior(cfg, M)
    expanded = multicopy_expand(mix, N, dim_cap=cfg.dim_cap)
    model = EffectiveStateModel.from_prior(expanded, prior_, resolution=cfg.resolution)
    if povm is not None:
        measurement = load_povm(povm)
    elif direction is not None:
        measurement = optimal_measurement(model, direction)
    else:
        try:
            measurement = attaining_measurement(model)
        except PreconditionError as e:
            raise ArgumentError(f'{e}; pass --direction to pick the optimized error component') from e

    s = cfg.simulation
    sim_cfg = SimConfig(trials=s.trials, seed=s.seed, n_copies=N, block_size=s.block_size, n_jobs=s.n_jobs,
                        weights=None if weights is None else tuple(float(w) for w in weights), progress=cfg.progress)
    sim = simulate_bayes_mse(mix, prior_, measurement, sim_cfg)
    report = RunReport('simulate', dict(M=M, N=N, seed=s.seed, trials=s.trials))
    report.add('Delta', sim.delta, 'simulated', sim.standard_error)
    report.add('tr Delta', sim.mse, 'simulated', sim.mse_standard_error)
    report.note(f'random streams: {sim.rng}, blocks of {s.block_size}')
    if weights is None:
        err = bayes_error(model, measurement)
        report.add('Delta', err.delta)
        report.add('tr Delta', err.mse)
        report.close('simulation within 3 standard errors', sim.mse, err.mse, 3 * sim.mse_standard_error)
        report.at_least('not below Lambda - H', sim.mse + 5 * sim.mse_standard_error, float(np.trace(err.qfi_bound)))
    return report, cfg


def cli():
    fire.Fire(dict(
        reproduce=reproduce,
        bound=bound,
        simulate=simulate,
    ))


if __name__ == '__main__':
    cli()
