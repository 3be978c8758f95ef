"""
Reproductions of the worked examples: each case builds its models, runs the
engine, compares against closed forms and returns a RunReport.
"""
import logging
from typing import Callable, Dict

import numpy as np
from omegaconf import DictConfig, OmegaConf

from . import util
from .bayes import EffectiveStateModel, attaining_measurement, bayes_error, equal_purity_bayes_error, \
    optimal_measurement, orthogonal_mse, orthogonal_mse_general
from .errors import ArgumentError
from .holevo import (averaged_holevo_mse, cr_holevo_relation_check, holevo_bound, tetrahedron_im_integrand,
                     tetrahedron_objective, tetrahedron_re_average, unidentifiable_error)
from .mixture import (commuting_pair, four_state_mixture, identifiability, multicopy_expand, orthogonal_mixture,
                      symmetric_pure_pair, tetrahedron_mixture)
from .pointwise import (PointwiseModel, asymptotic_bayes_error, commuting_asymptotic_error, commuting_exact_error,
                        orthogonal_asymptotic_error, qubit_pair_asymptotic_error, qubit_pair_asymptotic_error_trace)
from .prior import Prior, simplex_quadrature
from .report import RunReport
from .simulate import SimConfig, TwoStepConfig, simulate_bayes_mse, two_step_adaptive

logger = logging.getLogger(__name__)

TETRAHEDRON_IM_REFERENCE = 0.43
TETRAHEDRON_TOTAL_REFERENCE = 2.01


def _sim_config(cfg: DictConfig, n_copies: int = 1) -> SimConfig:
    s = cfg.simulation
    return SimConfig(trials=s.trials, seed=s.seed, n_copies=n_copies, block_size=s.block_size, n_jobs=s.n_jobs,
                     progress=cfg.progress)


def _interior_points(M: int, count: int, seed: int) -> np.ndarray:
    rng = util.block_rng(seed, 0)
    return 0.05 / M + (1 - 0.05) * rng.dirichlet(np.ones(M), size=count)


def orthogonal(cfg: DictConfig) -> RunReport:
    c = cfg.cases.orthogonal
    M, N = int(c.m), int(c.n)
    report = RunReport('orthogonal', dict(M=M, N=N))
    exact = report.add('tr Delta (closed form)', orthogonal_mse(M, N), 'paper-reference')

    mix = orthogonal_mixture(M)
    expanded = multicopy_expand(mix, N, dim_cap=cfg.dim_cap)
    model = EffectiveStateModel.from_prior(expanded, Prior.flat(M))
    err = bayes_error(model, attaining_measurement(model))
    report.add('Delta', err.delta)
    engine = report.add('tr Delta', err.mse)
    report.close('engine matches closed form', engine, float(exact), 1e-9)
    report.close('attains Lambda - H', engine, float(np.trace(err.qfi_bound)), 1e-9)
    general = report.add('tr Delta (orthogonal components formula)', orthogonal_mse_general(expanded, Prior.flat(M)))
    report.close('component formula matches closed form', general, float(exact), 1e-9)

    asym = report.add('asymptotic coefficient (closed form)', orthogonal_asymptotic_error(M), 'paper-reference')
    pointwise = asymptotic_bayes_error(mix, N=1, resolution=cfg.engine_resolution, n_jobs=cfg.simulation.n_jobs,
                                       extrapolate=True, progress=cfg.progress)
    report.add('asymptotic coefficient', np.trace(pointwise))
    report.close('averaged CR bound', float(np.trace(pointwise)), float(asym), 1e-3)
    return report


def two_pure(cfg: DictConfig) -> RunReport:
    c = cfg.cases.two_pure
    report = RunReport('two-pure', dict(M=2, N=1, seed=cfg.simulation.seed, trials=cfg.simulation.trials))
    overlaps = np.linspace(0, c.max_overlap, c.pairs)
    worst = 0.0
    for o in overlaps:
        mix = symmetric_pure_pair(np.arccos(np.sqrt(o)))
        model = EffectiveStateModel.from_prior(mix, Prior.flat(2))
        d11 = bayes_error(model, optimal_measurement(model, [1, 0])).delta[0, 0]
        worst = max(worst, abs(d11 - equal_purity_bayes_error(*mix.components)))
        report.add(f'Delta_11 (tr rho1 rho2 = {o:.4f})', d11)
        report.add(f'(2 + tr rho1 rho2) / 36 (tr rho1 rho2 = {o:.4f})', (2 + o) / 36, 'paper-reference')
    report.at_most('max deviation from (2 + tr rho1 rho2) / 36', worst, 1e-9)

    o = overlaps[len(overlaps) // 2]
    mix = symmetric_pure_pair(np.arccos(np.sqrt(o)))
    model = EffectiveStateModel.from_prior(mix, Prior.flat(2))
    povm = optimal_measurement(model, [1, 0])
    sim = simulate_bayes_mse(mix, Prior.flat(2), povm, _sim_config(cfg))
    report.add(f'simulated Delta_11 (tr rho1 rho2 = {o:.4f})', sim.delta[0, 0], 'simulated', sim.standard_error[0, 0])
    report.close('simulation within 3 standard errors', sim.delta[0, 0], (2 + o) / 36, 3 * sim.standard_error[0, 0])
    return report


def tetrahedron(cfg: DictConfig) -> RunReport:
    c = cfg.cases.tetrahedron
    report = RunReport('tetrahedron', dict(M=4, resolution=cfg.resolution, seed=cfg.simulation.seed))
    mix = tetrahedron_mixture()

    re = report.add('Re part average (exact moments)', tetrahedron_re_average())
    report.close('Re part equals 63/40', re, 63 / 40, 1e-12)
    im = report.add('Im part average (quadrature)',
                    simplex_quadrature(tetrahedron_im_integrand, 4, cfg.resolution, progress=cfg.progress))
    report.add('Im part average', TETRAHEDRON_IM_REFERENCE, 'paper-reference')
    report.close('Im part', im, TETRAHEDRON_IM_REFERENCE, 5e-3)
    report.add('coefficient', TETRAHEDRON_TOTAL_REFERENCE, 'paper-reference')
    report.close('coefficient (closed form)', re + im, TETRAHEDRON_TOTAL_REFERENCE, 0.01)

    engine = averaged_holevo_mse(mix, resolution=cfg.engine_resolution, restarts=cfg.holevo.restarts,
                                 extrapolate=True, n_jobs=cfg.simulation.n_jobs, progress=cfg.progress)
    report.add('coefficient (engine)', engine.coefficient)
    report.note(engine.caveat)
    report.close('engine coefficient', engine.coefficient, re + im, 0.01)

    distance, objective_gap = 0.0, 0.0
    for lam in _interior_points(4, c.pointwise_samples, cfg.simulation.seed):
        model = PointwiseModel.at(mix, lam)
        distance = max(distance, cr_holevo_relation_check(model).distance)
        objective_gap = max(objective_gap, abs(holevo_bound(model).value - tetrahedron_objective(lam)))
    report.add('max |H^-1 - Re Z|', distance)
    report.at_most('H^-1 = Re Z at sampled points', distance, 1e-8)
    report.at_most('Holevo bound matches closed objective', objective_gap, 1e-9)
    commutator = cr_holevo_relation_check(PointwiseModel.at(mix, np.full(4, 0.25))).max_commutator
    report.add('SLD commutator norm at the barycenter', commutator)
    report.at_least('SLDs do not commute', commutator, 0.1)
    return report


def unidentifiable(cfg: DictConfig) -> RunReport:
    c = cfg.cases.unidentifiable
    N = int(c.n)
    report = RunReport('unidentifiable', dict(M=4, N=N, resolution=c.resolution, seed=cfg.simulation.seed))
    mix = four_state_mixture()
    ident = identifiability(mix)
    report.add('kernel dimension', len(ident.kernel_basis))
    result = unidentifiable_error(mix, N=N, resolution=c.resolution, restarts=cfg.holevo.restarts, extrapolate=True,
                                  n_jobs=cfg.simulation.n_jobs, progress=cfg.progress)
    rep = result.reparametrization
    report.add('informative parameters', rep.informative_count)
    report.add('intrinsic error', result.intrinsic)
    report.add('asymptotic coefficient', result.asymptotic_coeff)
    report.add('total', result.total)
    report.add('intrinsic error', 1 / 20, 'paper-reference')
    report.add('asymptotic coefficient', 9 / 10, 'paper-reference')
    report.close('intrinsic error', result.intrinsic, 1 / 20, 1e-10)
    report.close('asymptotic coefficient', result.asymptotic_coeff, 9 / 10, 1e-3)

    gap = 0.0
    for lam in _interior_points(4, c.samples, cfg.simulation.seed):
        xi = rep.xi(lam)
        gap = max(gap, abs(holevo_bound(rep.local_model(lam), restarts=cfg.holevo.restarts).value - (1 - xi @ xi)))
    report.at_most('C^H = 1 - |xi|^2 at sampled points', gap, 1e-4)
    return report


def commuting(cfg: DictConfig) -> RunReport:
    c = cfg.cases.commuting
    N = int(c.n)
    eps_values = [float(e) for e in c.eps] if OmegaConf.is_list(c.eps) else [float(c.eps)]
    report = RunReport('commuting', dict(M=2, N=N, eps=eps_values))
    for eps in eps_values:
        exact = commuting_exact_error(eps, N)
        report.add(f'N Delta (eps = {eps})', N * exact)
        report.add(f'1/(2 eps) - 1/3 (eps = {eps})', commuting_asymptotic_error(eps), 'paper-reference')
        report.close(f'asymptotic limit (eps = {eps})', N * exact, commuting_asymptotic_error(eps), 0.02)
        bloch = qubit_pair_asymptotic_error([0, 0, 1 - 2 * eps], [0, 0, 1])
        trace = qubit_pair_asymptotic_error_trace(*commuting_pair(eps).components)
        report.close(f'pointwise closed form, Bloch (eps = {eps})', bloch, commuting_asymptotic_error(eps), 1e-12)
        report.close(f'pointwise closed form, traces (eps = {eps})', trace, commuting_asymptotic_error(eps), 1e-12)
    worst = max(abs(commuting_exact_error(1, n) - float(orthogonal_mse(2, n)) / 2) for n in range(1, 65))
    report.at_most('eps = 1 equals half the orthogonal error (N <= 64)', worst, 1e-12)
    return report


def adaptive(cfg: DictConfig) -> RunReport:
    c = cfg.cases.adaptive
    N = int(c.n)
    report = RunReport('adaptive', dict(M=2, N=N, theta=c.theta, seed=cfg.simulation.seed, trials=c.trials))
    result = two_step_adaptive(TwoStepConfig(c.theta, N, trials=c.trials, seed=cfg.simulation.seed), c.weight)
    report.add('N MSE', result.nmse, 'simulated', result.nmse_standard_error)
    report.add('N MSE given the rough estimate', result.conditional_nmse, 'simulated')
    report.add('rough constant', result.rough_constant, 'simulated')
    report.add('lambda (1 - lambda) / sin^2 theta', result.bound, 'paper-reference')
    report.relative('attains the quantum CR bound', result.nmse, result.bound, 0.15)
    coarse = two_step_adaptive(TwoStepConfig(c.theta, N // 4, trials=c.trials, seed=cfg.simulation.seed), c.weight)
    report.add(f'N MSE given the rough estimate (N = {N // 4})', coarse.conditional_nmse, 'simulated')
    report.check(f'gap shrinks from N = {N // 4} to N = {N}', result.conditional_gap < coarse.conditional_gap,
                 result.conditional_gap, coarse.conditional_gap)
    return report


CASES: Dict[str, Callable[[DictConfig], RunReport]] = {
    'orthogonal': orthogonal,
    'two-pure': two_pure,
    'tetrahedron': tetrahedron,
    'unidentifiable': unidentifiable,
    'commuting': commuting,
    'adaptive': adaptive,
}


def run_case(case: str, cfg: DictConfig) -> RunReport:
    if case not in CASES:
        raise ArgumentError(f'unknown case {case!r}, expected one of {sorted(CASES)}')
    logger.info(f'Reproducing {case}')
    return CASES[case](cfg)
