# uncertainty/runner.py
"""
把驗證過的情境 dict 交給各個數值模組，組成一份 Report。
這裡不碰 Django (joblib 的 worker 也會 import 這個模組)，檔案輸出與 Log 由 management command 負責。
"""
import math
import traceback
import warnings
from dataclasses import dataclass, field

import numpy as np

from uncertainty.arthurs_kelly import AKParams, ak_gamma_study
from uncertainty.calibration import (
    MonotoneMap,
    conjecture_diagnostics,
    error_bar_calibrate,
    warp_observable,
    werner_distance_lower_bound,
)
from uncertainty.concentration import (
    COMMUTE_TOL,
    NONCOMMUTE_TOL,
    PeriodicSetFunction,
    area_sweep,
    min_area_for_confidence,
    optimal_localization,
    periodic_commutator,
)
from uncertainty.covariant import check_covariant_state_ur, check_husimi, gt_from_T, inaccuracy_measures
from uncertainty.exceptions import LabError, ParameterError
from uncertainty.grid import GridSpec, WaveFunction
from uncertainty.reports import Report, Series
from uncertainty.sequential import bin_cells, build_instrument, coupling_sweep, disturbance_report
from uncertainty.states import box, gaussian, pure_density, random_superposition
from uncertainty.stats import (
    check_overall_width_ur,
    check_preparation_ur,
    overall_width,
    probability_density,
    stddev,
    target_spreads,
    width_bounds,
)
from uncertainty.storage import load_wavefunction
from uncertainty.werner import werner_constant_search, werner_report

SWEEP_EPSILONS = (0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.45)


@dataclass
class RunResult:
    scenario: dict
    report: Report | None = None
    warnings: list[str] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)
    error: str | None = None
    error_type: str | None = None
    traceback: str | None = None


def default_scenario(command: str) -> dict:
    return {'name': command, 'command': command}


def resolve_scenario(scenario: dict, env) -> dict:
    """情境沒寫的 ħ、種子、網格由環境設定補上"""
    resolved = dict(scenario)
    resolved.setdefault('hbar', env.HBAR)
    resolved.setdefault('seed', env.SEED)
    grid = dict(resolved.get('grid') or {})
    grid.setdefault('n_points', env.N_POINTS)
    grid.setdefault('length', env.GRID_LENGTH)
    resolved['grid'] = grid
    resolved.setdefault('states', [])
    resolved.setdefault('parameters', {})
    return resolved


def scenario_grid(scenario: dict) -> GridSpec:
    grid = scenario['grid']
    return GridSpec.centered(grid['n_points'], grid['length'], scenario['hbar'])


def build_state(spec: dict, grid: GridSpec, rng: np.random.Generator) -> WaveFunction:
    kind = spec['kind']
    if kind == 'gaussian':
        return gaussian(grid, spec['a'], spec.get('b', 0.0), spec.get('c', 0.0), spec.get('d', 0.0))
    if kind == 'box':
        return box(grid, spec.get('center', 0.0), spec['width'])
    if kind == 'random':
        return random_superposition(grid, rng, spec.get('terms', 5))
    if kind == 'target':
        return target_spreads(grid, spec['delta_q'], spec['delta_p'])
    psi = load_wavefunction(spec['path'])
    if psi.grid != grid:
        raise ParameterError(f"wave function in {spec['path']} lives on a different grid")
    return psi


def state_label(spec: dict, index: int) -> str:
    kind = spec['kind']
    if kind == 'gaussian':
        return f"eta(a={spec['a']:g},b={spec.get('b', 0.0):g})"
    if kind == 'box':
        return f"box(w={spec['width']:g})"
    if kind == 'target':
        return f"target({spec['delta_q']:g},{spec['delta_p']:g})"
    return f"{kind}{index}"


def _states(scenario: dict, grid: GridSpec, rng: np.random.Generator, defaults: list[dict]) -> list[tuple[str, WaveFunction]]:
    specs = scenario.get('states') or defaults
    return [(state_label(spec, i), build_state(spec, grid, rng)) for i, spec in enumerate(specs)]


# 1. 製備不確定關係
def run_prep_ur(scenario: dict, grid: GridSpec, rng: np.random.Generator) -> Report:
    params = scenario['parameters']
    report = Report(name=scenario['name'])
    rows = []
    defaults = [{'kind': 'gaussian', 'a': 0.5}, {'kind': 'gaussian', 'a': 0.5, 'b': 1.0}]
    for label, psi in _states(scenario, grid, rng, defaults):
        sub = check_preparation_ur(psi, label=label)
        report.merge(sub, prefix=f"{label}.")
        q = sub.quantities
        rows.append((label, q['delta_q'], q['delta_p'], q['product'], q['bound']))
    for k in range(params['random_states']):
        sub = check_preparation_ur(random_superposition(grid, rng), label=f"random{k}")
        report.checks.extend(sub.checks)
        q = sub.quantities
        rows.append((f"random{k}", q['delta_q'], q['delta_p'], q['product'], q['bound']))
    report.quantities['min_random_product'] = min((r[3] for r in rows if r[0].startswith('random')),
                                                  default=math.nan)

    for delta_q, delta_p in params['targets']:
        label = f"target({delta_q:g},{delta_p:g})"
        psi = target_spreads(grid, delta_q, delta_p)
        got_q, got_p = stddev(psi, 'Q'), stddev(psi, 'P')
        report.check('target-spreads', got_q, delta_q, relation='==', tol=1e-6 * delta_q, label=f"{label}:Q")
        report.check('target-spreads', got_p, delta_p, relation='==', tol=1e-6 * delta_p, label=f"{label}:P")
        rows.append((label, got_q, got_p, got_q * got_p, grid.hbar / 2))

    report.add_series('spreads', Series(
        columns=['state', 'delta_q', 'delta_p', 'product', 'bound'],
        rows=rows,
        tag='prep-variance',
        description='standard deviations of position and momentum per state',
    ))
    return report


def run_overall_width(scenario: dict, grid: GridSpec, rng: np.random.Generator) -> Report:
    params = scenario['parameters']
    report = Report(name=scenario['name'])
    defaults = [{'kind': 'gaussian', 'a': 0.5}, {'kind': 'box', 'center': 0.0, 'width': 2.0}]
    states = _states(scenario, grid, rng, defaults)
    randoms = [random_superposition(grid, rng) for _ in range(params['random_states'])]
    rows = []
    for eps1, eps2 in params['epsilons']:
        tag = f"eps=({eps1:g},{eps2:g})"
        for label, psi in states:
            report.merge(check_overall_width_ur(psi, eps1, eps2, label=f"{tag}:{label}"),
                         prefix=f"{tag}.{label}.")
        products = []
        for k, psi in enumerate(randoms):
            sub = check_overall_width_ur(psi, eps1, eps2, label=f"{tag}:random{k}")
            report.checks.extend(sub.checks)
            products.append(sub.quantities['product'])
        if products:
            plain, _ = width_bounds(grid.hbar, eps1, eps2)
            rows.append((eps1, eps2, min(products), plain))
    if rows:
        report.add_series('random-minimum', Series(
            columns=['eps1', 'eps2', 'min_product', 'bound'],
            rows=rows,
            tag='prep-width',
            description='smallest overall-width product among random superpositions',
        ))

    if params['sweep']:
        label, psi = states[0]
        dist_q, dist_p = probability_density(psi, 'Q'), probability_density(psi, 'P')
        sweep = []
        for eps in SWEEP_EPSILONS:
            w_q = overall_width(dist_q, eps).width
            w_p = overall_width(dist_p, eps).width
            plain, refined = width_bounds(grid.hbar, eps, eps)
            sweep.append((eps, w_q, w_p, w_q * w_p, plain, refined))
        report.add_series('epsilon-sweep', Series(
            columns=['epsilon', 'width_q', 'width_p', 'product', 'bound', 'refined_bound'],
            rows=sweep,
            tag='prep-width-refined',
            description=f"overall-width product of {label} against both bounds",
        ))
    return report


# 2. 集中問題與週期函數
def _random_intervals(grid: GridSpec, rng: np.random.Generator) -> tuple[tuple[float, float], tuple[float, float]]:
    """面積落在 [0.5, 8]·2πħ 的隨機 (X, Y)，都在安全視窗內"""
    unit = 2 * math.pi * grid.hbar
    area = unit * math.exp(rng.uniform(math.log(0.5), math.log(8.0)))
    aspect = math.exp(rng.uniform(-0.5, 0.5))
    width_x = math.sqrt(area) * aspect
    width_p = area / width_x
    cx = rng.uniform(-0.1, 0.1) * grid.length
    cp = rng.uniform(-0.1, 0.1) * grid.n_points * grid.dp
    return (cx - width_x / 2, cx + width_x / 2), (cp - width_p / 2, cp + width_p / 2)


def run_landau_pollak(scenario: dict, grid: GridSpec, rng: np.random.Generator) -> Report:
    params = scenario['parameters']
    unit = 2 * math.pi * grid.hbar
    report = Report(name=scenario['name'])
    rows = area_sweep(grid, [a * unit for a in sorted(params['areas'])])
    for area, a0, value, trace in rows:
        report.check('trace-identity', trace, area / unit, relation='==', tol=0.01 * area / unit,
                     label=f"area={area / unit:.4g}")
    a0s = [row[1] for row in rows]
    if len(a0s) > 1:
        report.check('a0-monotone', float(np.min(np.diff(a0s))), 0.0, tol=1e-12)
    report.add_series('a0-vs-area', Series(
        columns=['area_over_2pi_hbar', 'a0', 'one_plus_sqrt_a0', 'trace'],
        rows=[(area / unit, a0, value, trace) for area, a0, value, trace in rows],
        tag='two-route',
        description='largest eigenvalue of Q(X)P(Y)Q(X) against the area |X||Y|',
    ))

    for k in range(params['random_pairs']):
        X, Y = _random_intervals(grid, rng)
        best = optimal_localization(grid, X, Y)
        bound = 1 + math.sqrt(best.a0)
        label = f"pair{k}"
        report.check('two-route', best.value, bound, relation='==', tol=1e-6, label=label)
        report.check('localization-bound', best.prob_q + best.prob_p, bound, relation='<=', tol=1e-9, label=label)
        report.check('localization-bound', best.prob_q + best.prob_p, 2.0, relation='<', label=f"{label}:strict")

    if params['min_area']:
        eps = params['epsilon']
        result = min_area_for_confidence(grid, eps, eps)
        report.quantities.update({
            'epsilon': eps,
            'min_area': result.area,
            'min_area_over_2pi_hbar': result.area / unit,
            'min_area_bins': result.bins,
            'min_area_a0': result.a0,
        })
        report.check('concentration-area', result.area, result.bound, label=f"eps={eps:g}")
    return report


def run_periodic(scenario: dict, grid: GridSpec, rng: np.random.Generator) -> Report:
    report = Report(name=scenario['name'])
    rows = []
    for a_bins, b_bins in scenario['parameters']['pairs']:
        a, b = a_bins * grid.dx, b_bins * grid.dp
        result = periodic_commutator(grid, PeriodicSetFunction.half_period(a), PeriodicSetFunction.half_period(b))
        label = f"a={a_bins}dx,b={b_bins}dp"
        if result.commute_predicted:
            report.check('periodic-commute', result.norm, COMMUTE_TOL, relation='<', label=label)
        else:
            report.check('periodic-noncommute', result.norm, NONCOMMUTE_TOL, label=label)
        rows.append((a, b, result.ratio, result.norm, result.verdict))
    report.add_series('commutators', Series(
        columns=['a', 'b', 'ratio', 'norm', 'verdict'],
        rows=rows,
        tag='periodic-commute',
        description='max-norm of [Q^g, P^h] for half-period indicators',
    ))
    return report


# 3. 協變觀測量
def _warp(amplitude: float, coords: np.ndarray) -> MonotoneMap:
    return MonotoneMap.from_function(lambda v: v + amplitude * np.tanh(v), coords)


def run_covariant(scenario: dict, grid: GridSpec, rng: np.random.Generator) -> tuple[Report, list[str]]:
    params = scenario['parameters']
    eps1, eps2 = params['epsilons']
    report = Report(name=scenario['name'])
    window = build_state(params.get('T') or {'kind': 'gaussian', 'a': 0.5}, grid, rng)
    G = gt_from_T(pure_density(window))
    report.merge(inaccuracy_measures(G, eps1, eps2, label='T'), prefix='T.')

    states = _states(scenario, grid, rng, [{'kind': 'gaussian', 'a': 0.5}])
    states += [(f"random{k}", random_superposition(grid, rng)) for k in range(params['random_states'])]
    for label, psi in states:
        report.merge(check_covariant_state_ur(psi, G, label=label), prefix=f"{label}.")

    rows = []
    for k in range(params['random_T']):
        sub = inaccuracy_measures(gt_from_T(pure_density(random_superposition(grid, rng))), eps1, eps2,
                                  label=f"randomT{k}")
        report.checks.extend(sub.checks)
        q = sub.quantities
        rows.append((k, q['noise_q'] * q['noise_p'], q['resolution_q'] * q['resolution_p'],
                     q['standard_error_q'] * q['standard_error_p'], q['distance_q'] * q['distance_p'],
                     q['error_bar_q'] * q['error_bar_p']))
    if rows:
        report.add_series('random-T', Series(
            columns=['index', 'noise', 'resolution', 'standard_error', 'distance', 'error_bar'],
            rows=rows,
            tag='standard-error',
            description='inaccuracy products for random pure T',
        ))

    calibrated_q = error_bar_calibrate(G.q_channel, grid, eps1, 4 * grid.dx, 'Q')
    calibrated_p = error_bar_calibrate(G.p_channel, grid, eps2, 4 * grid.dp, 'P')
    bound, _ = width_bounds(grid.hbar, eps1, eps2)
    report.quantities.update({
        'calibrated_error_bar_q': calibrated_q.width,
        'calibrated_error_bar_p': calibrated_p.width,
    })
    report.check('error-bar', calibrated_q.width * calibrated_p.width, bound, label='calibrated')

    psi = states[0][1]
    amplitude = params['warp_amplitude']
    gamma_q, gamma_p = _warp(amplitude, grid.x), _warp(amplitude, grid.p)
    report.merge(warp_observable(G, gamma_q, gamma_p, psi, epsilon=eps1, label='warp'), prefix='warp.')

    # 距離的下界：窄高斯在幾個位置上，Q_μ 與 Q 的差
    narrow = [gaussian(grid, 10.0, d=d) for d in (-2.0, 0.0, 2.0)]
    estimate = werner_distance_lower_bound(G.q_channel, lambda s: probability_density(s, 'Q'), narrow,
                                           shifts=grid.x[::16], scales=(0.5, 1.0, 2.0))
    report.quantities.update({
        'distance_lower_bound_q': estimate.value,
        'distance_lower_bound_function': estimate.function,
    })

    diagnostics = []
    for name, gq, gp in (('identity', None, None), (f"tanh(A={amplitude:g})", gamma_q, gamma_p)):
        d = conjecture_diagnostics(G, gq, gp, eps1, eps2).quantities
        report.merge(Report(name='conjecture', quantities=d), prefix=f"conjecture.{name}.")
        diagnostics.append(
            f"{name}: noise product {d['noise_product']:.6g} "
            f"(>= hbar/2: {d['noise_holds_hbar_half']}, >= hbar^2/4: {d['noise_holds_hbar_sq_quarter']}), "
            f"resolution product {d['resolution_product']:.6g} (>= bound: {d['resolution_holds']})")
    return report, diagnostics


def run_husimi(scenario: dict, grid: GridSpec, rng: np.random.Generator) -> Report:
    params = scenario['parameters']
    window = build_state(params.get('T') or {'kind': 'gaussian', 'a': 0.5}, grid, rng)
    G = gt_from_T(pure_density(window))
    label, psi = _states(scenario, grid, rng, [{'kind': 'gaussian', 'a': 0.5, 'c': 1.0, 'd': 1.0}])[0]
    q_bins, p_bins = params['shift']
    report = Report(name=scenario['name'])
    report.merge(check_husimi(psi, G, q_bins, p_bins, params['q_stride'], params['p_stride'], label=label))
    return report


def run_werner(scenario: dict, grid: GridSpec, rng: np.random.Generator, jobs: int = 1) -> Report:
    params = scenario['parameters']
    result = werner_constant_search(params['basis_size'], params['budget'], params['starts'],
                                    seed=scenario['seed'], hbar=scenario['hbar'], jobs=jobs)
    report = Report(name=scenario['name'])
    report.merge(werner_report(result))
    report.add_series('convergence', Series(
        columns=['start', 'evaluation', 'value', 'best'],
        rows=result.history,
        tag='werner-constant',
        description='Nelder-Mead objective per evaluation',
    ))
    optimum = result.state
    inside = np.abs(optimum.grid.x) <= 6 * math.sqrt(optimum.grid.hbar)
    report.add_series('optimum', Series(
        columns=['x', 'density'],
        rows=list(zip(optimum.grid.x[inside].tolist(), optimum.density()[inside].tolist())),
        tag='werner-excited',
        description='position density of the optimal window state',
    ))
    return report


# 4. 序列量測與 Arthurs-Kelly
def run_sequential(scenario: dict, grid: GridSpec, rng: np.random.Generator) -> Report:
    params = scenario['parameters']
    eps1, eps2 = params['epsilons']
    probe = gaussian(grid, params['probe_a'])
    instrument = build_instrument(probe, params['coupling'], bin_cells(grid, params['cells_per_bin']))
    label, psi = _states(scenario, grid, rng, [{'kind': 'gaussian', 'a': 0.5, 'c': 0.5}])[0]
    report = Report(name=scenario['name'])
    report.merge(disturbance_report(instrument, psi, eps1, eps2, label=label))
    report.add_series('coupling-sweep', Series(
        columns=['lambda', 'variance_mu', 'variance_nu', 'product'],
        rows=coupling_sweep(probe, params['couplings']),
        tag='disturbance-standard-error',
        description='position inaccuracy against momentum disturbance over the coupling',
    ))
    return report


def run_arthurs_kelly(scenario: dict, grid: GridSpec, rng: np.random.Generator) -> Report:
    params = scenario['parameters']
    axis = GridSpec.balanced(params['n_points'], scenario['hbar'])
    probe1 = gaussian(axis, params['probe1_a'])
    probe2 = gaussian(axis, params['probe2_a'])
    psi = None
    if params['simulate']:
        _, psi = _states(scenario, axis, rng, [{'kind': 'gaussian', 'a': 0.5, 'c': 0.5}])[0]
    study = ak_gamma_study(params['gammas'], AKParams(params['lam'], params['kappa']), probe1, probe2,
                           psi=psi, simulate_at=tuple(params['simulate_at']))
    report = Report(name=scenario['name'], provenance={'axis_grid': axis.to_dict()})
    return report.merge(study)


HANDLERS = {
    'prep-ur': run_prep_ur,
    'overall-width': run_overall_width,
    'landau-pollak': run_landau_pollak,
    'periodic': run_periodic,
    'husimi': run_husimi,
    'sequential': run_sequential,
    'arthurs-kelly': run_arthurs_kelly,
}


def execute(scenario: dict, jobs: int = 1) -> RunResult:
    """
    執行一個已補齊預設值的情境。
    執行中發出的警告全部收集起來，交給呼叫端寫 Log。
    """
    command = scenario['command']
    grid = scenario_grid(scenario)
    rng = np.random.default_rng(scenario['seed'])
    result = RunResult(scenario=scenario)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter('always')
        if command == 'covariant':
            report, result.diagnostics = run_covariant(scenario, grid, rng)
        elif command == 'werner-constant':
            report = run_werner(scenario, grid, rng, jobs=jobs)
        else:
            report = HANDLERS[command](scenario, grid, rng)
    report.provenance = {
        'command': command,
        'seed': scenario['seed'],
        'hbar': scenario['hbar'],
        'grid': grid.to_dict(),
        'parameters': scenario['parameters'],
        **report.provenance,
    }
    result.report = report
    result.warnings = [f"{w.category.__name__}: {w.message}" for w in caught]
    return result


def execute_isolated(scenario: dict) -> RunResult:
    """suite 用：LabError 不往外丟，改成帶 traceback 的 RunResult"""
    try:
        return execute(scenario)
    except LabError as e:
        return RunResult(scenario=scenario, error=str(e), error_type=type(e).__name__,
                         traceback=traceback.format_exc())
