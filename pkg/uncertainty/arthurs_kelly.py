# uncertainty/arthurs_kelly.py
"""
Arthurs–Kelly 模型：物體 ψ 與兩個探針 Ψ_1、Ψ_2 的三體耦合，

  U^(γ) = exp(-(γ+1)(i/2ħ) λκ P_1 Q_2) · exp(-(i/ħ) λ Q P_1) · exp((i/ħ) κ P Q_2)

每個因子在適當的混合表示下都是純相位，只靠逐軸 FFT 演化。
讀數 Q_1/λ 與 P_2/κ 的聯合分佈是一個協變相空間觀測量。
"""
import math
import warnings
from dataclasses import dataclass

import numpy as np

from uncertainty.covariant import PhaseSpaceDensity
from uncertainty.exceptions import AliasingWarning, CommensurabilityError, CostError, ParameterError
from uncertainty.grid import BOUNDARY_MASS_TOL, GridSpec, WaveFunction, boundary_mass, transform_axis, weyl_shift
from uncertainty.reports import Report, Series
from uncertainty.stats import probability_density

# 每軸格點上限：64³ 是預設規模，96³ 用在網格加密的比對
MAX_AXIS_POINTS = 96
NORM_TOL = 1e-8
SIMULATION_TOL = 0.03
MEAN_TOL = 0.02
GAMMA_RANGE = (-2.0, 2.0)


@dataclass(frozen=True)
class AKParams:
    lam: float
    kappa: float
    gamma: float = 0.0

    def __post_init__(self):
        if self.lam < 0 or self.kappa < 0:
            raise ParameterError("coupling constants lambda and kappa must be nonnegative")

    def require_positive(self) -> None:
        if not (self.lam > 0 and self.kappa > 0):
            raise ParameterError("readout scaling needs lambda > 0 and kappa > 0")


@dataclass(frozen=True, eq=False)
class TriState:
    grids: tuple[GridSpec, GridSpec, GridSpec]
    amplitudes: np.ndarray

    def __post_init__(self):
        shape = tuple(g.n_points for g in self.grids)
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != shape:
            raise ParameterError(f"tensor shape {amps.shape} does not match grids {shape}")
        object.__setattr__(self, 'amplitudes', amps)
        if abs(self.norm() - 1.0) > NORM_TOL:
            raise ParameterError(f"three-system state is not normalized (norm² = {self.norm():.12g})")

    @classmethod
    def product(cls, psi: WaveFunction, probe1: WaveFunction, probe2: WaveFunction) -> 'TriState':
        grids = (psi.grid, probe1.grid, probe2.grid)
        for g in grids:
            if g.n_points > MAX_AXIS_POINTS:
                raise CostError(f"three-system tensors are limited to {MAX_AXIS_POINTS} points per axis, "
                                f"got {g.n_points}")
        if len({g.hbar for g in grids}) != 1:
            raise ParameterError("object and probes must share one hbar")
        amps = np.multiply.outer(np.multiply.outer(psi.position_amplitudes(), probe1.position_amplitudes()),
                                 probe2.position_amplitudes())
        return cls(grids=grids, amplitudes=amps)

    @property
    def volume(self) -> float:
        return math.prod(g.dx for g in self.grids)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.volume)


def _axis(values: np.ndarray, axis: int) -> np.ndarray:
    shape = [1, 1, 1]
    shape[axis] = len(values)
    return values.reshape(shape)


def _warn_boundary(state: TriState) -> None:
    density = np.abs(state.amplitudes) ** 2 * state.volume
    for axis, grid in enumerate(state.grids):
        others = tuple(a for a in range(3) if a != axis)
        position = density.sum(axis=others) / grid.dx
        momentum = np.abs(transform_axis(state.amplitudes, grid, axis)) ** 2
        momentum = momentum.sum(axis=others) * state.volume / grid.dx
        for name, weights, spacing in (('position', position, grid.dx), ('momentum', momentum, grid.dp)):
            mass = boundary_mass(weights, spacing, grid)
            if mass > BOUNDARY_MASS_TOL:
                warnings.warn(f"axis {axis} has {mass:.3g} {name} mass near the grid boundary",
                              AliasingWarning, stacklevel=3)


def ak_evolve(psi: WaveFunction, probe1: WaveFunction, probe2: WaveFunction, params: AKParams) -> TriState:
    """由右到左套用三個因子；λ = κ = 0 時狀態不變"""
    state = TriState.product(psi, probe1, probe2)
    g0, g1, g2 = state.grids
    hbar = g0.hbar
    amps = state.amplitudes
    x = _axis(g0.x, 0)
    p = _axis(g0.p, 0)
    p1 = _axis(g1.p, 1)
    x2 = _axis(g2.x, 2)

    if params.kappa:
        # exp((i/ħ) κ P Q_2)：在 (p, x_1, x_2) 表示下是相位
        amps = transform_axis(amps, g0, 0) * np.exp(1j * params.kappa * p * x2 / hbar)
        amps = transform_axis(amps, g0, 0, inverse=True)
    if params.lam:
        # 後兩個因子都在 (x, p_1, x_2) 表示下是相位
        amps = transform_axis(amps, g1, 1)
        amps = amps * np.exp(-1j * params.lam * x * p1 / hbar)
        amps = amps * np.exp(-1j * (params.gamma + 1) * params.lam * params.kappa * p1 * x2 / (2 * hbar))
        amps = transform_axis(amps, g1, 1, inverse=True)

    final = TriState(grids=state.grids, amplitudes=amps)
    _warn_boundary(final)
    return final


def ak_joint_distribution(final: TriState, params: AKParams) -> PhaseSpaceDensity:
    """(Q_1/λ, P_2/κ) 的聯合密度：探針 2 換到動量表示，再對物體軸積分"""
    params.require_positive()
    g0, g1, g2 = final.grids
    amps = transform_axis(final.amplitudes, g2, 2)
    weights = np.sum(np.abs(amps) ** 2, axis=0) * g0.dx
    return PhaseSpaceDensity(
        q_coords=g1.x / params.lam,
        p_coords=g2.p / params.kappa,
        weights=weights * params.lam * params.kappa,
    )


def _probe_moments(probe: WaveFunction) -> tuple[float, float]:
    """(ΔQ², ΔP²)；探針的位置與動量期望值必須為 0"""
    dist_q = probability_density(probe, 'Q')
    dist_p = probability_density(probe, 'P')
    scale_q, scale_p = max(dist_q.std(), probe.grid.dx), max(dist_p.std(), probe.grid.dp)
    if abs(dist_q.mean()) > 1e-6 * scale_q or abs(dist_p.mean()) > 1e-6 * scale_p:
        raise ParameterError("probe states must have zero position and momentum expectations")
    return dist_q.variance(), dist_p.variance()


def ak_analytic_variances(params: AKParams, probe1: WaveFunction, probe2: WaveFunction, label: str = '') -> Report:
    """
    a = ΔQ1²/λ²，b = κ²ΔQ2²/4，c = ΔP2²/κ²，d = λ²ΔP1²/4
    Δ(μ_γ)² = a + (γ-1)²b，Δ(ν_γ)² = c + (γ+1)²d
    𝒬_γ = (γ+1)²ad + (γ-1)²bc，𝒟_γ = ac + (γ²-1)²bd
    """
    params.require_positive()
    hbar = probe1.grid.hbar
    lam, kappa, gamma = params.lam, params.kappa, params.gamma
    var_q1, var_p1 = _probe_moments(probe1)
    var_q2, var_p2 = _probe_moments(probe2)
    a = var_q1 / lam ** 2
    b = kappa ** 2 * var_q2 / 4
    c = var_p2 / kappa ** 2
    d = lam ** 2 * var_p1 / 4
    var_mu = a + (gamma - 1) ** 2 * b
    var_nu = c + (gamma + 1) ** 2 * d
    q_term = (gamma + 1) ** 2 * a * d + (gamma - 1) ** 2 * b * c
    d_term = a * c + (gamma ** 2 - 1) ** 2 * b * d
    x = 16 * var_q1 * var_p2 / (lam * kappa * hbar) ** 2
    product = var_mu * var_nu

    report = Report(name='arthurs-kelly-analytic', quantities={
        'gamma': gamma,
        'var_mu': var_mu,
        'var_nu': var_nu,
        'product': product,
        'q_term': q_term,
        'd_term': d_term,
        'x': x,
        'bound': hbar ** 2 / 4,
    })
    report.check('ak-noise', product, hbar ** 2 / 4, tol=1e-9, label=label)
    report.check('ak-decomposition', q_term + d_term, product, relation='==', tol=1e-12 * max(1.0, product),
                 label=label)
    if gamma == 0:
        report.check('ak-q-term', q_term, hbar ** 2 / 8, tol=1e-9, label=label)
        report.check('ak-d-term', d_term, hbar ** 2 / 16 * (x + 1 / x), tol=1e-9, label=label)
    if gamma == -1:
        # γ = -1 時 ν 就是未受擾動的動量量測精度
        undisturbed = (var_p2 / kappa ** 2) * (kappa ** 2 * var_q2)
        report.quantities['undisturbed_product'] = undisturbed
        report.check('ak-undisturbed', undisturbed, hbar ** 2 / 4, tol=1e-9, label=label)
    return report


def ak_simulate(psi: WaveFunction, probe1: WaveFunction, probe2: WaveFunction, params: AKParams,
                label: str = '') -> Report:
    """完整演化，讀數的平均與變異數和解析公式比對"""
    analytic = ak_analytic_variances(params, probe1, probe2)
    final = ak_evolve(psi, probe1, probe2, params)
    joint = ak_joint_distribution(final, params)
    readout_q, readout_p = joint.q_marginal(), joint.p_marginal()
    dist_q, dist_p = probability_density(psi, 'Q'), probability_density(psi, 'P')
    expected_q = dist_q.variance() + analytic.quantities['var_mu']
    expected_p = dist_p.variance() + analytic.quantities['var_nu']
    rel_q = abs(readout_q.variance() - expected_q) / expected_q
    rel_p = abs(readout_p.variance() - expected_p) / expected_p

    report = Report(name='arthurs-kelly-simulation', quantities={
        'gamma': params.gamma,
        'norm': final.norm(),
        'readout_mean_q': readout_q.mean(),
        'readout_mean_p': readout_p.mean(),
        'object_mean_q': dist_q.mean(),
        'object_mean_p': dist_p.mean(),
        'readout_var_q': readout_q.variance(),
        'readout_var_p': readout_p.variance(),
        'expected_var_q': expected_q,
        'expected_var_p': expected_p,
    })
    tag = f"{label}:" if label else ''
    report.check('ak-unitarity', final.norm(), 1.0, relation='==', tol=NORM_TOL, label=label)
    report.check('ak-simulation', rel_q, SIMULATION_TOL, relation='<=', label=f"{tag}Q")
    report.check('ak-simulation', rel_p, SIMULATION_TOL, relation='<=', label=f"{tag}P")
    report.check('ak-readout-mean', readout_q.mean(), dist_q.mean(), relation='==',
                 tol=MEAN_TOL * max(abs(dist_q.mean()), dist_q.std()), label=f"{tag}Q")
    report.check('ak-readout-mean', readout_p.mean(), dist_p.mean(), relation='==',
                 tol=MEAN_TOL * max(abs(dist_p.mean()), dist_p.std()), label=f"{tag}P")
    return report


def ak_covariance(psi: WaveFunction, probe1: WaveFunction, probe2: WaveFunction, params: AKParams,
                  q_bins: int = 2, p_bins: int = 2) -> float:
    """
    平移輸入 ψ → W(q,p)ψ 後，聯合密度應整體平移 (q, p)。
    回傳兩者的 total variation；平移量必須對得上讀數網格。
    """
    params.require_positive()
    grid = psi.grid
    q, p = q_bins * grid.dx, p_bins * grid.dp
    joint = ak_joint_distribution(ak_evolve(psi, probe1, probe2, params), params)
    moved = ak_joint_distribution(ak_evolve(weyl_shift(psi, q, p), probe1, probe2, params), params)
    shift_q, shift_p = q / joint.dq, p / joint.dp
    if abs(shift_q - round(shift_q)) > 1e-6 or abs(shift_p - round(shift_p)) > 1e-6:
        raise CommensurabilityError("input shift is not a whole number of readout bins")
    return moved.total_variation(joint.shifted(int(round(shift_q)), int(round(shift_p))))


def ak_gamma_study(gammas, params: AKParams, probe1: WaveFunction, probe2: WaveFunction,
                   psi: WaveFunction | None = None, simulate_at=(-1.0, 0.0, 1.0)) -> Report:
    """γ 掃描：每個 γ 的解析變異數、𝒬/𝒟 分解與不確定關係，並在少數 γ 上用模擬交叉驗證"""
    gammas = [float(g) for g in gammas]
    if any(not GAMMA_RANGE[0] <= g <= GAMMA_RANGE[1] for g in gammas):
        raise ParameterError(f"gamma sweep must stay within [{GAMMA_RANGE[0]:g}, {GAMMA_RANGE[1]:g}]")
    report = Report(name='arthurs-kelly')
    rows = []
    for gamma in gammas:
        point = AKParams(lam=params.lam, kappa=params.kappa, gamma=gamma)
        analytic = ak_analytic_variances(point, probe1, probe2, label=f"gamma={gamma:g}")
        q = analytic.quantities
        rows.append((gamma, q['var_mu'], q['var_nu'], q['product'], q['q_term'], q['d_term'], q['bound'],
                     int(analytic.passed)))
        report.merge(analytic, prefix=f"gamma={gamma:g}.")
        if psi is not None and gamma in simulate_at:
            report.merge(ak_simulate(psi, probe1, probe2, point, label=f"gamma={gamma:g}"),
                         prefix=f"gamma={gamma:g}.sim.")
    report.add_series('gamma-sweep', Series(
        columns=['gamma', 'var_mu', 'var_nu', 'product', 'q_term', 'd_term', 'bound', 'pass'],
        rows=rows,
        tag='ak-noise',
        description='analytic readout variances and the Q + D decomposition over gamma',
    ))
    return report
