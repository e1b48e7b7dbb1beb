# uncertainty/covariant.py
"""
模糊化觀測量 Q_μ、P_ν 與協變相空間觀測量 G^T：

  G^T(Z) = (1/2πħ) ∫_Z W(q,p) T W(q,p)* dq dp
  μ_T = prob^Q_{ΠTΠ*}，ν_T = prob^P_{ΠTΠ*}

以及 G^T 的各種不準度 (intrinsic noise、resolution width、standard error、
Werner distance、error bar) 與它們的取捨關係。
"""
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import fft as sp_fft

from uncertainty.exceptions import AliasingError, CostError, GridMismatchError, ParameterError
from uncertainty.grid import GridSpec, WaveFunction, weyl_shift
from uncertainty.reports import WERNER_C, Report, Series
from uncertainty.states import DensityMatrixT, parity_conjugate
from uncertainty.stats import (
    ProbabilityDensity,
    overall_width,
    probability_density,
    width_bounds,
)

MAX_HUSIMI_RANK = 8
# 卷積掉出網格的質量上限；低於此值時重新正規化
SMEAR_LEAKAGE_TOL = 1e-6
MARGINAL_TV_TOL = 1e-6
COVARIANCE_TV_TOL = 1e-4


@dataclass(frozen=True, eq=False)
class SmearingMeasure:
    density: ProbabilityDensity
    first_moment: float
    variance: float
    abs_first_moment: float

    @classmethod
    def from_density(cls, density: ProbabilityDensity) -> 'SmearingMeasure':
        return cls(
            density=density,
            first_moment=density.mean(),
            variance=density.variance(),
            abs_first_moment=density.abs_moment(),
        )

    @classmethod
    def point_mass(cls, coords) -> 'SmearingMeasure':
        """0 點上的單點質量 (卷積的單位元)"""
        coords = np.asarray(coords, dtype=float)
        h = coords[1] - coords[0]
        weights = np.zeros(len(coords))
        weights[int(np.argmin(np.abs(coords)))] = 1.0 / h
        return cls.from_density(ProbabilityDensity(coords, weights))

    @property
    def standard_error(self) -> float:
        """√(μ[1]² + Δ(μ)²)"""
        return math.sqrt(self.first_moment ** 2 + self.variance)

    def width(self, epsilon: float) -> float:
        return overall_width(self.density, epsilon).width


@dataclass(frozen=True, eq=False)
class CovariantObservable:
    T: DensityMatrixT
    mu_T: SmearingMeasure
    nu_T: SmearingMeasure

    @property
    def grid(self) -> GridSpec:
        return self.T.grid

    @cached_property
    def components(self) -> list[tuple[float, WaveFunction]]:
        """T 的 (權重, 純態) 分解；Husimi 密度按這個加總"""
        return self.T.eigenstates()

    @property
    def rank(self) -> int:
        return len(self.components)

    def q_channel(self, psi: WaveFunction) -> ProbabilityDensity:
        """第一個邊際 G^T_1 在 ψ 的分佈 = prob^Q_ψ * μ_T"""
        return smear(probability_density(psi, 'Q'), self.mu_T)

    def p_channel(self, psi: WaveFunction) -> ProbabilityDensity:
        return smear(probability_density(psi, 'P'), self.nu_T)


def gt_from_T(T: DensityMatrixT) -> CovariantObservable:
    conj = parity_conjugate(T)
    grid = T.grid
    mu = ProbabilityDensity.normalized(grid.x, conj.position_density())
    nu = ProbabilityDensity.normalized(grid.p, conj.momentum_density())
    return CovariantObservable(T=T, mu_T=SmearingMeasure.from_density(mu), nu_T=SmearingMeasure.from_density(nu))


def smear(dist: ProbabilityDensity, m: SmearingMeasure) -> ProbabilityDensity:
    """
    dist * μ 的離散卷積，結果放回 dist 的網格。
    兩者格距必須相同，μ 的格點必須是格距的整數倍。
    """
    h = dist.spacing
    mu = m.density
    if abs(mu.spacing - h) > 1e-9 * h:
        raise GridMismatchError(f"smearing spacing {mu.spacing:g} differs from density spacing {h:g}")
    start = mu.coords[0] / h
    if abs(start - round(start)) > 1e-6:
        raise GridMismatchError("smearing grid is not aligned with integer multiples of the spacing")
    offset = -int(round(start))
    full = np.convolve(dist.weights, mu.weights) * h
    lo = max(offset, 0)
    result = np.zeros(len(dist.weights))
    piece = full[lo:offset + len(dist.weights)]
    result[lo - offset:lo - offset + len(piece)] = piece
    leakage = 1.0 - float(np.sum(result) * h)
    if leakage > SMEAR_LEAKAGE_TOL:
        raise AliasingError(f"convolution leaks {leakage:.3g} of its mass off the grid")
    return ProbabilityDensity.normalized(dist.coords, result, dist.kind)


@dataclass(frozen=True, eq=False)
class PhaseSpaceDensity:
    q_coords: np.ndarray
    p_coords: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        weights = np.array(self.weights, dtype=float)
        if weights.shape != (len(self.q_coords), len(self.p_coords)):
            raise ParameterError("phase-space weights must have shape (len(q), len(p))")
        if np.min(weights) < -1e-12 * max(1.0, float(np.max(weights))):
            raise ParameterError("phase-space density has negative weights")
        weights = np.clip(weights, 0.0, None)
        object.__setattr__(self, 'q_coords', np.asarray(self.q_coords, dtype=float))
        object.__setattr__(self, 'p_coords', np.asarray(self.p_coords, dtype=float))
        object.__setattr__(self, 'weights', weights)
        if abs(self.total() - 1.0) > 1e-6:
            raise ParameterError(f"phase-space density integrates to {self.total():.9g}")

    @property
    def dq(self) -> float:
        return float(self.q_coords[1] - self.q_coords[0])

    @property
    def dp(self) -> float:
        return float(self.p_coords[1] - self.p_coords[0])

    def total(self) -> float:
        return float(np.sum(self.weights) * self.dq * self.dp)

    def q_marginal(self) -> ProbabilityDensity:
        return ProbabilityDensity.normalized(self.q_coords, self.weights.sum(axis=1) * self.dp)

    def p_marginal(self) -> ProbabilityDensity:
        return ProbabilityDensity.normalized(self.p_coords, self.weights.sum(axis=0) * self.dq)

    def shifted(self, q_bins: int, p_bins: int) -> 'PhaseSpaceDensity':
        return PhaseSpaceDensity(self.q_coords, self.p_coords,
                                 np.roll(self.weights, (q_bins, p_bins), axis=(0, 1)))

    def total_variation(self, other: 'PhaseSpaceDensity') -> float:
        if self.weights.shape != other.weights.shape:
            raise GridMismatchError("phase-space densities live on different grids")
        return float(0.5 * np.sum(np.abs(self.weights - other.weights)) * self.dq * self.dp)

    def rows(self) -> list[tuple[float, float, float]]:
        """(q, p, density)，q 為外層迴圈"""
        return [(float(q), float(p), float(w))
                for q, row in zip(self.q_coords, self.weights)
                for p, w in zip(self.p_coords, row)]


def husimi_rows(psi: WaveFunction, window: WaveFunction, shifts: np.ndarray) -> np.ndarray:
    """
    每個位置平移 q = s·dx 做一次 FFT：
    |⟨W(q,p)φ|ψ⟩|² / 2πħ = |∫ e^{-ipx/ħ} conj(φ(x-q)) ψ(x) dx|² / 2πħ
    """
    grid = psi.grid
    n = grid.n_points
    phi = window.position_amplitudes()
    index = (np.arange(n)[None, :] - shifts[:, None]) % n
    rows = np.conj(phi[index]) * psi.position_amplitudes()[None, :]
    spectra = sp_fft.fftshift(sp_fft.fft(rows, axis=1), axes=1) * grid.dx
    return np.abs(spectra) ** 2 / (2 * math.pi * grid.hbar)


def husimi(psi: WaveFunction, G: CovariantObservable, q_stride: int = 1, p_stride: int = 1) -> PhaseSpaceDensity:
    """G^T 在 ψ 的相空間分佈 (T 為低秩時的 Husimi 型密度)"""
    grid = psi.grid
    if G.grid != grid:
        raise GridMismatchError("state and observable must share one grid")
    if q_stride < 1 or p_stride < 1:
        raise ParameterError("strides must be positive")
    if G.rank > MAX_HUSIMI_RANK:
        raise CostError(f"T has rank {G.rank} > {MAX_HUSIMI_RANK}; phase-space density is too costly")
    n = grid.n_points
    shifts = (np.arange(n) - n // 2)[::q_stride]
    weights = np.zeros((len(shifts), n))
    for weight, window in G.components:
        weights += weight * husimi_rows(psi, window, shifts)
    # 特徵值總和可能差 1e-12 等級，這裡補回去
    weights /= sum(w for w, _ in G.components)
    weights = weights[:, ::p_stride]
    if q_stride > 1 or p_stride > 1:
        # 抽樣後的 Riemann 和不再精確為 1
        weights /= np.sum(weights) * q_stride * grid.dx * p_stride * grid.dp
    return PhaseSpaceDensity(q_coords=shifts * grid.dx, p_coords=grid.p[::p_stride], weights=weights)


def inaccuracy_measures(G: CovariantObservable, eps1: float, eps2: float, label: str = '') -> Report:
    """
    兩個邊際的 intrinsic noise Δ(μ)²、resolution width W_ε(μ)、standard error √(μ[1]²+Δ(μ)²)、
    Werner distance ∫|q|dμ、error-bar 下界 W_ε(Q,T)，以及五個乘積不等式。
    """
    for eps in (eps1, eps2):
        if not 0 < eps < 0.5:
            raise ParameterError(f"epsilon must lie in (0, 1/2), got {eps}")
    grid = G.grid
    hbar = grid.hbar
    mu, nu = G.mu_T, G.nu_T
    res_q, res_p = mu.width(eps1), nu.width(eps2)
    err_q = overall_width(ProbabilityDensity.normalized(grid.x, G.T.position_density()), eps1).width
    err_p = overall_width(ProbabilityDensity.normalized(grid.p, G.T.momentum_density()), eps2).width
    width_bound, _ = width_bounds(hbar, eps1, eps2)
    width_tol = (res_q + 2 * grid.dx) * (res_p + 2 * grid.dp) - res_q * res_p

    report = Report(name='inaccuracy-measures', quantities={
        'noise_q': mu.variance,
        'noise_p': nu.variance,
        'resolution_q': res_q,
        'resolution_p': res_p,
        'standard_error_q': mu.standard_error,
        'standard_error_p': nu.standard_error,
        'distance_q': mu.abs_first_moment,
        'distance_p': nu.abs_first_moment,
        'error_bar_q': err_q,
        'error_bar_p': err_p,
    })
    report.check('noise', mu.variance * nu.variance, hbar ** 2 / 4, tol=1e-9, label=label)
    report.check('resolution', res_q * res_p, width_bound, tol=width_tol, label=label)
    report.check('standard-error', mu.standard_error * nu.standard_error, hbar / 2, tol=1e-9, label=label)
    # |q| 在 0 有折點，格點積分約有 0.5% 的誤差
    report.check('distance', mu.abs_first_moment * nu.abs_first_moment, WERNER_C * hbar,
                 tol=0.01 * WERNER_C * hbar, label=label)
    report.check('error-bar', err_q * err_p, width_bound, tol=width_tol, label=label)
    return report


def check_covariant_state_ur(psi: WaveFunction, G: CovariantObservable, label: str = '') -> Report:
    """Δ(G^T_1,ψ)·Δ(G^T_2,ψ) ≥ ħ"""
    spread_q = G.q_channel(psi).std()
    spread_p = G.p_channel(psi).std()
    hbar = psi.grid.hbar
    report = Report(name='covariant-state-ur', quantities={
        'spread_q': spread_q,
        'spread_p': spread_p,
        'product': spread_q * spread_p,
        'bound': hbar,
    })
    report.check('smeared-spread', spread_q * spread_p, hbar, tol=1e-8, label=label)
    return report


def check_husimi(psi: WaveFunction, G: CovariantObservable, q_bins: int = 8, p_bins: int = 8,
                 q_stride: int = 1, p_stride: int = 1, label: str = '') -> Report:
    """
    全解析度的相空間密度：兩個邊際與 smear 結果一致、
    W(q,p)ψ 的密度等於原密度平移 (q,p)。輸出的 series 依 stride 抽樣。
    """
    grid = psi.grid
    density = husimi(psi, G)
    tv_q = density.q_marginal().total_variation(G.q_channel(psi))
    tv_p = density.p_marginal().total_variation(G.p_channel(psi))
    moved = husimi(weyl_shift(psi, q_bins * grid.dx, p_bins * grid.dp), G)
    tv_shift = moved.total_variation(density.shifted(q_bins, p_bins))

    report = Report(name='husimi', quantities={
        'marginal_tv_q': tv_q,
        'marginal_tv_p': tv_p,
        'covariance_tv': tv_shift,
        'shift_q': q_bins * grid.dx,
        'shift_p': p_bins * grid.dp,
    })
    report.check('husimi-marginal', tv_q, MARGINAL_TV_TOL, relation='<=', label=f"{label}:Q" if label else 'Q')
    report.check('husimi-marginal', tv_p, MARGINAL_TV_TOL, relation='<=', label=f"{label}:P" if label else 'P')
    report.check('husimi-covariance', tv_shift, COVARIANCE_TV_TOL, relation='<=', label=label)
    coarse = density if q_stride == p_stride == 1 else husimi(psi, G, q_stride, p_stride)
    report.add_series('density', Series(
        columns=['q', 'p', 'density'],
        rows=coarse.rows(),
        tag='husimi-marginal',
        description='phase-space density of the covariant observable',
        kind='grid',
    ))
    return report
