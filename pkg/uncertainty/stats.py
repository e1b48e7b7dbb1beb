# uncertainty/stats.py
"""
動差、標準差、overall width 以及兩個製備不確定關係：
  ΔQ·ΔP ≥ ħ/2
  W_ε1(Q)·W_ε2(P) ≥ 2πħ(1-ε1-ε2)²  (與更緊的 √((1-ε1)(1-ε2)) - √(ε1ε2) 版本)
"""
import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from uncertainty.exceptions import (
    GridMismatchError,
    ParameterError,
    UncertaintyViolationError,
    UntrustedMomentWarning,
)
from uncertainty.grid import GridSpec, Rep, WaveFunction, boundary_mass
from uncertainty.reports import Report
from uncertainty.states import gaussian

DENSITY_NORM_TOL = 1e-9
UNTRUSTED_MASS = 1e-6


class DensityKind(enum.Enum):
    POSITION = 'position'
    MOMENTUM = 'momentum'
    GENERIC = 'generic-measure'


@dataclass(frozen=True, eq=False)
class ProbabilityDensity:
    coords: np.ndarray
    weights: np.ndarray
    kind: DensityKind = DensityKind.GENERIC

    def __post_init__(self):
        coords = np.array(self.coords, dtype=float)
        weights = np.array(self.weights, dtype=float)
        if coords.ndim != 1 or coords.shape != weights.shape or len(coords) < 2:
            raise ParameterError("density needs matching 1-D coords and weights")
        steps = np.diff(coords)
        if np.any(steps <= 0) or np.max(np.abs(steps - steps[0])) > 1e-9 * abs(steps[0]) * len(coords):
            raise ParameterError("density coords must be a uniform increasing grid")
        if np.any(weights < -1e-14 * max(1.0, float(np.max(np.abs(weights))))):
            raise ParameterError("density weights must be nonnegative")
        weights = np.clip(weights, 0.0, None)
        total = float(np.sum(weights) * steps[0])
        if abs(total - 1.0) > DENSITY_NORM_TOL:
            raise ParameterError(f"density integrates to {total:.12g}, expected 1")
        coords.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, 'coords', coords)
        object.__setattr__(self, 'weights', weights)

    @classmethod
    def normalized(cls, coords, weights, kind: DensityKind = DensityKind.GENERIC) -> 'ProbabilityDensity':
        coords = np.asarray(coords, dtype=float)
        weights = np.clip(np.asarray(weights, dtype=float), 0.0, None)
        total = np.sum(weights) * (coords[1] - coords[0])
        if not total > 0:
            raise ParameterError("cannot normalize an empty density")
        return cls(coords=coords, weights=weights / total, kind=kind)

    @property
    def spacing(self) -> float:
        return float(self.coords[1] - self.coords[0])

    def mean(self) -> float:
        return float(np.sum(self.coords * self.weights) * self.spacing)

    def variance(self) -> float:
        mu = self.mean()
        return float(np.sum((self.coords - mu) ** 2 * self.weights) * self.spacing)

    def std(self) -> float:
        return math.sqrt(max(self.variance(), 0.0))

    def abs_moment(self) -> float:
        """∫|x| dμ"""
        return float(np.sum(np.abs(self.coords) * self.weights) * self.spacing)

    def second_moment(self) -> float:
        return float(np.sum(self.coords ** 2 * self.weights) * self.spacing)

    def mass(self, lo: float, hi: float) -> float:
        """閉區間 [lo, hi] 內格點的總質量"""
        tol = 1e-9 * self.spacing
        inside = (self.coords >= lo - tol) & (self.coords <= hi + tol)
        return float(np.sum(self.weights[inside]) * self.spacing)

    def outer_mass(self, fraction: float = 0.05) -> float:
        k = max(1, math.ceil(fraction * len(self.coords)))
        return float((np.sum(self.weights[:k]) + np.sum(self.weights[-k:])) * self.spacing)

    def same_grid(self, other: 'ProbabilityDensity') -> bool:
        return (len(self.coords) == len(other.coords)
                and np.allclose(self.coords, other.coords, rtol=0, atol=1e-9 * self.spacing))

    def total_variation(self, other: 'ProbabilityDensity') -> float:
        """½∫|p - q|"""
        if not self.same_grid(other):
            raise GridMismatchError("total variation needs densities on the same grid")
        return float(0.5 * np.sum(np.abs(self.weights - other.weights)) * self.spacing)


def probability_density(psi: WaveFunction, which: str = 'Q') -> ProbabilityDensity:
    """prob^Q_ψ 或 prob^P_ψ"""
    if which == 'Q':
        amps, rep, kind = psi.position_amplitudes(), Rep.POSITION, DensityKind.POSITION
    elif which == 'P':
        amps, rep, kind = psi.momentum_amplitudes(), Rep.MOMENTUM, DensityKind.MOMENTUM
    else:
        raise ParameterError(f"which must be 'Q' or 'P', got {which!r}")
    return ProbabilityDensity.normalized(psi.grid.coords(rep), np.abs(amps) ** 2, kind)


def stddev(psi: WaveFunction, which: str = 'Q') -> float:
    density = probability_density(psi, which)
    rep = Rep.POSITION if which == 'Q' else Rep.MOMENTUM
    mass = boundary_mass(density.weights, density.spacing, psi.grid)
    if mass > UNTRUSTED_MASS:
        warnings.warn(f"Delta({which}) untrusted: {mass:.3g} {rep.value} mass near the grid boundary",
                      UntrustedMomentWarning, stacklevel=2)
    return density.std()


@dataclass(frozen=True)
class WidthReport:
    epsilon: float
    width: float
    interval: tuple[float, float]
    covered: float


def overall_width(d: ProbabilityDensity, epsilon: float) -> WidthReport:
    """
    W_ε：機率 ≥ 1-ε 的最短區間長度。
    只掃描對齊格點的區間 (每個格點代表寬 h 的 cell)，結果帶 ±2h 的網格容許誤差。
    """
    if not 0 < epsilon < 1:
        raise ParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    h = d.spacing
    cumulative = np.concatenate(([0.0], np.cumsum(d.weights) * h))
    target = 1.0 - epsilon - 1e-12
    # 對每個起點 i 找最小的終點 j 使得 cumulative[j] - cumulative[i] >= target
    ends = np.searchsorted(cumulative, cumulative[:-1] + target, side='left')
    valid = ends <= len(d.weights)
    starts = np.flatnonzero(valid)
    counts = ends[valid] - starts
    best = int(np.argmin(counts))
    i, m = int(starts[best]), int(counts[best])
    lo = float(d.coords[i] - h / 2)
    return WidthReport(
        epsilon=epsilon,
        width=m * h,
        interval=(lo, lo + m * h),
        covered=float(cumulative[i + m] - cumulative[i]),
    )


def check_preparation_ur(psi: WaveFunction, label: str = '') -> Report:
    hbar = psi.grid.hbar
    delta_q = stddev(psi, 'Q')
    delta_p = stddev(psi, 'P')
    report = Report(name='preparation-ur', quantities={
        'delta_q': delta_q,
        'delta_p': delta_p,
        'product': delta_q * delta_p,
        'bound': hbar / 2,
        # 反過來看：ΔQ 固定時 ΔP 至少要多大
        'implied_delta_p_bound': hbar / (2 * delta_q) if delta_q > 0 else math.inf,
    })
    report.check('prep-variance', delta_q * delta_p, hbar / 2, tol=1e-9, label=label)
    return report


def width_bounds(hbar: float, eps1: float, eps2: float) -> tuple[float, float]:
    """(2πħ(1-ε1-ε2)², 2πħ(√((1-ε1)(1-ε2)) - √(ε1ε2))²)"""
    plain = 2 * math.pi * hbar * max(0.0, 1 - eps1 - eps2) ** 2
    refined = 2 * math.pi * hbar * (math.sqrt((1 - eps1) * (1 - eps2)) - math.sqrt(eps1 * eps2)) ** 2
    return plain, refined


def check_overall_width_ur(psi: WaveFunction, eps1: float, eps2: float, label: str = '') -> Report:
    for eps in (eps1, eps2):
        if not 0 < eps < 0.5:
            raise ParameterError(f"epsilon must lie in (0, 1/2), got {eps}")
    grid = psi.grid
    width_q = overall_width(probability_density(psi, 'Q'), eps1)
    width_p = overall_width(probability_density(psi, 'P'), eps2)
    product = width_q.width * width_p.width
    plain, refined = width_bounds(grid.hbar, eps1, eps2)
    # 每個寬度都有 ±2 格的容許誤差
    tol = (width_q.width + 2 * grid.dx) * (width_p.width + 2 * grid.dp) - product

    report = Report(name='overall-width-ur', quantities={
        'eps1': eps1,
        'eps2': eps2,
        'width_q': width_q.width,
        'width_p': width_p.width,
        'interval_q': list(width_q.interval),
        'interval_p': list(width_p.interval),
        'product': product,
        'bound': plain,
        'refined_bound': refined,
    })
    report.check('prep-width', product, plain, tol=tol, label=label)
    report.check('prep-width-refined', product, refined, tol=tol, label=label)
    return report


def target_spreads(grid: GridSpec, delta_q: float, delta_p: float) -> WaveFunction:
    """
    回傳 ΔQ = δq、ΔP = δp 的 η_{a,b}：
      a = 1/(4δq²)，b = √(a·δp²/ħ² - a²)
    """
    hbar = grid.hbar
    if not (delta_q > 0 and delta_p > 0):
        raise ParameterError("target spreads must be positive")
    if delta_q * delta_p < hbar / 2 * (1 - 1e-12):
        raise UncertaintyViolationError(
            f"no state has Delta(Q)*Delta(P) = {delta_q * delta_p:g} < hbar/2 = {hbar / 2:g}")
    a = 1.0 / (4 * delta_q ** 2)
    b = math.sqrt(max(0.0, a * delta_p ** 2 / hbar ** 2 - a ** 2))
    return gaussian(grid, a, b)
