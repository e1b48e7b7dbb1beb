# uncertainty/concentration.py
"""
Landau–Pollak 集中問題：Q(X)P(Y)Q(X) 的頻譜、最佳局域態、面積 vs 信心水準曲線，
以及 Q、P 的週期函數何時對易。

矩陣一律用 counting measure (plain matrix)：投影算符就是 0/1 特徵值的么正共軛，
需要位置表示的核時用 OperatorMatrix.kernel() = matrix / dx。
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sp_fft
from scipy import linalg

from uncertainty.exceptions import (
    CommensurabilityError,
    CostError,
    DegenerateSetError,
    NumericalError,
    ParameterError,
    RangeError,
)
from uncertainty.grid import GridSpec, WaveFunction, momentum_matrix
from uncertainty.states import MAX_MATRIX_POINTS

Interval = tuple[float, float]

# 週期函數的判定門檻：< COMMUTE_TOL 視為對易、> NONCOMMUTE_TOL 視為不對易，中間是無法判定區
COMMUTE_TOL = 1e-6
NONCOMMUTE_TOL = 0.05
MIN_PERIODS = 8
# min_area 二分搜尋的面積範圍 (單位 2πħ)
AREA_BRACKET = (0.1, 50.0)
_SNAP = 1e-9


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    grid: GridSpec
    matrix: np.ndarray
    hermitian: bool = True

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        n = self.grid.n_points
        if m.shape != (n, n):
            raise ParameterError(f"operator must be {n}x{n}, got {m.shape}")
        if self.hermitian and np.max(np.abs(m - m.conj().T)) >= 1e-10:
            raise ParameterError("operator flagged hermitian is not Hermitian")
        m.setflags(write=False)
        object.__setattr__(self, 'matrix', m)

    def kernel(self) -> np.ndarray:
        """位置表示的積分核"""
        return self.matrix / self.grid.dx

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix) if self.hermitian else np.linalg.eigvals(self.matrix)

    def __matmul__(self, other: 'OperatorMatrix') -> 'OperatorMatrix':
        return OperatorMatrix(grid=self.grid, matrix=self.matrix @ other.matrix, hermitian=False)


def _as_intervals(intervals) -> list[Interval]:
    if len(intervals) == 2 and all(isinstance(v, (int, float)) for v in intervals):
        intervals = [intervals]
    return [(float(lo), float(hi)) for lo, hi in intervals]


def snap_indices(coords: np.ndarray, spacing: float, intervals) -> np.ndarray:
    """落在任一半開區間 [lo, hi) 的格點索引"""
    mask = np.zeros(len(coords), dtype=bool)
    for lo, hi in _as_intervals(intervals):
        if hi <= lo:
            raise ParameterError(f"interval [{lo:g}, {hi:g}) is empty")
        mask |= (coords >= lo - _SNAP * spacing) & (coords < hi - _SNAP * spacing)
    return np.flatnonzero(mask)


def _check_inside(coords: np.ndarray, spacing: float, intervals, what: str) -> None:
    lo_edge, hi_edge = coords[0] - spacing / 2, coords[-1] + spacing / 2
    for lo, hi in _as_intervals(intervals):
        if lo < lo_edge - _SNAP or hi > hi_edge + _SNAP:
            raise ParameterError(f"{what} interval [{lo:g}, {hi:g}) leaves the grid window")


def position_bins(grid: GridSpec, X) -> np.ndarray:
    _check_inside(grid.x, grid.dx, X, 'position')
    idx = snap_indices(grid.x, grid.dx, X)
    if len(idx) == 0:
        raise DegenerateSetError(f"position set {X} contains no grid bins")
    return idx


def momentum_bins(grid: GridSpec, Y) -> np.ndarray:
    _check_inside(grid.p, grid.dp, Y, 'momentum')
    idx = snap_indices(grid.p, grid.dp, Y)
    if len(idx) == 0:
        raise DegenerateSetError(f"momentum set {Y} contains no grid bins")
    return idx


def projector_position(grid: GridSpec, X) -> OperatorMatrix:
    """Q(X)：吸附後格點上的 0/1 對角矩陣"""
    diag = np.zeros(grid.n_points)
    diag[position_bins(grid, X)] = 1.0
    return OperatorMatrix(grid=grid, matrix=np.diag(diag).astype(complex))


def projector_momentum(grid: GridSpec, Y) -> OperatorMatrix:
    """P(Y) = F* 1_Y F，位置核是帶限 (sinc 型) 核"""
    f = momentum_matrix(grid)
    idx = momentum_bins(grid, Y)
    block = f[idx, :]
    matrix = block.conj().T @ block
    return OperatorMatrix(grid=grid, matrix=(matrix + matrix.conj().T) / 2)


@dataclass(frozen=True)
class ConcentrationResult:
    a0: float
    trace: float
    area: float


def _check_cost(grid: GridSpec) -> None:
    if grid.n_points > MAX_MATRIX_POINTS:
        raise CostError(f"concentration problems are limited to n_points <= {MAX_MATRIX_POINTS}")


def largest_a0(grid: GridSpec, X, Y) -> ConcentrationResult:
    """
    a0 = Q(X)P(Y)Q(X) 的最大特徵值。
    QPQ 在 X 上的區塊是 F[Y,X]* F[Y,X]，所以 a0 就是 F[Y,X] 最大奇異值的平方，
    trace 是它的 Frobenius 範數平方 (= 吸附後的 |X||Y| / 2πħ)。
    """
    _check_cost(grid)
    jx = position_bins(grid, X)
    ky = momentum_bins(grid, Y)
    block = momentum_matrix(grid)[np.ix_(ky, jx)]
    try:
        singular = linalg.svdvals(block)
    except (linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"singular value solver failed: {e}") from e
    a0 = float(min(1.0, singular[0] ** 2))
    return ConcentrationResult(
        a0=a0,
        trace=float(np.sum(np.abs(block) ** 2)),
        area=len(jx) * grid.dx * len(ky) * grid.dp,
    )


@dataclass(frozen=True, eq=False)
class LocalizationResult:
    value: float
    state: WaveFunction
    a0: float
    prob_q: float
    prob_p: float


def optimal_localization(grid: GridSpec, X, Y, check_tol: float = 1e-6) -> LocalizationResult:
    """
    Q(X)+P(Y) 的最大特徵對：value = 1 + √a0 < 2，特徵向量是最佳局域態。
    與 largest_a0 的結果互相驗證，差超過 check_tol 時丟 NumericalError。
    """
    _check_cost(grid)
    q = projector_position(grid, X).matrix
    p = projector_momentum(grid, Y).matrix
    try:
        values, vectors = linalg.eigh(q + p)
    except (linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"eigensolver failed: {e}") from e
    value = float(values[-1])
    vector = vectors[:, -1]
    # 固定全域相位：最大分量取正實數
    k = int(np.argmax(np.abs(vector)))
    vector = vector * (abs(vector[k]) / vector[k])

    a0 = largest_a0(grid, X, Y).a0
    if abs(value - 1 - math.sqrt(a0)) > check_tol:
        raise NumericalError(f"Q+P eigenvalue {value:.12g} disagrees with 1 + sqrt(a0) = {1 + math.sqrt(a0):.12g}")
    prob_q = float(np.real(np.vdot(vector, q @ vector)))
    prob_p = float(np.real(np.vdot(vector, p @ vector)))
    state = WaveFunction.from_samples(grid, vector, label='optimal-localization')
    return LocalizationResult(value=value, state=state, a0=a0, prob_q=prob_q, prob_p=prob_p)


def symmetric_sets(grid: GridSpec, bins: int) -> tuple[Interval, Interval]:
    """
    以 0 為中心、位置與動量各 bins 個格點的 (X, Y)。
    bins 增加時集合是巢狀的，所以 a0 對 bins 單調。
    """
    if not grid.is_symmetric:
        raise ParameterError("symmetric concentration sets need a grid centered at 0")
    if bins < 1 or bins > grid.n_points * 0.9:
        raise RangeError(f"{bins} bins do not fit inside the grid")
    start = -(bins // 2)
    X = ((start - 0.5) * grid.dx, (start + bins - 0.5) * grid.dx)
    Y = ((start - 0.5) * grid.dp, (start + bins - 0.5) * grid.dp)
    return X, Y


def _bins_for_area(grid: GridSpec, area: float) -> int:
    return max(1, int(round(math.sqrt(area / (grid.dx * grid.dp)))))


def area_sweep(grid: GridSpec, areas) -> list[tuple[float, float, float, float]]:
    """每個目標面積 → (吸附後面積, a0, 1+√a0, trace)"""
    rows = []
    for area in areas:
        X, Y = symmetric_sets(grid, _bins_for_area(grid, area))
        result = largest_a0(grid, X, Y)
        rows.append((result.area, result.a0, 1 + math.sqrt(result.a0), result.trace))
    return rows


@dataclass(frozen=True)
class MinAreaResult:
    area: float
    bins: int
    a0: float
    bound: float


def min_area_for_confidence(grid: GridSpec, eps1: float, eps2: float) -> MinAreaResult:
    """
    讓 √a0 ≥ 1-ε1-ε2 的最小面積 |X||Y|。
    在巢狀對稱集合的格點數上做二分搜尋，範圍 [0.1, 50]·2πħ。
    """
    if not (eps1 > 0 and eps2 > 0 and eps1 + eps2 < 1):
        raise ParameterError("min_area needs eps1, eps2 > 0 with eps1 + eps2 < 1")
    _check_cost(grid)
    target = 1 - eps1 - eps2
    unit = 2 * math.pi * grid.hbar
    lo = _bins_for_area(grid, AREA_BRACKET[0] * unit)
    hi = _bins_for_area(grid, AREA_BRACKET[1] * unit)

    def confident(bins: int) -> bool:
        return math.sqrt(largest_a0(grid, *symmetric_sets(grid, bins)).a0) >= target

    if confident(lo) or not confident(hi):
        raise RangeError(f"confidence {target:g} is not bracketed by areas {AREA_BRACKET} x 2 pi hbar")
    # 不變量：confident(hi) 為真、confident(lo) 為假
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if confident(mid):
            hi = mid
        else:
            lo = mid
    result = largest_a0(grid, *symmetric_sets(grid, hi))
    return MinAreaResult(area=result.area, bins=hi, a0=result.a0, bound=unit * target ** 2)


@dataclass(frozen=True)
class PeriodicSetFunction:
    """週期為 period 的集合指示函數；intervals 是 [0, period) 內互不重疊的子區間"""
    period: float
    intervals: tuple[Interval, ...] = field(default=())

    def __post_init__(self):
        if not self.period > 0:
            raise ParameterError(f"period must be positive, got {self.period}")
        intervals = tuple(sorted((float(lo), float(hi)) for lo, hi in (self.intervals or [(0.0, self.period / 2)])))
        for lo, hi in intervals:
            if not 0 <= lo < hi <= self.period * (1 + 1e-12):
                raise ParameterError(f"interval [{lo:g}, {hi:g}) is not inside one period cell")
        for (_, hi1), (lo2, _) in zip(intervals, intervals[1:]):
            if lo2 < hi1:
                raise ParameterError("periodic set intervals overlap")
        object.__setattr__(self, 'intervals', intervals)

    @classmethod
    def half_period(cls, period: float) -> 'PeriodicSetFunction':
        return cls(period=period, intervals=((0.0, period / 2),))

    def indicator(self, coords: np.ndarray, spacing: float, n_points: int) -> np.ndarray:
        """在可公度的網格上取值；網格與週期不可公度時丟 CommensurabilityError"""
        steps = self.period / spacing
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise CommensurabilityError(f"period {self.period:g} is not a multiple of the spacing {spacing:g}")
        steps = int(round(steps))
        if n_points % steps or n_points // steps < MIN_PERIODS:
            raise CommensurabilityError(
                f"grid of {n_points} points must hold at least {MIN_PERIODS} whole periods of {steps} bins")
        offsets = coords / spacing
        if np.max(np.abs(offsets - np.round(offsets))) > 1e-9:
            raise CommensurabilityError("grid points are not integer multiples of the spacing")
        phase = np.mod(np.round(offsets).astype(int), steps) * spacing
        mask = np.zeros(len(coords), dtype=bool)
        for lo, hi in self.intervals:
            mask |= (phase >= lo - _SNAP * spacing) & (phase < hi - _SNAP * spacing)
        return mask.astype(float)


@dataclass(frozen=True)
class CommutatorResult:
    norm: float
    commute_predicted: bool
    ratio: float

    @property
    def verdict(self) -> str:
        if self.norm < COMMUTE_TOL:
            return 'commute'
        if self.norm > NONCOMMUTE_TOL:
            return 'noncommute'
        return 'inconclusive'


def periodic_commutator(grid: GridSpec, g: PeriodicSetFunction, h: PeriodicSetFunction) -> CommutatorResult:
    """
    [Q^g(X), P^h(Y)] 的 max-norm (最大元素絕對值)。
    P^h 在位置表示是循環矩陣 c[(j - l) mod n]，c 是 h 的逆 DFT。
    預測：2πħ/(ab) 為正整數時對易。
    """
    n = grid.n_points
    g_values = g.indicator(grid.x, grid.dx, n)
    h_values = h.indicator(grid.p, grid.dp, n)
    # c[m] = (1/n) Σ_k h_k e^{2πi (k - n/2) m / n}
    column = sp_fft.ifft(sp_fft.ifftshift(h_values))
    offsets = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    commutator = (g_values[:, None] - g_values[None, :]) * column[offsets]
    ratio = 2 * math.pi * grid.hbar / (g.period * h.period)
    predicted = ratio >= 1 - 1e-9 and abs(ratio - round(ratio)) <= 1e-9 * max(1.0, ratio)
    return CommutatorResult(norm=float(np.max(np.abs(commutator))), commute_predicted=predicted, ratio=ratio)
