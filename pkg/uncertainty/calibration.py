# uncertainty/calibration.py
"""
校準誤差棒 W_{ε,δ}、單調扭曲 (warp) 後的非協變觀測量，
以及一般觀測量的診斷量 (推測中的 noise / resolution 關係、Werner 距離下界)。

觀測量一律以「通道」表示：輸入 WaveFunction，輸出某一個座標上的 ProbabilityDensity。
"""
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from uncertainty.covariant import CovariantObservable
from uncertainty.exceptions import CoverageError, GridMismatchError, ParameterError, ResolutionError
from uncertainty.grid import GridSpec, Rep, WaveFunction, weyl_shift
from uncertainty.reports import Report
from uncertainty.states import MIN_BOX_BINS
from uncertainty.stats import ProbabilityDensity, overall_width, width_bounds

Channel = Callable[[WaveFunction], ProbabilityDensity]

# 校準中心只取網格中央這個比例的範圍
CENTER_SPAN = 0.25
NONCOVARIANT_TV = 1e-3


@dataclass(frozen=True)
class CalibrationResult:
    quantity: str
    epsilon: float
    delta: float
    width: float
    box_bins: int
    centers: tuple[float, ...]
    widths: tuple[float, ...]


def _center_offsets(n_points: int, n_centers: int) -> np.ndarray:
    """以網格中央為原點、±n/4 格內等距取樣的整數位移"""
    span = int(CENTER_SPAN * n_points)
    if n_centers == 1:
        return np.zeros(1, dtype=int)
    return np.unique(np.round(np.linspace(-span, span, n_centers)).astype(int))


def _symmetric_width(weights: np.ndarray, h: float, center: int, epsilon: float) -> float:
    """以格點 center 為中心、質量 ≥ 1-ε 的最短對稱區間長度 (2r+1)h"""
    n = len(weights)
    cumulative = np.concatenate(([0.0], np.cumsum(weights) * h))
    target = 1.0 - epsilon - 1e-12
    for r in range(n):
        lo, hi = center - r, center + r + 1
        if lo < 0 or hi > n:
            raise CoverageError(f"no interval centered at bin {center} reaches confidence {1 - epsilon:g} "
                                f"inside the window")
        if cumulative[hi] - cumulative[lo] >= target:
            return (2 * r + 1) * h
    raise CoverageError("confidence not reached")


def error_bar_calibrate(channel: Channel, grid: GridSpec, epsilon: float, delta: float,
                        quantity: str = 'Q', n_centers: int = 9) -> CalibrationResult:
    """
    W_{ε,δ}：把寬 δ 的箱形狀態放在一排中心 x 上，
    找出最小的 w 使每個輸出分佈在 J_{x;w} 內的質量 ≥ 1-ε。
    quantity='P' 時箱形狀態建在動量表示。
    """
    if not 0 < epsilon < 1:
        raise ParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    if quantity not in ('Q', 'P'):
        raise ParameterError(f"quantity must be 'Q' or 'P', got {quantity!r}")
    rep = Rep.POSITION if quantity == 'Q' else Rep.MOMENTUM
    h = grid.spacing(rep)
    if delta < MIN_BOX_BINS * h:
        raise ResolutionError(f"delta {delta:g} is below {MIN_BOX_BINS} grid spacings ({MIN_BOX_BINS * h:g})")
    n = grid.n_points
    # 奇數格的箱形，讓中心剛好落在格點上
    k = max(2, int(round((delta / h - 1) / 2)))
    coords = grid.coords(rep)

    centers, widths = [], []
    for offset in _center_offsets(n, n_centers):
        c = n // 2 + int(offset)
        if c - k < 0 or c + k >= n:
            raise CoverageError("box state does not fit inside the window")
        values = np.zeros(n, dtype=complex)
        values[c - k:c + k + 1] = 1.0
        box_state = WaveFunction.from_samples(grid, values, rep=rep, label=f"box@{coords[c]:g}")
        out = channel(box_state)
        if len(out.weights) != n or abs(out.spacing - h) > 1e-9 * h:
            raise GridMismatchError("channel output must live on the input grid")
        centers.append(float(coords[c]))
        widths.append(_symmetric_width(out.weights, h, c, epsilon))

    return CalibrationResult(
        quantity=quantity,
        epsilon=epsilon,
        delta=delta,
        width=max(widths),
        box_bins=2 * k + 1,
        centers=tuple(centers),
        widths=tuple(widths),
    )


@dataclass(frozen=True, eq=False)
class MonotoneMap:
    """
    嚴格遞增的表格函數 γ，表格外以斜率 1 延伸 (γ(x) - x 有界)。
    """
    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.array(self.xs, dtype=float)
        ys = np.array(self.ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or len(xs) < 2:
            raise ParameterError("monotone map needs matching 1-D tables with at least two points")
        if np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) <= 0):
            raise ParameterError("monotone map tables must be strictly increasing")
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, 'xs', xs)
        object.__setattr__(self, 'ys', ys)

    @classmethod
    def from_function(cls, f: Callable[[np.ndarray], np.ndarray], coords) -> 'MonotoneMap':
        xs = np.asarray(coords, dtype=float)
        return cls(xs=xs, ys=f(xs))

    @classmethod
    def identity(cls, coords) -> 'MonotoneMap':
        xs = np.asarray(coords, dtype=float)
        return cls(xs=xs, ys=xs.copy())

    @staticmethod
    def _extend(values, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        out = np.interp(values, src, dst)
        out = np.where(values < src[0], values + (dst[0] - src[0]), out)
        return np.where(values > src[-1], values + (dst[-1] - src[-1]), out)

    def apply(self, values) -> np.ndarray:
        return self._extend(values, self.xs, self.ys)

    def inverse(self, values) -> np.ndarray:
        return self._extend(values, self.ys, self.xs)

    def max_shift(self) -> float:
        """sup |γ(x) - x|"""
        return float(np.max(np.abs(self.ys - self.xs)))

    def is_linear(self, tol: float = 1e-9) -> bool:
        slope, intercept = np.polyfit(self.xs, self.ys, 1)
        residual = np.max(np.abs(self.ys - (slope * self.xs + intercept)))
        return bool(residual <= tol * max(1.0, float(np.max(np.abs(self.ys)))))


def pushforward(density: ProbabilityDensity, gamma: MonotoneMap) -> ProbabilityDensity:
    """
    分佈 ∘ γ^{-1}：在 cell 邊界上扭曲累積分佈函數，再差分回同一個網格。
    """
    h = density.spacing
    edges = np.concatenate((density.coords - h / 2, [density.coords[-1] + h / 2]))
    cdf = np.concatenate(([0.0], np.cumsum(density.weights) * h))
    warped_cdf = np.interp(gamma.inverse(edges), edges, cdf)
    return ProbabilityDensity.normalized(density.coords, np.diff(warped_cdf) / h, density.kind)


def warp_observable(G: CovariantObservable, gamma_q: MonotoneMap, gamma_p: MonotoneMap, psi: WaveFunction,
                    epsilon: float = 0.05, delta_q: float | None = None, delta_p: float | None = None,
                    shift_q: float = 2.0, label: str = '') -> Report:
    """
    M_i^γ = G^T_i ∘ γ_i^{-1}。
    檢查扭曲後仍有有限的校準誤差棒，且 γ 非線性時輸出不再滿足平移協變。
    """
    grid = G.grid
    delta_q = delta_q if delta_q is not None else MIN_BOX_BINS * grid.dx
    delta_p = delta_p if delta_p is not None else MIN_BOX_BINS * grid.dp

    def warped_q(state: WaveFunction) -> ProbabilityDensity:
        return pushforward(G.q_channel(state), gamma_q)

    def warped_p(state: WaveFunction) -> ProbabilityDensity:
        return pushforward(G.p_channel(state), gamma_p)

    plain_q = error_bar_calibrate(G.q_channel, grid, epsilon, delta_q, 'Q')
    plain_p = error_bar_calibrate(G.p_channel, grid, epsilon, delta_p, 'P')
    warp_q = error_bar_calibrate(warped_q, grid, epsilon, delta_q, 'Q')
    warp_p = error_bar_calibrate(warped_p, grid, epsilon, delta_p, 'P')

    dist_q, dist_p = warped_q(psi), warped_p(psi)
    report = Report(name='warp-observable', quantities={
        'mean_q': dist_q.mean(),
        'mean_p': dist_p.mean(),
        'variance_q': dist_q.variance(),
        'variance_p': dist_p.variance(),
        'error_bar_q': plain_q.width,
        'error_bar_p': plain_p.width,
        'warped_error_bar_q': warp_q.width,
        'warped_error_bar_p': warp_p.width,
        'max_shift_q': gamma_q.max_shift(),
        'max_shift_p': gamma_p.max_shift(),
    })
    # γ 把 J_{x;w} 映到 J_{x;w+2·sup|γ-id|} 之內
    report.check('warp-error-bar', abs(warp_q.width - plain_q.width), 2 * gamma_q.max_shift() + 2 * grid.dx,
                  relation='<=', label=f"{label}:Q" if label else 'Q')
    report.check('warp-error-bar', abs(warp_p.width - plain_p.width), 2 * gamma_p.max_shift() + 2 * grid.dp,
                  relation='<=', label=f"{label}:P" if label else 'P')

    shift_bins = int(round(shift_q / grid.dx))
    moved = warped_q(weyl_shift(psi, shift_bins * grid.dx, 0.0))
    rolled = np.roll(dist_q.weights, shift_bins)
    covariance_tv = float(0.5 * np.sum(np.abs(moved.weights - rolled)) * grid.dx)
    report.quantities['covariance_tv_q'] = covariance_tv
    if not gamma_q.is_linear():
        report.check('warp-noncovariant', covariance_tv, NONCOVARIANT_TV, label=label)
    return report


def _moment_tables(mu: ProbabilityDensity, gamma: MonotoneMap, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """f_k(x) = ∫ γ(x+t)^k μ(dt)，k = 1, 2"""
    values = gamma.apply(centers[:, None] + mu.coords[None, :])
    h = mu.spacing
    first = values @ mu.weights * h
    second = values ** 2 @ mu.weights * h
    return first, second


def _intrinsic_noise(mu: ProbabilityDensity, gamma: MonotoneMap, centers: np.ndarray) -> float:
    """‖E[2] - E[1]²‖ 對 M = γ∘Q_μ 是乘法算子，取網格上的 sup"""
    first, second = _moment_tables(mu, gamma, centers)
    return float(np.max(second - first ** 2))


def _resolution(mu: ProbabilityDensity, gamma: MonotoneMap, epsilon: float, n_centers: int) -> float:
    """各中心 x 的銳利輸入經過 M 後的 W_ε，取最大值"""
    widths = []
    for offset in _center_offsets(len(mu.coords), n_centers):
        # μ 集中在 0 附近，位移 ±n/4 格不會把質量繞過邊界
        moved = ProbabilityDensity.normalized(mu.coords, np.roll(mu.weights, int(offset)), mu.kind)
        widths.append(overall_width(pushforward(moved, gamma), epsilon).width)
    return max(widths)


def conjecture_diagnostics(G: CovariantObservable, gamma_q: MonotoneMap | None = None,
                           gamma_p: MonotoneMap | None = None, eps1: float = 0.05, eps2: float = 0.05,
                           n_centers: int = 9) -> Report:
    """
    對 M_i = γ_i ∘ G^T_i 計算 intrinsic noise 乘積與 resolution 乘積，
    noise 乘積同時和 ħ/2、ħ²/4 兩個候選下界比較。只記錄，不做 BoundCheck。
    """
    grid = G.grid
    hbar = grid.hbar
    gamma_q = gamma_q or MonotoneMap.identity(grid.x)
    gamma_p = gamma_p or MonotoneMap.identity(grid.p)
    lo, hi = grid.safe_window()
    inner_x = grid.x[(grid.x >= lo) & (grid.x <= hi)]
    p_lo, p_hi = grid.p[grid.boundary_bins()], grid.p[-grid.boundary_bins() - 1]
    inner_p = grid.p[(grid.p >= p_lo) & (grid.p <= p_hi)]

    noise_q = _intrinsic_noise(G.mu_T.density, gamma_q, inner_x)
    noise_p = _intrinsic_noise(G.nu_T.density, gamma_p, inner_p)
    res_q = _resolution(G.mu_T.density, gamma_q, eps1, n_centers)
    res_p = _resolution(G.nu_T.density, gamma_p, eps2, n_centers)
    width_bound, _ = width_bounds(hbar, eps1, eps2)
    noise_product = noise_q * noise_p
    return Report(name='conjecture-diagnostics', quantities={
        'noise_q': noise_q,
        'noise_p': noise_p,
        'noise_product': noise_product,
        'noise_bound_hbar_half': hbar / 2,
        'noise_bound_hbar_sq_quarter': hbar ** 2 / 4,
        'noise_holds_hbar_half': noise_product >= hbar / 2,
        'noise_holds_hbar_sq_quarter': noise_product >= hbar ** 2 / 4 - 1e-9,
        'resolution_q': res_q,
        'resolution_p': res_p,
        'resolution_product': res_q * res_p,
        'resolution_bound': width_bound,
        'resolution_holds': res_q * res_p >= width_bound,
    })


@dataclass(frozen=True)
class WernerEstimate:
    value: float
    state_index: int
    function: str


def werner_distance_lower_bound(channel_a: Channel, channel_b: Channel, states: list[WaveFunction],
                                shifts, scales) -> WernerEstimate:
    """
    d(E1, E2) 的下界：在給定狀態與 1-Lipschitz 函數族
    {|x - t|, clip(x - t, -s, s)} 上取 |∫h d(p1 - p2)| 的最大值。
    """
    if not states:
        raise ParameterError("at least one state is required")
    shifts = np.atleast_1d(np.asarray(shifts, dtype=float))
    scales = np.atleast_1d(np.asarray(scales, dtype=float))
    if np.any(scales <= 0):
        raise ParameterError("clip scales must be positive")

    best = WernerEstimate(value=-math.inf, state_index=-1, function='')
    for index, psi in enumerate(states):
        pa, pb = channel_a(psi), channel_b(psi)
        if not pa.same_grid(pb):
            raise GridMismatchError("both channels must report on the same grid")
        diff = (pa.weights - pb.weights) * pa.spacing
        x = pa.coords
        offsets = x[None, :] - shifts[:, None]
        abs_values = np.abs(np.abs(offsets) @ diff)
        k = int(np.argmax(abs_values))
        if abs_values[k] > best.value:
            best = WernerEstimate(float(abs_values[k]), index, f"|x - {shifts[k]:g}|")
        for s in scales:
            clip_values = np.abs(np.clip(offsets, -s, s) @ diff)
            k = int(np.argmax(clip_values))
            if clip_values[k] > best.value:
                best = WernerEstimate(float(clip_values[k]), index, f"clip(x - {shifts[k]:g}, +-{s:g})")
    return best
