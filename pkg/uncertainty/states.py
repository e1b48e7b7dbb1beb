# uncertainty/states.py
"""參考狀態：高斯族 η_{a,b}、平移/推動後的最小不確定態、箱形 (狹縫) 狀態與密度矩陣。"""
import math
from dataclasses import dataclass

import numpy as np

from uncertainty.exceptions import CostError, ParameterError, ResolutionError
from uncertainty.grid import (
    GridSpec,
    Rep,
    WaveFunction,
    check_boundary,
    momentum_matrix,
    parity_indices,
)

# 密度矩陣一律稠密儲存，O(n³) 的特徵值分解必須維持在桌機規模
MAX_MATRIX_POINTS = 1024
MIN_BOX_BINS = 4
# 浮點誤差下的箱形邊界吸附容許值 (以 dx 為單位)
_SNAP = 1e-9


def gaussian(grid: GridSpec, a: float, b: float = 0.0, c: float = 0.0, d: float = 0.0) -> WaveFunction:
    """
    e^{icx}·η_{a,b}(x-d)，η_{a,b}(x) = (2a/π)^{1/4} e^{-(a+ib)x²}

    ΔQ² = 1/(4a)、ΔP² = ħ²(a²+b²)/a、⟨Q⟩ = d、⟨P⟩ = ħc。
    位置或動量任一側碰到網格邊界都會丟 AliasingError。
    """
    if not a > 0:
        raise ParameterError(f"gaussian width parameter a must be positive, got {a}")
    x = grid.x
    values = (2 * a / math.pi) ** 0.25 * np.exp(1j * c * x - (a + 1j * b) * (x - d) ** 2)
    psi = WaveFunction.from_samples(grid, values, label=f"gaussian(a={a:g},b={b:g},c={c:g},d={d:g})")
    check_boundary(psi, Rep.POSITION)
    check_boundary(psi, Rep.MOMENTUM)
    return psi


def box_indices(grid: GridSpec, center: float, width: float) -> np.ndarray:
    """落在 [center - w/2, center + w/2) 的格點索引"""
    x = grid.x
    lo, hi = center - width / 2, center + width / 2
    return np.flatnonzero((x >= lo - _SNAP * grid.dx) & (x < hi - _SNAP * grid.dx))


def box(grid: GridSpec, center: float, width: float) -> WaveFunction:
    """|ψ|² 在 (吸附到格點後的) 箱形區間上均勻、區間外為 0"""
    if width < MIN_BOX_BINS * grid.dx:
        raise ResolutionError(f"box width {width:g} is below {MIN_BOX_BINS}·dx = {MIN_BOX_BINS * grid.dx:g}")
    idx = box_indices(grid, center, width)
    if len(idx) < MIN_BOX_BINS:
        raise ResolutionError(f"box [{center - width / 2:g}, {center + width / 2:g}) covers only {len(idx)} bins")
    values = np.zeros(grid.n_points, dtype=complex)
    values[idx] = 1.0
    psi = WaveFunction.from_samples(grid, values, label=f"box(center={center:g},width={width:g})")
    # 動量側的尾巴本來就很長，只檢查位置邊界
    check_boundary(psi, Rep.POSITION)
    return psi


def random_superposition(grid: GridSpec, rng: np.random.Generator, n_terms: int = 5) -> WaveFunction:
    """
    隨機複係數的 n_terms 個高斯疊加 (平移、推動、啁啾皆隨機)，
    參數範圍依網格大小縮放，確保落在安全視窗內。
    """
    x = grid.x
    hbar = grid.hbar
    p_max = grid.p[-1]
    x_center = grid.x_min + grid.length / 2
    # σx ≤ 0.05·L 讓位置尾巴離開邊界區；σx ≥ 3·dx 讓動量尾巴離開動量邊界
    a_lo = 100.0 / grid.length ** 2
    a_hi = 1.0 / (36 * grid.dx ** 2)
    if not a_lo < a_hi:
        raise ParameterError("grid too small for random superpositions")
    total = np.zeros(grid.n_points, dtype=complex)
    for _ in range(n_terms):
        a = math.exp(rng.uniform(math.log(a_lo), math.log(a_hi)))
        b = rng.uniform(-0.5, 0.5) * a
        c = rng.uniform(-0.1, 0.1) * p_max / hbar
        d = x_center + rng.uniform(-0.1, 0.1) * grid.length
        weight = complex(rng.normal(), rng.normal())
        total += weight * (2 * a / math.pi) ** 0.25 * np.exp(1j * c * x - (a + 1j * b) * (x - d) ** 2)
    psi = WaveFunction.from_samples(grid, total, label='random-superposition')
    check_boundary(psi, Rep.POSITION)
    check_boundary(psi, Rep.MOMENTUM)
    return psi


@dataclass(frozen=True, eq=False)
class DensityMatrixT:
    """
    位置表示的密度算符核 T(x, x')。
    慣例：trace·dx = 1；當作 counting-measure 矩陣時是 matrix·dx。
    """
    grid: GridSpec
    matrix: np.ndarray

    def __post_init__(self):
        n = self.grid.n_points
        if n > MAX_MATRIX_POINTS:
            raise CostError(f"density matrices are limited to n_points <= {MAX_MATRIX_POINTS}, got {n}")
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (n, n):
            raise ParameterError(f"density matrix must be {n}x{n}, got {m.shape}")
        scale = max(1.0, float(np.max(np.abs(m))))
        if np.max(np.abs(m - m.conj().T)) > 1e-10 * scale:
            raise ParameterError("density matrix is not Hermitian")
        m = (m + m.conj().T) / 2
        m.setflags(write=False)
        object.__setattr__(self, 'matrix', m)
        trace = float(np.trace(m).real) * self.grid.dx
        if abs(trace - 1.0) > 1e-8:
            raise ParameterError(f"density matrix trace·dx = {trace:.12g}, expected 1")
        if self.spectrum().min() < -1e-10:
            raise ParameterError("density matrix has negative eigenvalues")

    def operator(self) -> np.ndarray:
        """counting-measure 矩陣 (trace = 1)"""
        return self.matrix * self.grid.dx

    def spectrum(self) -> np.ndarray:
        """由大到小的特徵值 (總和為 1)"""
        return np.linalg.eigvalsh(self.operator())[::-1]

    def eigenstates(self, tol: float = 1e-12) -> list[tuple[float, WaveFunction]]:
        """權重大於 tol 的 (權重, 純態) 分解"""
        values, vectors = np.linalg.eigh(self.operator())
        out = []
        for k in np.argsort(values)[::-1]:
            if values[k] <= tol:
                break
            out.append((float(values[k]), WaveFunction.from_samples(self.grid, vectors[:, k])))
        return out

    def rank(self, tol: float = 1e-10) -> int:
        return int(np.sum(self.spectrum() > tol))

    def position_density(self) -> np.ndarray:
        return np.clip(np.diag(self.matrix).real, 0.0, None)

    def momentum_density(self) -> np.ndarray:
        f = momentum_matrix(self.grid)
        diag = np.sum((f @ self.operator()) * f.conj(), axis=1).real
        return np.clip(diag, 0.0, None) / self.grid.dp


def pure_density(phi: WaveFunction) -> DensityMatrixT:
    """|φ⟩⟨φ|，縮放成 trace·dx = 1"""
    psi = phi.position_amplitudes()
    return DensityMatrixT(grid=phi.grid, matrix=np.outer(psi, psi.conj()))


def mixed_density(weights, states: list[WaveFunction]) -> DensityMatrixT:
    weights = np.asarray(weights, dtype=float)
    if len(weights) != len(states) or len(states) == 0:
        raise ParameterError("mixed_density needs one weight per state")
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise ParameterError("mixture weights must be nonnegative and sum to 1")
    grid = states[0].grid
    matrix = np.zeros((grid.n_points, grid.n_points), dtype=complex)
    for w, state in zip(weights, states):
        if state.grid != grid:
            raise ParameterError("all mixture components must share one grid")
        psi = state.position_amplitudes()
        matrix += w * np.outer(psi, psi.conj())
    return DensityMatrixT(grid=grid, matrix=matrix)


def parity_conjugate(t: DensityMatrixT) -> DensityMatrixT:
    """ΠTΠ*"""
    idx = parity_indices(t.grid)
    return DensityMatrixT(grid=t.grid, matrix=t.matrix[np.ix_(idx, idx)])
