# uncertainty/grid.py
"""
離散化的一維 Hilbert 空間：位置網格、動量網格、位置↔動量的么正轉換、Weyl 平移與宇稱。

慣例：
  x_j = x_min + j·dx,            j = 0..n-1
  p_k = (k - n//2)·dp,           dp = 2πħ / (n·dx)
  φ(p_k) = dx/√(2πħ) · e^{-i p_k x_min/ħ} · fftshift(fft(ψ))[k]
對外輸出的動量網格一律是單調遞增、以 0 為中心。
"""
import enum
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import fft as sp_fft

from uncertainty.exceptions import (
    AliasingError,
    AliasingWarning,
    GridSymmetryError,
    ParameterError,
    RepresentationError,
)

MIN_POINTS = 16
NORM_TOL = 1e-9
# 邊界規則：網格兩側各 5% 的區域內質量不得超過 BOUNDARY_MASS_TOL
BOUNDARY_FRACTION = 0.05
BOUNDARY_MASS_TOL = 1e-10


class Rep(enum.Enum):
    POSITION = 'position'
    MOMENTUM = 'momentum'


@dataclass(frozen=True)
class GridSpec:
    n_points: int
    x_min: float
    dx: float
    hbar: float = 1.0

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < MIN_POINTS:
            raise ParameterError(f"n_points must be an integer >= {MIN_POINTS}, got {self.n_points}")
        if not self.dx > 0:
            raise ParameterError(f"dx must be positive, got {self.dx}")
        if not self.hbar > 0:
            raise ParameterError(f"hbar must be positive, got {self.hbar}")
        object.__setattr__(self, 'n_points', int(self.n_points))
        object.__setattr__(self, 'x_min', float(self.x_min))
        object.__setattr__(self, 'dx', float(self.dx))
        object.__setattr__(self, 'hbar', float(self.hbar))

    @classmethod
    def centered(cls, n_points: int, length: float, hbar: float = 1.0) -> 'GridSpec':
        """以 0 為中心的網格：x_min = -length/2，dx = length/n"""
        if not length > 0:
            raise ParameterError(f"grid length must be positive, got {length}")
        dx = length / n_points
        return cls(n_points=n_points, x_min=-n_points * dx / 2, dx=dx, hbar=hbar)

    @classmethod
    def balanced(cls, n_points: int, hbar: float = 1.0) -> 'GridSpec':
        """dx = dp = √(2πħ/n) 的置中網格，位置與動量視窗一樣大"""
        dx = math.sqrt(2 * math.pi * hbar / n_points)
        return cls(n_points=n_points, x_min=-n_points * dx / 2, dx=dx, hbar=hbar)

    @property
    def dp(self) -> float:
        return 2 * math.pi * self.hbar / (self.n_points * self.dx)

    @property
    def length(self) -> float:
        return self.n_points * self.dx

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_points)

    @property
    def p(self) -> np.ndarray:
        return (np.arange(self.n_points) - self.n_points // 2) * self.dp

    @property
    def is_symmetric(self) -> bool:
        return (self.n_points % 2 == 0
                and abs(self.x_min + self.length / 2) <= 1e-12 * self.length)

    def coords(self, rep: Rep) -> np.ndarray:
        return self.x if rep is Rep.POSITION else self.p

    def spacing(self, rep: Rep) -> float:
        return self.dx if rep is Rep.POSITION else self.dp

    def safe_window(self) -> tuple[float, float]:
        """扣掉兩側 5% 邊界後的位置範圍"""
        margin = BOUNDARY_FRACTION * self.length
        return self.x_min + margin, self.x_min + self.length - margin

    def boundary_bins(self) -> int:
        return max(1, math.ceil(BOUNDARY_FRACTION * self.n_points))

    def to_dict(self) -> dict:
        return {'n_points': self.n_points, 'x_min': self.x_min, 'dx': self.dx, 'hbar': self.hbar}

    @classmethod
    def from_dict(cls, data: dict) -> 'GridSpec':
        return cls(n_points=data['n_points'], x_min=data['x_min'], dx=data['dx'], hbar=data.get('hbar', 1.0))


@dataclass(frozen=True, eq=False)
class WaveFunction:
    grid: GridSpec
    amplitudes: np.ndarray
    rep: Rep = Rep.POSITION
    label: str = field(default='', compare=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (self.grid.n_points,):
            raise ParameterError(f"amplitudes must have shape ({self.grid.n_points},), got {amps.shape}")
        if not np.all(np.isfinite(amps)):
            raise ParameterError("amplitudes contain non-finite values")
        amps.setflags(write=False)
        object.__setattr__(self, 'amplitudes', amps)
        norm = self.norm()
        if abs(norm - 1.0) > NORM_TOL:
            raise ParameterError(f"wave function is not normalized (norm² = {norm:.12g})")

    @classmethod
    def from_samples(cls, grid: GridSpec, values, rep: Rep = Rep.POSITION, label: str = '') -> 'WaveFunction':
        """把任意樣本值正規化成狀態"""
        values = np.asarray(values, dtype=complex)
        norm = np.sum(np.abs(values) ** 2) * grid.spacing(rep)
        if not norm > 0:
            raise ParameterError("cannot normalize a zero vector")
        return cls(grid=grid, amplitudes=values / math.sqrt(norm), rep=rep, label=label)

    @property
    def coords(self) -> np.ndarray:
        return self.grid.coords(self.rep)

    @property
    def spacing(self) -> float:
        return self.grid.spacing(self.rep)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.spacing)

    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def position_amplitudes(self) -> np.ndarray:
        return to_position(self).amplitudes if self.rep is Rep.MOMENTUM else self.amplitudes

    def momentum_amplitudes(self) -> np.ndarray:
        return to_momentum(self).amplitudes if self.rep is Rep.POSITION else self.amplitudes

    def overlap(self, other: 'WaveFunction') -> complex:
        """⟨self|other⟩，兩者都換到位置表示後計算"""
        if other.grid != self.grid:
            raise ParameterError("overlap requires identical grids")
        return complex(np.vdot(self.position_amplitudes(), other.position_amplitudes()) * self.grid.dx)

    def with_amplitudes(self, amplitudes, rep: Rep | None = None) -> 'WaveFunction':
        return WaveFunction(grid=self.grid, amplitudes=amplitudes, rep=rep or self.rep, label=self.label)


def boundary_mass(weights: np.ndarray, spacing: float, grid: GridSpec) -> float:
    """網格兩側各 5% 區域內的總質量"""
    k = grid.boundary_bins()
    return float((np.sum(weights[:k]) + np.sum(weights[-k:])) * spacing)


def check_boundary(psi: WaveFunction, rep: Rep = Rep.POSITION, tol: float = BOUNDARY_MASS_TOL) -> float:
    """邊界質量超過 tol 時丟 AliasingError，否則回傳邊界質量"""
    amps = psi.position_amplitudes() if rep is Rep.POSITION else psi.momentum_amplitudes()
    mass = boundary_mass(np.abs(amps) ** 2, psi.grid.spacing(rep), psi.grid)
    if mass > tol:
        raise AliasingError(f"{rep.value} mass {mass:.3g} within 5% of the grid boundary exceeds {tol:.1g}")
    return mass


def _phase(grid: GridSpec) -> np.ndarray:
    return np.exp(-1j * grid.p * grid.x_min / grid.hbar)


def to_momentum(psi: WaveFunction) -> WaveFunction:
    if psi.rep is not Rep.POSITION:
        raise RepresentationError("to_momentum expects a position-representation state")
    grid = psi.grid
    phi = grid.dx / math.sqrt(2 * math.pi * grid.hbar) * _phase(grid) * sp_fft.fftshift(sp_fft.fft(psi.amplitudes))
    return WaveFunction(grid=grid, amplitudes=phi, rep=Rep.MOMENTUM, label=psi.label)


def to_position(phi: WaveFunction) -> WaveFunction:
    if phi.rep is not Rep.MOMENTUM:
        raise RepresentationError("to_position expects a momentum-representation state")
    grid = phi.grid
    psi = sp_fft.ifft(sp_fft.ifftshift(phi.amplitudes / _phase(grid))) * math.sqrt(2 * math.pi * grid.hbar) / grid.dx
    return WaveFunction(grid=grid, amplitudes=psi, rep=Rep.POSITION, label=phi.label)


def transform_axis(values: np.ndarray, grid: GridSpec, axis: int, inverse: bool = False) -> np.ndarray:
    """多維陣列沿單一軸做同樣慣例的位置↔動量轉換 (Arthurs–Kelly 張量用)"""
    shape = [1] * values.ndim
    shape[axis] = grid.n_points
    phase = _phase(grid).reshape(shape)
    if not inverse:
        out = sp_fft.fftshift(sp_fft.fft(values, axis=axis), axes=axis)
        return out * phase * (grid.dx / math.sqrt(2 * math.pi * grid.hbar))
    out = sp_fft.ifft(sp_fft.ifftshift(values / phase, axes=axis), axis=axis)
    return out * (math.sqrt(2 * math.pi * grid.hbar) / grid.dx)


@lru_cache(maxsize=8)
def momentum_matrix(grid: GridSpec) -> np.ndarray:
    """
    么正 DFT 矩陣 F (counting measure)：
    F[k, j] = e^{-i p_k x_j / ħ} / √n，滿足 φ·√dp = F (ψ·√dx)。
    """
    matrix = np.exp(-1j * np.outer(grid.p, grid.x) / grid.hbar) / math.sqrt(grid.n_points)
    matrix.setflags(write=False)
    return matrix


def evaluate_at(psi: WaveFunction, points) -> np.ndarray:
    """
    以帶限 (三角) 內插在任意位置求 ψ(x)。
    在網格點上會精確重現原本的振幅。
    """
    grid = psi.grid
    points = np.atleast_1d(np.asarray(points, dtype=float))
    kernel = np.exp(1j * np.outer(points, grid.p) / grid.hbar)
    return kernel @ psi.momentum_amplitudes() * (grid.dp / math.sqrt(2 * math.pi * grid.hbar))


def weyl_shift(psi: WaveFunction, q: float, p: float) -> WaveFunction:
    """
    W(q,p) = e^{iqp/2ħ} e^{-iqP/ħ} e^{ipQ/ħ}：位置平移 +q、動量平移 +p。
    結果太靠近網格邊界時發出 AliasingWarning (不中斷)。
    """
    grid = psi.grid
    hbar = grid.hbar
    boosted = psi.position_amplitudes() * np.exp(1j * p * grid.x / hbar)
    phi = to_momentum(WaveFunction(grid=grid, amplitudes=boosted, label=psi.label)).amplitudes
    phi = phi * np.exp(-1j * q * grid.p / hbar) * np.exp(1j * q * p / (2 * hbar))
    shifted = to_position(WaveFunction(grid=grid, amplitudes=phi, rep=Rep.MOMENTUM, label=psi.label))

    for rep in (Rep.POSITION, Rep.MOMENTUM):
        amps = shifted.amplitudes if rep is Rep.POSITION else phi
        mass = boundary_mass(np.abs(amps) ** 2, grid.spacing(rep), grid)
        if mass > BOUNDARY_MASS_TOL:
            warnings.warn(f"weyl_shift({q:g}, {p:g}) leaves {mass:.3g} {rep.value} mass near the grid boundary",
                          AliasingWarning, stacklevel=2)
    return shifted if psi.rep is Rep.POSITION else to_momentum(shifted)


def parity_indices(grid: GridSpec) -> np.ndarray:
    """x_j → -x_j 對應的索引 (置中網格上 j → -j mod n)"""
    if not grid.is_symmetric:
        raise GridSymmetryError("parity requires an even grid centered at 0 (x_min = -n·dx/2)")
    return (-np.arange(grid.n_points)) % grid.n_points


def parity(psi: WaveFunction) -> WaveFunction:
    # 動量網格同樣是 k → -k mod n，所以兩種表示都用同一個索引
    return psi.with_amplitudes(psi.amplitudes[parity_indices(psi.grid)])
