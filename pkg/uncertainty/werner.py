# uncertainty/werner.py
"""
距離不確定關係常數 C 的數值搜尋：

  min over pure T = |η⟩⟨η|  of  ∫|q| dμ_T · ∫|p| dν_T / ħ

η 展開成前 basis_size 個諧振子本徵函數的實係數組合，用多起點的 Nelder-Mead 最小化。
"""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from scipy.optimize import minimize

from uncertainty.exceptions import ConvergenceWarning, ParameterError
from uncertainty.grid import GridSpec, WaveFunction, to_momentum
from uncertainty.reports import WERNER_C, Report

MIN_BASIS = 1
# 搜尋本身至少要有幾個激發態可以混入
SEARCH_MIN_BASIS = 4
MAX_BASIS = 20
# 搜尋結果應落在的範圍：下緣略低於已知常數，上緣是高斯值 1/π
C_BRACKET = (0.29, 0.3185)
SEARCH_POINTS = 1024
SIMPLEX_STEP = 0.1


def hermite_basis(grid: GridSpec, size: int) -> np.ndarray:
    """
    h_0 .. h_{size-1} 的位置取樣 (欄向量)，
    h_0 = (πħ)^{-1/4} e^{-x²/2ħ}，
    h_{k+1} = √(2/(k+1)) ξ h_k - √(k/(k+1)) h_{k-1}，ξ = x/√ħ
    """
    if not MIN_BASIS <= size <= MAX_BASIS:
        raise ParameterError(f"basis_size must lie in [{MIN_BASIS}, {MAX_BASIS}], got {size}")
    xi = grid.x / math.sqrt(grid.hbar)
    basis = np.zeros((grid.n_points, size))
    basis[:, 0] = (math.pi * grid.hbar) ** -0.25 * np.exp(-xi ** 2 / 2)
    if size > 1:
        basis[:, 1] = math.sqrt(2.0) * xi * basis[:, 0]
    for k in range(1, size - 1):
        basis[:, k + 1] = math.sqrt(2.0 / (k + 1)) * xi * basis[:, k] - math.sqrt(k / (k + 1)) * basis[:, k - 1]
    return basis


def absolute_moment_forms(grid: GridSpec, basis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    兩個二次型 A_x、A_p：對實係數 c，
    ∫|x||ψ|² = cᵀA_x c，∫|p||φ|² = cᵀA_p c
    """
    a_x = basis.T @ (np.abs(grid.x)[:, None] * basis) * grid.dx
    momentum = np.column_stack([
        to_momentum(WaveFunction.from_samples(grid, basis[:, k])).amplitudes for k in range(basis.shape[1])
    ])
    a_p = (momentum.conj().T @ (np.abs(grid.p)[:, None] * momentum)).real * grid.dp
    return (a_x + a_x.T) / 2, (a_p + a_p.T) / 2


def distance_product(c: np.ndarray, a_x: np.ndarray, a_p: np.ndarray, hbar: float) -> float:
    """對 c 的尺度不變：(cᵀA_x c)(cᵀA_p c) / (cᵀc)² / ħ"""
    norm = float(c @ c)
    if norm == 0:
        return math.inf
    return float((c @ a_x @ c) * (c @ a_p @ c)) / norm ** 2 / hbar


def ground_state_reference(hbar: float = 1.0) -> float:
    """只用基態 (basis 1) 算出的目標值，即高斯窗口的 1/π"""
    grid = GridSpec.balanced(SEARCH_POINTS, hbar)
    a_x, a_p = absolute_moment_forms(grid, hermite_basis(grid, 1))
    return distance_product(np.ones(1), a_x, a_p, hbar)


def _run_start(start: int, x0: np.ndarray, a_x: np.ndarray, a_p: np.ndarray, hbar: float,
               max_evals: int) -> tuple[int, float, np.ndarray, list[tuple[int, int, float, float]]]:
    history = []
    best = math.inf

    def objective(c):
        nonlocal best
        value = distance_product(c, a_x, a_p, hbar)
        best = min(best, value)
        history.append((start, len(history) + 1, value, best))
        return value

    simplex = np.vstack([x0] + [x0 + SIMPLEX_STEP * e for e in np.eye(len(x0))])
    result = minimize(objective, x0, method='Nelder-Mead', options={
        'maxfev': max_evals,
        'initial_simplex': simplex,
        'xatol': 1e-8,
        'fatol': 1e-12,
    })
    return start, float(result.fun), np.asarray(result.x, dtype=float), history


@dataclass(frozen=True, eq=False)
class WernerSearchResult:
    c_est: float
    state: WaveFunction
    coefficients: np.ndarray
    excited_mass: float
    evaluations: int
    history: list[tuple[int, int, float, float]] = field(repr=False)


def werner_constant_search(basis_size: int = 8, budget: int = 5000, starts: int = 4, seed: int = 0,
                           hbar: float = 1.0, jobs: int = 1) -> WernerSearchResult:
    """
    起點 0 為基態，其餘起點為隨機單位向量 (各自由 SeedSequence 分出的亂數流產生)。
    取目標值最小者，同值時取編號最小的起點。
    """
    if not SEARCH_MIN_BASIS <= basis_size <= MAX_BASIS:
        raise ParameterError(f"basis_size must lie in [{SEARCH_MIN_BASIS}, {MAX_BASIS}], got {basis_size}")
    if starts < 1:
        raise ParameterError("at least one start is required")
    if budget < starts * 2:
        raise ParameterError(f"budget {budget} is too small for {starts} starts")
    grid = GridSpec.balanced(SEARCH_POINTS, hbar)
    basis = hermite_basis(grid, basis_size)
    a_x, a_p = absolute_moment_forms(grid, basis)

    x0s = [np.eye(basis_size)[0]]
    for child in np.random.SeedSequence(seed).spawn(starts - 1):
        v = np.random.default_rng(child).normal(size=basis_size)
        x0s.append(v / np.linalg.norm(v))

    runs = Parallel(n_jobs=jobs)(
        delayed(_run_start)(k, x0, a_x, a_p, hbar, budget // starts) for k, x0 in enumerate(x0s)
    )
    runs = sorted(runs, key=lambda run: (run[1], run[0]))
    _, c_est, coefficients, _ = runs[0]
    coefficients = coefficients / np.linalg.norm(coefficients)
    if coefficients[0] < 0:
        coefficients = -coefficients
    history = [row for run in sorted(runs, key=lambda run: run[0]) for row in run[3]]

    if not C_BRACKET[0] <= c_est <= C_BRACKET[1]:
        warnings.warn(f"distance constant search ended at {c_est:.6g}, outside [{C_BRACKET[0]}, {C_BRACKET[1]}]",
                      ConvergenceWarning, stacklevel=2)
    state = WaveFunction.from_samples(grid, basis @ coefficients, label=f"werner-optimum(basis={basis_size})")
    return WernerSearchResult(
        c_est=c_est,
        state=state,
        coefficients=coefficients,
        excited_mass=float(1.0 - coefficients[0] ** 2),
        evaluations=len(history),
        history=history,
    )


def werner_report(result: WernerSearchResult, tol: float = 0.02, label: str = '') -> Report:
    report = Report(name='werner-constant', quantities={
        'c_est': result.c_est,
        'c_reference': WERNER_C,
        'gaussian_value': 1 / math.pi,
        'ground_state_value': ground_state_reference(result.state.grid.hbar),
        'excited_mass': result.excited_mass,
        'evaluations': result.evaluations,
        'coefficients': [float(c) for c in result.coefficients],
    })
    report.check('werner-constant', result.c_est, WERNER_C, relation='==', tol=tol * WERNER_C, label=label)
    report.check('werner-excited', result.excited_mass, 1e-3, label=label)
    return report
