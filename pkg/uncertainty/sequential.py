# uncertainty/sequential.py
"""
標準模型的位置儀器 (先做近似位置量測，再做銳利動量量測)：

  (K_q ψ)(x) = √λ Ψ_p(λ(q - x)) ψ(x)

第一個邊際是 Q_μ，第二個邊際是受擾動的 P_ν，聯合分佈就是 T = |φ⟩⟨φ| 的協變相空間觀測量，
φ(y) = √λ · conj(Ψ_p(-λy))。
"""
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import fft as sp_fft

from uncertainty.covariant import (
    CovariantObservable,
    PhaseSpaceDensity,
    SmearingMeasure,
    gt_from_T,
    husimi,
    inaccuracy_measures,
    smear,
)
from uncertainty.exceptions import ConditioningError, ParameterError, ProbeValidityError
from uncertainty.grid import GridSpec, WaveFunction, evaluate_at, parity_indices
from uncertainty.reports import Report, Series
from uncertainty.states import pure_density
from uncertainty.stats import DensityKind, ProbabilityDensity, probability_density

COMPLETENESS_TOL = 1e-6
MARGINAL_TOL = 1e-6
HUSIMI_TOL = 1e-5
# 單一格點上的機率超過這個值就視為尖峰探針
MAX_BIN_WEIGHT = 0.25
CONDITIONING_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class SequentialInstrument:
    probe: WaveFunction
    coupling: float
    kvals: np.ndarray
    bin_edges: tuple[int, ...]

    @property
    def grid(self) -> GridSpec:
        return self.probe.grid

    @cached_property
    def kraus_rows(self) -> np.ndarray:
        """K[i, j] = √λ Ψ_p(λ(q_i - x_j))，第 i 列是 K_{q_i} 的對角線"""
        n = self.grid.n_points
        i, j = np.indices((n, n))
        return self.kvals[(i - j + n // 2) % n]

    @property
    def completeness(self) -> float:
        """Σ_q K_q*K_q dq 的 (常數) 對角元素"""
        return float(np.sum(np.abs(self.kvals) ** 2) * self.grid.dx)

    @cached_property
    def mu(self) -> SmearingMeasure:
        """μ(t) = λ|Ψ_p(λt)|²"""
        return SmearingMeasure.from_density(
            ProbabilityDensity.normalized(self.grid.x, np.abs(self.kvals) ** 2))

    @cached_property
    def nu(self) -> SmearingMeasure:
        """ν(s) = (1/λ)|Ψ̂_p(-s/λ)|²"""
        scaled = probability_density(WaveFunction.from_samples(self.grid, self.kvals), 'P')
        flipped = scaled.weights[parity_indices(self.grid)]
        return SmearingMeasure.from_density(ProbabilityDensity.normalized(self.grid.p, flipped))

    def davies_window(self) -> WaveFunction:
        """φ(y) = √λ conj(Ψ_p(-λy))"""
        values = np.conj(self.kvals[parity_indices(self.grid)])
        return WaveFunction.from_samples(self.grid, values, label=f"davies(lambda={self.coupling:g})")

    def davies_observable(self) -> CovariantObservable:
        return gt_from_T(pure_density(self.davies_window()))


def bin_cells(grid: GridSpec, cells_per_bin: int = 1) -> tuple[int, ...]:
    """把網格切成每 cells_per_bin 個 cell 一組的結果區間 (索引邊界)"""
    if cells_per_bin < 1:
        raise ParameterError("cells_per_bin must be positive")
    edges = list(range(0, grid.n_points, cells_per_bin))
    return tuple(edges + [grid.n_points])


def build_instrument(probe: WaveFunction, coupling: float, bin_edges: tuple[int, ...] | None = None) -> SequentialInstrument:
    grid = probe.grid
    parity_indices(grid)
    if not coupling > 0:
        raise ParameterError(f"coupling lambda must be positive, got {coupling}")
    edges = tuple(int(e) for e in (bin_edges if bin_edges is not None else bin_cells(grid)))
    if edges[0] != 0 or edges[-1] != grid.n_points or any(b <= a for a, b in zip(edges, edges[1:])):
        raise ParameterError("bin edges must increase strictly from 0 to n_points")

    points = coupling * grid.x
    inside = (points >= grid.x[0]) & (points <= grid.x[-1])
    kvals = np.zeros(grid.n_points, dtype=complex)
    kvals[inside] = math.sqrt(coupling) * evaluate_at(probe, points[inside])
    peak = float(np.max(np.abs(kvals)) ** 2 * grid.dx)
    if peak > MAX_BIN_WEIGHT:
        raise ProbeValidityError(f"probe puts {peak:.3g} of its weight on a single grid cell")
    instrument = SequentialInstrument(probe=probe, coupling=float(coupling), kvals=kvals, bin_edges=edges)
    if abs(instrument.completeness - 1.0) > COMPLETENESS_TOL:
        raise ProbeValidityError(f"Kraus family is incomplete: sum K*K dq = {instrument.completeness:.9g}")
    kvals.setflags(write=False)
    return instrument


def outcome_density(instrument: SequentialInstrument, psi: WaveFunction) -> ProbabilityDensity:
    """q 的結果密度 ‖K_q ψ‖²"""
    amps = psi.position_amplitudes()
    weights = np.abs(instrument.kraus_rows) ** 2 @ (np.abs(amps) ** 2) * instrument.grid.dx
    return ProbabilityDensity.normalized(instrument.grid.x, weights, DensityKind.POSITION)


def bin_probabilities(instrument: SequentialInstrument, psi: WaveFunction) -> np.ndarray:
    density = outcome_density(instrument, psi)
    cells = density.weights * density.spacing
    return np.add.reduceat(cells, np.asarray(instrument.bin_edges[:-1]))


def posterior_state(instrument: SequentialInstrument, psi: WaveFunction, q: float) -> tuple[WaveFunction, float]:
    """K_q ψ 正規化後的狀態，以及結果密度在 q 的值"""
    grid = instrument.grid
    i = int(round((q - grid.x_min) / grid.dx))
    if not 0 <= i < grid.n_points or abs(grid.x[i] - q) > 1e-9 * grid.dx + 1e-12:
        raise ParameterError(f"outcome {q:g} is not a grid point")
    unnormalized = instrument.kraus_rows[i] * psi.position_amplitudes()
    prob = float(np.sum(np.abs(unnormalized) ** 2) * grid.dx)
    if prob <= CONDITIONING_TOL:
        raise ConditioningError(f"outcome {q:g} has probability density {prob:.3g}")
    return WaveFunction.from_samples(grid, unnormalized, label=f"posterior(q={q:g})"), prob


def sequential_joint(instrument: SequentialInstrument, psi: WaveFunction) -> PhaseSpaceDensity:
    """p(q, p) = |(F K_q ψ)(p)|²：每一列做一次 FFT"""
    grid = instrument.grid
    rows = instrument.kraus_rows * psi.position_amplitudes()[None, :]
    spectra = sp_fft.fftshift(sp_fft.fft(rows, axis=1), axes=1) * grid.dx
    weights = np.abs(spectra) ** 2 / (2 * math.pi * grid.hbar)
    return PhaseSpaceDensity(q_coords=grid.x, p_coords=grid.p, weights=weights)


def disturbance_report(instrument: SequentialInstrument, psi: WaveFunction, eps1: float = 0.05,
                       eps2: float = 0.05, label: str = '') -> Report:
    """
    位置量測的不準度 × 動量的擾動：
    μ 同時是 M1 相對 Q 的誤差，ν 是 M2 (量測後的動量) 相對 P 的擾動。
    """
    grid = instrument.grid
    joint = sequential_joint(instrument, psi)
    prior_q = probability_density(psi, 'Q')
    prior_p = probability_density(psi, 'P')
    expected_q = smear(prior_q, instrument.mu)
    expected_p = smear(prior_p, instrument.nu)
    post_p = joint.p_marginal()

    G = instrument.davies_observable()
    measures = inaccuracy_measures(G, eps1, eps2)
    m = measures.quantities
    covariant_tv = joint.total_variation(husimi(psi, G))

    report = Report(name='sequential', quantities={
        'coupling': instrument.coupling,
        'completeness': instrument.completeness,
        'variance_mu': instrument.mu.variance,
        'variance_nu': instrument.nu.variance,
        'prior_delta_p': prior_p.std(),
        'posterior_delta_p': post_p.std(),
        'marginal_tv_q': joint.q_marginal().total_variation(expected_q),
        'marginal_tv_p': post_p.total_variation(expected_p),
        'husimi_tv': covariant_tv,
        'standard_error_product': m['standard_error_q'] * m['standard_error_p'],
        'distance_product': m['distance_q'] * m['distance_p'],
        'error_bar_product': m['error_bar_q'] * m['error_bar_p'],
    })
    report.check('kraus-completeness', instrument.completeness, 1.0, relation='==', tol=COMPLETENESS_TOL,
                 label=label)
    report.check('sequential-marginal-q', report.quantities['marginal_tv_q'], MARGINAL_TOL, relation='<=',
                 label=label)
    report.check('sequential-marginal-p', report.quantities['marginal_tv_p'], MARGINAL_TOL, relation='<=',
                 label=label)
    report.check('sequential-husimi', covariant_tv, HUSIMI_TOL, relation='<=', label=label)

    # 同一組不等式，換成準確度 × 擾動的讀法
    for bound_check in measures.checks:
        tag = {'standard-error': 'disturbance-standard-error', 'distance': 'disturbance-distance',
               'error-bar': 'disturbance-error-bar'}.get(bound_check.tag)
        if tag:
            report.check(tag, bound_check.lhs, bound_check.rhs, tol=bound_check.tol, label=label)

    report.add_series('momentum', Series(
        columns=['p', 'prior', 'posterior'],
        rows=list(zip(grid.p.tolist(), prior_p.weights.tolist(), post_p.weights.tolist())),
        tag='sequential-marginal-p',
        description='prior and non-selective post-measurement momentum densities',
    ))
    return report


def coupling_sweep(probe: WaveFunction, couplings) -> list[tuple[float, float, float, float]]:
    """(λ, Var μ, Var ν, 乘積)：λ 越大位置越準、動量擾動越大"""
    rows = []
    for lam in couplings:
        instrument = build_instrument(probe, float(lam))
        var_mu, var_nu = instrument.mu.variance, instrument.nu.variance
        rows.append((float(lam), var_mu, var_nu, var_mu * var_nu))
    return rows
