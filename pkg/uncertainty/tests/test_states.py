import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from uncertainty.exceptions import CostError, ParameterError, ResolutionError
from uncertainty.grid import GridSpec
from uncertainty.states import (
    DensityMatrixT,
    box,
    gaussian,
    mixed_density,
    parity_conjugate,
    pure_density,
    random_superposition,
)
from uncertainty.stats import probability_density, stddev

GRID = GridSpec.centered(512, 51.2)


class GaussianTests(SimpleTestCase):
    def test_minimal_state_moments(self):
        psi = gaussian(GRID, 0.5)
        self.assertAlmostEqual(stddev(psi, 'Q'), math.sqrt(0.5), delta=1e-9)
        self.assertAlmostEqual(stddev(psi, 'P'), math.sqrt(0.5), delta=1e-9)

    def test_chirp_raises_momentum_spread(self):
        psi = gaussian(GRID, 0.5, b=1.0)
        self.assertAlmostEqual(stddev(psi, 'P') ** 2, 2.5, delta=1e-8)

    def test_boost_and_shift(self):
        psi = gaussian(GRID, 0.5, c=3.0, d=-2.0)
        self.assertAlmostEqual(probability_density(psi, 'Q').mean(), -2.0, delta=1e-6)
        self.assertAlmostEqual(probability_density(psi, 'P').mean(), 3.0, delta=1e-6)

    def test_hbar_scales_momentum(self):
        grid = GridSpec.centered(512, 51.2, hbar=0.5)
        psi = gaussian(grid, 0.5)
        self.assertAlmostEqual(stddev(psi, 'P'), 0.5 * math.sqrt(0.5), delta=1e-9)

    def test_nonpositive_width_is_rejected(self):
        with self.assertRaises(ParameterError):
            gaussian(GRID, 0.0)

    @settings(max_examples=25, deadline=None)
    @given(a=st.floats(min_value=0.2, max_value=2.0), b=st.floats(min_value=-1.0, max_value=1.0))
    def test_moment_contract(self, a, b):
        psi = gaussian(GRID, a, b)
        dq, dp = stddev(psi, 'Q'), stddev(psi, 'P')
        self.assertAlmostEqual(dq ** 2, 1 / (4 * a), delta=1e-8)
        self.assertAlmostEqual(dp ** 2, (a ** 2 + b ** 2) / a, delta=1e-7)
        self.assertGreaterEqual(dq * dp, 0.5 - 1e-9)


class BoxTests(SimpleTestCase):
    def test_uniform_variance_on_grid(self):
        # 離散均勻分佈：(w² - dx²)/12
        psi = box(GRID, 0.0, 1.0)
        self.assertAlmostEqual(probability_density(psi, 'Q').variance(), (1.0 - GRID.dx ** 2) / 12, delta=1e-12)

    def test_all_mass_inside_the_box(self):
        psi = box(GRID, 0.0, 1.0)
        self.assertAlmostEqual(probability_density(psi, 'Q').mass(-0.5, 0.5), 1.0, delta=1e-12)

    def test_momentum_density_has_no_zeros(self):
        # 奇數個格點的箱形，離散 sinc 在網格上沒有零點
        psi = box(GRID, 0.0, 1.1)
        self.assertGreater(float(np.min(probability_density(psi, 'P').weights)), 0.0)

    def test_narrow_box_is_rejected(self):
        with self.assertRaises(ResolutionError):
            box(GRID, 0.0, 0.3)


class RandomSuperpositionTests(SimpleTestCase):
    def test_same_seed_same_state(self):
        first = random_superposition(GRID, np.random.default_rng(7))
        second = random_superposition(GRID, np.random.default_rng(7))
        np.testing.assert_array_equal(first.amplitudes, second.amplitudes)

    def test_state_is_normalized(self):
        psi = random_superposition(GRID, np.random.default_rng(1), n_terms=3)
        self.assertAlmostEqual(psi.norm(), 1.0, places=10)


class DensityMatrixTests(SimpleTestCase):
    def test_pure_density_trace_and_spectrum(self):
        t = pure_density(gaussian(GRID, 0.5))
        self.assertAlmostEqual(float(np.trace(t.matrix).real) * GRID.dx, 1.0, delta=1e-8)
        spectrum = t.spectrum()
        self.assertAlmostEqual(spectrum[0], 1.0, delta=1e-8)
        self.assertLess(float(np.max(np.abs(spectrum[1:]))), 1e-8)
        self.assertEqual(t.rank(), 1)

    def test_parity_conjugate_of_even_state(self):
        t = pure_density(gaussian(GRID, 0.5))
        np.testing.assert_allclose(parity_conjugate(t).matrix, t.matrix, atol=1e-12)

    def test_mixture_rank_and_densities(self):
        states = [gaussian(GRID, 0.5, d=-2.0), gaussian(GRID, 0.5, d=2.0)]
        t = mixed_density([0.25, 0.75], states)
        self.assertEqual(t.rank(), 2)
        self.assertAlmostEqual(float(np.sum(t.position_density()) * GRID.dx), 1.0, delta=1e-9)
        self.assertAlmostEqual(float(np.sum(t.momentum_density()) * GRID.dp), 1.0, delta=1e-9)

    def test_mixture_weights_must_sum_to_one(self):
        with self.assertRaises(ParameterError):
            mixed_density([0.5, 0.6], [gaussian(GRID, 0.5), gaussian(GRID, 0.5, d=1.0)])

    def test_non_hermitian_matrix_is_rejected(self):
        m = np.zeros((64, 64), dtype=complex)
        grid = GridSpec.centered(64, 6.4)
        m[0, 0] = 1 / grid.dx
        m[0, 1] = 1.0
        with self.assertRaises(ParameterError):
            DensityMatrixT(grid=grid, matrix=m)

    def test_large_grid_is_too_costly(self):
        grid = GridSpec.centered(2048, 204.8)
        with self.assertRaises(CostError):
            DensityMatrixT(grid=grid, matrix=np.eye(2048) / (2048 * grid.dx))
