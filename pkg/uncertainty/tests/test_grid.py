import math
import warnings

import numpy as np
from django.test import SimpleTestCase

from uncertainty.exceptions import AliasingError, AliasingWarning, GridSymmetryError, ParameterError
from uncertainty.grid import (
    GridSpec,
    Rep,
    WaveFunction,
    evaluate_at,
    momentum_matrix,
    parity,
    to_momentum,
    to_position,
    weyl_shift,
)
from uncertainty.states import gaussian, random_superposition
from uncertainty.stats import probability_density, stddev


class GridSpecTests(SimpleTestCase):
    def test_centered_grid_spacing(self):
        grid = GridSpec.centered(512, 51.2)
        self.assertAlmostEqual(grid.dx, 0.1)
        self.assertAlmostEqual(grid.dp, 2 * math.pi / 51.2)
        self.assertAlmostEqual(grid.x[0], -25.6)
        self.assertEqual(grid.p[256], 0.0)
        self.assertTrue(grid.is_symmetric)

    def test_balanced_grid_has_equal_spacings(self):
        grid = GridSpec.balanced(256, hbar=2.0)
        self.assertAlmostEqual(grid.dx, grid.dp)

    def test_refinement_keeps_spreads(self):
        # 同一個視窗、點數加倍，ΔQ 與 ΔP 幾乎不變
        coarse = GridSpec.centered(512, 51.2)
        fine = GridSpec.centered(1024, 51.2)
        for which in ('Q', 'P'):
            a = stddev(gaussian(coarse, 0.5, b=0.4, c=1.0, d=-0.5), which)
            b = stddev(gaussian(fine, 0.5, b=0.4, c=1.0, d=-0.5), which)
            self.assertLess(abs(a - b) / a, 1e-6, msg=which)

    def test_rejects_tiny_grid(self):
        with self.assertRaises(ParameterError):
            GridSpec(n_points=8, x_min=0.0, dx=0.1)

    def test_rejects_nonpositive_hbar(self):
        with self.assertRaises(ParameterError):
            GridSpec.centered(64, 6.4, hbar=0.0)

    def test_dict_round_trip(self):
        grid = GridSpec.centered(128, 12.8, hbar=0.5)
        self.assertEqual(GridSpec.from_dict(grid.to_dict()), grid)


class TransformTests(SimpleTestCase):
    def setUp(self):
        self.grid = GridSpec.centered(512, 51.2)

    def test_momentum_density_of_gaussian(self):
        # |φ(p)|² 是變異數 ħ²a 的常態分佈
        psi = gaussian(self.grid, 0.5)
        phi = to_momentum(psi)
        expected = np.exp(-self.grid.p ** 2 / (2 * 0.5)) / math.sqrt(2 * math.pi * 0.5)
        np.testing.assert_allclose(phi.density(), expected, atol=1e-10)

    def test_inverse_transform_restores_state(self):
        psi = gaussian(self.grid, 0.8, b=0.3, c=1.0, d=-1.5)
        back = to_position(to_momentum(psi))
        np.testing.assert_allclose(back.amplitudes, psi.amplitudes, atol=1e-12)

    def test_momentum_rep_amplitudes_are_unitary(self):
        psi = gaussian(self.grid, 0.5, c=2.0)
        self.assertAlmostEqual(to_momentum(psi).norm(), 1.0, places=12)

    def test_unnormalized_amplitudes_are_rejected(self):
        with self.assertRaises(ParameterError):
            WaveFunction(grid=self.grid, amplitudes=np.ones(512))

    def test_momentum_matrix_matches_fft(self):
        grid = GridSpec.centered(128, 12.8)
        psi = gaussian(grid, 0.8, c=1.0, d=0.5)
        F = momentum_matrix(grid)
        np.testing.assert_allclose(F.conj().T @ F, np.eye(128), atol=1e-10)
        np.testing.assert_allclose(F @ (psi.position_amplitudes() * math.sqrt(grid.dx)),
                                   psi.momentum_amplitudes() * math.sqrt(grid.dp), atol=1e-10)

    def test_evaluate_at_reproduces_samples(self):
        psi = gaussian(self.grid, 0.5, c=1.0)
        np.testing.assert_allclose(evaluate_at(psi, self.grid.x[200:220]), psi.amplitudes[200:220], atol=1e-10)

    def test_evaluate_at_between_points(self):
        psi = gaussian(self.grid, 0.5)
        value = evaluate_at(psi, [0.05])[0]
        self.assertAlmostEqual(value.real, (1 / math.pi) ** 0.25 * math.exp(-0.5 * 0.05 ** 2), places=9)


class WeylShiftTests(SimpleTestCase):
    def setUp(self):
        self.grid = GridSpec.centered(512, 51.2)

    def test_shift_moves_both_means(self):
        shifted = weyl_shift(gaussian(self.grid, 0.5), 2.0, 1.5)
        self.assertAlmostEqual(probability_density(shifted, 'Q').mean(), 2.0, delta=1e-6)
        self.assertAlmostEqual(probability_density(shifted, 'P').mean(), 1.5, delta=1e-6)

    def test_shift_keeps_momentum_representation(self):
        phi = to_momentum(gaussian(self.grid, 0.5))
        self.assertIs(weyl_shift(phi, 1.0, 0.0).rep, Rep.MOMENTUM)

    def test_shift_toward_boundary_warns(self):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter('always')
            weyl_shift(gaussian(self.grid, 0.5), 24.0, 0.0)
        self.assertTrue(any(issubclass(w.category, AliasingWarning) for w in caught))

    def test_wide_state_is_rejected(self):
        with self.assertRaises(AliasingError):
            gaussian(self.grid, 0.005)

    def test_composition_up_to_phase(self):
        # 兩次平移等於一次平移總量，只差一個整體相位
        dx, dp = self.grid.dx, self.grid.dp
        psi = random_superposition(self.grid, np.random.default_rng(11))
        q1, p1, q2, p2 = 10 * dx, 8 * dp, -4 * dx, 5 * dp
        twice = weyl_shift(weyl_shift(psi, q2, p2), q1, p1)
        once = weyl_shift(psi, q1 + q2, p1 + p2)
        self.assertAlmostEqual(abs(once.overlap(twice)), 1.0, delta=1e-9)

    def test_inverse_shift_restores_state(self):
        psi = random_superposition(self.grid, np.random.default_rng(12))
        q, p = 7 * self.grid.dx, -3 * self.grid.dp
        back = weyl_shift(weyl_shift(psi, q, p), -q, -p)
        np.testing.assert_allclose(back.amplitudes, psi.amplitudes, atol=1e-9)


class ParityTests(SimpleTestCase):
    def test_parity_flips_mean(self):
        grid = GridSpec.centered(256, 25.6)
        flipped = parity(gaussian(grid, 0.5, d=1.2))
        self.assertAlmostEqual(probability_density(flipped, 'Q').mean(), -1.2, delta=1e-9)

    def test_parity_is_an_involution(self):
        grid = GridSpec.centered(256, 25.6)
        psi = random_superposition(grid, np.random.default_rng(4))
        np.testing.assert_array_equal(parity(parity(psi)).amplitudes, psi.amplitudes)

    def test_parity_needs_symmetric_grid(self):
        grid = GridSpec(n_points=64, x_min=0.0, dx=0.1)
        psi = WaveFunction.from_samples(grid, np.exp(-(grid.x - 3.2) ** 2))
        with self.assertRaises(GridSymmetryError):
            parity(psi)
