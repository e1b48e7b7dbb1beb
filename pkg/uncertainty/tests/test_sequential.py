import math

import numpy as np
from django.test import SimpleTestCase

from uncertainty.exceptions import ConditioningError, GridSymmetryError, ParameterError, ProbeValidityError
from uncertainty.grid import GridSpec, WaveFunction
from uncertainty.sequential import (
    bin_cells,
    bin_probabilities,
    build_instrument,
    coupling_sweep,
    disturbance_report,
    outcome_density,
    posterior_state,
    sequential_joint,
)
from uncertainty.states import gaussian
from uncertainty.stats import probability_density

GRID = GridSpec.centered(512, 51.2)


class InstrumentTests(SimpleTestCase):
    def test_smearing_variances(self):
        probe = gaussian(GRID, 0.5)
        for lam, var_mu in ((1.0, 0.5), (2.0, 0.125)):
            instrument = build_instrument(probe, lam)
            self.assertAlmostEqual(instrument.mu.variance, var_mu, delta=1e-9)
            self.assertAlmostEqual(instrument.mu.variance * instrument.nu.variance, 0.25, delta=1e-8)

    def test_kraus_family_is_complete(self):
        instrument = build_instrument(gaussian(GRID, 0.5), 1.5)
        self.assertAlmostEqual(instrument.completeness, 1.0, delta=1e-9)

    def test_spiked_probe_is_rejected(self):
        spike = np.zeros(GRID.n_points)
        spike[GRID.n_points // 2] = 1.0
        with self.assertRaises(ProbeValidityError):
            build_instrument(WaveFunction.from_samples(GRID, spike), 1.0)

    def test_nonpositive_coupling(self):
        with self.assertRaises(ParameterError):
            build_instrument(gaussian(GRID, 0.5), 0.0)

    def test_asymmetric_grid(self):
        grid = GridSpec(n_points=512, x_min=-20.0, dx=0.1)
        with self.assertRaises(GridSymmetryError):
            build_instrument(gaussian(grid, 0.5), 1.0)


class OutcomeTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.psi = gaussian(GRID, 0.5)

    def test_bins_sum_to_one(self):
        instrument = build_instrument(gaussian(GRID, 0.5), 1.0, bin_cells(GRID, 8))
        bins = bin_probabilities(instrument, self.psi)
        self.assertEqual(len(bins), GRID.n_points // 8)
        self.assertAlmostEqual(float(np.sum(bins)), 1.0, delta=1e-9)

    def test_outcome_density_is_smeared_position(self):
        instrument = build_instrument(gaussian(GRID, 0.5), 1.0)
        density = outcome_density(instrument, self.psi)
        self.assertAlmostEqual(density.variance(), 0.5 + 0.5, delta=1e-8)

    def test_posterior_probability_matches_density(self):
        instrument = build_instrument(gaussian(GRID, 0.5), 1.0)
        _, prob = posterior_state(instrument, self.psi, 0.5)
        density = outcome_density(instrument, self.psi)
        index = int(round((0.5 - GRID.x_min) / GRID.dx))
        self.assertAlmostEqual(prob, density.weights[index], delta=1e-8)

    def test_narrow_probe_localizes(self):
        # 後驗位置分佈的精度相加：2 + 20
        instrument = build_instrument(gaussian(GRID, 5.0), 1.0)
        post, _ = posterior_state(instrument, self.psi, 0.5)
        density = probability_density(post, 'Q')
        self.assertAlmostEqual(density.std(), math.sqrt(1 / 22), delta=1e-4)
        self.assertAlmostEqual(density.mean(), 10 / 22, delta=1e-4)

    def test_wide_probe_barely_disturbs(self):
        instrument = build_instrument(gaussian(GRID, 0.03), 1.0)
        post, _ = posterior_state(instrument, self.psi, 0.0)
        self.assertGreater(abs(self.psi.overlap(post)) ** 2, 0.999)

    def test_improbable_outcome(self):
        instrument = build_instrument(gaussian(GRID, 5.0), 1.0)
        with self.assertRaises(ConditioningError):
            posterior_state(instrument, self.psi, 20.0)

    def test_outcome_off_grid(self):
        instrument = build_instrument(gaussian(GRID, 0.5), 1.0)
        with self.assertRaises(ParameterError):
            posterior_state(instrument, self.psi, 0.05)


class DisturbanceTests(SimpleTestCase):
    def test_joint_marginals(self):
        # Q 邊際是 μ 抹開的位置，P 邊際是 ν 抹開的動量
        instrument = build_instrument(gaussian(GRID, 0.5), 1.0)
        joint = sequential_joint(instrument, gaussian(GRID, 0.5))
        self.assertAlmostEqual(joint.total(), 1.0, delta=1e-8)
        self.assertAlmostEqual(joint.q_marginal().variance(), 1.0, delta=1e-6)
        self.assertAlmostEqual(joint.p_marginal().variance(), 1.0, delta=1e-4)

    def test_minimal_probe_report(self):
        instrument = build_instrument(gaussian(GRID, 0.5), 1.0)
        report = disturbance_report(instrument, gaussian(GRID, 0.5))
        self.assertTrue(report.passed, msg=[c.to_dict() for c in report.failed_checks()])
        self.assertAlmostEqual(report.quantities['standard_error_product'], 0.5, delta=1e-6)
        self.assertGreater(report.quantities['posterior_delta_p'], report.quantities['prior_delta_p'])
        self.assertIn('momentum', report.series)

    def test_coupling_sweep_trades_accuracy_for_disturbance(self):
        rows = coupling_sweep(gaussian(GRID, 0.5), [0.5, 1.0, 2.0])
        var_mu = [row[1] for row in rows]
        var_nu = [row[2] for row in rows]
        self.assertTrue(all(b < a for a, b in zip(var_mu, var_mu[1:])))
        self.assertTrue(all(b > a for a, b in zip(var_nu, var_nu[1:])))
        for row in rows:
            self.assertAlmostEqual(row[3], 0.25, delta=1e-8)
