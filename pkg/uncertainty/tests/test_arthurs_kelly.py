import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from uncertainty.arthurs_kelly import (
    AKParams,
    TriState,
    ak_analytic_variances,
    ak_covariance,
    ak_evolve,
    ak_gamma_study,
    ak_joint_distribution,
    ak_simulate,
)
from uncertainty.exceptions import CommensurabilityError, CostError, ParameterError
from uncertainty.grid import GridSpec
from uncertainty.states import gaussian

AXIS = GridSpec.balanced(64)
PROBE = gaussian(AXIS, 0.5)


class AnalyticTests(SimpleTestCase):
    def test_reference_point(self):
        q = ak_analytic_variances(AKParams(lam=1.0, kappa=1.0), PROBE, PROBE).quantities
        self.assertAlmostEqual(q['var_mu'], 0.625, delta=1e-9)
        self.assertAlmostEqual(q['var_nu'], 0.625, delta=1e-9)
        self.assertAlmostEqual(q['q_term'], 0.125, delta=1e-9)
        self.assertAlmostEqual(q['d_term'], 0.265625, delta=1e-9)
        self.assertAlmostEqual(q['x'], 4.0, delta=1e-8)
        self.assertAlmostEqual(q['product'], 0.390625, delta=1e-9)

    def test_reference_point_passes(self):
        report = ak_analytic_variances(AKParams(lam=1.0, kappa=1.0), PROBE, PROBE)
        self.assertTrue(report.passed, msg=[c.to_dict() for c in report.failed_checks()])
        self.assertIn('ak-d-term', [c.tag for c in report.checks])

    def test_undisturbed_momentum_at_minus_one(self):
        report = ak_analytic_variances(AKParams(lam=1.0, kappa=1.0, gamma=-1.0), PROBE, PROBE)
        self.assertAlmostEqual(report.quantities['undisturbed_product'], 0.25, delta=1e-9)
        self.assertTrue(report.passed)

    @settings(max_examples=30, deadline=None)
    @given(lam=st.floats(min_value=0.3, max_value=3.0), kappa=st.floats(min_value=0.3, max_value=3.0),
           gamma=st.floats(min_value=-2.0, max_value=2.0))
    def test_decomposition(self, lam, kappa, gamma):
        q = ak_analytic_variances(AKParams(lam=lam, kappa=kappa, gamma=gamma), PROBE, PROBE).quantities
        self.assertAlmostEqual(q['q_term'] + q['d_term'], q['product'], delta=1e-9 * max(1.0, q['product']))
        self.assertGreaterEqual(q['product'], 0.25 - 1e-9)

    def test_probe_must_be_centered(self):
        with self.assertRaises(ParameterError):
            ak_analytic_variances(AKParams(lam=1.0, kappa=1.0), gaussian(AXIS, 0.5, d=1.0), PROBE)

    def test_readout_needs_positive_couplings(self):
        with self.assertRaises(ParameterError):
            ak_analytic_variances(AKParams(lam=0.0, kappa=1.0), PROBE, PROBE)
        with self.assertRaises(ParameterError):
            AKParams(lam=-1.0, kappa=1.0)


class GammaStudyTests(SimpleTestCase):
    def test_sweep_series(self):
        report = ak_gamma_study([-1.0, 0.0, 1.0], AKParams(lam=1.0, kappa=1.0), PROBE, PROBE)
        rows = report.series['gamma-sweep'].rows
        self.assertEqual([row[0] for row in rows], [-1.0, 0.0, 1.0])
        self.assertTrue(report.passed)

    def test_gamma_out_of_range(self):
        with self.assertRaises(ParameterError):
            ak_gamma_study([3.0], AKParams(lam=1.0, kappa=1.0), PROBE, PROBE)


class SimulationTests(SimpleTestCase):
    def test_zero_coupling_is_identity(self):
        psi = gaussian(AXIS, 1.0, d=0.5)
        final = ak_evolve(psi, PROBE, PROBE, AKParams(lam=0.0, kappa=0.0))
        np.testing.assert_allclose(final.amplitudes, TriState.product(psi, PROBE, PROBE).amplitudes, atol=1e-12)

    def test_simulation_matches_analytic(self):
        report = ak_simulate(gaussian(AXIS, 0.5), PROBE, PROBE, AKParams(lam=1.0, kappa=1.0))
        self.assertTrue(report.passed, msg=[c.to_dict() for c in report.failed_checks()])
        self.assertAlmostEqual(report.quantities['norm'], 1.0, delta=1e-8)

    def test_readout_tracks_object_means(self):
        psi = gaussian(AXIS, 0.5, c=0.5, d=1.0)
        params = AKParams(lam=1.0, kappa=1.0)
        joint = ak_joint_distribution(ak_evolve(psi, PROBE, PROBE, params), params)
        self.assertAlmostEqual(joint.total(), 1.0, delta=1e-8)
        self.assertAlmostEqual(joint.q_marginal().mean(), 1.0, delta=0.02)
        self.assertAlmostEqual(joint.p_marginal().mean(), 0.5, delta=0.02)

    def test_large_axis_is_too_costly(self):
        grid = GridSpec.balanced(128)
        probe = gaussian(grid, 0.5)
        with self.assertRaises(CostError):
            TriState.product(probe, probe, probe)

    def test_joint_distribution_is_covariant(self):
        tv = ak_covariance(gaussian(AXIS, 0.5), PROBE, PROBE, AKParams(lam=1.0, kappa=1.0))
        self.assertLess(tv, 1e-2)

    def test_shift_must_match_readout_grid(self):
        with self.assertRaises(CommensurabilityError):
            ak_covariance(gaussian(AXIS, 0.5), PROBE, PROBE, AKParams(lam=0.7, kappa=1.0))
