import inspect
import math
import unittest
from fractions import Fraction

import numpy as np

from phasecert.coeffcalc import ChangeOfVars
from phasecert.errors import DomainError, QuadratureError
from phasecert.matrixcert import certify
from phasecert.oscint import (
    BadSets,
    BumpSpec,
    CertificateEvaluator,
    NumericPhase,
    NumericPoly,
    QuadratureSettings,
    adaptive_integrate,
    build_bad_sets,
    eval_K_flat,
    eval_K_sharp,
    fit_slope,
    flat_trivial_bound,
    kernel_decay_scan,
    sample_scan_points,
    scaled_nu,
    sharp_trivial_bound,
    sublevel_bound,
    sublevel_measure,
    tensor_rule,
    vdc_integral_check,
    vdc_scan,
)
from phasecert.polyring import parse_poly
from phasecert.quadform import PhaseFamily, QuadForm, StoppingValue, sector_of
from phasecert.schemas import KernelScanConfig


def cross_family():
    return PhaseFamily(QuadForm((1, -1)), {2: parse_poly("y1 y2", 2)})


class QuadratureTests(unittest.TestCase):
    def test_tensor_rule_is_exact_for_polynomials(self):
        points, weights = tensor_rule([0.0, -1.0], [1.0, 1.0], 2, 4)
        self.assertAlmostEqual(2.0 / 3.0, float(np.sum(points[:, 0] ** 2 * weights)), places=12)

    def test_oscillatory_exponential(self):
        lam = 50.0
        result = adaptive_integrate(lambda x: np.exp(1j * lam * x[:, 0]), [0.0], [1.0], QuadratureSettings(), lam)
        expected = (np.exp(1j * lam) - 1) / (1j * lam)
        self.assertLess(abs(result.value - expected), 1e-6)

    def test_two_dimensional_oscillatory_product(self):
        lam = 200.0
        result = adaptive_integrate(lambda x: np.exp(1j * lam * (x[:, 0] + x[:, 1])), [0.0, 0.0], [1.0, 1.0], QuadratureSettings(), lam)
        expected = ((np.exp(1j * lam) - 1) / (1j * lam)) ** 2
        self.assertLess(abs(result.value - expected), 1e-8)

    def test_settled_boxes_are_not_refined(self):
        seen = []

        def integrand(x):
            seen.append(len(x))
            return np.where(x[:, 0] < 0.5, 1.0, np.cos(80.0 * x[:, 1]))

        settings = QuadratureSettings(chunk_points=1024)
        result = adaptive_integrate(integrand, [0.0, 0.0], [1.0, 1.0], settings)
        self.assertAlmostEqual(0.5 + 0.5 * math.sin(80.0) / 80.0, result.value.real, delta=1e-6)
        self.assertLessEqual(max(seen), 1024)
        self.assertEqual(sum(seen), result.points)
        uniform = sum(4 * 4 ** k * 256 for k in range(result.depth + 1))
        self.assertLess(result.points, uniform)

    def test_point_budget(self):
        settings = QuadratureSettings(max_points=10)
        with self.assertRaises(QuadratureError):
            adaptive_integrate(lambda x: np.ones(len(x)), [0.0], [1.0], settings)

    def test_numeric_poly_matches_exact(self):
        p = parse_poly("3 u1^2 u2 - 1/2 u2^3 + 1", 2)
        values = NumericPoly(p)(np.array([[1.0, 2.0], [-0.5, 0.25]]))
        np.testing.assert_allclose([3 * 2 - 4 + 1, 3 * 0.25 * 0.25 - 0.5 * 0.25 ** 3 + 1], values)


class KernelTests(unittest.TestCase):
    def setUp(self):
        self.family = cross_family()
        self.cov = ChangeOfVars(self.family.q, 1)
        self.spec = BumpSpec(2)

    def test_zero_outside_sector_and_slice(self):
        self.assertEqual(0j, eval_K_sharp(self.family, {2: 5.0}, {2: 5.0}, [1.0, 0.01], 0.1, self.cov, self.spec))
        self.assertEqual(0j, eval_K_sharp(self.family, {2: 5.0}, {2: 5.0}, [0.3, 0.8], 1.0, self.cov, self.spec))

    def test_without_modulation_kernel_is_positive(self):
        value = eval_K_sharp(self.family, {}, {}, [0.3, 0.8], -0.3, self.cov, self.spec)
        self.assertAlmostEqual(0.0, value.imag, places=12)
        self.assertGreater(value.real, 0.0)

    def test_trivial_bound(self):
        bound = sharp_trivial_bound(self.spec)
        self.assertAlmostEqual(4.0 * math.sqrt(2.0), bound)
        for tau in (-0.5, 0.0, 0.4):
            value = eval_K_sharp(self.family, {2: 40.0}, {2: 25.0}, [0.3, 0.8], tau, self.cov, self.spec)
            self.assertLessEqual(abs(value), bound)

    def test_flat_kernel_at_origin(self):
        value = eval_K_flat(self.family, {}, {}, [0.0, 0.0], self.spec, QuadratureSettings())
        self.assertAlmostEqual(math.pi / 5.0, value.real, places=2)
        self.assertEqual(0j, eval_K_flat(self.family, {}, {}, [2.5, 0.0], self.spec))
        self.assertAlmostEqual(math.pi, flat_trivial_bound(self.spec))
        modulated = eval_K_flat(self.family, {2: 5.0}, {2: 2.0}, [0.2, 0.1], self.spec, QuadratureSettings())
        self.assertLessEqual(abs(modulated), flat_trivial_bound(self.spec))

    def test_numeric_phase_weights(self):
        phase = NumericPhase(self.family)
        self.assertAlmostEqual(-6.0, float(phase(np.array([[1.0, -2.0]]), {2: 3.0})[0]))


class ThreeVariableKernelTests(unittest.TestCase):
    def setUp(self):
        self.family = PhaseFamily(QuadForm((1, 1, -1)), {2: parse_poly("y1 y2 + y2 y3", 3)})
        self.spec = BumpSpec(3)
        self.u = [0.8, 0.2, 0.1]
        self.cov = ChangeOfVars(self.family.q, sector_of(self.u))

    def kernel(self, r):
        return eval_K_sharp(self.family, {2: r}, {2: 1.5 * r}, self.u, -0.3, self.cov, self.spec)

    def test_slice_converges_at_high_frequency(self):
        self.assertEqual(0, self.cov.l)
        low, high = self.kernel(10.0), self.kernel(1000.0)
        self.assertTrue(np.isfinite(high))
        self.assertLessEqual(abs(high), sharp_trivial_bound(self.spec))
        self.assertLess(abs(high), abs(low))


class DecayEstimateTests(unittest.TestCase):
    def test_vdc_quadratic_slope(self):
        frame, summary = vdc_scan(parse_poly("x1^2", 1), [1e2, 1e3, 1e4])
        self.assertEqual(3, len(frame))
        self.assertAlmostEqual(-0.5, summary["slope"], delta=0.05)
        self.assertTrue(summary["passed"])

    def test_vdc_rejects_constant_phase(self):
        with self.assertRaises(DomainError):
            vdc_integral_check(parse_poly("3", 1))

    def test_vdc_bound_value(self):
        check = vdc_integral_check(parse_poly("100 x1^2 + 7", 1))
        self.assertEqual(100.0, check.norm)
        self.assertAlmostEqual(0.1, check.bound)

    def test_linear_sublevel_sets(self):
        self.assertAlmostEqual(0.2, sublevel_measure(parse_poly("x1", 1), 0.1).measure, places=2)
        self.assertAlmostEqual(0.02, sublevel_measure(parse_poly("10 x1", 1), 0.1).measure, delta=1e-3)

    def test_closed_form_sublevel_sets(self):
        rho = 0.3
        strip = 2.0 * (rho * math.sqrt(1.0 - rho * rho) + math.asin(rho))
        cases = [
            (parse_poly("x1", 2), rho, strip),
            (parse_poly("x1^2 + x2^2", 2), 0.25, math.pi * 0.25),
            (parse_poly("x1^2 + x2^2 + x3^2", 3), 0.25, 4.0 / 3.0 * math.pi * 0.25 ** 1.5),
        ]
        for q, level, expected in cases:
            estimate = sublevel_measure(q, level)
            self.assertAlmostEqual(expected, estimate.measure, delta=0.01 * expected, msg=q.to_text())

    def test_sublevel_grid_refinement(self):
        q = parse_poly("x1^2 - x2^2", 2)
        coarse = sublevel_measure(q, 0.05, grid=200).measure
        fine = sublevel_measure(q, 0.05, grid=1000).measure
        self.assertLess(abs(coarse - fine), 0.1 * fine)

    def test_sublevel_bound(self):
        self.assertAlmostEqual(0.5 ** 0.5 * 2.0 ** -0.5, sublevel_bound(parse_poly("x1^2 + x1 x2", 2), 0.5))

    def test_fit_slope(self):
        xs = [1.0, 10.0, 100.0]
        self.assertAlmostEqual(-0.5, fit_slope(xs, [x ** -0.5 for x in xs]))
        self.assertTrue(math.isnan(fit_slope([1.0], [1.0])))


class BadSetTests(unittest.TestCase):
    def setUp(self):
        self.family = cross_family()
        self.cov = ChangeOfVars(self.family.q, 1)
        self.cert = certify(self.family, StoppingValue.from_direction(Fraction(1), {2: Fraction(1)}), self.cov)
        self.evaluator = CertificateEvaluator(self.cert)

    def test_bad_sets_do_not_read_mu(self):
        self.assertNotIn("mu", inspect.signature(build_bad_sets).parameters)

    def test_numeric_W_matches_witness(self):
        nu = {j: float(v) for j, v in self.cert.stopping.nu.items()}
        witness = np.array([[float(x) for x in self.cert.witness]])
        self.assertAlmostEqual(float(self.cert.witness_value), float(self.evaluator.W(witness, nu)[0]))

    def test_bad_sets_shape_and_digest(self):
        rng = np.random.default_rng(3)
        u, tau = sample_scan_points(2, 1, 50, rng, BumpSpec(2).sector_constant)
        bad = build_bad_sets(self.evaluator, scaled_nu({2: 1.0}, 100.0), 100.0, u, tau, 0.2, 0.6, 1.0)
        self.assertEqual((50,), bad.bad.shape)
        self.assertEqual(64, len(bad.digest()))
        again = BadSets(bad.in_G.copy(), bad.in_F.copy(), bad.W, bad.R)
        self.assertEqual(bad.digest(), again.digest())

    def test_scan_points_stay_in_sector(self):
        rng = np.random.default_rng(0)
        c0 = BumpSpec(3).sector_constant
        u, tau = sample_scan_points(3, 2, 200, rng, c0, margin=0.02, tau_max=0.9)
        norms = np.linalg.norm(u, axis=1)
        self.assertTrue(np.all(norms < 2.0))
        self.assertTrue(np.all(np.abs(u[:, 2]) >= (c0 + 0.02) * norms))
        self.assertTrue(np.all(np.abs(tau) <= 0.9))

    def test_scaled_nu(self):
        nu = scaled_nu({2: 1.0, 4: -3.0}, 8.0)
        self.assertAlmostEqual(8.0, sum(abs(v) for v in nu.values()))
        with self.assertRaises(DomainError):
            scaled_nu({2: 0.0}, 1.0)


class FakeKernel:
    """|K| = 1 / |nu|, independent of the point."""

    def __init__(self, fail=False):
        self.fail = fail
        self.calls = 0

    def __call__(self, family, nu, mu, u, tau, cov, spec, settings, phase):
        self.calls += 1
        if self.fail:
            raise QuadratureError("no agreement")
        return complex(1.0 / sum(abs(v) for v in nu.values()), 0.0)


class KernelScanTests(unittest.TestCase):
    def setUp(self):
        self.family = cross_family()
        self.cfg = KernelScanConfig(sector=2, nu_direction={2: 1.0}, r_grid=[10.0, 100.0, 1000.0], points=12, mu_samples=3)

    def test_scan_without_certificate(self):
        kernel = FakeKernel()
        report = kernel_decay_scan(self.cfg, self.family, None, np.random.default_rng(1), kernel=kernel)
        self.assertEqual(12 * 3 * 3, len(report.rows))
        self.assertEqual(12 * 3 * 3, kernel.calls)
        self.assertAlmostEqual(-1.0, report.summary["slope_good"], places=6)
        self.assertFalse(report.summary["certified"])
        self.assertEqual(0.0, report.summary["per_r"][0]["fraction_G"])
        self.assertIn("mu_sample_id", report.rows.columns)

    def test_scan_with_certificate(self):
        cert = certify(self.family, StoppingValue.from_direction(Fraction(1), {2: Fraction(1)}), ChangeOfVars(self.family.q, 1))
        report = kernel_decay_scan(self.cfg, self.family, cert, np.random.default_rng(1), kernel=FakeKernel())
        summary = report.summary
        self.assertTrue(summary["certified"])
        self.assertEqual("A", summary["case"])
        self.assertGreater(summary["c0_const"], 0.0)
        for entry in summary["per_r"]:
            self.assertTrue(0.0 <= entry["fraction_G"] <= 1.0)
            self.assertEqual(64, len(entry["bad_set_digest"]))

    def test_certificate_for_wrong_sector(self):
        cert = certify(self.family, StoppingValue.from_direction(Fraction(1), {2: Fraction(1)}), ChangeOfVars(self.family.q, 0))
        with self.assertRaises(DomainError):
            kernel_decay_scan(self.cfg, self.family, cert, np.random.default_rng(1), kernel=FakeKernel())

    def test_quadrature_failures_are_counted(self):
        report = kernel_decay_scan(self.cfg, self.family, None, np.random.default_rng(1), kernel=FakeKernel(fail=True))
        self.assertEqual(36, report.summary["per_r"][0]["quadrature_failures"])
        self.assertEqual(0.0, report.summary["per_r"][0]["max_abs_all"])


if __name__ == "__main__":
    unittest.main()
