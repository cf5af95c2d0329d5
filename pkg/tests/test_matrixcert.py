import unittest
from fractions import Fraction

from phasecert.coeffcalc import ChangeOfVars
from phasecert.errors import AdmissibilityError, AllCoordinatesQType, DomainError, RejectionReason
from phasecert.matrixcert import (
    CaseLabel,
    build_Bstar_j,
    build_matrices,
    certify,
    certify_all_sectors,
    choose_Dstar,
    classify_case,
    cofactor_determinant,
    compute_R_gamma,
    cramer_identity_holds,
    det_Bstar,
    lemma_abc_closed_forms,
    lemma_abc_coefficients,
    predicted_s1,
    product_formula,
    solve_rational,
    subcase1_expected,
    subcase1_monomial_coefficient,
)
from phasecert.polyring import eval_rational, parse_poly
from phasecert.quadform import PhaseFamily, QuadForm, StoppingValue


def family(theta, phases):
    n = len(theta)
    q = QuadForm(tuple(theta))
    parsed = {}
    for j, text in phases.items():
        if text == "Q^2":
            parsed[j] = q.power(2)
        elif text == "|y|^4":
            parsed[j] = q.norm_poly() ** 2
        else:
            parsed[j] = parse_poly(text, n)
    return PhaseFamily(q, parsed)


def stopping(nu):
    nu = {j: Fraction(v) for j, v in nu.items()}
    return StoppingValue(sum(abs(v) for v in nu.values()), nu)


# (theta, phases, nu, sector (0-based) or None for every sector, expected case)
REGRESSION_FAMILIES = [
    ((1, -1), {2: "y1 y2"}, {2: 10}, None, CaseLabel.A),
    ((1, 1, -1), {2: "y1 y2", 3: "y1^3"}, {2: 1, 3: 1}, None, CaseLabel.A),
    ((1, 1), {3: "y1^2 y2"}, {3: 10}, None, CaseLabel.A),
    ((1, 1), {2: "y1^2", 4: "Q^2"}, {2: 1, 4: 1}, None, CaseLabel.A),
    ((1, -1), {4: "Q^2"}, {4: 10}, None, CaseLabel.B1),
    ((1, 1, -1), {3: "y1 y2 y3", 4: "Q^2"}, {3: "1/10", 4: 1}, None, CaseLabel.B1),
    ((1, -1), {2: "y1^2 + y2^2", 4: "Q^2"}, {2: 1, 4: 10}, None, CaseLabel.B2_SUB1),
    ((1, 1), {2: "y1 y2", 4: "|y|^4"}, {2: 0, 4: 1}, None, CaseLabel.B2_SUB2),
    ((1, -1), {2: "y1 y2", 4: "Q^2"}, {2: 0, 4: 1}, None, CaseLabel.B2_SUB4),
    ((1, 1, -1), {2: "y1^2 + y2^2 + y3^2", 4: "Q^2"}, {2: 0, 4: 1}, 0, CaseLabel.B2_SUB1),
    ((1, -1, 1), {2: "y1^2 - y2^2 + 5 y3^2", 4: "Q^2"}, {2: 0, 4: 1}, 0, CaseLabel.B2_SUB2),
    ((1, 1, -1), {2: "y1 y3", 4: "Q^2"}, {2: 0, 4: 1}, 2, CaseLabel.B2_SUB4),
]


class ClassificationTests(unittest.TestCase):
    def test_dominant_generic_phase_selects_case_A(self):
        f = family((1, 1), {2: "y1^2", 4: "Q^2"})
        self.assertEqual((CaseLabel.A, 2), classify_case(f, stopping({2: 1, 4: 1})))

    def test_qtype_dominance(self):
        f = family((1, -1), {2: "y1 y2", 4: "Q^2"})
        self.assertEqual((CaseLabel.B2, 4), classify_case(f, stopping({2: "1/10", 4: 1})))
        g = family((1, -1), {4: "Q^2"})
        self.assertEqual((CaseLabel.B1, 4), classify_case(g, stopping({4: 3})))

    def test_predicted_s1(self):
        f = family((1, -1), {2: "y1 y2", 4: "Q^2"})
        self.assertEqual(7, predicted_s1(f, CaseLabel.A))
        self.assertEqual(8, predicted_s1(f, CaseLabel.B2_SUB4))


class CertificationTests(unittest.TestCase):
    def _certificates(self, theta, phases, nu, sector):
        f = family(theta, phases)
        if sector is None:
            return certify_all_sectors(f, stopping(nu))
        return [certify(f, stopping(nu), ChangeOfVars(f.q, sector))]

    def test_regression_families(self):
        for theta, phases, nu, sector, expected in REGRESSION_FAMILIES:
            for cert in self._certificates(theta, phases, nu, sector):
                label = f"theta={theta} phases={phases} sector={cert.sector}"
                self.assertIs(expected, cert.case, label)
                self.assertTrue(cert.passed(), f"{label}: {[c for c in cert.checks if not c.passed]}")
                self.assertNotEqual(0, eval_rational(cert.W, cert.witness), label)
                self.assertEqual(predicted_s1(cert.family, cert.case), cert.s1, label)
                self.assertNotIn(cert.gamma, cert.dstar)

    def test_subcase_three_is_recorded_before_subcase_one(self):
        f = family((1, 1, -1), {2: "y1^2 + y2^2 + y3^2", 4: "Q^2"})
        cert = certify(f, stopping({4: 1}), ChangeOfVars(f.q, 0))
        self.assertEqual(["3", "1"], [step["subcase"] for step in cert.trace])

    def test_subcase_four_falls_through_to_subcase_two(self):
        f = family((1, -1, 1), {2: "y1^2 - y2^2 + 5 y3^2", 4: "Q^2"})
        cert = certify(f, stopping({4: 1}), ChangeOfVars(f.q, 0))
        self.assertEqual(["4", "2"], [step["subcase"] for step in cert.trace])
        self.assertIn("Q-type", cert.trace[0]["outcome"])

    def test_regression_set_size(self):
        self.assertEqual(12, len(REGRESSION_FAMILIES))
        self.assertIn(3, {len(theta) for theta, _, _, _, case in REGRESSION_FAMILIES if case is CaseLabel.B2_SUB4})

    def test_subcase_four_certifies_in_three_variables(self):
        f = family((1, 1, -1), {2: "y1 y3", 4: "Q^2"})
        cert = certify(f, stopping({2: 0, 4: 1}), ChangeOfVars(f.q, 2))
        self.assertEqual(["4"], [step["subcase"] for step in cert.trace])
        self.assertEqual("certified", cert.trace[0]["outcome"])
        self.assertEqual((2, 0), cert.gamma)

    def test_p2_equal_to_q_without_gate_exhausts_coordinates(self):
        f = family((1, -1), {2: "y1^2 - y2^2", 4: "Q^2"})
        with self.assertRaises(AdmissibilityError):
            certify(f, stopping({2: 0, 4: 1}), ChangeOfVars(f.q, 0))
        with self.assertRaises(AllCoordinatesQType) as ctx:
            certify(f, stopping({2: 0, 4: 1}), ChangeOfVars(f.q, 0), enforce_gate=False)
        self.assertEqual(["4"], [step["subcase"] for step in ctx.exception.trace])
        self.assertEqual("Q-type in coordinates 1,2", ctx.exception.trace[0]["outcome"])
        self.assertEqual("AllCoordinatesQType", ctx.exception.code)

    def test_subcase_one_drops_quadratic_column(self):
        f = family((1, -1), {2: "y1^2 + y2^2", 4: "Q^2"})
        cert = certify(f, stopping({2: 1, 4: 10}), ChangeOfVars(f.q, 0))
        self.assertEqual([4], cert.dstar.columns)
        self.assertEqual(1, cert.d0)

    def test_forbidden_inputs(self):
        cases = [
            (family((1, -1), {2: "3 y1^2 - 3 y2^2"}), {2: 1}, RejectionReason.QUADRATIC_IS_Q),
            (family((1, 1), {1: "y1", 3: "y1^3"}), {3: 1}, RejectionReason.LINEAR_PHASE),
            (family((1,), {3: "y1^3"}), {3: 1}, RejectionReason.DIMENSION_TOO_SMALL),
        ]
        for f, nu, reason in cases:
            with self.assertRaises(AdmissibilityError) as ctx:
                certify(f, stopping(nu), ChangeOfVars(f.q, 0))
            self.assertEqual(reason, ctx.exception.reason)

    def test_nu_outside_lambda(self):
        f = family((1, -1), {2: "y1 y2"})
        with self.assertRaises(DomainError):
            certify(f, stopping({3: 1}), ChangeOfVars(f.q, 0))

    def test_gamma_in_distinguished_set(self):
        f = family((1, -1), {2: "y1 y2", 3: "y1^3"})
        cov = ChangeOfVars(f.q, 0)
        bundle = build_matrices(f, cov)
        ds = choose_Dstar(f, CaseLabel.A, cov)
        with self.assertRaises(DomainError):
            compute_R_gamma(bundle, ds, ds.rows[0])

    def test_cramer_identity(self):
        f = family((1, -1), {2: "y1 y2", 3: "y1^2 y2"})
        cov = ChangeOfVars(f.q, 1)
        bundle = build_matrices(f, cov)
        ds = choose_Dstar(f, CaseLabel.A, cov)
        self.assertTrue(cramer_identity_holds(bundle, ds, {2: Fraction(3), 3: Fraction(-1, 2)}))


class LinearAlgebraTests(unittest.TestCase):
    def test_distinguished_block_is_triangular(self):
        f = family((1, -1), {2: "y1 y2", 3: "y1^2 y2"})
        cov = ChangeOfVars(f.q, 1)
        bundle = build_matrices(f, cov)
        ds = choose_Dstar(f, CaseLabel.A, cov)
        self.assertEqual(product_formula(bundle, ds), det_Bstar(bundle, ds))
        with self.assertRaises(DomainError):
            build_Bstar_j(bundle, ds, 5)

    def test_cofactor_determinant(self):
        matrix = [[Fraction(2), Fraction(1), Fraction(0)], [Fraction(1), Fraction(3), Fraction(1)], [Fraction(0), Fraction(1), Fraction(4)]]
        self.assertEqual(Fraction(18), cofactor_determinant(matrix, Fraction(0)))

    def test_solve_rational(self):
        solution = solve_rational([[Fraction(2), Fraction(1)], [Fraction(1), Fraction(3)]], [Fraction(3), Fraction(5)])
        self.assertEqual([Fraction(4, 5), Fraction(7, 5)], solution)


class ClosedFormTests(unittest.TestCase):
    def test_subcase1_coefficient(self):
        for theta in ((1, -1), (1, 1), (1, -1, 1)):
            q = QuadForm(theta)
            cov = ChangeOfVars(q, 0)
            for m0 in (4, 6):
                for m in range(q.n - 1):
                    actual = subcase1_monomial_coefficient(q.power(m0 // 2), m0, cov, m)
                    self.assertEqual(subcase1_expected(m0, cov, m), actual, f"theta={theta} m0={m0} m={m}")

    def test_abc_closed_forms(self):
        q = QuadForm((1, -1, 1))
        p2 = parse_poly("2 y1^2 + y1 y2 - 3 y2^2 + y1 y3 + 4 y2 y3", 3)
        for l in range(3):
            cov = ChangeOfVars(q, l)
            for m in range(2):
                if q.theta[l] == q.theta[cov.coordinate(m)]:
                    continue
                for j in (4, 6):
                    self.assertEqual(
                        lemma_abc_closed_forms(p2, j, cov, m),
                        lemma_abc_coefficients(p2, j, cov, m),
                        f"l={l} m={m} j={j}",
                    )


if __name__ == "__main__":
    unittest.main()
