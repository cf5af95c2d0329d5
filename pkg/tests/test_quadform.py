import unittest
from fractions import Fraction

from phasecert.errors import AdmissibilityError, ConfigError, DomainError, RejectionReason
from phasecert.polyring import Poly, parse_poly
from phasecert.quadform import (
    PhaseFamily,
    QuadForm,
    StoppingValue,
    PhaseKind,
    check_admissibility,
    classify_phase,
    congruent,
    family_from_matrix,
    is_parabolic,
    is_qtype,
    is_Qtype_in_all_coordinates,
    is_Qtype_in_coordinate,
    normalize_quadratic_form,
    quad_matrix,
    require_admissible,
    sector_of,
    signature_of_matrix,
    twist,
)


def family(theta, **phases):
    n = len(theta)
    return PhaseFamily(QuadForm(tuple(theta)), {int(k[1:]): parse_poly(v, n) for k, v in phases.items()})


class QuadFormTests(unittest.TestCase):
    def test_signature_and_twist(self):
        q = QuadForm((1, -1, 1))
        self.assertEqual((2, 1), q.signature)
        u = [Fraction(1), Fraction(2), Fraction(3)]
        self.assertEqual([1, -2, 3], twist(u, q))
        self.assertEqual(u, twist(twist(u, q), q))

    def test_theta_must_be_signs(self):
        with self.assertRaises(DomainError):
            QuadForm((1, 2))

    def test_qtype_and_parabolic(self):
        q = QuadForm((1, -1))
        self.assertTrue(is_qtype(parse_poly("3 y1^2 - 3 y2^2", 2), 2, q))
        self.assertTrue(is_qtype(q.power(2) * 2, 4, q))
        self.assertFalse(is_qtype(parse_poly("y1 y2", 2), 2, q))
        self.assertTrue(is_parabolic(parse_poly("y1^2 + y2^2", 2), 2, q))
        self.assertFalse(is_qtype(parse_poly("y1^3", 2), 3, q))

    def test_classify_phase(self):
        q = QuadForm((1, 1))
        self.assertEqual({PhaseKind.QTYPE, PhaseKind.PARABOLIC}, set(classify_phase(parse_poly("2 y1^2 + 2 y2^2", 2), 2, q)))
        self.assertEqual({PhaseKind.ZERO}, set(classify_phase(Poly.zero(2), 3, q)))
        self.assertEqual({PhaseKind.NEITHER}, set(classify_phase(parse_poly("y1^3", 2), 3, q)))
        with self.assertRaises(AdmissibilityError):
            classify_phase(parse_poly("y1^2 + y2", 2), 2, q)

    def test_qtype_in_coordinate(self):
        q = QuadForm((1, -1, 1))
        p2 = parse_poly("y1^2 - y2^2 + 5 y3^2", 3)
        self.assertTrue(is_Qtype_in_coordinate(p2, 1, 0, q))
        self.assertFalse(is_Qtype_in_coordinate(p2, 2, 0, q))
        self.assertFalse(is_Qtype_in_all_coordinates(p2, 0, q))
        self.assertTrue(is_Qtype_in_all_coordinates(q.poly(), 0, q))

    def test_sector_prefers_smallest_index(self):
        self.assertEqual(1, sector_of([0.1, -0.7, 0.7]))


class AdmissibilityTests(unittest.TestCase):
    def test_admissible_family(self):
        self.assertTrue(check_admissibility(family((1, -1), p2="y1 y2")).ok)

    def test_quadratic_multiple_of_q(self):
        result = check_admissibility(family((1, -1), p2="2 y1^2 - 2 y2^2"))
        self.assertFalse(result.ok)
        self.assertEqual(RejectionReason.QUADRATIC_IS_Q, result.reason)

    def test_linear_phase(self):
        with self.assertRaises(AdmissibilityError) as ctx:
            require_admissible(family((1, 1), p1="y1", p2="y1 y2"))
        self.assertEqual(RejectionReason.LINEAR_PHASE, ctx.exception.reason)

    def test_dimension_too_small(self):
        result = check_admissibility(family((1,), p3="y1^3"))
        self.assertEqual(RejectionReason.DIMENSION_TOO_SMALL, result.reason)

    def test_inhomogeneous_phase(self):
        result = check_admissibility(family((1, 1), p3="y1^3 + y2^2"))
        self.assertEqual(RejectionReason.NOT_HOMOGENEOUS, result.reason)

    def test_zero_phases_are_dropped(self):
        f = PhaseFamily(QuadForm((1, 1)), {2: Poly.zero(2), 3: parse_poly("y1^3", 2)})
        self.assertEqual([3], f.degrees)
        self.assertEqual(RejectionReason.NO_PHASES, check_admissibility(f.with_phases({})).reason)

    def test_sha_is_stable(self):
        self.assertEqual(family((1, -1), p2="y1 y2").sha256(), family((1, -1), p2="y1 y2").sha256())
        self.assertNotEqual(family((1, -1), p2="y1 y2").sha256(), family((1, 1), p2="y1 y2").sha256())


class NormalizationTests(unittest.TestCase):
    def test_lagrange_diagonalizes(self):
        matrix = [[0, 1], [1, 0]]
        normal = normalize_quadratic_form(matrix)
        diag = congruent(matrix, normal.transform)
        self.assertEqual(Fraction(0), diag[0][1])
        self.assertEqual((1, 1), signature_of_matrix(matrix))
        self.assertEqual((2, 1), signature_of_matrix(quad_matrix(QuadForm((1, -1, 1)))))

    def test_sylvester_invariance(self):
        matrix = [[2, 1, 0], [1, -3, 0], [0, 0, 5]]
        moved = congruent(matrix, [[1, 2, 0], [0, 1, 0], [3, 0, 1]])
        self.assertEqual(signature_of_matrix(matrix), signature_of_matrix(moved))

    def test_singular_form(self):
        with self.assertRaises(AdmissibilityError):
            normalize_quadratic_form([[1, 1], [1, 1]])

    def test_phases_rewritten_into_signed_form(self):
        f, normal = family_from_matrix([[1, 0], [0, 4]], {3: parse_poly("y1 y2^2", 2)})
        self.assertEqual((1, 1), f.theta)
        self.assertEqual(Fraction(1, 4), f.phase(3).coefficient((1, 2)))

    def test_irrational_rescaling(self):
        with self.assertRaises(ConfigError):
            family_from_matrix([[2, 0], [0, 1]], {3: parse_poly("y1^3", 2)})


class StoppingValueTests(unittest.TestCase):
    def test_norm_window(self):
        StoppingValue(Fraction(10), {2: Fraction(15)})
        with self.assertRaises(ConfigError):
            StoppingValue(Fraction(10), {2: Fraction(25)})

    def test_from_direction_is_exact(self):
        value = StoppingValue.from_direction(Fraction(10), {2: Fraction(1), 4: Fraction(-3)})
        self.assertEqual({2: Fraction(5, 2), 4: Fraction(-15, 2)}, value.nu)
        self.assertTrue(value.is_exact())


if __name__ == "__main__":
    unittest.main()
