"""Certificate construction: matrices, the distinguished set, Cramer elimination and case analysis.

For a sector l the sigma-coefficients of the phase satisfy C = B (nu - mu) + D nu + E nu with
rows indexed by gamma in 1 <= |gamma| <= d and columns by j in Lambda. A distinguished set of
rows makes the square block B* upper triangular; Cramer's rule eliminates nu - mu and leaves

    R^gamma = sum_j B_{gamma j} det B^{*,j} + det B* (D_gamma + E_gamma) nu,

whose tau^{d0} coefficient is |u|^{-s1} W(u). A certificate records every choice together with a
rational point where W does not vanish.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from phasecert.coeffcalc import (
    ChangeOfVars,
    SigmaExpansion,
    compute_B,
    compute_B_twisted,
    compute_D,
    expand_phase_in_sigma,
    oracle_direct_expansion,
    xi_polynomial,
)
from phasecert.errors import AllCoordinatesQType, DomainError, InvariantViolation, PolyError
from phasecert.polyring import (
    HomoElem,
    MultiIndex,
    Poly,
    SymbolLayout,
    coefficient_norm,
    eval_rational,
    find_nonvanishing_witness,
    graded_multi_indices,
    mi_abs,
    multi_indices_of_order,
    unit_index,
)
from phasecert.quadform import (
    PhaseFamily,
    StoppingValue,
    is_Qtype_in_coordinate,
    is_qtype,
    require_admissible,
)


class CaseLabel(Enum):
    A = "A"
    B1 = "B1"
    B2 = "B2"
    B2_SUB1 = "B2.1"
    B2_SUB2 = "B2.2"
    B2_SUB4 = "B2.4"


# ---------------------------------------------------------------------------
# Matrices
# ---------------------------------------------------------------------------

@dataclass
class PolyMatrix:
    """Rows gamma in graded order, columns j in Lambda; missing entries are zero."""

    rows: List[MultiIndex]
    cols: List[int]
    entries: Dict[Tuple[MultiIndex, int], HomoElem]
    layout: SymbolLayout

    def entry(self, gamma: Sequence[int], j: int) -> HomoElem:
        return self.entries.get((tuple(gamma), j), HomoElem.zero(self.layout))

    def row(self, gamma: Sequence[int]) -> List[HomoElem]:
        return [self.entry(gamma, j) for j in self.cols]

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.rows), len(self.cols)


@dataclass
class MatrixBundle:
    family: PhaseFamily
    cov: ChangeOfVars
    layout: SymbolLayout
    expansion: SigmaExpansion
    B: PolyMatrix
    D: PolyMatrix
    E: PolyMatrix

    def nu(self, j: int) -> Poly:
        return self.layout.extra(f"nu{j}")

    def de_nu(self, gamma: Sequence[int]) -> HomoElem:
        """(D_gamma + E_gamma) nu with symbolic nu."""
        total = HomoElem.zero(self.layout)
        for j in self.family.degrees:
            total = total + (self.D.entry(gamma, j) + self.E.entry(gamma, j)) * self.nu(j)
        return total

    def row_total(self, gamma: Sequence[int], nu=None, mu=None) -> HomoElem:
        """B (nu - mu) + D nu + E nu for one row."""
        return self.expansion.total(gamma, nu, mu)


def build_matrices(f: PhaseFamily, cov: ChangeOfVars, enforce_gate: bool = True, layout: Optional[SymbolLayout] = None) -> MatrixBundle:
    expansion = expand_phase_in_sigma(f, cov, layout, enforce_gate=enforce_gate)
    rows = graded_multi_indices(f.d, f.n - 1)
    cols = list(f.degrees)
    parts: Dict[str, Dict[Tuple[MultiIndex, int], HomoElem]] = {"B": {}, "D": {}, "E": {}}
    for gamma, piece in expansion.pieces.items():
        for j, e in piece.bpart.items():
            parts["B"][(gamma, j)] = e
        for j, e in piece.dpart.items():
            parts["D"][(gamma, j)] = e
        for j, e in piece.epart.items():
            parts["E"][(gamma, j)] = e
    lay = expansion.layout
    return MatrixBundle(
        f, cov, lay, expansion,
        PolyMatrix(rows, cols, parts["B"], lay),
        PolyMatrix(rows, cols, parts["D"], lay),
        PolyMatrix(rows, cols, parts["E"], lay),
    )


def cofactor_determinant(matrix: Sequence[Sequence[Any]], zero: Any) -> Any:
    """Laplace expansion along the first row, skipping zero entries."""
    size = len(matrix)
    if size == 0:
        return zero + 1
    if size == 1:
        return matrix[0][0]
    total = zero
    for col, pivot in enumerate(matrix[0]):
        if _is_zero(pivot):
            continue
        minor = [row[:col] + row[col + 1:] for row in matrix[1:]]
        term = pivot * cofactor_determinant(minor, zero)
        total = total + term if col % 2 == 0 else total - term
    return total


def _is_zero(value: Any) -> bool:
    return value.is_zero() if hasattr(value, "is_zero") else value == 0


def solve_rational(matrix: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> List[Fraction]:
    """Exact Gaussian elimination with row pivoting."""
    size = len(matrix)
    rows = [list(map(Fraction, row)) + [Fraction(b)] for row, b in zip(matrix, rhs)]
    for col in range(size):
        pivot = next((r for r in range(col, size) if rows[r][col] != 0), None)
        if pivot is None:
            raise DomainError("singular system")
        rows[col], rows[pivot] = rows[pivot], rows[col]
        for r in range(size):
            if r != col and rows[r][col]:
                factor = rows[r][col] / rows[col][col]
                rows[r] = [a - factor * b for a, b in zip(rows[r], rows[col])]
    return [rows[i][size] / rows[i][i] for i in range(size)]


# ---------------------------------------------------------------------------
# Distinguished set
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DistinguishedSet:
    """gamma(j) for each column j of B*; columns omit j = 2 in subcase B2.1."""

    case: CaseLabel
    entries: Tuple[Tuple[int, MultiIndex], ...]
    m: Optional[int] = None

    @property
    def columns(self) -> List[int]:
        return [j for j, _ in self.entries]

    @property
    def rows(self) -> List[MultiIndex]:
        return [g for _, g in self.entries]

    def __contains__(self, gamma: object) -> bool:
        return gamma in self.rows

    def to_dict(self) -> Dict[str, str]:
        return {str(j): "(" + ",".join(map(str, g)) + ")" for j, g in self.entries}


def _lexicographic_B(p: Poly, j: int, order: int, cov: ChangeOfVars) -> MultiIndex:
    for gamma in multi_indices_of_order(order, cov.n - 1):
        if not compute_B(p, j, gamma, cov).is_zero():
            return gamma
    raise InvariantViolation(f"no gamma of order {order} with B_{{{j},gamma}} != 0", code="NO_NONZERO_B")


def choose_Dstar(f: PhaseFamily, case: CaseLabel, cov: ChangeOfVars, m: Optional[int] = None) -> DistinguishedSet:
    entries: List[Tuple[int, MultiIndex]] = []
    if case in (CaseLabel.B2_SUB2, CaseLabel.B2_SUB4):
        if m is None:
            raise DomainError("case B2 needs the coordinate index m")
        entries.append((2, unit_index(f.n - 1, m)))
    for j in f.degrees:
        if j == 2 and case is not CaseLabel.A:
            continue
        entries.append((j, _lexicographic_B(f.phase(j), j, j, cov)))
    return DistinguishedSet(case, tuple(sorted(entries)), m)


def bstar_matrix(bundle: MatrixBundle, ds: DistinguishedSet) -> List[List[HomoElem]]:
    return [[bundle.B.entry(gamma, j) for j in ds.columns] for gamma in ds.rows]


def det_Bstar(bundle: MatrixBundle, ds: DistinguishedSet) -> HomoElem:
    return cofactor_determinant(bstar_matrix(bundle, ds), HomoElem.zero(bundle.layout))


def product_formula(bundle: MatrixBundle, ds: DistinguishedSet) -> HomoElem:
    """det B* from the diagonal, rebuilt from the B polynomials."""
    layout = bundle.layout
    total = HomoElem.one(layout)
    for j, gamma in ds.entries:
        p = bundle.family.phase(j)
        body = layout.from_u_poly(compute_B_twisted(p, j, gamma, bundle.cov))
        body = body * layout.tau_poly() ** (j - mi_abs(gamma))
        total = total * HomoElem(layout, body, j)
    return total


def rhs_column(bundle: MatrixBundle, ds: DistinguishedSet) -> List[HomoElem]:
    """-(D* + E*) nu."""
    return [-bundle.de_nu(gamma) for gamma in ds.rows]


def build_Bstar_j(bundle: MatrixBundle, ds: DistinguishedSet, j: int) -> Tuple[List[List[HomoElem]], HomoElem]:
    """B* with column j replaced by -(D* + E*) nu, and its determinant."""
    if j not in ds.columns:
        raise DomainError(f"column {j} is not part of B*")
    index = ds.columns.index(j)
    column = rhs_column(bundle, ds)
    matrix = [list(row) for row in bstar_matrix(bundle, ds)]
    for i, value in enumerate(column):
        matrix[i][index] = value
    return matrix, cofactor_determinant(matrix, HomoElem.zero(bundle.layout))


def compute_R_gamma(bundle: MatrixBundle, ds: DistinguishedSet, gamma: Sequence[int]) -> HomoElem:
    gamma = tuple(gamma)
    if gamma in ds:
        raise DomainError(f"gamma {gamma} belongs to the distinguished set")
    det = det_Bstar(bundle, ds)
    total = det * bundle.de_nu(gamma)
    for j in bundle.family.degrees:
        entry = bundle.B.entry(gamma, j)
        if j not in ds.columns:
            if not entry.is_zero():
                raise InvariantViolation(f"B_{{{j},{gamma}}} must vanish outside the B* columns", code="OMITTED_COLUMN")
            continue
        if entry.is_zero():
            continue
        _, det_j = build_Bstar_j(bundle, ds, j)
        total = total + entry * det_j
    return total


# ---------------------------------------------------------------------------
# W extraction
# ---------------------------------------------------------------------------

@dataclass
class Extraction:
    coefficient: HomoElem
    body: Poly
    s1: int
    parts: Dict[int, Poly]


def predicted_s1(f: PhaseFamily, case: CaseLabel) -> int:
    return (1 if case is CaseLabel.A else 2) + sum(f.degrees)


def extract_W(R: HomoElem, d0: int, s1: int, degrees: Sequence[int]) -> Extraction:
    """tau^{d0} coefficient of R written as W / s^{s1}, split as W = sum_j nu_j W_j."""
    layout = R.layout
    coefficient = R.tau_coefficient(d0)
    try:
        body = coefficient.rebase(s1)
    except PolyError as exc:
        raise InvariantViolation(f"tau^{d0} coefficient is not a polynomial over s^{s1}", code="W_NOT_POLYNOMIAL") from exc
    if body.degree_in(layout.s) > 0:
        raise InvariantViolation(f"tau^{d0} coefficient keeps an odd power of |u|", code="W_NOT_POLYNOMIAL")
    names = [f"nu{j}" for j in degrees]
    linear, remainder = HomoElem(layout, body).linear_parts(names)
    if not remainder.is_zero():
        raise InvariantViolation("W has a part free of nu", code="W_NOT_LINEAR")
    keep = list(range(layout.n))
    parts = {j: linear[f"nu{j}"].body.restrict(keep) for j in degrees if f"nu{j}" in linear}
    return Extraction(coefficient, body, s1, parts)


def w_numeric(parts: Mapping[int, Poly], nu: Mapping[int, Any], n: int) -> Poly:
    total = Poly.zero(n)
    for j, poly in parts.items():
        total = total + poly * Fraction(nu.get(j, 0))
    return total


# ---------------------------------------------------------------------------
# Case classification
# ---------------------------------------------------------------------------

def _largest(candidates: Sequence[int], stopping: StoppingValue) -> int:
    return min(candidates, key=lambda j: (-abs(stopping.value(j)), j))


def classify_case(f: PhaseFamily, stopping: StoppingValue) -> Tuple[CaseLabel, int]:
    """Dominance is |nu_j| >= r / L; a dominant non-Q-type phase selects case A."""
    threshold = Fraction(stopping.r) / f.L if isinstance(stopping.r, (int, Fraction)) else stopping.r / f.L
    dominant = [j for j in f.degrees if abs(stopping.value(j)) >= threshold]
    if not dominant:
        raise InvariantViolation("no dominant index although |nu| >= r", code="NO_DOMINANT_INDEX")
    generic = [j for j in dominant if not is_qtype(f.phase(j), j, f.q)]
    if generic:
        return CaseLabel.A, _largest(generic, stopping)
    m0 = _largest(dominant, stopping)
    return (CaseLabel.B2 if f.has(2) else CaseLabel.B1), m0


# ---------------------------------------------------------------------------
# Certificate
# ---------------------------------------------------------------------------

@dataclass
class Certificate:
    family: PhaseFamily
    cov: ChangeOfVars
    stopping: StoppingValue
    case: CaseLabel
    m0: int
    dstar: DistinguishedSet
    gamma: MultiIndex
    d0: int
    s1: int
    det_bstar: HomoElem
    R: HomoElem
    W_parts: Dict[int, Poly]
    W: Poly
    witness: Tuple[Fraction, ...]
    witness_value: Fraction
    trace: List[Dict[str, Any]] = field(default_factory=list)
    checks: List["RecheckItem"] = field(default_factory=list)

    @property
    def s0(self) -> int:
        return self.W.degree()

    @property
    def sector(self) -> int:
        return self.cov.sector

    def passed(self) -> bool:
        return bool(self.checks) and all(item.passed for item in self.checks)


@dataclass(frozen=True)
class RecheckItem:
    name: str
    passed: bool
    detail: str = ""


def _exact_nu(stopping: StoppingValue) -> Dict[int, Fraction]:
    return {j: Fraction(v) for j, v in stopping.nu.items()}


def _try_gamma(
    bundle: MatrixBundle,
    ds: DistinguishedSet,
    gamma: MultiIndex,
    d0: int,
    m0: int,
) -> Optional[Tuple[HomoElem, Extraction]]:
    R = compute_R_gamma(bundle, ds, gamma)
    extraction = extract_W(R, d0, predicted_s1(bundle.family, ds.case), bundle.family.degrees)
    if extraction.parts.get(m0, Poly.zero(bundle.family.n)).is_zero():
        return None
    return R, extraction


def _finish(
    bundle: MatrixBundle,
    stopping: StoppingValue,
    ds: DistinguishedSet,
    gamma: MultiIndex,
    d0: int,
    m0: int,
    found: Tuple[HomoElem, Extraction],
    trace: List[Dict[str, Any]],
) -> Certificate:
    R, extraction = found
    nu = _exact_nu(stopping)
    W = w_numeric(extraction.parts, nu, bundle.family.n)
    witness = find_nonvanishing_witness(W)
    if witness is None:
        raise InvariantViolation("W vanishes identically for this nu", code="W_ZERO")
    cert = Certificate(
        family=bundle.family,
        cov=bundle.cov,
        stopping=stopping,
        case=ds.case,
        m0=m0,
        dstar=ds,
        gamma=gamma,
        d0=d0,
        s1=extraction.s1,
        det_bstar=det_Bstar(bundle, ds),
        R=R,
        W_parts=extraction.parts,
        W=W,
        witness=witness,
        witness_value=eval_rational(W, witness),
        trace=trace,
    )
    cert.checks = recheck_certificate(cert, bundle)
    return cert


def _run_first_order_search(bundle: MatrixBundle, stopping: StoppingValue, case: CaseLabel, m0: int, order: int) -> Certificate:
    ds = choose_Dstar(bundle.family, case, bundle.cov)
    for gamma in multi_indices_of_order(order, bundle.family.n - 1):
        if gamma in ds:
            continue
        found = _try_gamma(bundle, ds, gamma, 0, m0)
        if found is not None:
            trace = [{"case": case.value, "gamma": list(gamma), "outcome": "certified"}]
            return _finish(bundle, stopping, ds, gamma, 0, m0, found, trace)
    raise InvariantViolation(f"case {case.value}: no gamma of order {order} gives W_{{nu_{m0}}} != 0", code="NO_DISTINGUISHED_INDEX")


def run_case_A(bundle: MatrixBundle, stopping: StoppingValue, m0: int) -> Certificate:
    return _run_first_order_search(bundle, stopping, CaseLabel.A, m0, 1)


def run_case_B1(bundle: MatrixBundle, stopping: StoppingValue, m0: int) -> Certificate:
    return _run_first_order_search(bundle, stopping, CaseLabel.B1, m0, 2)


def _record_qtype(p2: Poly, a: int, cov: ChangeOfVars, m: int, subcase: str) -> Dict[str, Any]:
    l = cov.l
    if not (is_Qtype_in_coordinate(p2, a, l, cov.q) and is_Qtype_in_coordinate(p2, l, l, cov.q)):
        raise InvariantViolation(
            f"subcase {subcase} at m = {m + 1} but p_2 is not Q-type in coordinates {l + 1}, {a + 1}",
            code="QTYPE_RECORD_FAILED",
        )
    return {"m": m + 1, "subcase": subcase, "outcome": f"Q-type in coordinates {l + 1},{a + 1}"}


def run_case_B2(
    bundle: MatrixBundle,
    stopping: StoppingValue,
    m0: int,
    coordinates: Optional[Sequence[int]] = None,
) -> Certificate:
    """Iterate m = 0..n-2 (or the given coordinates) and stop at the first one that certifies."""
    f, cov = bundle.family, bundle.cov
    p2 = f.phase(2)
    theta, l = cov.theta, cov.l
    trace: List[Dict[str, Any]] = []
    for m in (range(f.n - 1) if coordinates is None else coordinates):
        a = cov.coordinate(m)
        e_m = unit_index(f.n - 1, m)
        b2_zero = compute_B(p2, 2, e_m, cov).is_zero()
        same_sign = theta[l] == theta[a]
        if b2_zero and not same_sign:
            ds = choose_Dstar(f, CaseLabel.B2_SUB1, cov, m)
            found = _try_gamma(bundle, ds, e_m, 1, m0)
            if found is None:
                raise InvariantViolation(f"subcase 1 at m = {m + 1} left W_{{nu_{m0}}} = 0", code="SUBCASE1_FAILED")
            trace.append({"m": m + 1, "subcase": "1", "gamma": list(e_m), "outcome": "certified"})
            return _finish(bundle, stopping, ds, e_m, 1, m0, found, trace)
        if b2_zero and same_sign:
            trace.append(_record_qtype(p2, a, cov, m, "3"))
            continue
        if same_sign:
            ds = choose_Dstar(f, CaseLabel.B2_SUB2, cov, m)
            for gamma in multi_indices_of_order(2, f.n - 1):
                if gamma in ds:
                    continue
                found = _try_gamma(bundle, ds, gamma, 1, m0)
                if found is not None:
                    trace.append({"m": m + 1, "subcase": "2", "gamma": list(gamma), "outcome": "certified"})
                    return _finish(bundle, stopping, ds, gamma, 1, m0, found, trace)
            raise InvariantViolation(f"subcase 2 at m = {m + 1}: no second-order gamma certifies", code="SUBCASE2_FAILED")
        ds = choose_Dstar(f, CaseLabel.B2_SUB4, cov, m)
        gamma = tuple(2 * e for e in e_m)
        found = _try_gamma(bundle, ds, gamma, 1, m0)
        if found is not None:
            trace.append({"m": m + 1, "subcase": "4", "gamma": list(gamma), "outcome": "certified"})
            return _finish(bundle, stopping, ds, gamma, 1, m0, found, trace)
        trace.append(_record_qtype(p2, a, cov, m, "4"))
    raise AllCoordinatesQType(
        "p_2 is Q-type in every coordinate pair of sector "
        f"{cov.sector}: " + "; ".join(item["outcome"] for item in trace),
        trace=trace,
    )


def certify(
    f: PhaseFamily,
    stopping: StoppingValue,
    cov: ChangeOfVars,
    enforce_gate: bool = True,
    bundle: Optional[MatrixBundle] = None,
) -> Certificate:
    if enforce_gate:
        require_admissible(f)
    missing = set(stopping.nu) - set(f.degrees)
    if missing:
        raise DomainError(f"nu has entries for degrees {sorted(missing)} outside Lambda")
    bundle = bundle or build_matrices(f, cov, enforce_gate=enforce_gate)
    case, m0 = classify_case(f, stopping)
    if case is CaseLabel.A:
        return run_case_A(bundle, stopping, m0)
    if case is CaseLabel.B1:
        return run_case_B1(bundle, stopping, m0)
    return run_case_B2(bundle, stopping, m0)


def certify_all_sectors(
    f: PhaseFamily,
    stopping: StoppingValue,
    enforce_gate: bool = True,
    mapper: Optional[Callable[[Callable, Sequence], List]] = None,
) -> List[Certificate]:
    if enforce_gate:
        require_admissible(f)
    sectors = [ChangeOfVars(f.q, l) for l in range(f.n)]
    run = lambda cov: certify(f, stopping, cov, enforce_gate=enforce_gate)
    return mapper(run, sectors) if mapper else [run(cov) for cov in sectors]


# ---------------------------------------------------------------------------
# Independent re-checks
# ---------------------------------------------------------------------------

RATIONAL_POINTS = {
    2: [(3, 4), (5, -12), (-8, 15)],
    3: [(1, 2, 2), (2, -3, 6), (-4, 4, 7)],
    4: [(1, 1, 1, 1), (2, 4, 5, 6), (1, -2, 2, 4)],
}


def _rational_point(n: int, index: int = 0) -> Tuple[Tuple[Fraction, ...], Fraction]:
    """A point with rational |u|."""
    if n in RATIONAL_POINTS:
        point = tuple(Fraction(x) for x in RATIONAL_POINTS[n][index % len(RATIONAL_POINTS[n])])
    else:
        point = tuple(Fraction(x) for x in ((2,) * 4 + (0,) * (n - 4)))
    norm = Fraction(math.isqrt(int(sum(x * x for x in point))))
    return point, norm


def cramer_identity_holds(bundle: MatrixBundle, ds: DistinguishedSet, nu: Mapping[int, Fraction], tau: Fraction = Fraction(1, 3)) -> bool:
    """At rational points, det B* x_j == det B^{*,j} where B* x = -(D* + E*) nu."""
    extras = {f"nu{j}": Fraction(nu.get(j, 0)) for j in bundle.family.degrees}
    for index in range(2):
        u, norm = _rational_point(bundle.family.n, index)
        if u[bundle.cov.l] == 0:
            continue
        value = lambda e: e.evaluate_exact(u, norm, tau, extras)
        matrix = [[value(e) for e in row] for row in bstar_matrix(bundle, ds)]
        rhs = [value(e) for e in rhs_column(bundle, ds)]
        det = value(det_Bstar(bundle, ds))
        if det == 0:
            continue
        solution = solve_rational(matrix, rhs)
        for k, j in enumerate(ds.columns):
            _, det_j = build_Bstar_j(bundle, ds, j)
            if det * solution[k] != value(det_j):
                return False
    return True


def lemma_highdeg_holds(bundle: MatrixBundle, ds: DistinguishedSet) -> bool:
    """In subcases B2.2 and B2.4 every det B^{*,j}, j >= 3, vanishes or has tau-order >= 1."""
    for j in ds.columns:
        if j < 3:
            continue
        _, det_j = build_Bstar_j(bundle, ds, j)
        lowest = det_j.min_tau_degree()
        if lowest is not None and lowest < 1:
            return False
    return True


def _triangular(bundle: MatrixBundle, ds: DistinguishedSet) -> bool:
    matrix = bstar_matrix(bundle, ds)
    for i, row in enumerate(matrix):
        for k, entry in enumerate(row):
            if k < i and not entry.is_zero():
                return False
            if k == i and entry.is_zero():
                return False
    return True


def recheck_certificate(cert: Certificate, bundle: Optional[MatrixBundle] = None) -> List[RecheckItem]:
    """Recompute every certified field from scratch."""
    f, cov, ds = cert.family, cert.cov, cert.dstar
    bundle = bundle or build_matrices(f, cov, enforce_gate=False)
    items: List[RecheckItem] = []

    def add(name: str, passed: bool, detail: str = "") -> None:
        items.append(RecheckItem(name, bool(passed), detail))

    value = eval_rational(cert.W, cert.witness)
    add("witness_nonvanishing", value != 0 and value == cert.witness_value, f"W(witness) = {value}")

    det = det_Bstar(bundle, ds)
    lowest = det.min_tau_degree()
    expected_d0 = (lowest or 0) + (1 if ds.case is CaseLabel.B2_SUB1 else 0)
    add("d0_relation", cert.d0 == expected_d0, f"min tau-degree of det B* = {lowest}, d0 = {cert.d0}")

    orders_ok = all(
        mi_abs(g) == (1 if (j == 2 and ds.case in (CaseLabel.B2_SUB2, CaseLabel.B2_SUB4)) else j)
        for j, g in ds.entries
    )
    add("distinguished_orders", orders_ok, str(ds.to_dict()))
    add("gamma_outside_Dstar", cert.gamma not in ds, f"gamma = {cert.gamma}")
    add("upper_triangular", _triangular(bundle, ds))
    add("product_formula", product_formula(bundle, ds) == det)

    rows = list(ds.rows) + [cert.gamma]
    nu = _exact_nu(cert.stopping)
    oracle = oracle_direct_expansion(f, cov, nu, None, bundle.layout)
    identity = all(bundle.row_total(g, nu, None) == oracle.get(g, HomoElem.zero(bundle.layout)) for g in rows)
    add("matrix_identity", identity, f"rows {[list(g) for g in rows]}")

    R = compute_R_gamma(bundle, ds, cert.gamma)
    extraction = extract_W(R, cert.d0, predicted_s1(f, ds.case), f.degrees)
    add("W_recomputed", extraction.parts == cert.W_parts and R == cert.R)

    degrees = {}
    homogeneous = True
    for j, part in cert.W_parts.items():
        if part.is_zero():
            continue
        degree = part.degree()
        homogeneous = homogeneous and part.is_homogeneous(degree)
        degrees[j] = degree
    separated = homogeneous and len(set(degrees.values())) == len(degrees)
    dominant_part = cert.W_parts.get(cert.m0, Poly.zero(f.n))
    bound = abs(nu.get(cert.m0, 0)) * coefficient_norm(dominant_part)
    add(
        "degree_separation",
        separated and coefficient_norm(cert.W) >= bound > 0,
        f"[[W]] = {coefficient_norm(cert.W)}, |nu_m0| [[W_m0]] = {bound}",
    )

    tau_degree = cert.R.max_tau_degree() or 0
    add("tau_degree_bound", tau_degree <= f.d ** (f.d + 1), f"deg_tau R = {tau_degree}")

    if ds.case in (CaseLabel.B2_SUB2, CaseLabel.B2_SUB4):
        add("highdeg_dichotomy", lemma_highdeg_holds(bundle, ds))
    add("cramer_identity", cramer_identity_holds(bundle, ds, nu))
    return items


# ---------------------------------------------------------------------------
# Closed-form coefficient checks for subcases 1 and 4
# ---------------------------------------------------------------------------

def subcase1_monomial_coefficient(p: Poly, m0: int, cov: ChangeOfVars, m: int) -> Fraction:
    """Coefficient of u^{(m0-1)e_l + e_{m(l)}} in |u|^2 Xi_{m0,gamma^m(1)} written with u in place of u~."""
    n = cov.n
    a = cov.coordinate(m)
    u_form = xi_polynomial(p, m0, unit_index(n - 1, m), cov).twist_monomials(cov.theta)
    mono = [0] * n
    mono[cov.l] = m0 - 1
    mono[a] += 1
    return u_form.coefficient(tuple(mono))


def subcase1_expected(m0: int, cov: ChangeOfVars, m: int) -> Fraction:
    """theta_l^k (m0 - theta_l theta_{m(l)} m0) with k = m0 / 2."""
    theta_l = cov.theta[cov.l]
    theta_a = cov.theta[cov.coordinate(m)]
    return Fraction(theta_l ** (m0 // 2) * (m0 - theta_l * theta_a * m0))


def bd_bx_polynomial(p2: Poly, pj: Poly, j: int, cov: ChangeOfVars, m: int, gamma2: Optional[Sequence[int]] = None) -> Poly:
    """|u|-cleared B_{2,e_m} D_{j,gamma} + theta_l theta_{m(l)} B_{2,gamma} B_{j,e_m}, gamma = 2 e_m by default."""
    n = cov.n
    e_m = unit_index(n - 1, m)
    gamma = tuple(gamma2) if gamma2 is not None else tuple(2 * e for e in e_m)
    a = cov.coordinate(m)
    sign = cov.theta[cov.l] * cov.theta[a]
    first = compute_B_twisted(p2, 2, e_m, cov) * compute_D(pj, j, gamma, cov)
    second = compute_B_twisted(p2, 2, gamma, cov) * compute_B_twisted(pj, j, e_m, cov) * sign
    return first + second


def _d2(p2: Poly, i: int, k: int) -> Fraction:
    mono = [0] * p2.nvars
    mono[i] += 1
    mono[k] += 1
    return p2.coefficient(tuple(mono))


def lemma_abc_coefficients(p2: Poly, j: int, cov: ChangeOfVars, m: int, pj: Optional[Poly] = None) -> Dict[str, Fraction]:
    """A, B, C, D_i, E_i read off the cleared BD-BX polynomial with p_j = Q^{j/2} unless given."""
    n, l = cov.n, cov.l
    a = cov.coordinate(m)
    pj = pj if pj is not None else cov.q.power(j // 2)
    x = bd_bx_polynomial(p2, pj, j, cov, m)

    def mono(powers: Dict[int, int]) -> Tuple[int, ...]:
        exps = [0] * n
        for index, e in powers.items():
            exps[index] += e
        return tuple(exps)

    out = {
        "A": x.coefficient(mono({a: j + 2})),
        "B": x.coefficient(mono({a: j + 1, l: 1})),
        "C": x.coefficient(mono({a: 1, l: j + 1})),
    }
    for i in range(n):
        if i in (l, a):
            continue
        out[f"D{i + 1}"] = x.coefficient(mono({i: 1, a: j + 1}))
        out[f"E{i + 1}"] = x.coefficient(mono({i: 1, l: j + 1}))
    return out


def lemma_abc_closed_forms(p2: Poly, j: int, cov: ChangeOfVars, m: int) -> Dict[str, Fraction]:
    """Closed forms with c_{2 omega} = (k! / omega!) theta^omega, k = j / 2."""
    theta, l = cov.theta, cov.l
    a = cov.coordinate(m)
    k = j // 2
    th_l, th_a = theta[l], theta[a]
    c_l_first = Fraction(k * th_l * th_a ** (k - 1))
    c_a_first = Fraction(k * th_a * th_l ** (k - 1))
    d_al, d_ll, d_aa = _d2(p2, a, l), _d2(p2, l, l), _d2(p2, a, a)
    out = {
        "A": d_al * c_l_first,
        "B": (d_ll - d_aa) * th_a ** k * j - (th_a - th_l) * j * th_a ** (k - 1) * d_ll,
        "C": (d_ll - d_aa) * th_l ** k * j - (th_a - th_l) * j * th_l ** (k - 1) * d_aa,
    }
    for i in range(cov.n):
        if i in (l, a):
            continue
        out[f"D{i + 1}"] = _d2(p2, i, l) * c_l_first * th_a * theta[i]
        out[f"E{i + 1}"] = -_d2(p2, i, a) * c_a_first * th_l * theta[i]
    return out
