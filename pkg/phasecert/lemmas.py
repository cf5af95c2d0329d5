"""
Seeded property ensembles behind ``phasecert check-lemmas``.

Every ensemble draws its instances from one ``numpy.random.Generator`` and
returns a :class:`LemmaCheckResult`; a failure records the offending
instance in ``detail`` so it can be replayed.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from rich.console import Console

from phasecert.coeffcalc import (
    ChangeOfVars,
    compare_with_oracle,
    compute_B,
    compute_B_twisted,
    compute_D,
    euler_twisted,
    expand_phase_in_sigma,
    xi_polynomial,
)
from phasecert.errors import AdmissibilityError, AllCoordinatesQType, PhaseCertError
from phasecert.matrixcert import (
    bd_bx_polynomial,
    build_matrices,
    certify,
    cramer_identity_holds,
    lemma_abc_closed_forms,
    lemma_abc_coefficients,
    run_case_B2,
    subcase1_expected,
    subcase1_monomial_coefficient,
)
from phasecert.polyring import Poly, multi_indices_of_order, unit_index
from phasecert.quadform import (
    PhaseFamily,
    QuadForm,
    StoppingValue,
    check_admissibility,
    congruent,
    is_parabolic,
    is_qtype,
    normalize_quadratic_form,
    signature_of_matrix,
)

console = Console()

Mapper = Callable[[Callable, Sequence], List]

COEFFICIENTS = list(range(-3, 4))
SIGNATURES = {2: [(1, 1), (1, -1), (-1, -1)], 3: [(1, 1, 1), (1, 1, -1), (1, -1, -1), (-1, -1, -1)]}


@dataclass
class LemmaCheckResult:
    name: str
    instances: int
    failures: int
    detail: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.failures == 0 and self.instances > 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "instances": self.instances,
            "failures": self.failures,
            "passed": self.passed,
            "detail": list(self.detail),
        }


def _serial(fn: Callable, items: Sequence) -> List:
    return [fn(item) for item in items]


def _collect(name: str, outcomes: Sequence[Optional[str]]) -> LemmaCheckResult:
    """``None`` marks a passing instance, a string describes a failure."""
    failures = [o for o in outcomes if o is not None]
    return LemmaCheckResult(name, len(outcomes), len(failures), failures[:20])


# ---------------------------------------------------------------------------
# Instance generators
# ---------------------------------------------------------------------------

def random_homogeneous(n: int, j: int, rng: np.random.Generator, density: float = 0.5, even_only: bool = False) -> Poly:
    monomials = multi_indices_of_order(j, n)
    if even_only:
        monomials = [m for m in monomials if all(e % 2 == 0 for e in m)]
    while True:
        terms = {}
        for mono in monomials:
            if rng.random() < density:
                terms[mono] = int(rng.choice(COEFFICIENTS))
        p = Poly(n, terms)
        if not p.is_zero():
            return p


def random_theta(n: int, rng: np.random.Generator) -> QuadForm:
    return QuadForm(tuple(int(t) for t in rng.choice([1, -1], size=n)))


def random_family(rng: np.random.Generator, dims: Sequence[int] = (2, 3), max_degree: int = 5) -> PhaseFamily:
    """An admissible family with coefficients in -3..3."""
    while True:
        n = int(rng.choice(list(dims)))
        d = int(rng.integers(2, max_degree + 1))
        degrees = [j for j in range(2, d + 1) if j == d or rng.random() < 0.5]
        q = random_theta(n, rng)
        family = PhaseFamily(q, {j: random_homogeneous(n, j, rng, density=0.4) for j in degrees})
        if check_admissibility(family).ok:
            return family


def _rational(rng: np.random.Generator, low: int = -9, high: int = 9) -> Fraction:
    while True:
        value = Fraction(int(rng.integers(low, high + 1)), int(rng.integers(1, 5)))
        if value:
            return value


# ---------------------------------------------------------------------------
# Ensembles
# ---------------------------------------------------------------------------

def _decomposition_instance(case) -> Optional[str]:
    family, l, nu, mu = case
    expansion = expand_phase_in_sigma(family, ChangeOfVars(family.q, l))
    mismatches = compare_with_oracle(expansion, nu, mu)
    if mismatches:
        return f"{family.canonical_text()} l={l + 1}: gammas {mismatches}"
    return None


def check_decomposition(rng: np.random.Generator, count: int = 25, mapper: Optional[Mapper] = None) -> LemmaCheckResult:
    """B/D/E assembly against direct substitution, symbolic or rational nu and mu."""
    cases = []
    for index in range(count):
        family = random_family(rng)
        l = int(rng.integers(0, family.n))
        if index % 2:
            nu = {j: _rational(rng) for j in family.degrees}
            mu = {j: _rational(rng) for j in family.degrees}
        else:
            nu = mu = None
        cases.append((family, l, nu, mu))
    return _collect("decomposition", (mapper or _serial)(_decomposition_instance, cases))


def _propB_instance(case: Tuple[Poly, int, ChangeOfVars]) -> Optional[str]:
    p, j, cov = case
    n = cov.n
    label = f"p={p.to_text()} j={j} theta={cov.theta} l={cov.sector}"
    parabolic = is_parabolic(p, j, cov.q)
    nonzero_orders = set()
    for order in range(1, j + 1):
        for gamma in multi_indices_of_order(order, n - 1):
            b = compute_B(p, j, gamma, cov)
            if b.is_zero():
                continue
            if not b.is_homogeneous(j):
                return f"{label}: B_gamma={gamma} not homogeneous of degree {j}"
            nonzero_orders.add(order)
            if parabolic and order % 2:
                return f"{label}: parabolic phase has B_gamma={gamma} != 0 at odd order"
    if j not in nonzero_orders:
        return f"{label}: every B with |gamma| = j vanishes"
    if not parabolic and 1 not in nonzero_orders:
        return f"{label}: non-parabolic phase with all first-order B zero"
    if parabolic and 2 not in nonzero_orders:
        return f"{label}: parabolic phase with all second-order B zero"
    return None


def check_propB(
    rng: np.random.Generator,
    per_degree: int = 50,
    degrees: Sequence[int] = (2, 3, 4, 5, 6),
    mapper: Optional[Mapper] = None,
) -> LemmaCheckResult:
    """Homogeneity, top-order nonvanishing and the parabolic parity pattern of B."""
    cases = []
    for j in degrees:
        for index in range(per_degree):
            n = int(rng.choice([2, 3]))
            q = random_theta(n, rng)
            if j % 2 == 0 and index % 5 == 0:
                p = q.norm_poly() ** (j // 2) * _rational(rng)
            else:
                p = random_homogeneous(n, j, rng)
            cases.append((p, j, ChangeOfVars(q, int(rng.integers(0, n)))))
    return _collect("propB", (mapper or _serial)(_propB_instance, cases))


def _propD_instance(case: Tuple[Poly, int, ChangeOfVars]) -> Optional[str]:
    p, j, cov = case
    n = cov.n
    label = f"p={p.to_text()} j={j} theta={cov.theta} l={cov.sector}"
    first = [compute_D(p, j, unit_index(n - 1, m), cov) for m in range(n - 1)]
    for d in first:
        if not (d.is_zero() or d.is_homogeneous(j)):
            return f"{label}: D not homogeneous of degree {j}"
    qtype = is_qtype(p, j, cov.q)
    if qtype != all(d.is_zero() for d in first):
        return f"{label}: Q-type={qtype} disagrees with the first-order D test"
    if qtype and j > 2:
        if all(compute_D(p, j, gamma, cov).is_zero() for gamma in multi_indices_of_order(2, n - 1)):
            return f"{label}: Q-type phase with every second-order D zero"
    return None


def check_propD(
    rng: np.random.Generator,
    per_degree: int = 50,
    degrees: Sequence[int] = (2, 3, 4, 5, 6),
    mapper: Optional[Mapper] = None,
) -> LemmaCheckResult:
    """Q-type iff every first-order D vanishes; Q-type phases keep a second-order D."""
    forms = [QuadForm(t) for t in [(1, 1), (1, -1), (1, 1, -1), (1, -1, -1)]]
    cases = []
    for j in degrees:
        for index in range(per_degree):
            q = forms[index % len(forms)] if index % 3 == 0 else random_theta(int(rng.choice([2, 3])), rng)
            if j % 2 == 0 and index % 3 == 0:
                p = q.power(j // 2) * _rational(rng)
            else:
                p = random_homogeneous(q.n, j, rng)
            cases.append((p, j, ChangeOfVars(q, int(rng.integers(0, q.n)))))
    return _collect("propD", (mapper or _serial)(_propD_instance, cases))


def xi_identity_holds(p: Poly, j: int, cov: ChangeOfVars, m: int) -> bool:
    """|u|^2 Xi - (sum theta_i u_i d_i) D == -theta_l theta_{m(l)} B(u~) for first-order gamma."""
    gamma = unit_index(cov.n - 1, m)
    sign = cov.theta[cov.l] * cov.theta[cov.coordinate(m)]
    lhs = xi_polynomial(p, j, gamma, cov) - euler_twisted(compute_D(p, j, gamma, cov), cov.theta)
    return lhs == compute_B_twisted(p, j, gamma, cov) * (-sign)


def _xi_instance(case) -> Optional[str]:
    p, j, cov, m = case
    if xi_identity_holds(p, j, cov, m):
        return None
    return f"p={p.to_text()} j={j} theta={cov.theta} l={cov.sector} m={m + 1}"


def check_xi_identity(
    rng: np.random.Generator,
    count: int = 20,
    degrees: Sequence[int] = (2, 4, 6),
    mapper: Optional[Mapper] = None,
) -> LemmaCheckResult:
    """Even-support phases, every sector and every first-order gamma."""
    cases = []
    for index in range(count):
        j = degrees[index % len(degrees)]
        n = int(rng.choice([2, 3]))
        q = random_theta(n, rng)
        p = random_homogeneous(n, j, rng, density=0.7, even_only=True)
        for l in range(n):
            for m in range(n - 1):
                cases.append((p, j, ChangeOfVars(q, l), m))

    return _collect("xi_identity", (mapper or _serial)(_xi_instance, cases))


def check_subcase1_coefficient(degrees: Sequence[int] = (4, 6)) -> LemmaCheckResult:
    """Monomial u^{(m0-1)e_l + e_{m(l)}} of |u|^2 Xi for p = Q^{m0/2}, over all mixed-sign sectors."""
    outcomes = []
    for m0 in degrees:
        for n, thetas in SIGNATURES.items():
            for theta in thetas:
                q = QuadForm(theta)
                for l in range(n):
                    for m in range(n - 1):
                        cov = ChangeOfVars(q, l)
                        if theta[l] == theta[cov.coordinate(m)]:
                            continue
                        got = subcase1_monomial_coefficient(q.power(m0 // 2), m0, cov, m)
                        want = subcase1_expected(m0, cov, m)
                        outcomes.append(None if got == want else f"m0={m0} theta={theta} l={l + 1} m={m + 1}: {got} != {want}")
    return _collect("subcase1_coefficient", outcomes)


def _random_p2(q: QuadForm, rng: np.random.Generator) -> Poly:
    while True:
        p2 = random_homogeneous(q.n, 2, rng, density=0.7)
        if not is_qtype(p2, 2, q):
            return p2


def _abc_instance(case) -> Optional[str]:
    p2, j, cov, m = case
    got = lemma_abc_coefficients(p2, j, cov, m)
    want = lemma_abc_closed_forms(p2, j, cov, m)
    if got != want:
        wrong = sorted(k for k in want if got.get(k) != want[k])
        return f"p2={p2.to_text()} j={j} theta={cov.theta} l={cov.sector} m={m + 1}: {wrong}"
    return None


def check_abc(
    rng: np.random.Generator,
    per_signature: int = 10,
    degrees: Sequence[int] = (4, 6),
    mapper: Optional[Mapper] = None,
) -> LemmaCheckResult:
    """A, B, C, D_i, E_i extracted symbolically against their closed forms."""
    cases = []
    for n, thetas in SIGNATURES.items():
        for theta in thetas:
            q = QuadForm(theta)
            pairs = [(l, m) for l in range(n) for m in range(n - 1) if theta[l] != theta[ChangeOfVars(q, l).coordinate(m)]]
            if not pairs:
                continue
            for index in range(per_signature):
                l, m = pairs[int(rng.integers(0, len(pairs)))]
                cases.append((_random_p2(q, rng), degrees[index % len(degrees)], ChangeOfVars(q, l), m))

    return _collect("abc_closed_forms", (mapper or _serial)(_abc_instance, cases))


def subcase4_takes_qtype_branch(p2: Poly, j: int, cov: ChangeOfVars, m: int) -> Optional[str]:
    """Run case B2 at coordinate m for {p2, Q^{j/2}} with nu = e_j; None when it records the Q-type branch."""
    family = PhaseFamily(cov.q, {2: p2, j: cov.q.power(j // 2)})
    stopping = StoppingValue(1, {2: 0, j: 1})
    bundle = build_matrices(family, cov, enforce_gate=False)
    try:
        cert = run_case_B2(bundle, stopping, j, coordinates=[m])
    except AllCoordinatesQType as exc:
        trace = exc.trace
    except PhaseCertError as exc:
        return f"{exc.code}: {exc}"
    else:
        return f"subcase {cert.trace[-1]['subcase']} certified at m = {m + 1}"
    last = trace[-1] if trace else {}
    if last.get("subcase") != "4" or not str(last.get("outcome", "")).startswith("Q-type"):
        return f"trace {trace}"
    return None


def check_abc_corollary(rng: np.random.Generator, count: int = 10, degrees: Sequence[int] = (4, 6)) -> LemmaCheckResult:
    """p2 = c (y_l^2 - y_{m(l)}^2) + (terms off l, m(l)) with mixed signs makes the BD-BX combination vanish
    and sends the subcase-4 runner down the Q-type branch."""
    outcomes = []
    for index in range(count):
        n = int(rng.choice([2, 3]))
        while True:
            q = random_theta(n, rng)
            if len(set(q.theta)) == 2:
                break
        cov_pairs = [(l, m) for l in range(n) for m in range(n - 1) if q.theta[l] != q.theta[ChangeOfVars(q, l).coordinate(m)]]
        l, m = cov_pairs[int(rng.integers(0, len(cov_pairs)))]
        cov = ChangeOfVars(q, l)
        a = cov.coordinate(m)
        c = _rational(rng)
        square = lambda k: tuple(2 if i == k else 0 for i in range(n))
        terms = {square(l): c, square(a): -c}
        for k in range(n):
            if k not in (l, a):
                terms[square(k)] = int(rng.choice(COEFFICIENTS))
        p2 = Poly(n, terms)
        j = degrees[index % len(degrees)]
        label = f"p2={p2.to_text()} theta={q.theta} l={l + 1} m={m + 1}"
        if not bd_bx_polynomial(p2, q.power(j // 2), j, cov, m).is_zero():
            outcomes.append(f"{label}: BD-BX != 0")
            continue
        problem = subcase4_takes_qtype_branch(p2, j, cov, m)
        outcomes.append(None if problem is None else f"{label}: {problem}")
    return _collect("abc_corollary", outcomes)


def _cramer_instance(case) -> Optional[str]:
    family, l, direction, tau = case
    cov = ChangeOfVars(family.q, l)
    stopping = StoppingValue.from_direction(Fraction(10), direction)
    bundle = build_matrices(family, cov)
    try:
        cert = certify(family, stopping, cov, bundle=bundle)
    except AllCoordinatesQType as exc:
        return f"{family.canonical_text()} l={l + 1}: {exc}"
    if not cramer_identity_holds(bundle, cert.dstar, stopping.nu, tau):
        return f"{family.canonical_text()} l={l + 1} nu={direction}"
    return None


def check_cramer(rng: np.random.Generator, count: int = 10, mapper: Optional[Mapper] = None) -> LemmaCheckResult:
    """det B* x_j == det B^{*,j} at rational points for certified random families."""
    cases = []
    for _ in range(count):
        family = random_family(rng, max_degree=4)
        l = int(rng.integers(0, family.n))
        direction = {j: _rational(rng) for j in family.degrees}
        cases.append((family, l, direction, Fraction(int(rng.integers(1, 9)), 10)))

    return _collect("cramer", (mapper or _serial)(_cramer_instance, cases))


def _random_invertible(n: int, rng: np.random.Generator) -> List[List[Fraction]]:
    while True:
        matrix = [[Fraction(int(rng.integers(-3, 4))) for _ in range(n)] for _ in range(n)]
        if round(float(np.linalg.det(np.array(matrix, dtype=float)))) != 0:
            return matrix


def check_sylvester(rng: np.random.Generator, count: int = 20) -> LemmaCheckResult:
    """The normalized signature survives random rational congruences."""
    outcomes = []
    while len(outcomes) < count:
        n = int(rng.choice([2, 3, 4]))
        upper = rng.integers(-4, 5, size=(n, n))
        matrix = [[Fraction(int(upper[min(i, k), max(i, k)])) for k in range(n)] for i in range(n)]
        try:
            expected = signature_of_matrix(matrix)
        except AdmissibilityError:
            continue
        moved = congruent(matrix, _random_invertible(n, rng))
        got = normalize_quadratic_form(moved).quad.signature
        outcomes.append(None if got == expected else f"A={matrix}: {got} != {expected}")
    return _collect("sylvester", outcomes)


ENSEMBLES = (
    "decomposition",
    "propB",
    "propD",
    "xi_identity",
    "subcase1_coefficient",
    "abc_closed_forms",
    "abc_corollary",
    "cramer",
    "sylvester",
)


def run_all(
    rng: np.random.Generator,
    sizes: Optional[Dict[str, int]] = None,
    mapper: Optional[Mapper] = None,
    progress: Optional[Callable[[str], None]] = None,
) -> List[LemmaCheckResult]:
    """Every ensemble in a fixed order; ``sizes`` overrides instance counts by name."""
    sizes = dict(sizes or {})
    runners: List[Tuple[str, Callable[[], LemmaCheckResult]]] = [
        ("decomposition", lambda: check_decomposition(rng, sizes.get("decomposition", 25), mapper)),
        ("propB", lambda: check_propB(rng, sizes.get("propB", 50), mapper=mapper)),
        ("propD", lambda: check_propD(rng, sizes.get("propD", 50), mapper=mapper)),
        ("xi_identity", lambda: check_xi_identity(rng, sizes.get("xi_identity", 20), mapper=mapper)),
        ("subcase1_coefficient", lambda: check_subcase1_coefficient()),
        ("abc_closed_forms", lambda: check_abc(rng, sizes.get("abc_closed_forms", 10), mapper=mapper)),
        ("abc_corollary", lambda: check_abc_corollary(rng, sizes.get("abc_corollary", 10))),
        ("cramer", lambda: check_cramer(rng, sizes.get("cramer", 10), mapper)),
        ("sylvester", lambda: check_sylvester(rng, sizes.get("sylvester", 20))),
    ]
    results = []
    for name, runner in runners:
        if progress:
            progress(name)
        result = runner()
        if not result.passed:
            console.print(f"[yellow]⚠ {name}: {result.failures} of {result.instances} instances failed[/yellow]")
        results.append(result)
    return results
