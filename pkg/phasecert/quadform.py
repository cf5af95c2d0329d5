"""Quadratic-form bookkeeping: signs, the twist, phase families and the admissibility gate."""

import hashlib
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple, Union

from phasecert.errors import AdmissibilityError, ConfigError, DomainError, PolyError, RejectionReason
from phasecert.polyring import Poly, m_of_l, unit_index

Number = Union[int, float, Fraction]


@dataclass(frozen=True)
class QuadForm:
    """Q(y) = sum_i theta_i y_i^2 with theta_i in {+1, -1}."""

    theta: Tuple[int, ...]

    def __post_init__(self):
        theta = tuple(int(t) for t in self.theta)
        if any(t not in (1, -1) for t in theta):
            raise DomainError(f"theta entries must be +1 or -1, got {self.theta}")
        object.__setattr__(self, "theta", theta)

    @property
    def n(self) -> int:
        return len(self.theta)

    @property
    def signature(self) -> Tuple[int, int]:
        positive = sum(1 for t in self.theta if t > 0)
        return positive, self.n - positive

    def poly(self) -> Poly:
        return Poly(self.n, {tuple(2 if k == i else 0 for k in range(self.n)): t for i, t in enumerate(self.theta)})

    def norm_poly(self) -> Poly:
        """|y|^2."""
        return Poly(self.n, {tuple(2 if k == i else 0 for k in range(self.n)): 1 for i in range(self.n)})

    def power(self, k: int) -> Poly:
        return self.poly() ** k

    def twist(self, u: Sequence) -> List:
        return twist(u, self)

    def to_text(self) -> str:
        return "[" + ", ".join(str(t) for t in self.theta) + "]"


def twist(u: Sequence, q: QuadForm) -> List:
    """u~ = (theta_1 u_1, ..., theta_n u_n); an involution."""
    if len(u) != q.n:
        raise DomainError(f"vector of length {len(u)} does not match n = {q.n}")
    return [t * x for t, x in zip(q.theta, u)]


class PhaseKind(Enum):
    ZERO = "zero"
    QTYPE = "Qtype"
    PARABOLIC = "parabolic"
    NEITHER = "neither"


def _multiple_of(p: Poly, target: Poly) -> Optional[Fraction]:
    """C with p == C * target, or None. C is read off the lexicographically first monomial of p."""
    if p.is_zero():
        return Fraction(0)
    if target.is_zero():
        return None
    first = min(mono for mono, _ in p.items())
    reference = target.coefficient(first)
    if reference == 0:
        return None
    constant = p.coefficient(first) / reference
    return constant if p == target * constant else None


def classify_phase(p: Poly, j: int, q: QuadForm) -> FrozenSet[PhaseKind]:
    """Q-type means p = C Q^{j/2}, parabolic means p = C |y|^j, C != 0."""
    if p.nvars != q.n:
        raise PolyError(f"phase has {p.nvars} variables, form has {q.n}")
    if not p.is_homogeneous(j):
        raise AdmissibilityError(RejectionReason.NOT_HOMOGENEOUS, f"phase is not homogeneous of degree {j}")
    if p.is_zero():
        return frozenset({PhaseKind.ZERO})
    kinds = set()
    if j % 2 == 0:
        if _multiple_of(p, q.power(j // 2)):
            kinds.add(PhaseKind.QTYPE)
        if _multiple_of(p, q.norm_poly() ** (j // 2)):
            kinds.add(PhaseKind.PARABOLIC)
    return frozenset(kinds or {PhaseKind.NEITHER})


def is_qtype(p: Poly, j: int, q: QuadForm) -> bool:
    return PhaseKind.QTYPE in classify_phase(p, j, q)


def is_parabolic(p: Poly, j: int, q: QuadForm) -> bool:
    return PhaseKind.PARABOLIC in classify_phase(p, j, q)


@dataclass(frozen=True)
class PhaseFamily:
    """Quadratic form plus phases keyed by declared degree; zero phases are dropped."""

    q: QuadForm
    phases: Mapping[int, Poly]
    declared_d: Optional[int] = None
    _items: Tuple[Tuple[int, Poly], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        items = []
        for j, p in sorted(self.phases.items()):
            if p.nvars != self.q.n:
                raise PolyError(f"phase p_{j} has {p.nvars} variables, expected n = {self.q.n}")
            if not p.is_zero():
                items.append((int(j), p))
        object.__setattr__(self, "_items", tuple(items))
        object.__setattr__(self, "phases", dict(items))

    @property
    def n(self) -> int:
        return self.q.n

    @property
    def theta(self) -> Tuple[int, ...]:
        return self.q.theta

    @property
    def degrees(self) -> List[int]:
        """Lambda, increasing."""
        return [j for j, _ in self._items]

    @property
    def L(self) -> int:
        return len(self._items)

    @property
    def d(self) -> int:
        top = max(self.degrees, default=0)
        return max(top, self.declared_d or 0)

    def phase(self, j: int) -> Poly:
        return self.phases.get(j, Poly.zero(self.n))

    def has(self, j: int) -> bool:
        return j in self.phases

    def with_phases(self, phases: Mapping[int, Poly]) -> "PhaseFamily":
        return PhaseFamily(self.q, phases, self.declared_d)

    def canonical_text(self) -> str:
        names = [f"y{i + 1}" for i in range(self.n)]
        lines = [f"n={self.n}", f"theta={self.q.to_text()}", f"d={self.d}"]
        lines.extend(f"p{j}={p.to_text(names)}" for j, p in self._items)
        return "\n".join(lines)

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical_text().encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class AdmissibilityResult:
    ok: bool
    reason: Optional[RejectionReason] = None
    detail: str = ""


def check_admissibility(f: PhaseFamily) -> AdmissibilityResult:
    if f.n < 2:
        return AdmissibilityResult(False, RejectionReason.DIMENSION_TOO_SMALL, f"n = {f.n}; need n >= 2")
    if f.L == 0:
        return AdmissibilityResult(False, RejectionReason.NO_PHASES, "every phase is zero")
    for j in f.degrees:
        if j == 1:
            return AdmissibilityResult(False, RejectionReason.LINEAR_PHASE, "p_1 is nonzero")
        if j < 1 or j > f.d:
            return AdmissibilityResult(False, RejectionReason.NOT_HOMOGENEOUS, f"degree key {j} outside [2, {f.d}]")
        if not f.phase(j).is_homogeneous(j):
            return AdmissibilityResult(False, RejectionReason.NOT_HOMOGENEOUS, f"p_{j} is not homogeneous of degree {j}")
    if f.has(2):
        constant = _multiple_of(f.phase(2), f.q.poly())
        if constant:
            return AdmissibilityResult(False, RejectionReason.QUADRATIC_IS_Q, f"p_2 = {constant} * Q")
    return AdmissibilityResult(True)


def require_admissible(f: PhaseFamily) -> None:
    result = check_admissibility(f)
    if not result.ok:
        raise AdmissibilityError(result.reason, result.detail)


@dataclass(frozen=True)
class StoppingValue:
    """Modulation coefficients nu_j, j in Lambda, with r <= sum |nu_j| <= 2r."""

    r: Number
    nu: Mapping[int, Number]

    def __post_init__(self):
        if self.r <= 0:
            raise ConfigError(f"r must be positive, got {self.r}")
        norm = self.norm
        if not (self.r <= norm <= 2 * self.r):
            raise ConfigError(f"|nu| = {float(norm):.6g} is outside [r, 2r] for r = {float(self.r):.6g}")
        object.__setattr__(self, "nu", dict(sorted(self.nu.items())))

    @property
    def norm(self) -> Number:
        return sum(abs(v) for v in self.nu.values())

    def value(self, j: int) -> Number:
        return self.nu.get(j, 0)

    def is_exact(self) -> bool:
        return all(isinstance(v, (int, Fraction)) for v in self.nu.values())

    @classmethod
    def from_direction(cls, r: Number, direction: Mapping[int, Number]) -> "StoppingValue":
        """nu = r * direction / |direction|."""
        total = sum(abs(v) for v in direction.values())
        if total == 0:
            raise ConfigError("nu direction is zero")
        exact = isinstance(r, (int, Fraction)) and all(isinstance(v, (int, Fraction)) for v in direction.values())
        if exact:
            scale = Fraction(r) / Fraction(total)
            return cls(Fraction(r), {j: Fraction(v) * scale for j, v in direction.items()})
        return cls(float(r), {j: float(r) * float(v) / float(total) for j, v in direction.items()})


def _d(p2: Poly, i: int, j: int) -> Fraction:
    if i == j:
        return p2.coefficient(tuple(2 if k == i else 0 for k in range(p2.nvars)))
    return p2.coefficient(tuple(1 if k in (i, j) else 0 for k in range(p2.nvars)))


def is_Qtype_in_coordinate(p2: Poly, i: int, l: int, q: QuadForm) -> bool:
    """theta_l d_{2e_l} = theta_i d_{2e_i} and d_{e_i+e_j} = 0 for every j != i (0-based)."""
    if not p2.is_homogeneous(2):
        raise AdmissibilityError(RejectionReason.NOT_HOMOGENEOUS, "p_2 is not quadratic")
    if q.theta[l] * _d(p2, l, l) != q.theta[i] * _d(p2, i, i):
        return False
    return all(_d(p2, i, j) == 0 for j in range(q.n) if j != i)


def is_Qtype_in_all_coordinates(p2: Poly, l: int, q: QuadForm) -> bool:
    return is_Qtype_in_coordinate(p2, l, l, q) and all(
        is_Qtype_in_coordinate(p2, m_of_l(m, l), l, q) for m in range(q.n - 1)
    )


def sector_of(u: Sequence[float]) -> int:
    """Smallest index among the coordinates of maximal modulus."""
    magnitudes = [abs(float(x)) for x in u]
    top = max(magnitudes)
    return magnitudes.index(top)


# ---------------------------------------------------------------------------
# Congruence normalization
# ---------------------------------------------------------------------------

Matrix = List[List[Fraction]]


def rational_sqrt(value: Fraction) -> Optional[Fraction]:
    value = Fraction(value)
    if value < 0:
        return None
    num, den = value.numerator, value.denominator
    rn, rd = math.isqrt(num), math.isqrt(den)
    if rn * rn == num and rd * rd == den:
        return Fraction(rn, rd)
    return None


@dataclass(frozen=True)
class NormalizedForm:
    """T^t A T = diag(a); Q in normalized coordinates is sum sign(a_i) x_i^2 after x_i -> x_i / sqrt|a_i|."""

    quad: QuadForm
    transform: Tuple[Tuple[Fraction, ...], ...]
    diagonal: Tuple[Fraction, ...]
    scales: Tuple[float, ...]

    def exact_substitution(self) -> Optional[Matrix]:
        """Rational matrix S with y = S x putting Q into signed-sum form, or None for irrational scales."""
        roots = [rational_sqrt(abs(a)) for a in self.diagonal]
        if any(r is None for r in roots):
            return None
        return [[entry / roots[k] for k, entry in enumerate(row)] for row in self.transform]

    def rewrite_phase(self, p: Poly) -> Poly:
        substitution = self.exact_substitution()
        if substitution is None:
            raise ConfigError("quadratic form needs irrational rescaling; symbolic rewriting is unavailable")
        n = len(substitution)
        images = [
            Poly(n, {unit_index(n, k): substitution[i][k] for k in range(n)})
            for i in range(n)
        ]
        return p.compose(images)


def _as_matrix(qmat: Sequence[Sequence]) -> Matrix:
    matrix = [[Fraction(str(x)) if isinstance(x, float) else Fraction(x) for x in row] for row in qmat]
    size = len(matrix)
    if size == 0 or any(len(row) != size for row in matrix):
        raise DomainError("quadratic form matrix must be square and non-empty")
    for i in range(size):
        for j in range(i):
            if matrix[i][j] != matrix[j][i]:
                raise DomainError("quadratic form matrix must be symmetric")
    return matrix


def _column_add(a: Matrix, t: Matrix, target: int, source: int, factor: Fraction) -> None:
    """Congruence a <- E^t a E where column target += factor * column source."""
    size = len(a)
    for row in range(size):
        a[row][target] += factor * a[row][source]
    for col in range(size):
        a[target][col] += factor * a[source][col]
    for row in range(size):
        t[row][target] += factor * t[row][source]


def _swap(a: Matrix, t: Matrix, i: int, j: int) -> None:
    a[i], a[j] = a[j], a[i]
    for row in a:
        row[i], row[j] = row[j], row[i]
    for row in t:
        row[i], row[j] = row[j], row[i]


def normalize_quadratic_form(qmat: Sequence[Sequence]) -> NormalizedForm:
    """Lagrange's symmetric elimination over Q."""
    a = _as_matrix(qmat)
    size = len(a)
    t = [[Fraction(int(i == j)) for j in range(size)] for i in range(size)]
    for k in range(size):
        if a[k][k] == 0:
            pivot = next((j for j in range(k + 1, size) if a[j][j] != 0), None)
            if pivot is not None:
                _swap(a, t, k, pivot)
            else:
                partner = next((j for j in range(k + 1, size) if a[k][j] != 0), None)
                if partner is None:
                    raise AdmissibilityError(RejectionReason.DEGENERATE_FORM, "quadratic form matrix is singular")
                _column_add(a, t, k, partner, Fraction(1))
        for j in range(k + 1, size):
            if a[k][j]:
                _column_add(a, t, j, k, -a[k][j] / a[k][k])
    diagonal = tuple(a[i][i] for i in range(size))
    theta = tuple(1 if x > 0 else -1 for x in diagonal)
    scales = tuple(float(abs(x)) ** 0.5 for x in diagonal)
    return NormalizedForm(QuadForm(theta), tuple(tuple(row) for row in t), diagonal, scales)


def congruent(qmat: Sequence[Sequence], p: Sequence[Sequence]) -> Matrix:
    """P^t A P."""
    a = _as_matrix(qmat)
    pm = [[Fraction(x) for x in row] for row in p]
    size = len(a)
    ap = [[sum(a[i][k] * pm[k][j] for k in range(size)) for j in range(size)] for i in range(size)]
    return [[sum(pm[k][i] * ap[k][j] for k in range(size)) for j in range(size)] for i in range(size)]


def signature_of_matrix(qmat: Sequence[Sequence]) -> Tuple[int, int]:
    return normalize_quadratic_form(qmat).quad.signature


def quad_matrix(q: QuadForm) -> Matrix:
    return [[Fraction(q.theta[i]) if i == j else Fraction(0) for j in range(q.n)] for i in range(q.n)]


def family_from_matrix(qmat: Sequence[Sequence], phases: Mapping[int, Poly], d: Optional[int] = None) -> Tuple[PhaseFamily, NormalizedForm]:
    """Normalize a general symmetric form and rewrite the phases into its signed-sum coordinates."""
    normal = normalize_quadratic_form(qmat)
    rewritten: Dict[int, Poly] = {j: normal.rewrite_phase(p) for j, p in phases.items()}
    return PhaseFamily(normal.quad, rewritten, d), normal
