"""Exact sparse polynomials over Q and the quotient ring that carries s = |u|.

Polynomials are immutable maps from exponent tuples to nonzero ``Fraction``
coefficients. ``HomoElem`` represents ``body / s**spow`` where ``body`` lives
in Q[u_1..u_n, tau, s, extras] and every ``s**2`` is rewritten as
``u_1**2 + ... + u_n**2``.
"""

import math
import re
from fractions import Fraction
from itertools import product
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from phasecert.errors import PolyError

MultiIndex = Tuple[int, ...]
Rational = Union[int, Fraction]


# ---------------------------------------------------------------------------
# Multi-index helpers
# ---------------------------------------------------------------------------

def mi_abs(alpha: Sequence[int]) -> int:
    return sum(alpha)


def mi_leq(alpha: Sequence[int], beta: Sequence[int]) -> bool:
    """Entrywise partial order."""
    return all(a <= b for a, b in zip(alpha, beta))


def mi_factorial(alpha: Sequence[int]) -> int:
    return math.prod(math.factorial(a) for a in alpha)


def unit_index(length: int, i: int) -> MultiIndex:
    return tuple(1 if k == i else 0 for k in range(length))


def insert_at(alpha: Sequence[int], l: int, lam: int) -> MultiIndex:
    """The (alpha; lam) convention: length-(n-1) ``alpha`` with ``lam`` placed at coordinate ``l``."""
    alpha = tuple(alpha)
    return alpha[:l] + (lam,) + alpha[l:]


def m_of_l(m: int, l: int) -> int:
    """Coordinate of ``u`` addressed by sigma index ``m`` when ``l`` is omitted (0-based)."""
    return m if m < l else m + 1


def multi_indices_of_order(order: int, length: int) -> List[MultiIndex]:
    """All multi-indices of the given length and order, in ascending tuple order."""
    if length == 0:
        return [()] if order == 0 else []
    result: List[MultiIndex] = []

    def build(prefix: Tuple[int, ...], remaining: int, slots: int) -> None:
        if slots == 1:
            result.append(prefix + (remaining,))
            return
        for first in range(remaining + 1):
            build(prefix + (first,), remaining - first, slots - 1)

    build((), order, length)
    return sorted(result)


def graded_multi_indices(max_order: int, length: int, min_order: int = 1) -> List[MultiIndex]:
    """Multi-indices sorted by order, then ascending tuple order within each order."""
    indices: List[MultiIndex] = []
    for k in range(min_order, max_order + 1):
        indices.extend(multi_indices_of_order(k, length))
    return indices


def sub_indices(gamma: Sequence[int]) -> List[MultiIndex]:
    """All alpha <= gamma."""
    return [tuple(a) for a in product(*(range(g + 1) for g in gamma))]


def _falling(e: int, k: int) -> int:
    value = 1
    for t in range(k):
        value *= e - t
    return value


# ---------------------------------------------------------------------------
# Poly
# ---------------------------------------------------------------------------

class Poly:
    """Sparse multivariate polynomial with exact rational coefficients."""

    __slots__ = ("nvars", "_terms", "_hash")

    def __init__(self, nvars: int, terms: Optional[Mapping[Sequence[int], Rational]] = None):
        if nvars < 0:
            raise PolyError("nvars must be non-negative")
        clean: Dict[MultiIndex, Fraction] = {}
        for mono, coeff in (terms or {}).items():
            mono = tuple(int(e) for e in mono)
            if len(mono) != nvars:
                raise PolyError(f"monomial {mono} does not have {nvars} exponents")
            if any(e < 0 for e in mono):
                raise PolyError(f"negative exponent in {mono}")
            clean[mono] = clean.get(mono, Fraction(0)) + Fraction(coeff)
        self.nvars = nvars
        self._terms = {m: c for m, c in clean.items() if c != 0}
        self._hash: Optional[int] = None

    @classmethod
    def _raw(cls, nvars: int, terms: Dict[MultiIndex, Fraction]) -> "Poly":
        poly = cls.__new__(cls)
        poly.nvars = nvars
        poly._terms = terms
        poly._hash = None
        return poly

    # constructors -----------------------------------------------------------

    @classmethod
    def zero(cls, nvars: int) -> "Poly":
        return cls._raw(nvars, {})

    @classmethod
    def constant(cls, nvars: int, value: Rational) -> "Poly":
        value = Fraction(value)
        return cls._raw(nvars, {(0,) * nvars: value} if value else {})

    @classmethod
    def variable(cls, nvars: int, index: int) -> "Poly":
        if not 0 <= index < nvars:
            raise PolyError(f"variable index {index} out of range for {nvars} variables")
        return cls._raw(nvars, {unit_index(nvars, index): Fraction(1)})

    @classmethod
    def monomial(cls, exps: Sequence[int], coeff: Rational = 1) -> "Poly":
        return cls(len(exps), {tuple(exps): coeff})

    # inspection -------------------------------------------------------------

    @property
    def terms(self) -> Dict[MultiIndex, Fraction]:
        return dict(self._terms)

    def items(self) -> Iterable[Tuple[MultiIndex, Fraction]]:
        return self._terms.items()

    def sorted_terms(self) -> List[Tuple[MultiIndex, Fraction]]:
        """Terms in canonical order: descending lexicographic exponents."""
        return sorted(self._terms.items(), key=lambda item: item[0], reverse=True)

    def coefficient(self, mono: Sequence[int]) -> Fraction:
        return self._terms.get(tuple(mono), Fraction(0))

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(m) for m in self._terms), default=-1)

    def degree_in(self, index: int) -> int:
        return max((m[index] for m in self._terms), default=-1)

    def is_homogeneous(self, j: int) -> bool:
        return all(sum(m) == j for m in self._terms)

    def constant_term(self) -> Fraction:
        return self._terms.get((0,) * self.nvars, Fraction(0))

    def variables_used(self) -> List[int]:
        used = set()
        for mono in self._terms:
            used.update(i for i, e in enumerate(mono) if e)
        return sorted(used)

    # equality ---------------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Poly):
            return self.nvars == other.nvars and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self == Poly.constant(self.nvars, other)
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self._terms.items())))
        return self._hash

    # arithmetic -------------------------------------------------------------

    def _coerce(self, other: Any) -> "Poly":
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise PolyError(f"variable-count mismatch: {self.nvars} vs {other.nvars}")
            return other
        if isinstance(other, (int, Fraction)):
            return Poly.constant(self.nvars, other)
        raise TypeError(f"cannot combine Poly with {type(other).__name__}")

    def __add__(self, other: Any) -> "Poly":
        if not isinstance(other, (Poly, int, Fraction)):
            return NotImplemented
        other = self._coerce(other)
        terms = dict(self._terms)
        for mono, coeff in other._terms.items():
            value = terms.get(mono, 0) + coeff
            if value:
                terms[mono] = value
            else:
                terms.pop(mono, None)
        return Poly._raw(self.nvars, terms)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly._raw(self.nvars, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other: Any) -> "Poly":
        if not isinstance(other, (Poly, int, Fraction)):
            return NotImplemented
        return self + (-self._coerce(other))

    def __rsub__(self, other: Any) -> "Poly":
        return (-self) + other

    def scale(self, factor: Rational) -> "Poly":
        factor = Fraction(factor)
        if not factor:
            return Poly.zero(self.nvars)
        return Poly._raw(self.nvars, {m: c * factor for m, c in self._terms.items()})

    def __mul__(self, other: Any) -> "Poly":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if not isinstance(other, Poly):
            return NotImplemented
        other = self._coerce(other)
        terms: Dict[MultiIndex, Fraction] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                mono = tuple(a + b for a, b in zip(m1, m2))
                terms[mono] = terms.get(mono, 0) + c1 * c2
        return Poly._raw(self.nvars, {m: c for m, c in terms.items() if c})

    __rmul__ = __mul__

    def __truediv__(self, other: Rational) -> "Poly":
        if not isinstance(other, (int, Fraction)):
            return NotImplemented
        return self.scale(Fraction(1) / Fraction(other))

    def __pow__(self, exponent: int) -> "Poly":
        if exponent < 0:
            raise PolyError("negative powers are not polynomials")
        result = Poly.constant(self.nvars, 1)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            exponent >>= 1
            if exponent:
                base = base * base
        return result

    # calculus ---------------------------------------------------------------

    def derivative(self, alpha: Sequence[int]) -> "Poly":
        alpha = tuple(alpha)
        if len(alpha) != self.nvars:
            raise PolyError(f"derivative order {alpha} does not match {self.nvars} variables")
        terms: Dict[MultiIndex, Fraction] = {}
        for mono, coeff in self._terms.items():
            if all(e >= a for e, a in zip(mono, alpha)):
                factor = math.prod(_falling(e, a) for e, a in zip(mono, alpha))
                terms[tuple(e - a for e, a in zip(mono, alpha))] = coeff * factor
        return Poly._raw(self.nvars, terms)

    # evaluation and substitution ------------------------------------------

    def evaluate(self, point: Sequence[Any], one: Any = None) -> Any:
        """Evaluate at ``point``; entries may be rationals, Polys or HomoElems.

        ``one`` is the multiplicative identity of the target ring (defaults to
        ``Fraction(1)``, or to the ring identity of the first non-scalar entry).
        """
        if len(point) != self.nvars:
            raise PolyError(f"point has {len(point)} entries, expected {self.nvars}")
        if one is None:
            one = _ring_one(point)
        total = one * 0
        powers: List[List[Any]] = [[one] for _ in range(self.nvars)]
        for mono, coeff in self._terms.items():
            value = one * coeff
            for i, e in enumerate(mono):
                if e:
                    cache = powers[i]
                    while len(cache) <= e:
                        cache.append(cache[-1] * point[i])
                    value = value * cache[e]
            total = total + value
        return total

    def compose(self, images: Sequence["Poly"]) -> "Poly":
        """Substitute ``images[i]`` for variable i."""
        if not images:
            return Poly.constant(0, self.constant_term())
        return self.evaluate(images, one=Poly.constant(images[0].nvars, 1))

    def embed(self, nvars: int, positions: Sequence[int]) -> "Poly":
        """Relabel variable i as ``positions[i]`` in a ring with ``nvars`` variables."""
        if len(positions) != self.nvars:
            raise PolyError("embedding needs one position per variable")
        terms: Dict[MultiIndex, Fraction] = {}
        for mono, coeff in self._terms.items():
            target = [0] * nvars
            for i, e in enumerate(mono):
                target[positions[i]] += e
            key = tuple(target)
            terms[key] = terms.get(key, 0) + coeff
        return Poly._raw(nvars, {m: c for m, c in terms.items() if c})

    def restrict(self, keep: Sequence[int]) -> "Poly":
        """Drop every variable not in ``keep``; those variables must be absent."""
        keep = list(keep)
        dropped = set(range(self.nvars)) - set(keep)
        terms: Dict[MultiIndex, Fraction] = {}
        for mono, coeff in self._terms.items():
            if any(mono[i] for i in dropped):
                raise PolyError("cannot restrict: a dropped variable occurs in the polynomial")
            terms[tuple(mono[i] for i in keep)] = coeff
        return Poly._raw(len(keep), terms)

    def twist_monomials(self, signs: Sequence[int]) -> "Poly":
        """Substitute ``w_i -> signs[i] * w_i`` for the first ``len(signs)`` variables."""
        terms = {}
        for mono, coeff in self._terms.items():
            sign = 1
            for i, s in enumerate(signs):
                if s < 0 and mono[i] % 2:
                    sign = -sign
            terms[mono] = coeff * sign
        return Poly._raw(self.nvars, terms)

    def collect(self, indices: Sequence[int]) -> Dict[MultiIndex, "Poly"]:
        """Group by the exponents of ``indices``; keys are those exponents, values
        the cofactors with the collected variables set to exponent 0."""
        groups: Dict[MultiIndex, Dict[MultiIndex, Fraction]] = {}
        for mono, coeff in self._terms.items():
            key = tuple(mono[i] for i in indices)
            rest = list(mono)
            for i in indices:
                rest[i] = 0
            groups.setdefault(key, {})[tuple(rest)] = coeff
        return {key: Poly._raw(self.nvars, terms) for key, terms in groups.items()}

    # text -------------------------------------------------------------------

    def to_text(self, names: Optional[Sequence[str]] = None) -> str:
        """Canonical ``coeff * u1^a1 u2^a2`` rendering."""
        if not self._terms:
            return "0"
        names = list(names) if names else [f"u{i + 1}" for i in range(self.nvars)]
        parts = []
        for mono, coeff in self.sorted_terms():
            factors = []
            for name, e in zip(names, mono):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            magnitude = abs(coeff)
            if factors:
                body = " ".join(factors)
                text = body if magnitude == 1 else f"{magnitude} * {body}"
            else:
                text = str(magnitude)
            parts.append(("-" if coeff < 0 else "+", text))
        first_sign, first_text = parts[0]
        rendered = ("-" if first_sign == "-" else "") + first_text
        for sign, text in parts[1:]:
            rendered += f" {sign} {text}"
        return rendered

    def __repr__(self) -> str:
        return f"Poly({self.nvars}, {self.to_text()!r})"


def _ring_one(point: Sequence[Any]) -> Any:
    for entry in point:
        if isinstance(entry, Poly):
            return Poly.constant(entry.nvars, 1)
        if isinstance(entry, HomoElem):
            return HomoElem.one(entry.layout)
    return Fraction(1)


def coefficient_norm(p: Poly, include_constant: bool = True) -> Fraction:
    """Sum of absolute coefficients; without the constant term when ``include_constant`` is false."""
    constant = (0,) * p.nvars
    return sum(
        (abs(c) for m, c in p.items() if include_constant or m != constant),
        Fraction(0),
    )


# ---------------------------------------------------------------------------
# Module-level operations on Poly
# ---------------------------------------------------------------------------

def poly_arith(a: Poly, b: Poly, op: str) -> Poly:
    if a.nvars != b.nvars:
        raise PolyError(f"variable-count mismatch: {a.nvars} vs {b.nvars}")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise PolyError(f"unknown operation {op!r}")


def partial_derivative(p: Poly, alpha: Sequence[int]) -> Poly:
    return p.derivative(alpha)


def is_homogeneous(p: Poly, j: int) -> bool:
    return p.is_homogeneous(j)


def taylor_shift(p: Poly, point: Sequence[Any], one: Any = None) -> Dict[MultiIndex, Any]:
    """Coefficients of ``p(v + w)`` as a polynomial in ``w``: alpha -> (d_alpha p)(v) / alpha!."""
    if len(point) != p.nvars:
        raise PolyError(f"point has {len(point)} entries, expected {p.nvars}")
    if one is None:
        one = _ring_one(point)
    expansion: Dict[MultiIndex, Any] = {}
    for order in range(max(p.degree(), 0) + 1):
        for alpha in multi_indices_of_order(order, p.nvars):
            derived = p.derivative(alpha)
            if derived.is_zero():
                continue
            value = derived.evaluate(point, one) * Fraction(1, mi_factorial(alpha))
            if not _is_zero_value(value):
                expansion[alpha] = value
    return expansion


def taylor_reassemble(expansion: Mapping[MultiIndex, Any], offset: Sequence[Any], one: Any = None) -> Any:
    """Sum of ``coeff * offset**alpha`` over a Taylor expansion."""
    if one is None:
        one = _ring_one(list(expansion.values()) + list(offset))
    total = one * 0
    for alpha, coeff in expansion.items():
        term = coeff
        for value, e in zip(offset, alpha):
            for _ in range(e):
                term = term * value
        total = total + term
    return total


def _is_zero_value(value: Any) -> bool:
    if isinstance(value, (Poly, HomoElem)):
        return value.is_zero()
    return value == 0


def eval_rational(p: Poly, point: Sequence[Rational]) -> Fraction:
    return p.evaluate([Fraction(v) for v in point], Fraction(1))


def witness_grid(degree: int) -> List[int]:
    """Grid coordinates {+-1, ..., +-K, 0} with K = ceil(D/2) + 1."""
    bound = -(-max(degree, 0) // 2) + 1
    coords: List[int] = []
    for k in range(1, bound + 1):
        coords.extend([k, -k])
    coords.append(0)
    return coords


def find_nonvanishing_witness(p: Poly) -> Optional[Tuple[Fraction, ...]]:
    """Deterministic grid scan for a point where ``p`` does not vanish.

    Returns ``None`` when ``p`` is identically zero. The grid has more than
    ``deg p`` distinct values per coordinate, so a nonzero ``p`` cannot vanish
    on all of it.
    """
    if p.is_zero():
        return None
    used = p.variables_used()
    coords = witness_grid(p.degree())
    for values in product(coords, repeat=len(used)):
        point = [Fraction(0)] * p.nvars
        for index, v in zip(used, values):
            point[index] = Fraction(v)
        if eval_rational(p, point) != 0:
            return tuple(point)
    return None


# ---------------------------------------------------------------------------
# Exact division by |u|^2
# ---------------------------------------------------------------------------

def norm_squared(nvars: int, n: int) -> Poly:
    """u_1^2 + ... + u_n^2 in a ring whose first ``n`` variables are u."""
    return Poly._raw(nvars, {tuple(2 if k == i else 0 for k in range(nvars)): Fraction(1) for i in range(n)})


def divide_by_norm_squared(p: Poly, n: int) -> Optional[Poly]:
    """Exact quotient ``p / (u_1^2 + ... + u_n^2)`` or ``None`` when not divisible."""
    if p.is_zero():
        return p
    nvars = p.nvars
    remainder = dict(p.items())
    quotient: Dict[MultiIndex, Fraction] = {}
    top = max(m[0] for m in remainder)
    for level in range(top, 1, -1):
        batch = {m: c for m, c in remainder.items() if m[0] == level}
        for mono, coeff in batch.items():
            q_mono = (mono[0] - 2,) + mono[1:]
            quotient[q_mono] = quotient.get(q_mono, 0) + coeff
            del remainder[mono]
            for i in range(1, n):
                shifted = list(q_mono)
                shifted[i] += 2
                key = tuple(shifted)
                value = remainder.get(key, 0) - coeff
                if value:
                    remainder[key] = value
                else:
                    remainder.pop(key, None)
    if remainder:
        return None
    return Poly._raw(nvars, {m: c for m, c in quotient.items() if c})


# ---------------------------------------------------------------------------
# Quotient ring Q[u, tau, s, extras] / (s^2 - |u|^2)
# ---------------------------------------------------------------------------

class SymbolLayout:
    """Variable layout: u_1..u_n, tau, s, then named extras (sigma, nu, mu, ...)."""

    __slots__ = ("n", "extras", "nvars", "tau", "s", "_extra_index")

    def __init__(self, n: int, extras: Sequence[str] = ()):
        if n < 1:
            raise PolyError("a layout needs at least one u variable")
        self.n = n
        self.extras = tuple(extras)
        if len(set(self.extras)) != len(self.extras):
            raise PolyError("duplicate extra variable names")
        self.nvars = n + 2 + len(self.extras)
        self.tau = n
        self.s = n + 1
        self._extra_index = {name: n + 2 + k for k, name in enumerate(self.extras)}

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SymbolLayout) and (self.n, self.extras) == (other.n, other.extras)

    def __hash__(self) -> int:
        return hash((self.n, self.extras))

    def __repr__(self) -> str:
        return f"SymbolLayout(n={self.n}, extras={self.extras})"

    def names(self) -> List[str]:
        return [f"u{i + 1}" for i in range(self.n)] + ["tau", "s"] + list(self.extras)

    def extra_index(self, name: str) -> int:
        try:
            return self._extra_index[name]
        except KeyError:
            raise PolyError(f"layout has no variable named {name!r}") from None

    def has_extra(self, name: str) -> bool:
        return name in self._extra_index

    def u(self, i: int) -> Poly:
        return Poly.variable(self.nvars, i)

    def tau_poly(self) -> Poly:
        return Poly.variable(self.nvars, self.tau)

    def s_poly(self) -> Poly:
        return Poly.variable(self.nvars, self.s)

    def extra(self, name: str) -> Poly:
        return Poly.variable(self.nvars, self.extra_index(name))

    def norm_squared(self) -> Poly:
        return norm_squared(self.nvars, self.n)

    def from_u_poly(self, p: Poly) -> Poly:
        """Embed a polynomial in u_1..u_n into this layout."""
        if p.nvars != self.n:
            raise PolyError(f"expected a polynomial in {self.n} variables, got {p.nvars}")
        return p.embed(self.nvars, list(range(self.n)))


def _reduce_body(body: Poly, layout: SymbolLayout) -> Poly:
    s = layout.s
    if body.degree_in(s) <= 1:
        return body
    norm = layout.norm_squared()
    groups: Dict[int, Dict[MultiIndex, Fraction]] = {}
    for mono, coeff in body.items():
        e = mono[s]
        reduced = list(mono)
        reduced[s] = e % 2
        groups.setdefault(e // 2, {})[tuple(reduced)] = coeff
    result = Poly.zero(layout.nvars)
    norm_power = Poly.constant(layout.nvars, 1)
    for k in range(max(groups) + 1):
        if k in groups:
            result = result + Poly._raw(layout.nvars, groups[k]) * norm_power
        norm_power = norm_power * norm
    return result


class HomoElem:
    """``body / s**spow`` with ``s = |u|`` and ``body`` reduced to s-degree <= 1."""

    __slots__ = ("layout", "body", "spow")

    def __init__(self, layout: SymbolLayout, body: Poly, spow: int = 0):
        if body.nvars != layout.nvars:
            raise PolyError(f"body has {body.nvars} variables, layout expects {layout.nvars}")
        if spow < 0:
            raise PolyError("spow must be non-negative")
        self.layout = layout
        self.body = _reduce_body(body, layout)
        self.spow = spow

    @classmethod
    def one(cls, layout: SymbolLayout) -> "HomoElem":
        return cls(layout, Poly.constant(layout.nvars, 1))

    @classmethod
    def zero(cls, layout: SymbolLayout) -> "HomoElem":
        return cls(layout, Poly.zero(layout.nvars))

    @classmethod
    def from_u_poly(cls, layout: SymbolLayout, p: Poly, spow: int = 0) -> "HomoElem":
        return cls(layout, layout.from_u_poly(p), spow)

    def is_zero(self) -> bool:
        return self.body.is_zero()

    # arithmetic -------------------------------------------------------------

    def _lift(self, k: int) -> Poly:
        """Body multiplied by s^(k - spow), reduced."""
        diff = k - self.spow
        if diff == 0:
            return self.body
        factor = self.layout.norm_squared() ** (diff // 2)
        if diff % 2:
            factor = factor * self.layout.s_poly()
        return _reduce_body(self.body * factor, self.layout)

    def _coerce(self, other: Any) -> "HomoElem":
        if isinstance(other, HomoElem):
            if other.layout != self.layout:
                raise PolyError("HomoElems live in different layouts")
            return other
        if isinstance(other, Poly):
            return HomoElem(self.layout, other)
        if isinstance(other, (int, Fraction)):
            return HomoElem(self.layout, Poly.constant(self.layout.nvars, other))
        raise TypeError(f"cannot combine HomoElem with {type(other).__name__}")

    def __add__(self, other: Any) -> "HomoElem":
        if not isinstance(other, (HomoElem, Poly, int, Fraction)):
            return NotImplemented
        other = self._coerce(other)
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        k = max(self.spow, other.spow)
        return HomoElem(self.layout, self._lift(k) + other._lift(k), k)

    __radd__ = __add__

    def __neg__(self) -> "HomoElem":
        return HomoElem(self.layout, -self.body, self.spow)

    def __sub__(self, other: Any) -> "HomoElem":
        if not isinstance(other, (HomoElem, Poly, int, Fraction)):
            return NotImplemented
        return self + (-self._coerce(other))

    def __rsub__(self, other: Any) -> "HomoElem":
        return (-self) + other

    def __mul__(self, other: Any) -> "HomoElem":
        if isinstance(other, (int, Fraction)):
            return HomoElem(self.layout, self.body.scale(other), self.spow)
        if not isinstance(other, (HomoElem, Poly)):
            return NotImplemented
        other = self._coerce(other)
        return HomoElem(self.layout, self.body * other.body, self.spow + other.spow)

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> "HomoElem":
        result = HomoElem.one(self.layout)
        for _ in range(exponent):
            result = result * self
        return result

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, (HomoElem, Poly, int, Fraction)):
            return NotImplemented
        try:
            return (self - other).is_zero()
        except PolyError:
            return False

    def __hash__(self) -> int:
        normal = self.normalized()
        return hash((normal.layout, normal.body, normal.spow))

    # structure --------------------------------------------------------------

    def normalized(self) -> "HomoElem":
        """Equal element with the smallest possible spow."""
        current = self
        if current.is_zero():
            return HomoElem(self.layout, current.body, 0)
        while current.spow > 0:
            lowered = current._divide_by_s()
            if lowered is None:
                break
            current = HomoElem(self.layout, lowered, current.spow - 1)
        return current

    def _divide_by_s(self) -> Optional[Poly]:
        """Body / s in the quotient ring, when it exists."""
        layout = self.layout
        parts = self.body.collect([layout.s])
        b0 = parts.get((0,), Poly.zero(layout.nvars))
        b1 = parts.get((1,), Poly.zero(layout.nvars))
        # body = b0 + s*b1, so body/s = b1 + s*(b0/N)
        quotient = divide_by_norm_squared(b0, layout.n)
        if quotient is None:
            return None
        return b1 + quotient * layout.s_poly()

    def rebase(self, k: int) -> Poly:
        """Body ``B`` with ``self == B / s**k``."""
        if k >= self.spow:
            return self._lift(k)
        current = self
        while current.spow > k:
            lowered = current._divide_by_s()
            if lowered is None:
                raise PolyError(f"cannot express element over s^{k}")
            current = HomoElem(self.layout, lowered, current.spow - 1)
        return current.body

    def tau_degrees(self) -> List[int]:
        return sorted({m[self.layout.tau] for m, _ in self.body.items()})

    def min_tau_degree(self) -> Optional[int]:
        degrees = self.tau_degrees()
        return degrees[0] if degrees else None

    def max_tau_degree(self) -> Optional[int]:
        degrees = self.tau_degrees()
        return degrees[-1] if degrees else None

    def tau_coefficient(self, k: int) -> "HomoElem":
        groups = self.body.collect([self.layout.tau])
        return HomoElem(self.layout, groups.get((k,), Poly.zero(self.layout.nvars)), self.spow)

    def linear_parts(self, names: Sequence[str]) -> Tuple[Dict[str, "HomoElem"], "HomoElem"]:
        """Split an element linear in the named extras into per-name coefficients and a remainder."""
        indices = [self.layout.extra_index(name) for name in names]
        groups = self.body.collect(indices)
        parts: Dict[str, HomoElem] = {}
        remainder = HomoElem.zero(self.layout)
        for key, cofactor in groups.items():
            total = sum(key)
            if total == 0:
                remainder = HomoElem(self.layout, cofactor, self.spow)
            elif total == 1:
                parts[names[key.index(1)]] = HomoElem(self.layout, cofactor, self.spow)
            else:
                raise PolyError("element is not linear in the requested variables")
        return parts, remainder

    def evaluate(self, u: Sequence[float], tau: float = 0.0, extras: Optional[Mapping[str, float]] = None) -> float:
        """Floating-point value with s = |u|."""
        point = [0.0] * self.layout.nvars
        for i, value in enumerate(u):
            point[i] = float(value)
        norm = math.sqrt(sum(float(x) ** 2 for x in u))
        if norm == 0.0 and self.spow:
            raise PolyError("cannot evaluate a negative power of |u| at u = 0")
        point[self.layout.tau] = float(tau)
        point[self.layout.s] = norm
        for name, value in (extras or {}).items():
            point[self.layout.extra_index(name)] = float(value)
        total = 0.0
        for mono, coeff in self.body.items():
            term = float(coeff)
            for i, e in enumerate(mono):
                if e:
                    term *= point[i] ** e
            total += term
        return total / norm ** self.spow if self.spow else total

    def evaluate_exact(
        self,
        u: Sequence[Rational],
        norm: Rational,
        tau: Rational = 0,
        extras: Optional[Mapping[str, Rational]] = None,
    ) -> Fraction:
        """Exact value at a point whose |u| = ``norm`` is rational."""
        norm = Fraction(norm)
        if norm * norm != sum(Fraction(x) ** 2 for x in u):
            raise PolyError("norm does not equal |u|")
        point = [Fraction(0)] * self.layout.nvars
        for i, value in enumerate(u):
            point[i] = Fraction(value)
        point[self.layout.tau] = Fraction(tau)
        point[self.layout.s] = norm
        for name, value in (extras or {}).items():
            point[self.layout.extra_index(name)] = Fraction(value)
        return eval_rational(self.body, point) / norm ** self.spow

    def to_text(self) -> str:
        normal = self.normalized()
        body = normal.body.to_text(self.layout.names())
        if normal.spow == 0:
            return body
        return f"({body}) / s^{normal.spow}"

    def __repr__(self) -> str:
        return f"HomoElem({self.to_text()})"


def homo_reduce(e: HomoElem) -> HomoElem:
    """Rewrite every s^2 as |u|^2; idempotent."""
    return HomoElem(e.layout, _reduce_body(e.body, e.layout), e.spow)


# ---------------------------------------------------------------------------
# Polynomial text format
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"[+-]|[^\s+\-*]+")
_FACTOR = re.compile(r"^([A-Za-z]+)(\d+)(?:\^(\d+))?$")
_COEFF = re.compile(r"^(\d+(?:/\d+)?|\d*\.\d+)$")
_KEY = re.compile(r"^\(?\s*(\d+(?:\s*,\s*\d+)*)\s*,?\s*\)?$")
_VARIABLE_PREFIXES = ("u", "y", "x", "w")


def parse_poly(text: Any, nvars: int) -> Poly:
    """Parse ``coeff * u1^a1 ... un^an`` terms joined by ``+``/``-``.

    Coefficients are exact rationals ("3", "-1/2", "0.25"); a missing
    coefficient means 1; variables may be written u1, y1, x1 or w1.
    """
    if isinstance(text, (int, Fraction)):
        return Poly.constant(nvars, text)
    if isinstance(text, Mapping):
        return parse_poly_map(text, nvars)
    if not isinstance(text, str):
        raise PolyError(f"cannot read a polynomial from {type(text).__name__}")
    tokens = _TOKEN.findall(text)
    if not tokens:
        raise PolyError("empty polynomial")
    terms: Dict[MultiIndex, Fraction] = {}
    sign = 1
    coeff: Optional[Fraction] = None
    exps = [0] * nvars
    started = False

    def flush() -> None:
        key = tuple(exps)
        terms[key] = terms.get(key, Fraction(0)) + sign * (coeff if coeff is not None else Fraction(1))

    for token in tokens:
        if token in "+-":
            if started:
                flush()
                sign, coeff, exps, started = 1, None, [0] * nvars, False
            if token == "-":
                sign = -sign
            continue
        started = True
        if _COEFF.match(token):
            value = Fraction(token)
            coeff = value if coeff is None else coeff * value
            continue
        match = _FACTOR.match(token)
        if not match or match.group(1) not in _VARIABLE_PREFIXES:
            raise PolyError(f"unrecognised token {token!r}")
        index = int(match.group(2)) - 1
        if not 0 <= index < nvars:
            raise PolyError(f"variable {token!r} out of range for n = {nvars}")
        exps[index] += int(match.group(3)) if match.group(3) else 1
    if not started:
        raise PolyError("polynomial ends with a dangling sign")
    flush()
    return Poly(nvars, terms)


def parse_poly_map(mapping: Mapping[Any, Any], nvars: int) -> Poly:
    """Parse the map form ``{"(a1,...,an)": "coeff"}``."""
    terms: Dict[MultiIndex, Fraction] = {}
    for key, value in mapping.items():
        if isinstance(key, (tuple, list)):
            mono = tuple(int(e) for e in key)
        else:
            match = _KEY.match(str(key).strip())
            if not match:
                raise PolyError(f"bad exponent key {key!r}")
            mono = tuple(int(e) for e in match.group(1).split(","))
        if len(mono) != nvars:
            raise PolyError(f"exponent key {key!r} needs {nvars} entries")
        try:
            coeff = Fraction(str(value).strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise PolyError(f"bad coefficient {value!r}") from exc
        terms[mono] = terms.get(mono, Fraction(0)) + coeff
    return Poly(nvars, terms)
