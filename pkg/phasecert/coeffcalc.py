"""Coefficient calculus of the phase after the sector change of variables.

Fix a sector l. With s = |u| and u~ = (theta_i u_i), the change of variables is

    z = (tau * u~ + sum_m sigma_m a_m) / s,   a_m = u~_{m(l)} e_l - theta_l u_l e_{m(l)},

and the coefficient of sigma^gamma in nu_j p_j(u + z) - mu_j p_j(z) splits as

    (nu_j - mu_j) tau^{j-|gamma|} B_{j,gamma}(u~) / s^j
      + nu_j D_{j,gamma}(u~) / s^{|gamma|}
      + nu_j E_{j,gamma}(u, tau).

All three pieces come from one family of polynomials G_k(u), k = 0..j-|gamma|, the
tau^k-part of the gamma coefficient scaled by s^{k+|gamma|}: B is G_{j-|gamma|}, D is G_0,
E collects the middle k.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from phasecert.errors import DomainError
from phasecert.polyring import (
    HomoElem,
    MultiIndex,
    Poly,
    SymbolLayout,
    graded_multi_indices,
    insert_at,
    m_of_l,
    mi_abs,
    mi_factorial,
    multi_indices_of_order,
    sub_indices,
    unit_index,
)
from phasecert.quadform import PhaseFamily, QuadForm, rational_sqrt, require_admissible

Scalar = Union[int, float, Fraction]
Coefficient = Union[Scalar, str]


@dataclass(frozen=True)
class ChangeOfVars:
    """Sector data: the quadratic form and the distinguished coordinate l (0-based)."""

    q: QuadForm
    l: int

    def __post_init__(self):
        if not 0 <= self.l < self.q.n:
            raise DomainError(f"sector index {self.l + 1} outside 1..{self.q.n}")

    @property
    def n(self) -> int:
        return self.q.n

    @property
    def sector(self) -> int:
        """1-based sector label."""
        return self.l + 1

    @property
    def theta(self) -> Tuple[int, ...]:
        return self.q.theta

    def coordinate(self, m: int) -> int:
        """m(l) for the 0-based sigma index m."""
        return m_of_l(m, self.l)

    def insert(self, alpha: Sequence[int], lam: int) -> MultiIndex:
        return insert_at(alpha, self.l, lam)


def family_layout(f: PhaseFamily, extras: Sequence[str] = ()) -> SymbolLayout:
    """u, tau, s, sigma_0..sigma_{n-2}, nu_j, mu_j for every j in Lambda, then ``extras``."""
    names = [f"sigma{m}" for m in range(f.n - 1)]
    names += [f"nu{j}" for j in f.degrees] + [f"mu{j}" for j in f.degrees]
    names += [e for e in extras if e not in names]
    return SymbolLayout(f.n, names)


# ---------------------------------------------------------------------------
# Change of variables
# ---------------------------------------------------------------------------

def _norm(u: Sequence[Scalar]) -> Scalar:
    if all(isinstance(x, (int, Fraction)) for x in u):
        root = rational_sqrt(sum(Fraction(x) ** 2 for x in u))
        if root is not None:
            return root
    return math.sqrt(sum(float(x) ** 2 for x in u))


def _exact(values: Sequence) -> bool:
    return all(isinstance(v, (int, Fraction)) for v in values)


def z_from_coords(u: Sequence[Scalar], tau: Scalar, sigma: Sequence[Scalar], cov: ChangeOfVars) -> List[Scalar]:
    """z = (tau u~ + sum_m sigma_m a_m) / |u|; exact when every input and |u| are rational."""
    if len(u) != cov.n or len(sigma) != cov.n - 1:
        raise DomainError("u must have n entries and sigma n - 1 entries")
    norm = _norm(u)
    if norm == 0:
        raise DomainError("z is undefined at u = 0")
    exact = isinstance(norm, Fraction) and _exact([tau, *sigma])
    if not exact:
        u = [float(x) for x in u]
        tau = float(tau)
        sigma = [float(x) for x in sigma]
    theta, l = cov.theta, cov.l
    z = [tau * theta[i] * u[i] for i in range(cov.n)]
    for m, sm in enumerate(sigma):
        a = cov.coordinate(m)
        z[l] += sm * theta[a] * u[a]
        z[a] -= sm * theta[l] * u[l]
    return [zi / norm for zi in z]


def coords_from_z(u: Sequence[Scalar], z: Sequence[Scalar], cov: ChangeOfVars) -> Tuple[Scalar, List[Scalar]]:
    """Forward map: tau = <u~, z>/|u| and sigma_m = (tau u~_{m(l)} - |u| z_{m(l)}) / (theta_l u_l)."""
    norm = _norm(u)
    if norm == 0 or u[cov.l] == 0:
        raise DomainError("the forward map needs u != 0 and u_l != 0")
    if not (isinstance(norm, Fraction) and _exact(z)):
        u = [float(x) for x in u]
        z = [float(x) for x in z]
    theta, l = cov.theta, cov.l
    tau = sum(theta[i] * u[i] * z[i] for i in range(cov.n)) / norm
    sigma = []
    for m in range(cov.n - 1):
        a = cov.coordinate(m)
        sigma.append((tau * theta[a] * u[a] - norm * z[a]) / (theta[l] * u[l]))
    return tau, sigma


def symbolic_z(cov: ChangeOfVars, layout: SymbolLayout) -> List[HomoElem]:
    """z_i as HomoElems over s^1 with sigma taken from the layout extras."""
    return [HomoElem(layout, body, 1) for body in _zeta_bodies(cov, layout)]


def _zeta_bodies(cov: ChangeOfVars, layout: SymbolLayout) -> List[Poly]:
    theta, l = cov.theta, cov.l
    tau = layout.tau_poly()
    bodies = [tau * layout.u(i) * theta[i] for i in range(cov.n)]
    for m in range(cov.n - 1):
        a = cov.coordinate(m)
        sigma = layout.extra(f"sigma{m}")
        bodies[l] = bodies[l] + sigma * layout.u(a) * theta[a]
        bodies[a] = bodies[a] - sigma * layout.u(l) * theta[l]
    return bodies


# ---------------------------------------------------------------------------
# B, D, E, Xi
# ---------------------------------------------------------------------------

def _check_gamma(gamma: Sequence[int], cov: ChangeOfVars) -> MultiIndex:
    gamma = tuple(int(g) for g in gamma)
    if len(gamma) != cov.n - 1 or any(g < 0 for g in gamma):
        raise DomainError(f"gamma {gamma} must be a multi-index with {cov.n - 1} entries")
    return gamma


def g_polynomial(p: Poly, j: int, gamma: Sequence[int], k: int, cov: ChangeOfVars) -> Poly:
    """G_k(u): the tau^k part of the sigma^gamma coefficient of p_j(u + z), times s^{k+|gamma|}."""
    gamma = _check_gamma(gamma, cov)
    n, theta = cov.n, cov.theta
    order = mi_abs(gamma)
    beta_order = j - order - k
    result = Poly.zero(n)
    if beta_order < 0 or k < 0:
        return result
    for beta in multi_indices_of_order(beta_order, n):
        beta_fact = mi_factorial(beta)
        u_beta = Poly.monomial(beta)
        for alpha in sub_indices(gamma):
            rest = tuple(g - a for g, a in zip(gamma, alpha))
            mu = tuple(x + b for x, b in zip(cov.insert(alpha, mi_abs(rest)), beta))
            derived = p.derivative(mu)
            if derived.is_zero():
                continue
            kappa = cov.insert(rest, mi_abs(alpha))
            sign = -1 if mi_abs(alpha) % 2 else 1
            theta_kappa = math.prod(t ** e for t, e in zip(theta, kappa))
            factor = Fraction(sign * theta_kappa, mi_factorial(alpha) * beta_fact * mi_factorial(rest))
            result = result + derived.twist_monomials(theta) * Poly.monomial(kappa) * u_beta * factor
    return result


def compute_B(p: Poly, j: int, gamma: Sequence[int], cov: ChangeOfVars) -> Poly:
    """B_{j,gamma}(w) = sum_{alpha <= gamma} (-1)^|alpha| / (alpha! (gamma-alpha)!) (d_{(alpha;|gamma-alpha|)} p)(w) w^{(gamma-alpha;|alpha|)}.

    Depends on the form only through l.
    """
    gamma = _check_gamma(gamma, cov)
    result = Poly.zero(p.nvars)
    if j < mi_abs(gamma):
        return result
    for alpha in sub_indices(gamma):
        rest = tuple(g - a for g, a in zip(gamma, alpha))
        derived = p.derivative(cov.insert(alpha, mi_abs(rest)))
        if derived.is_zero():
            continue
        sign = -1 if mi_abs(alpha) % 2 else 1
        factor = Fraction(sign, mi_factorial(alpha) * mi_factorial(rest))
        result = result + derived * Poly.monomial(cov.insert(rest, mi_abs(alpha))) * factor
    return result


def compute_B_twisted(p: Poly, j: int, gamma: Sequence[int], cov: ChangeOfVars) -> Poly:
    """B_{j,gamma}(u~) as a polynomial in u."""
    return compute_B(p, j, gamma, cov).twist_monomials(cov.theta)


def compute_D(p: Poly, j: int, gamma: Sequence[int], cov: ChangeOfVars) -> Poly:
    """D_{j,gamma}(u~) written out as a polynomial in u; zero unless j > |gamma|."""
    gamma = _check_gamma(gamma, cov)
    if j <= mi_abs(gamma):
        return Poly.zero(cov.n)
    return g_polynomial(p, j, gamma, 0, cov)


def compute_E(p: Poly, j: int, gamma: Sequence[int], cov: ChangeOfVars, layout: SymbolLayout) -> HomoElem:
    """E_{j,gamma}(u, tau) = sum_{k=1}^{j-|gamma|-1} G_k tau^k / s^{k+|gamma|}."""
    gamma = _check_gamma(gamma, cov)
    order = mi_abs(gamma)
    total = HomoElem.zero(layout)
    tau = layout.tau_poly()
    for k in range(1, j - order):
        g = g_polynomial(p, j, gamma, k, cov)
        if g:
            total = total + HomoElem(layout, layout.from_u_poly(g) * tau ** k, k + order)
    return total


def xi_polynomial(p: Poly, j: int, gamma: Sequence[int], cov: ChangeOfVars) -> Poly:
    """|u|^2 Xi_{j,gamma}(u~) for |gamma| = 1, a polynomial in u."""
    gamma = _check_gamma(gamma, cov)
    if mi_abs(gamma) != 1:
        raise DomainError("Xi is defined for first-order gamma only")
    return g_polynomial(p, j, gamma, 1, cov)


def compute_Xi(p: Poly, j: int, gamma: Sequence[int], cov: ChangeOfVars, layout: SymbolLayout) -> HomoElem:
    """Xi_{j,gamma}(u~) = G_1 / s^2. For j >= 3 this is the tau-coefficient of E_{j,gamma}."""
    return HomoElem(layout, layout.from_u_poly(xi_polynomial(p, j, gamma, cov)), 2)


def euler_twisted(p: Poly, theta: Sequence[int]) -> Poly:
    """(sum_i theta_i u_i d/du_i) p."""
    total = Poly.zero(p.nvars)
    for i, t in enumerate(theta):
        total = total + Poly.variable(p.nvars, i) * p.derivative(unit_index(p.nvars, i)) * t
    return total


# ---------------------------------------------------------------------------
# Matrix entries
# ---------------------------------------------------------------------------

def b_entry(p: Poly, j: int, gamma: Sequence[int], cov: ChangeOfVars, layout: SymbolLayout) -> HomoElem:
    """B_{j,gamma}(u~/|u|) tau^{j-|gamma|}."""
    order = mi_abs(gamma)
    if j < order:
        return HomoElem.zero(layout)
    body = layout.from_u_poly(compute_B_twisted(p, j, gamma, cov)) * layout.tau_poly() ** (j - order)
    return HomoElem(layout, body, j)


def d_entry(p: Poly, j: int, gamma: Sequence[int], cov: ChangeOfVars, layout: SymbolLayout) -> HomoElem:
    """D_{j,gamma}(u~/|u|) |u|^{j-|gamma|}."""
    return HomoElem(layout, layout.from_u_poly(compute_D(p, j, gamma, cov)), mi_abs(gamma))


# ---------------------------------------------------------------------------
# Expansion and oracle
# ---------------------------------------------------------------------------

@dataclass
class CoefficientPieces:
    """The per-phase B, D and E parts of one sigma^gamma coefficient."""

    gamma: MultiIndex
    bpart: Dict[int, HomoElem] = field(default_factory=dict)
    dpart: Dict[int, HomoElem] = field(default_factory=dict)
    epart: Dict[int, HomoElem] = field(default_factory=dict)


def _weight(layout: SymbolLayout, value: Optional[Coefficient], name: str) -> Union[Poly, Fraction]:
    """Numeric weight, or the symbolic extra ``name`` when ``value`` is None."""
    if value is None:
        return layout.extra(name)
    if isinstance(value, str):
        return layout.extra(value)
    return Fraction(value)


@dataclass
class SigmaExpansion:
    """sigma-coefficients of P_nu(u + z) - P_mu(z) in one sector, split into B, D and E parts."""

    family: PhaseFamily
    cov: ChangeOfVars
    layout: SymbolLayout
    pieces: Dict[MultiIndex, CoefficientPieces]

    def gammas(self) -> List[MultiIndex]:
        return list(self.pieces)

    def total(
        self,
        gamma: Sequence[int],
        nu: Optional[Mapping[int, Coefficient]] = None,
        mu: Optional[Mapping[int, Coefficient]] = None,
    ) -> HomoElem:
        """C[sigma^gamma]; missing nu/mu entries become the symbols nu{j}/mu{j}."""
        piece = self.pieces[tuple(gamma)]
        total = HomoElem.zero(self.layout)
        for j in self.family.degrees:
            nu_j = _weight(self.layout, (nu or {}).get(j), f"nu{j}")
            mu_j = _weight(self.layout, (mu or {}).get(j), f"mu{j}")
            if j in piece.bpart:
                total = total + piece.bpart[j] * (nu_j - mu_j)
            if j in piece.dpart:
                total = total + piece.dpart[j] * nu_j
            if j in piece.epart:
                total = total + piece.epart[j] * nu_j
        return total


def expand_phase_in_sigma(
    f: PhaseFamily,
    cov: ChangeOfVars,
    layout: Optional[SymbolLayout] = None,
    enforce_gate: bool = True,
) -> SigmaExpansion:
    """B/D/E decomposition for every 1 <= |gamma| <= d; assemble with :meth:`SigmaExpansion.total`."""
    if enforce_gate:
        require_admissible(f)
    if cov.q != f.q:
        raise DomainError("change of variables and family use different quadratic forms")
    layout = layout or family_layout(f)
    pieces: Dict[MultiIndex, CoefficientPieces] = {}
    for gamma in graded_multi_indices(f.d, f.n - 1):
        pieces[gamma] = coefficient_pieces(f, gamma, cov, layout)
    return SigmaExpansion(f, cov, layout, pieces)


def coefficient_pieces(
    f: PhaseFamily, gamma: MultiIndex, cov: ChangeOfVars, layout: SymbolLayout
) -> CoefficientPieces:
    """B/D/E entries of a single sigma^gamma coefficient."""
    piece = CoefficientPieces(tuple(gamma))
    order = mi_abs(gamma)
    for j in f.degrees:
        p = f.phase(j)
        if j >= order:
            entry = b_entry(p, j, gamma, cov, layout)
            if not entry.is_zero():
                piece.bpart[j] = entry
        if j > order:
            entry = d_entry(p, j, gamma, cov, layout)
            if not entry.is_zero():
                piece.dpart[j] = entry
        if j > order + 1:
            entry = compute_E(p, j, gamma, cov, layout)
            if not entry.is_zero():
                piece.epart[j] = entry
    return piece


def oracle_direct_expansion(
    f: PhaseFamily,
    cov: ChangeOfVars,
    nu: Optional[Mapping[int, Coefficient]] = None,
    mu: Optional[Mapping[int, Coefficient]] = None,
    layout: Optional[SymbolLayout] = None,
) -> Dict[MultiIndex, HomoElem]:
    """Substitute z into nu_j p_j(u + z) - mu_j p_j(z) directly and collect sigma monomials (gamma != 0)."""
    layout = layout or family_layout(f)
    if cov.q != f.q:
        raise DomainError("change of variables and family use different quadratic forms")
    zeta = _zeta_bodies(cov, layout)
    s = layout.s_poly()
    shifted = [s * layout.u(i) + zeta[i] for i in range(f.n)]
    sigma_idx = [layout.extra_index(f"sigma{m}") for m in range(f.n - 1)]
    result: Dict[MultiIndex, HomoElem] = {}
    for j in f.degrees:
        p = f.phase(j)
        nu_j = _weight(layout, (nu or {}).get(j), f"nu{j}")
        mu_j = _weight(layout, (mu or {}).get(j), f"mu{j}")
        body = p.compose(shifted) * nu_j - p.compose(zeta) * mu_j
        for gamma, cofactor in HomoElem(layout, body, j).body.collect(sigma_idx).items():
            if not any(gamma):
                continue
            term = HomoElem(layout, cofactor, j)
            result[gamma] = result[gamma] + term if gamma in result else term
    return {gamma: value for gamma, value in result.items() if not value.is_zero()}


def compare_with_oracle(expansion: SigmaExpansion, nu=None, mu=None) -> List[MultiIndex]:
    """The gammas where decomposition and oracle disagree."""
    oracle = oracle_direct_expansion(expansion.family, expansion.cov, nu, mu, expansion.layout)
    mismatches = []
    for gamma in sorted(set(expansion.pieces) | set(oracle)):
        mine = expansion.total(gamma, nu, mu) if gamma in expansion.pieces else HomoElem.zero(expansion.layout)
        theirs = oracle.get(gamma, HomoElem.zero(expansion.layout))
        if mine != theirs:
            mismatches.append(gamma)
    return mismatches


def first_nonzero_B(p: Poly, j: int, order: int, cov: ChangeOfVars) -> Optional[MultiIndex]:
    """Lexicographically smallest gamma of the given order with B_{j,gamma} != 0."""
    for gamma in multi_indices_of_order(order, cov.n - 1):
        if not compute_B(p, j, gamma, cov).is_zero():
            return gamma
    return None


def expansion_to_text(expansion: SigmaExpansion) -> Dict[str, Dict[str, Dict[int, str]]]:
    """Canonical per-gamma strings of the B, D and E parts."""
    out: Dict[str, Dict[str, Dict[int, str]]] = {}
    for gamma, piece in expansion.pieces.items():
        key = "(" + ",".join(str(g) for g in gamma) + ")"
        out[key] = {
            "B": {j: e.to_text() for j, e in piece.bpart.items()},
            "D": {j: e.to_text() for j, e in piece.dpart.items()},
            "E": {j: e.to_text() for j, e in piece.epart.items()},
        }
    return out


__all__ = [
    "ChangeOfVars",
    "CoefficientPieces",
    "SigmaExpansion",
    "b_entry",
    "compare_with_oracle",
    "compute_B",
    "compute_B_twisted",
    "compute_D",
    "compute_E",
    "compute_Xi",
    "coefficient_pieces",
    "coords_from_z",
    "d_entry",
    "euler_twisted",
    "expand_phase_in_sigma",
    "expansion_to_text",
    "family_layout",
    "first_nonzero_B",
    "g_polynomial",
    "oracle_direct_expansion",
    "symbolic_z",
    "xi_polynomial",
    "z_from_coords",
]
