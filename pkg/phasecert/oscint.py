"""
Numerical side of the kernel estimates.

Polynomials are compiled once to numpy exponent/coefficient arrays and the
oscillatory integrals K_sharp (over the sigma-slice of a sector) and K_flat
(over z) are evaluated with tensor Gauss-Legendre boxes, each split in 2^dim
until its children reproduce its value. The van der Corput checks and the
decay scans with certificate-driven bad sets sit on top of the same quadrature.
"""

import hashlib
import itertools
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from numpy.polynomial.legendre import leggauss
from rich.console import Console

from phasecert.coeffcalc import ChangeOfVars, SigmaExpansion, coefficient_pieces
from phasecert.errors import DomainError, QuadratureError
from phasecert.matrixcert import Certificate, classify_case
from phasecert.polyring import HomoElem, Poly, coefficient_norm
from phasecert.quadform import PhaseFamily, StoppingValue

console = Console()

Mapper = Callable[[Callable, Sequence], List]


# ---------------------------------------------------------------------------
# Compiled polynomials
# ---------------------------------------------------------------------------

class NumericPoly:
    """Vectorized float evaluator for a :class:`Poly`."""

    CHUNK = 65536

    def __init__(self, poly: Poly):
        self.nvars = poly.nvars
        items = list(poly.items())
        if items:
            self.exponents = np.array([mono for mono, _ in items], dtype=np.int64).reshape(len(items), poly.nvars)
            self.coefficients = np.array([float(c) for _, c in items], dtype=float)
        else:
            self.exponents = np.zeros((0, poly.nvars), dtype=np.int64)
            self.coefficients = np.zeros(0, dtype=float)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[-1] != self.nvars:
            raise DomainError(f"points have {points.shape[-1]} coordinates, polynomial has {self.nvars} variables")
        if not len(self.coefficients):
            return np.zeros(points.shape[0])
        out = np.empty(points.shape[0])
        for start in range(0, points.shape[0], self.CHUNK):
            block = points[start:start + self.CHUNK]
            monomials = np.ones((block.shape[0], len(self.coefficients)))
            for v in range(self.nvars):
                powers = self.exponents[:, v]
                if powers.any():
                    monomials *= block[:, v:v + 1] ** powers
            out[start:start + self.CHUNK] = monomials @ self.coefficients
        return out


class NumericHomo:
    """Float evaluator for ``body / |u|^spow`` with extras supplied by name."""

    def __init__(self, element: HomoElem):
        self.layout = element.layout
        self.spow = element.spow
        self.body = NumericPoly(element.body)

    def __call__(self, u: np.ndarray, tau: np.ndarray, extras: Optional[Mapping[str, Any]] = None) -> np.ndarray:
        u = np.atleast_2d(np.asarray(u, dtype=float))
        layout = self.layout
        points = np.zeros((u.shape[0], layout.nvars))
        points[:, :layout.n] = u
        points[:, layout.tau] = tau
        norm = np.linalg.norm(u, axis=1)
        points[:, layout.s] = norm
        for name, value in (extras or {}).items():
            if layout.has_extra(name):
                points[:, layout.extra_index(name)] = value
        values = self.body(points)
        return values / norm ** self.spow if self.spow else values


class NumericPhase:
    """P_w(x) = sum_j w_j p_j(x) for a family, with w supplied per call."""

    def __init__(self, family: PhaseFamily):
        self.family = family
        self.parts = {j: NumericPoly(family.phase(j)) for j in family.degrees}

    def __call__(self, x: np.ndarray, weights: Mapping[int, float]) -> np.ndarray:
        x = np.atleast_2d(x)
        total = np.zeros(x.shape[0])
        for j, w in weights.items():
            if w and j in self.parts:
                total += float(w) * self.parts[j](x)
        return total


# ---------------------------------------------------------------------------
# Bump and sectors
# ---------------------------------------------------------------------------

def eta(x: np.ndarray) -> np.ndarray:
    """max(0, 1 - |x|^2)^2 along the last axis."""
    return np.maximum(0.0, 1.0 - np.sum(np.asarray(x) ** 2, axis=-1)) ** 2


@dataclass(frozen=True)
class BumpSpec:
    """Psi(u, z) = eta(u + z) eta(z) and the sector constant c0."""

    n: int
    c0: Optional[float] = None

    @property
    def sector_constant(self) -> float:
        return self.c0 if self.c0 is not None else 1.0 / (2.0 * math.sqrt(self.n))

    def psi(self, u: np.ndarray, z: np.ndarray) -> np.ndarray:
        return eta(np.asarray(u) + z) * eta(z)

    def in_sector(self, u: Sequence[float], l: int) -> bool:
        u = np.asarray(u, dtype=float)
        norm = float(np.linalg.norm(u))
        return norm > 0 and abs(u[l]) / norm >= self.sector_constant


def ball_volume(dim: int, radius: float = 1.0) -> float:
    if dim == 0:
        return 1.0
    return math.pi ** (dim / 2) / math.gamma(dim / 2 + 1) * radius ** dim


def sharp_trivial_bound(spec: BumpSpec) -> float:
    """Psi <= 1 on a sigma-ball of radius 1/c0."""
    return ball_volume(spec.n - 1, 1.0 / spec.sector_constant)


def flat_trivial_bound(spec: BumpSpec) -> float:
    return ball_volume(spec.n)


# ---------------------------------------------------------------------------
# Adaptive tensor Gauss-Legendre
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureSettings:
    rel_tol: float = 1e-3
    abs_tol: float = 1e-8
    base_nodes: int = 16
    base_panels: int = 2
    max_depth: int = 8
    max_points: int = 128_000_000
    chunk_points: int = 1_000_000

    @classmethod
    def from_env(cls, **overrides) -> "QuadratureSettings":
        env = os.environ.get("PHASECERT_QUAD_TOL")
        if env:
            overrides["rel_tol"] = float(env)
        return cls(**overrides)


@dataclass
class QuadratureResult:
    value: complex
    depth: int
    points: int


def _axis_rule(a: float, b: float, panels: int, nodes: np.ndarray, weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    edges = np.linspace(a, b, panels + 1)
    half = (edges[1:] - edges[:-1]) / 2
    mid = (edges[1:] + edges[:-1]) / 2
    return (mid[:, None] + half[:, None] * nodes).ravel(), (half[:, None] * weights).ravel()


def tensor_rule(lows: Sequence[float], highs: Sequence[float], panels: int, nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes (M, dim) and weights (M,) on a box."""
    x, w = leggauss(nodes)
    axes, axis_weights = zip(*(_axis_rule(a, b, panels, x, w) for a, b in zip(lows, highs)))
    grid = np.meshgrid(*axes, indexing="ij")
    points = np.stack([g.ravel() for g in grid], axis=-1)
    weights = reduce(np.multiply.outer, axis_weights).ravel()
    return points, weights


class _CellRule:
    """One tensor Gauss-Legendre rule applied to many boxes, evaluated in chunks."""

    def __init__(self, integrand: Callable[[np.ndarray], np.ndarray], dim: int, settings: QuadratureSettings):
        self.integrand = integrand
        self.dim = dim
        self.settings = settings
        self.nodes, self.weights = tensor_rule([-1.0] * dim, [1.0] * dim, 1, settings.base_nodes)
        self.per_cell = len(self.weights)
        self.points = 0

    def reserve(self, cells: int, depth: int, last_value: complex) -> None:
        needed = self.points + cells * self.per_cell
        if needed > self.settings.max_points:
            raise QuadratureError(
                f"{self.dim}-dimensional rule needs {needed} points at depth {depth}, over max_points",
                last_value=last_value,
                depth=depth,
            )

    def __call__(self, lows: np.ndarray, widths: np.ndarray) -> np.ndarray:
        half = widths / 2
        centers = lows + half
        values = np.empty(len(lows), dtype=complex)
        step = max(1, self.settings.chunk_points // self.per_cell)
        for start in range(0, len(lows), step):
            c, h = centers[start:start + step], half[start:start + step]
            points = (c[:, None, :] + h[:, None, :] * self.nodes[None, :, :]).reshape(-1, self.dim)
            samples = np.asarray(self.integrand(points), dtype=complex).reshape(len(c), self.per_cell)
            values[start:start + step] = (samples @ self.weights) * np.prod(h, axis=1)
        self.points += len(lows) * self.per_cell
        return values


def _split(lows: np.ndarray, widths: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Children (K, 2^dim, dim) of every box."""
    dim = lows.shape[1]
    corners = np.array(list(itertools.product((0.0, 1.0), repeat=dim)))
    half = widths / 2
    return lows[:, None, :] + corners[None, :, :] * half[:, None, :], np.repeat(half[:, None, :], len(corners), axis=1)


def adaptive_integrate(
    integrand: Callable[[np.ndarray], np.ndarray],
    lows: Sequence[float],
    highs: Sequence[float],
    settings: QuadratureSettings,
    frequency: float = 1.0,
) -> QuadratureResult:
    """Split every unsettled box in 2^dim until its children reproduce its value.

    A box settles once the children's sum is within its volume share of
    max(abs_tol, rel_tol |total|); settled boxes are never evaluated again.
    """
    dim = len(lows)
    panels = max(1, math.ceil(settings.base_panels * math.sqrt(max(1.0, frequency))))
    rule = _CellRule(integrand, dim, settings)
    lo, hi = np.asarray(lows, dtype=float), np.asarray(highs, dtype=float)
    volume = float(np.prod(hi - lo))

    edges = [np.linspace(a, b, panels + 1) for a, b in zip(lo, hi)]
    grid = np.meshgrid(*[e[:-1] for e in edges], indexing="ij")
    cell_lows = np.stack([g.ravel() for g in grid], axis=-1)
    cell_widths = np.tile((hi - lo) / panels, (len(cell_lows), 1))
    rule.reserve(len(cell_lows), 0, 0j)
    values = rule(cell_lows, cell_widths)
    settled = 0j
    total = complex(values.sum())

    for depth in range(1, settings.max_depth + 1):
        child_lows, child_widths = _split(cell_lows, cell_widths)
        children = child_lows.shape[1]
        rule.reserve(len(cell_lows) * children, depth, total)
        child_values = rule(child_lows.reshape(-1, dim), child_widths.reshape(-1, dim)).reshape(-1, children)
        refined = child_values.sum(axis=1)
        total = settled + complex(refined.sum())
        tolerance = max(settings.abs_tol, settings.rel_tol * abs(total))
        share = np.prod(cell_widths, axis=1) / volume
        done = np.abs(refined - values) <= tolerance * share
        settled += complex(refined[done].sum())
        if done.all():
            return QuadratureResult(total, depth, rule.points)
        keep = ~done
        cell_lows = child_lows[keep].reshape(-1, dim)
        cell_widths = child_widths[keep].reshape(-1, dim)
        values = child_values[keep].ravel()
    raise QuadratureError(
        f"no agreement after {settings.max_depth} refinements ({len(cell_lows)} boxes unsettled)",
        last_value=total,
        depth=settings.max_depth,
    )


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------

def _frequency(nu: Mapping[int, float], mu: Mapping[int, float]) -> float:
    return sum(abs(float(v)) for v in nu.values()) + sum(abs(float(v)) for v in mu.values())


def _quadratic_interval(a: float, b: float, c: float) -> Optional[Tuple[float, float]]:
    """{x : a x^2 + b x + c < 0} for a > 0."""
    disc = b * b - 4 * a * c
    if disc <= 0:
        return None
    root = math.sqrt(disc)
    return (-b - root) / (2 * a), (-b + root) / (2 * a)


def _slice_geometry(u: np.ndarray, tau: float, cov: ChangeOfVars) -> Tuple[np.ndarray, np.ndarray]:
    """z = z0 + sigma @ A on the slice {<u~, z> = tau |u|}."""
    theta, l = np.asarray(cov.theta, dtype=float), cov.l
    norm = float(np.linalg.norm(u))
    z0 = tau * theta * u / norm
    A = np.zeros((cov.n - 1, cov.n))
    for m in range(cov.n - 1):
        a = cov.coordinate(m)
        A[m, l] = theta[a] * u[a] / norm
        A[m, a] = -theta[l] * u[l] / norm
    return z0, A


def eval_K_sharp(
    family: PhaseFamily,
    nu: Mapping[int, float],
    mu: Mapping[int, float],
    u: Sequence[float],
    tau: float,
    cov: ChangeOfVars,
    spec: Optional[BumpSpec] = None,
    settings: Optional[QuadratureSettings] = None,
    phase: Optional[NumericPhase] = None,
) -> complex:
    """int e^{i(P_nu(u+z) - P_mu(z))} Psi(u, z) dsigma over the slice through tau; 0 outside sector l."""
    spec = spec or BumpSpec(family.n)
    settings = settings or QuadratureSettings.from_env()
    phase = phase or NumericPhase(family)
    u = np.asarray(u, dtype=float)
    norm = float(np.linalg.norm(u))
    if norm == 0.0 or not spec.in_sector(u, cov.l) or abs(tau) >= 1.0:
        return 0j
    z0, A = _slice_geometry(u, float(tau), cov)

    def integrand(sigma: np.ndarray) -> np.ndarray:
        z = z0 + sigma @ A
        values = phase(u + z, nu) - phase(z, mu)
        return np.exp(1j * values) * spec.psi(u, z)

    radius = min(1.0 / spec.sector_constant, math.sqrt(1.0 - tau * tau) * norm / abs(u[cov.l]))
    if cov.n == 2:
        # exact support on the line: |z| < 1 and |u + z| < 1
        v = A[0]
        vv = float(v @ v)
        inner = _quadratic_interval(vv, 2 * float(z0 @ v), float(z0 @ z0) - 1)
        outer = _quadratic_interval(vv, 2 * float((u + z0) @ v), float((u + z0) @ (u + z0)) - 1)
        if inner is None or outer is None:
            return 0j
        lo = max(inner[0], outer[0], -radius)
        hi = min(inner[1], outer[1], radius)
        if lo >= hi:
            return 0j
        lows, highs = [lo], [hi]
    else:
        lows, highs = [-radius] * (cov.n - 1), [radius] * (cov.n - 1)
    return adaptive_integrate(integrand, lows, highs, settings, _frequency(nu, mu)).value


def eval_K_flat(
    family: PhaseFamily,
    nu: Mapping[int, float],
    mu: Mapping[int, float],
    u: Sequence[float],
    spec: Optional[BumpSpec] = None,
    settings: Optional[QuadratureSettings] = None,
    phase: Optional[NumericPhase] = None,
) -> complex:
    """int e^{i(P_nu(u+z) - P_mu(z))} Psi(u, z) dz."""
    spec = spec or BumpSpec(family.n)
    settings = settings or QuadratureSettings.from_env()
    phase = phase or NumericPhase(family)
    u = np.asarray(u, dtype=float)
    if float(np.linalg.norm(u)) >= 2.0:
        return 0j
    lows = np.maximum(-1.0, -1.0 - u)
    highs = np.minimum(1.0, 1.0 - u)
    if np.any(lows >= highs):
        return 0j

    def integrand(z: np.ndarray) -> np.ndarray:
        values = phase(u + z, nu) - phase(z, mu)
        return np.exp(1j * values) * spec.psi(u, z)

    return adaptive_integrate(integrand, list(lows), list(highs), settings, _frequency(nu, mu)).value


# ---------------------------------------------------------------------------
# van der Corput checks
# ---------------------------------------------------------------------------

@dataclass
class VdcCheck:
    value: complex
    norm: float
    bound: float
    degree: int

    @property
    def lhs(self) -> float:
        return abs(self.value)


def vdc_integral_check(
    q: Poly,
    psi: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    box: Optional[Sequence[Tuple[float, float]]] = None,
    settings: Optional[QuadratureSettings] = None,
) -> VdcCheck:
    """|int_box e^{iQ} psi| next to ||lambda||^{-1/d}; the norm skips the constant term."""
    norm = float(coefficient_norm(q, include_constant=False))
    if norm <= 0:
        raise DomainError("the phase has no non-constant coefficient")
    settings = settings or QuadratureSettings.from_env()
    box = list(box or [(0.0, 1.0)] * q.nvars)
    compiled = NumericPoly(q)

    def integrand(x: np.ndarray) -> np.ndarray:
        values = np.exp(1j * compiled(x))
        return values * psi(x) if psi is not None else values

    result = adaptive_integrate(integrand, [a for a, _ in box], [b for _, b in box], settings, norm)
    degree = q.degree()
    return VdcCheck(result.value, norm, norm ** (-1.0 / degree), degree)


def fit_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of log y against log x."""
    xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
    keep = (xs > 0) & (ys > 0) & np.isfinite(ys)
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(xs[keep]), np.log(ys[keep]), 1)[0])


def vdc_scan(
    base: Poly,
    lambdas: Sequence[float],
    psi: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    box: Optional[Sequence[Tuple[float, float]]] = None,
    settings: Optional[QuadratureSettings] = None,
    slack: float = 0.05,
) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    rows = []
    for lam in lambdas:
        check = vdc_integral_check(base * _as_fraction(lam), psi, box, settings)
        rows.append({
            "lambda": float(lam),
            "norm": check.norm,
            "re": check.value.real,
            "im": check.value.imag,
            "abs": check.lhs,
            "bound": check.bound,
        })
    frame = pd.DataFrame(rows)
    degree = base.degree()
    slope = fit_slope(frame["norm"], frame["abs"])
    summary = {
        "degree": degree,
        "slope": slope,
        "expected_slope": -1.0 / degree,
        "slack": slack,
        "passed": bool(slope <= -1.0 / degree + slack),
    }
    return frame, summary


def _as_fraction(value: float) -> Fraction:
    return Fraction(value).limit_denominator(10 ** 12) if isinstance(value, float) else Fraction(value)


DEFAULT_GRID = {1: 4000, 2: 400, 3: 80}


@dataclass
class SublevelEstimate:
    measure: float
    resolution: float
    cells: int


def sublevel_measure(q: Poly, rho: float, grid: Optional[int] = None) -> SublevelEstimate:
    """Midpoint-grid estimate of |{x in B_1 : |Q(x)| <= rho}|."""
    if rho <= 0:
        raise DomainError("rho must be positive")
    n = q.nvars
    grid = grid or DEFAULT_GRID.get(n, 30)
    step = 2.0 / grid
    axis = -1.0 + step * (np.arange(grid) + 0.5)
    compiled = NumericPoly(q)
    count = 0
    # chunk over the first axis to bound memory
    rest = max(1, grid ** (n - 1))
    rows_per_chunk = max(1, NumericPoly.CHUNK * 16 // rest)
    for start in range(0, grid, rows_per_chunk):
        head = axis[start:start + rows_per_chunk]
        mesh = np.meshgrid(head, *([axis] * (n - 1)), indexing="ij")
        points = np.stack([m.ravel() for m in mesh], axis=-1)
        inside = np.sum(points ** 2, axis=1) <= 1.0
        values = compiled(points[inside])
        count += int(np.count_nonzero(np.abs(values) <= rho))
    return SublevelEstimate(count * step ** n, step, grid ** n)


def sublevel_bound(q: Poly, rho: float) -> float:
    """rho^{1/d} [[lambda]]^{-1/d} with the constant term included."""
    degree = q.degree()
    return rho ** (1.0 / degree) * float(coefficient_norm(q)) ** (-1.0 / degree)


# ---------------------------------------------------------------------------
# Certificate evaluation and bad sets
# ---------------------------------------------------------------------------

class CertificateEvaluator:
    """Floating-point images of W, R^gamma, det B* and C_gamma, compiled once."""

    def __init__(self, cert: Certificate):
        self.cert = cert
        layout = cert.R.layout
        self.w_parts = {j: NumericPoly(p) for j, p in cert.W_parts.items()}
        self.R = NumericHomo(cert.R)
        self.det = NumericHomo(cert.det_bstar)
        pieces = coefficient_pieces(cert.family, cert.gamma, cert.cov, layout)
        expansion = SigmaExpansion(cert.family, cert.cov, layout, {cert.gamma: pieces})
        self.C = NumericHomo(expansion.total(cert.gamma))

    @staticmethod
    def _extras(prefix: str, values: Mapping[int, float]) -> Dict[str, float]:
        return {f"{prefix}{j}": float(v) for j, v in values.items()}

    def W(self, u: np.ndarray, nu: Mapping[int, float]) -> np.ndarray:
        u = np.atleast_2d(u)
        total = np.zeros(u.shape[0])
        for j, part in self.w_parts.items():
            total += float(nu.get(j, 0.0)) * part(u)
        return total

    def R_values(self, u: np.ndarray, tau: np.ndarray, nu: Mapping[int, float]) -> np.ndarray:
        return self.R(u, tau, self._extras("nu", nu))

    def remainder(self, u: np.ndarray, tau: np.ndarray, nu: Mapping[int, float], mu: Mapping[int, float]) -> np.ndarray:
        """det B* C_gamma - R^gamma."""
        extras = {**self._extras("nu", nu), **self._extras("mu", mu)}
        return self.det(u, tau, extras) * self.C(u, tau, extras) - self.R(u, tau, extras)


@dataclass
class BadSets:
    in_G: np.ndarray
    in_F: np.ndarray
    W: np.ndarray
    R: np.ndarray

    @property
    def bad(self) -> np.ndarray:
        return self.in_G | self.in_F

    def digest(self) -> str:
        bits = np.packbits(np.concatenate([self.in_G, self.in_F]).astype(np.uint8))
        return hashlib.sha256(bits.tobytes()).hexdigest()


def build_bad_sets(
    evaluator: CertificateEvaluator,
    nu: Mapping[int, float],
    r: float,
    u: np.ndarray,
    tau: np.ndarray,
    eps1: float,
    eps2: float,
    c0_const: float,
) -> BadSets:
    """G = {|W_nu(u)| <= r^eps2}, F_u = {|R_nu(u, tau)| <= C0 r^eps1}; reads nu only."""
    w = evaluator.W(u, nu)
    rv = evaluator.R_values(u, tau, nu)
    return BadSets(np.abs(w) <= r ** eps2, np.abs(rv) <= c0_const * r ** eps1, w, rv)


def calibrate_C0(
    evaluator: CertificateEvaluator,
    nu: Mapping[int, float],
    mu_samples: Sequence[Mapping[int, float]],
    r: float,
    u: np.ndarray,
    tau: np.ndarray,
    eps1: float,
) -> float:
    """10x the median |det B* C_gamma - R^gamma| at the given r, scaled by r^-eps1."""
    remainders = np.concatenate([np.abs(evaluator.remainder(u, tau, nu, mu)) for mu in mu_samples])
    median = float(np.median(remainders)) if remainders.size else 0.0
    return 10.0 * median / r ** eps1 if median > 0 else 1.0


# ---------------------------------------------------------------------------
# Decay scans
# ---------------------------------------------------------------------------

def sample_scan_points(
    n: int,
    l: int,
    count: int,
    rng: np.random.Generator,
    c0: float,
    margin: float = 0.02,
    tau_max: float = 0.95,
) -> Tuple[np.ndarray, np.ndarray]:
    """Uniform u in B_2 with |u_l|/|u| >= c0 + margin, and tau uniform in [-tau_max, tau_max]."""
    points: List[np.ndarray] = []
    while len(points) < count:
        batch = rng.uniform(-2.0, 2.0, size=(4 * count, n))
        norms = np.linalg.norm(batch, axis=1)
        keep = (norms < 2.0) & (norms > 1e-3) & (np.abs(batch[:, l]) >= (c0 + margin) * norms)
        points.extend(batch[keep])
    u = np.array(points[:count])
    tau = rng.uniform(-tau_max, tau_max, size=count)
    return u, tau


def sample_mu(degrees: Sequence[int], r: float, count: int, rng: np.random.Generator) -> List[Tuple[Dict[int, float], float]]:
    """(unit direction in l1, norm factor in [1, 2]) pairs; scaled by r per scan level."""
    draws = []
    for _ in range(count):
        direction = rng.normal(size=len(degrees))
        direction /= np.abs(direction).sum()
        draws.append(({j: float(v) for j, v in zip(degrees, direction)}, float(rng.uniform(1.0, 2.0))))
    return draws


def scaled_nu(direction: Mapping[int, float], r: float) -> Dict[int, float]:
    total = sum(abs(float(v)) for v in direction.values())
    if total == 0:
        raise DomainError("nu direction is zero")
    return {j: float(r) * float(v) / total for j, v in direction.items()}


@dataclass
class ScanReport:
    rows: pd.DataFrame
    summary: Dict[str, Any] = field(default_factory=dict)


def _check_certificate(cert: Certificate, family: PhaseFamily, l: int, direction: Mapping[int, float]) -> None:
    if cert.family != family:
        raise DomainError("certificate was issued for a different family")
    if cert.cov.l != l:
        raise DomainError(f"certificate is for sector {cert.sector}, scan uses sector {l + 1}")
    case, _ = classify_case(family, StoppingValue.from_direction(1.0, direction))
    if case is not cert.case:
        raise DomainError(f"nu direction falls in case {case.value}, certificate covers case {cert.case.value}")


def kernel_decay_scan(
    cfg: Any,
    family: PhaseFamily,
    cert: Optional[Certificate],
    rng: np.random.Generator,
    mapper: Optional[Mapper] = None,
    settings: Optional[QuadratureSettings] = None,
    spec: Optional[BumpSpec] = None,
    kernel: Optional[Callable[..., complex]] = None,
) -> ScanReport:
    """max |K_sharp| outside G and F_u per r, over mu samples; cert=None disables bad sets.

    ``cfg`` carries ``sector`` (1-based), ``nu_direction``, ``r_grid``, ``points``,
    ``mu_samples``, ``eps1``, ``eps2``, ``c0_const`` ("auto" or a number),
    ``tau_max`` and ``margin``.
    """
    l = cfg.sector - 1
    cov = ChangeOfVars(family.q, l)
    spec = spec or BumpSpec(family.n)
    settings = settings or QuadratureSettings.from_env()
    kernel = kernel or eval_K_sharp
    mapper = mapper or (lambda fn, items: [fn(item) for item in items])
    direction = {int(j): float(v) for j, v in cfg.nu_direction.items()}
    if cert is not None:
        _check_certificate(cert, family, l, direction)
    evaluator = CertificateEvaluator(cert) if cert is not None else None
    phase = NumericPhase(family)

    u, tau = sample_scan_points(family.n, l, cfg.points, rng, spec.sector_constant, cfg.margin, cfg.tau_max)
    draws = sample_mu(family.degrees, 1.0, max(0, cfg.mu_samples - 1), rng)
    r_grid = sorted(float(r) for r in cfg.r_grid)

    def mus_at(r: float) -> List[Dict[int, float]]:
        nu = scaled_nu(direction, r)
        return [nu] + [{j: r * t * v for j, v in d.items()} for d, t in draws]

    c0_const = cfg.c0_const
    if evaluator is not None and c0_const == "auto":
        c0_const = calibrate_C0(evaluator, scaled_nu(direction, r_grid[0]), mus_at(r_grid[0]), r_grid[0], u, tau, cfg.eps1)
    c0_const = float(c0_const) if c0_const != "auto" else float("nan")

    rows: List[Dict[str, Any]] = []
    per_r: List[Dict[str, Any]] = []
    sharp_bound = sharp_trivial_bound(spec)
    for r in r_grid:
        nu = scaled_nu(direction, r)
        if evaluator is not None:
            bad = build_bad_sets(evaluator, nu, r, u, tau, cfg.eps1, cfg.eps2, c0_const)
        else:
            empty = np.zeros(len(u), dtype=bool)
            bad = BadSets(empty, empty.copy(), np.full(len(u), np.nan), np.full(len(u), np.nan))
        mus = mus_at(r)
        items = [(i, k) for i in range(len(u)) for k in range(len(mus))]

        def evaluate(item: Tuple[int, int]) -> Optional[complex]:
            i, k = item
            try:
                return kernel(family, nu, mus[k], u[i], float(tau[i]), cov, spec, settings, phase)
            except QuadratureError:
                return None

        values = mapper(evaluate, items)
        failures = 0
        good_max, equal_max, all_max = 0.0, 0.0, 0.0
        for (i, k), value in zip(items, values):
            if value is None:
                failures += 1
                value = complex(np.nan, np.nan)
            magnitude = abs(value)
            row = {"r": r}
            row.update({f"u{c + 1}": float(u[i, c]) for c in range(family.n)})
            row.update({
                "tau": float(tau[i]),
                "re": value.real,
                "im": value.imag,
                "abs": magnitude,
                "in_Gnu": bool(bad.in_G[i]),
                "in_Fu": bool(bad.in_F[i]),
                "mu_sample_id": k,
            })
            rows.append(row)
            if math.isnan(magnitude):
                continue
            all_max = max(all_max, magnitude)
            if not bad.bad[i]:
                good_max = max(good_max, magnitude)
                if k == 0:
                    equal_max = max(equal_max, magnitude)
        per_r.append({
            "r": r,
            "max_abs_good": good_max,
            "max_abs_equal_mu": equal_max,
            "max_abs_all": all_max,
            "fraction_G": float(bad.in_G.mean()),
            "fraction_F": float(bad.in_F.mean()),
            "good_points": int((~bad.bad).sum()),
            "quadrature_failures": failures,
            "bad_set_digest": bad.digest(),
            "trivial_bound_ok": bool(all_max <= sharp_bound * (1 + 1e-6)),
        })
        console.print(f"[dim]r = {r:g}: max|K| outside bad sets {good_max:.4g}, |G| {per_r[-1]['fraction_G']:.2f}, |F| {per_r[-1]['fraction_F']:.2f}[/dim]")

    rs = [entry["r"] for entry in per_r]
    summary = {
        "sector": cfg.sector,
        "n": family.n,
        "certified": cert is not None,
        "case": cert.case.value if cert is not None else None,
        "gamma": list(cert.gamma) if cert is not None else None,
        "eps1": cfg.eps1,
        "eps2": cfg.eps2,
        "c0_const": c0_const,
        "sector_constant": spec.sector_constant,
        "trivial_bound": sharp_bound,
        "points": len(u),
        "mu_samples": len(draws) + 1,
        "per_r": per_r,
        "slope_good": fit_slope(rs, [e["max_abs_good"] for e in per_r]),
        "slope_equal_mu": fit_slope(rs, [e["max_abs_equal_mu"] for e in per_r]),
        "bad_fractions_shrink": all(
            a["fraction_G"] >= b["fraction_G"] and a["fraction_F"] >= b["fraction_F"]
            for a, b in zip(per_r, per_r[1:])
        ),
    }
    return ScanReport(pd.DataFrame(rows), summary)


__all__ = [
    "BadSets",
    "BumpSpec",
    "CertificateEvaluator",
    "NumericHomo",
    "NumericPhase",
    "NumericPoly",
    "QuadratureResult",
    "QuadratureSettings",
    "ScanReport",
    "SublevelEstimate",
    "VdcCheck",
    "adaptive_integrate",
    "build_bad_sets",
    "calibrate_C0",
    "eval_K_flat",
    "eval_K_sharp",
    "eta",
    "fit_slope",
    "flat_trivial_bound",
    "kernel_decay_scan",
    "sample_mu",
    "sample_scan_points",
    "scaled_nu",
    "sharp_trivial_bound",
    "sublevel_bound",
    "sublevel_measure",
    "tensor_rule",
    "vdc_integral_check",
    "vdc_scan",
]
