"""Plane log pairs: C*-degenerations of divisors, the concurrent-lines
log-canonicity test and the glct lower bound for (P^2, B_gamma)."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np
import sympy
from sympy.parsing.sympy_parser import parse_expr, standard_transformations

from utils import ExtendedRational, format_rational, parse_fraction
from quotients.errors import InputError, PreconditionError

logger = logging.getLogger(__name__)

x1, x2, x3 = GENS = sympy.symbols("x1 x2 x3")
CENTER = (Fraction(0), Fraction(0), Fraction(1))


def _poly(expr) -> sympy.Poly:
    return sympy.Poly(expr, *GENS, domain=sympy.QQ)


# ───────────────────────── divisors ─────────────────────────
@dataclass(frozen=True)
class PlaneDivisor:
    """sum a_i V(F_i) with F_i irreducible, monic over QQ and pairwise distinct."""
    components: Tuple[Tuple[sympy.Poly, Fraction], ...] = ()

    @classmethod
    def of(cls, pairs: Iterable[Tuple[Union[sympy.Poly, sympy.Expr, str], object]]) -> "PlaneDivisor":
        merged = {}
        for poly, coeff in pairs:
            coeff = parse_fraction(coeff)
            if coeff < 0:
                raise InputError(f"negative divisor coefficient {coeff}")
            if coeff == 0:
                continue
            if isinstance(poly, str):
                poly = parse_expr(poly, local_dict={str(g): g for g in GENS}, transformations=standard_transformations)
            poly = poly if isinstance(poly, sympy.Poly) else _poly(poly)
            if poly.is_zero or poly.total_degree() == 0:
                raise InputError(f"{poly.as_expr()} does not define a curve")
            if not poly.is_homogeneous:
                raise InputError(f"{poly.as_expr()} is not homogeneous")
            _, factors = poly.factor_list()
            for factor, mult in factors:
                factor = _poly(factor.as_expr()).monic()
                key = factor.as_expr()
                prev = merged.get(key, (factor, Fraction(0)))
                merged[key] = (factor, prev[1] + coeff * mult)
        ordered = sorted(merged.values(), key=lambda fc: (fc[0].total_degree(), sympy.default_sort_key(fc[0].as_expr())))
        return cls(tuple(ordered))

    @classmethod
    def from_json(cls, items: Sequence[dict]) -> "PlaneDivisor":
        try:
            return cls.of((item["poly"], item["coeff"]) for item in items)
        except (KeyError, TypeError, SyntaxError, sympy.SympifyError, ValueError) as e:
            raise InputError(f"malformed divisor: {e}") from e

    @property
    def degree(self) -> Fraction:
        return sum((a * p.total_degree() for p, a in self.components), Fraction(0))

    @property
    def coefficients(self) -> List[Fraction]:
        return [a for _, a in self.components]

    def swap(self) -> "PlaneDivisor":
        """Image under the involution exchanging x1 and x2."""
        return PlaneDivisor.of(
            (p.as_expr().subs({x1: x2, x2: x1}, simultaneous=True), a) for p, a in self.components
        )

    def to_json(self) -> list:
        return [{"poly": str(p.as_expr()), "coeff": format_rational(a)} for p, a in self.components]


@dataclass(frozen=True)
class OnePS:
    """t . [x1:x2:x3] = [t^w1 x1 : t^w2 x2 : t^w3 x3]."""
    weights: Tuple[int, int, int]

    def __post_init__(self):
        if len(self.weights) != 3:
            raise InputError("a one-parameter subgroup of the plane needs three weights")
        if len(set(self.weights)) == 1:
            raise InputError("equal weights act trivially on P^2")


# ───────────────────────── degeneration ─────────────────────────
def _pairing(monom: Sequence[int], w: Sequence[int]) -> int:
    return sum(e * k for e, k in zip(monom, w))


def initial_form(F: sympy.Poly, w: OnePS) -> sympy.Poly:
    """Sum of the terms of F with maximal weight <exponent, w>."""
    terms = F.terms()
    top = max(_pairing(m, w.weights) for m, _ in terms)
    return sympy.Poly.from_dict({m: c for m, c in terms if _pairing(m, w.weights) == top}, *GENS, domain=sympy.QQ)


def degenerate(D: PlaneDivisor, w: OnePS) -> PlaneDivisor:
    return PlaneDivisor.of((initial_form(F, w), a) for F, a in D.components)


def numeric_limit(F: sympy.Poly, w: OnePS, t: float = 1e-4) -> Tuple[List[Tuple[int, ...]], np.ndarray]:
    """Normalized coefficients of F(t^-w x) as t -> 0.

    Coefficients are scaled by t^(top - <e,w>), normalized to unit length and
    extrapolated with three Richardson steps from t, t/2, t/4.
    """
    terms = sorted(F.terms())
    monomials = [m for m, _ in terms]
    coeffs = np.array([float(c) for _, c in terms])
    gaps = np.array([max(_pairing(m, w.weights) for m in monomials) - _pairing(m, w.weights) for m in monomials])

    def normalized(s: float) -> np.ndarray:
        v = coeffs * s ** gaps
        return v / np.linalg.norm(v)

    f1, f2, f4 = normalized(t), normalized(t / 2), normalized(t / 4)
    r1, r2 = 2 * f2 - f1, 2 * f4 - f2
    return monomials, (4 * r2 - r1) / 3


def initial_form_vector(F: sympy.Poly, w: OnePS) -> Tuple[List[Tuple[int, ...]], np.ndarray]:
    init = dict(initial_form(F, w).terms())
    monomials = sorted(m for m, _ in F.terms())
    v = np.array([float(init.get(m, 0)) for m in monomials])
    return monomials, v / np.linalg.norm(v)


# ───────────────────────── concurrent lines ─────────────────────────
def _check_concurrent(D: PlaneDivisor, P: Sequence) -> None:
    point = dict(zip(GENS, (sympy.Rational(str(parse_fraction(c))) for c in P)))
    if all(v == 0 for v in point.values()):
        raise PreconditionError("the common point must be a point of P^2")
    for F, _ in D.components:
        if F.total_degree() != 1:
            raise PreconditionError(f"{F.as_expr()} is not a line")
        if F.as_expr().subs(point) != 0:
            raise PreconditionError(f"line {F.as_expr()} does not pass through {tuple(P)}")


def is_lc_concurrent(D: PlaneDivisor, P: Sequence = CENTER) -> bool:
    """Lines through one point: log canonical iff deg D <= 2 and every a_i <= 1."""
    _check_concurrent(D, P)
    return sum(D.coefficients, Fraction(0)) <= 2 and all(a <= 1 for a in D.coefficients)


def blowup_discrepancy_concurrent(D: PlaneDivisor, P: Sequence = CENTER) -> Fraction:
    """Coefficient of the exceptional curve after blowing up the common point."""
    _check_concurrent(D, P)
    return sum(D.coefficients, Fraction(0)) - 1


# ───────────────────────── glct bound ─────────────────────────
def _check_gamma(gamma: Fraction) -> Fraction:
    gamma = parse_fraction(gamma)
    if not 0 <= gamma < 1:
        raise PreconditionError(f"gamma must lie in [0, 1), got {gamma}")
    return gamma


def _constraints(gamma: Fraction) -> List[Tuple[Fraction, Fraction, Fraction]]:
    return [
        (2 * gamma, 3 - 4 * gamma, Fraction(2)),
        (Fraction(0), 3 - 4 * gamma, Fraction(1)),
    ]


def lc_feasible(gamma, lam) -> bool:
    """2g + 3l - 4gl <= 2 and (3 - 4g) l <= 1."""
    gamma = _check_gamma(gamma)
    lam = parse_fraction(lam)
    if lam < 0:
        raise PreconditionError(f"lambda must be non-negative, got {lam}")
    return all(c0 + c1 * lam <= rhs for c0, c1, rhs in _constraints(gamma))


def glct_bound(gamma) -> ExtendedRational:
    """Lower bound for glct_{S_4}(P^2, B_gamma)."""
    gamma = _check_gamma(gamma)
    if gamma >= Fraction(3, 4):
        return math.inf
    if gamma <= Fraction(1, 2):
        return 1 / (3 - 4 * gamma)
    return 2 * (1 - gamma) / (3 - 4 * gamma)


def glct_bound_via_search(gamma) -> ExtendedRational:
    """sup{lambda : lc_feasible(gamma, lambda)} from the linear constraints directly."""
    gamma = _check_gamma(gamma)
    bounds = []
    for c0, c1, rhs in _constraints(gamma):
        if c1 > 0:
            bounds.append((rhs - c0) / c1)
        elif c0 > rhs:
            return Fraction(0)
    if not bounds:
        return math.inf
    sup = min(bounds)
    if not lc_feasible(gamma, sup):
        raise PreconditionError(f"no feasible lambda for gamma = {gamma}")
    return sup


def worst_case_degenerations(gamma, lam) -> List[Tuple[str, PlaneDivisor]]:
    """Extremal symmetric degenerated pairs at the point [0:0:1].

    The boundary lines V(x1), V(x2) carry gamma; the degenerated divisor of
    degree (3 - 4 gamma) lambda is placed on one new line, split over the two
    boundary lines, or split over a pair of lines exchanged by x1 <-> x2.
    """
    gamma = _check_gamma(gamma)
    lam = parse_fraction(lam)
    mass = lam * max(Fraction(0), 3 - 4 * gamma)
    boundary = [(x1, gamma), (x2, gamma)]
    return [
        ("new line V(x1 + x2)", PlaneDivisor.of(boundary + [(x1 + x2, mass)])),
        ("new line V(x1 - x2)", PlaneDivisor.of(boundary + [(x1 - x2, mass)])),
        ("split on H1 + H2", PlaneDivisor.of(boundary + [(x1, mass / 2), (x2, mass / 2)])),
        ("symmetric pair V(x1 + 2 x2) + V(2 x1 + x2)",
         PlaneDivisor.of(boundary + [(x1 + 2 * x2, mass / 2), (2 * x1 + x2, mass / 2)])),
    ]
