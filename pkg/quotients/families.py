"""The three symmetric families and their Chow quotient data.

Coordinate conventions:
  hypersurface X^{2n-1}_{alpha,beta} in P^n x P^n: x_0..x_n are indices 0..n,
  y_0..y_n are indices n+1..2n+1, equation sum x_i^alpha y_i^beta.
  quadric Q^{2n} in P^{2n+1}: x_0..x_{2n+1}, equation sum x_{2i} x_{2i+1}.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from itertools import product
from math import gcd
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from utils import as_fraction_vector, format_vector
from quotients.errors import InputError, InvariantViolation, InvalidStratumError, SelectorError, WrongFamilyKindError
from quotients.lattice_core import (
    StabilizerGroup,
    TorusActionSpec,
    effective_character_map,
    make_effective,
    stratum_stabilizer,
)
from quotients.moment_kn import AmbientPoint, monomial_data, sample_point, supported_weights
from quotients.polyhedral import Location, Polytope, convex_hull, locate

logger = logging.getLogger(__name__)

_SUPERSCRIPTS = str.maketrans("0123456789", "⁰¹²³⁴⁵⁶⁷⁸⁹")


def reduced_pair(alpha: int, beta: int) -> Tuple[int, int, int]:
    if alpha < 1 or beta < 1:
        raise SelectorError(f"alpha and beta must be positive, got ({alpha}, {beta})")
    d = gcd(alpha, beta)
    return d, alpha // d, beta // d


class FamilyKind(str, Enum):
    HYPERSURFACE = "hypersurface"
    QUADRIC = "quadric"
    BLOWN_UP_QUADRIC = "blownup-quadric"


@dataclass(frozen=True)
class FamilySpec:
    kind: FamilyKind
    n: int
    alpha: int = 1
    beta: int = 1

    def __post_init__(self):
        if self.n < 2:
            raise SelectorError(f"n must be at least 2, got {self.n}")
        if self.kind is FamilyKind.HYPERSURFACE:
            reduced_pair(self.alpha, self.beta)
        elif (self.alpha, self.beta) != (1, 1):
            raise SelectorError(f"{self.kind.value} takes no alpha/beta parameters")

    # ───── selectors ─────
    @classmethod
    def hypersurface(cls, n: int, alpha: int, beta: int) -> "FamilySpec":
        return cls(FamilyKind.HYPERSURFACE, n, alpha, beta)

    @classmethod
    def quadric(cls, n: int) -> "FamilySpec":
        return cls(FamilyKind.QUADRIC, n)

    @classmethod
    def blown_up_quadric(cls, n: int) -> "FamilySpec":
        return cls(FamilyKind.BLOWN_UP_QUADRIC, n)

    @classmethod
    def parse(cls, selector: str) -> "FamilySpec":
        """Parse "hypersurface:n=3,alpha=1,beta=2", "quadric:n=3" or "blownup-quadric:n=3"."""
        match = re.fullmatch(r"\s*([a-z\-]+)\s*:\s*(.*?)\s*", selector or "")
        if not match:
            raise SelectorError(f"malformed family selector {selector!r}")
        try:
            kind = FamilyKind(match.group(1))
        except ValueError:
            raise SelectorError(f"unknown family kind {match.group(1)!r}") from None
        params: Dict[str, int] = {}
        for part in filter(None, (p.strip() for p in match.group(2).split(","))):
            key, sep, value = part.partition("=")
            if not sep or not re.fullmatch(r"-?\d+", value.strip()):
                raise SelectorError(f"malformed parameter {part!r} in {selector!r}")
            params[key.strip()] = int(value)
        allowed = {"n", "alpha", "beta"} if kind is FamilyKind.HYPERSURFACE else {"n"}
        if "n" not in params or set(params) - allowed or (kind is FamilyKind.HYPERSURFACE and set(params) != allowed):
            raise SelectorError(f"selector {selector!r} needs exactly the parameters {sorted(allowed)}")
        return cls(kind, params["n"], params.get("alpha", 1), params.get("beta", 1))

    @property
    def selector(self) -> str:
        if self.kind is FamilyKind.HYPERSURFACE:
            return f"hypersurface:n={self.n},alpha={self.alpha},beta={self.beta}"
        return f"{self.kind.value}:n={self.n}"

    @property
    def label(self) -> str:
        if self.kind is FamilyKind.HYPERSURFACE:
            return f"X^{self.dim}_{{{self.alpha},{self.beta}}}"
        return f"{'Q' if self.kind is FamilyKind.QUADRIC else 'W'}^{self.dim}"

    # ───── numbers ─────
    @property
    def d(self) -> int:
        return reduced_pair(self.alpha, self.beta)[0]

    @property
    def a(self) -> int:
        return reduced_pair(self.alpha, self.beta)[1]

    @property
    def b(self) -> int:
        return reduced_pair(self.alpha, self.beta)[2]

    @property
    def dim(self) -> int:
        return 2 * self.n - 1 if self.kind is FamilyKind.HYPERSURFACE else 2 * self.n

    @property
    def base_dim(self) -> int:
        return self.n - 1

    def to_json(self) -> dict:
        out = {"kind": self.kind.value, "n": self.n, "label": self.label, "dim": self.dim}
        if self.kind is FamilyKind.HYPERSURFACE:
            out.update(alpha=self.alpha, beta=self.beta, d=self.d, a=self.a, b=self.b)
        return out


def is_fano(f: FamilySpec) -> bool:
    if f.kind is FamilyKind.HYPERSURFACE:
        return f.alpha < f.n + 1 and f.beta < f.n + 1
    # quadrics are Fano; W is recorded as Fano
    return True


def is_smooth(f: FamilySpec) -> bool:
    """Jacobian criterion: sum x_i^alpha y_i^beta is smooth iff min(alpha, beta) = 1."""
    if f.kind is FamilyKind.HYPERSURFACE:
        return min(f.alpha, f.beta) == 1
    return True


# ───────────────────────── torus actions ─────────────────────────
def _unit(i: int, m: int, scale: int = 1) -> Tuple[int, ...]:
    return tuple(scale if j == i else 0 for j in range(m))


def _hypersurface_spec(f: FamilySpec) -> TorusActionSpec:
    n, a, b = f.n, f.a, f.b
    zero = (0,) * n
    weights = [zero] + [_unit(i, n, b) for i in range(n)] + [zero] + [_unit(i, n, -a) for i in range(n)]
    equation = []
    for i in range(n + 1):
        exps = [0] * (2 * n + 2)
        exps[i], exps[n + 1 + i] = f.alpha, f.beta
        equation.append((tuple(exps), Fraction(1)))
    labels = tuple(f"x{i}" for i in range(n + 1)) + tuple(f"y{i}" for i in range(n + 1))
    return TorusActionSpec(n, (n, n), tuple(weights), tuple(equation), labels)


def raw_quadric_spec(n: int) -> TorusActionSpec:
    """The rank n+1 action deg x_{2i} = e_{i+1}, deg x_{2i+1} = -e_{i+1}; -Id acts trivially."""
    m = n + 1
    weights = []
    for i in range(m):
        weights += [_unit(i, m), _unit(i, m, -1)]
    equation = []
    for i in range(m):
        exps = [0] * (2 * m)
        exps[2 * i] = exps[2 * i + 1] = 1
        equation.append((tuple(exps), Fraction(1)))
    labels = tuple(f"x{i}" for i in range(2 * m))
    return TorusActionSpec(m, (2 * n + 1,), tuple(weights), tuple(equation), labels)


def ambient_spec(f: FamilySpec) -> TorusActionSpec:
    if f.kind is FamilyKind.HYPERSURFACE:
        return _hypersurface_spec(f)
    return make_effective(raw_quadric_spec(f.n))


# ───────────────────────── quotient map ─────────────────────────
@dataclass(frozen=True)
class MonomialMap:
    monomials: Tuple[Tuple[int, ...], ...]
    labels: Tuple[str, ...]

    def evaluate(self, x: Sequence[complex]) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        return np.array([np.prod(x ** np.array(e)) for e in self.monomials])

    def describe(self) -> List[str]:
        out = []
        for e in self.monomials:
            parts = [self.labels[c] + (f"^{k}" if k > 1 else "") for c, k in enumerate(e) if k]
            out.append("*".join(parts))
        return out


def chow_quotient_map(f: FamilySpec) -> MonomialMap:
    spec = ambient_spec(f)
    monomials = []
    for i in range(1, f.n + 1):
        exps = [0] * spec.n_coords
        if f.kind is FamilyKind.HYPERSURFACE:
            exps[i], exps[f.n + 1 + i] = f.a, f.b
        else:
            exps[2 * i] = exps[2 * i + 1] = 1
        monomials.append(tuple(exps))
    if len({spec.multidegree(e) for e in monomials}) != 1:
        raise InvariantViolation(f"quotient map of {f.label} mixes multidegrees")
    if len({spec.monomial_weight(e) for e in monomials}) != 1:
        raise InvariantViolation(f"quotient map of {f.label} is not torus invariant")
    return MonomialMap(tuple(monomials), spec.labels)


# ───────────────────────── supports ─────────────────────────
def _pairs(f: FamilySpec) -> List[Tuple[int, int]]:
    if f.kind is FamilyKind.HYPERSURFACE:
        return [(i, f.n + 1 + i) for i in range(f.n + 1)]
    return [(2 * i, 2 * i + 1) for i in range(f.n + 1)]


def realizable_support(f: FamilySpec, pattern: Iterable[int]) -> bool:
    """A vanishing pattern is realized iff the number of surviving equation terms is not one."""
    pattern = frozenset(pattern)
    spec = ambient_spec(f)
    for k, rng in enumerate(spec.factor_ranges):
        if not any(c in pattern for c in rng):
            raise InvalidStratumError(f"pattern is empty in factor {k}")
    full = sum(1 for i, j in _pairs(f) if i in pattern and j in pattern)
    return full != 1


def find_witness(f: FamilySpec, pattern: Iterable[int], rng: np.random.Generator,
                 attempts: int = 8) -> Optional[AmbientPoint]:
    spec = ambient_spec(f)
    for _ in range(attempts):
        p = sample_point(spec, rng, support=pattern)
        if p is not None:
            return p
    return None


def all_patterns(f: FamilySpec) -> List[FrozenSet[int]]:
    spec = ambient_spec(f)
    out = []
    for bits in product((0, 1), repeat=spec.n_coords):
        pattern = frozenset(c for c, bit in enumerate(bits) if bit)
        if all(any(c in pattern for c in rng) for rng in spec.factor_ranges):
            out.append(pattern)
    return out


# ───────────────────────── boundary pairs ─────────────────────────
@dataclass(frozen=True)
class BoundaryComponent:
    hyperplane: int
    name: str
    order: int

    def to_json(self) -> dict:
        return {"hyperplane": f"H_{self.hyperplane}", "component": self.name, "stabilizer_order": self.order}


@dataclass(frozen=True)
class ChowQuotientPair:
    """(P^base_dim, sum_j coefficient_j H_j) with H_0 = V(sum z_i)."""
    base_dim: int
    coefficients: Tuple[Fraction, ...]
    stabilizer_orders: Tuple[int, ...] = field(default=(), compare=False)
    components: Tuple[BoundaryComponent, ...] = field(default=(), compare=False)

    @property
    def hyperplanes(self) -> Tuple[str, ...]:
        names = ["H_0 = V(z_1 + ... + z_n)"]
        names += [f"H_{i} = V(z_{i})" for i in range(1, self.base_dim + 2)]
        return tuple(names)

    @property
    def gamma(self) -> Fraction:
        if len(set(self.coefficients)) != 1:
            raise InvariantViolation(f"boundary coefficients differ: {self.coefficients}")
        return self.coefficients[0]

    @property
    def label(self) -> str:
        g = self.gamma
        return f"(P^{self.base_dim}, B_{g.numerator}/{g.denominator})"

    def to_json(self) -> dict:
        return {
            "base": f"P^{self.base_dim}",
            "base_dim": self.base_dim,
            "hyperplanes": list(self.hyperplanes),
            "coefficients": format_vector(self.coefficients),
            "stabilizer_orders": list(self.stabilizer_orders),
            "components": [c.to_json() for c in self.components],
            "label": self.label,
        }


def _coefficient(m: int) -> Fraction:
    return Fraction(m - 1, m)


def chow_boundary(f: FamilySpec) -> ChowQuotientPair:
    """Closed-form boundary: gamma = max((a-1)/a, (b-1)/b), 1/2 for W, 0 for Q."""
    if f.kind is FamilyKind.HYPERSURFACE:
        m = max(f.a, f.b)
    elif f.kind is FamilyKind.BLOWN_UP_QUADRIC:
        m = 2
    else:
        m = 1
    count = f.n + 1
    return ChowQuotientPair(f.base_dim, (_coefficient(m),) * count, (m,) * count)


def exc_divisor_stabilizer(f: FamilySpec, j: int = 0) -> StabilizerGroup:
    """Generic stabilizer of the exceptional divisor E_j of W.

    In the blowup chart along x_{2j} = x_{2j+1} = 0 the new coordinates (u : v)
    satisfy deg u = deg v + 2 e_{j+1}; the generic point of E_j has both u and v
    nonzero and x_{2j} = x_{2j+1} = 0.  Weights are measured in the character
    lattice of the effective quadric torus.
    """
    if f.kind is not FamilyKind.BLOWN_UP_QUADRIC:
        raise WrongFamilyKindError(f"exceptional divisors exist only on W, not on {f.label}")
    if not 0 <= j <= f.n:
        raise InvalidStratumError(f"no exceptional divisor E_{j} on {f.label}")
    raw = raw_quadric_spec(f.n)
    effective = make_effective(raw)
    cmap = effective_character_map(raw)
    chart_shift = tuple(-v for v in _unit(j, raw.torus_rank, 2))
    weights = effective.weights + ((0,) * effective.torus_rank, cmap(chart_shift))
    equation = tuple((exps + (0, 0), c) for exps, c in raw.equation)
    chart = TorusActionSpec(
        torus_rank=effective.torus_rank,
        factors=raw.factors + (1,),
        weights=weights,
        equation=equation,
        labels=raw.labels + ("u", "v"),
    )
    support = [c for c in range(chart.n_coords) if c not in (2 * j, 2 * j + 1)]
    group = stratum_stabilizer(chart, support)
    logger.debug("E_%d of %s: stabilizer %s", j, f.label, group.to_json())
    return group


def boundary_from_stabilizers(f: FamilySpec) -> ChowQuotientPair:
    """Recompute the pair from generic stabilizer orders of the strata over each H_j."""
    spec = ambient_spec(f)
    everything = frozenset(range(spec.n_coords))
    components: List[BoundaryComponent] = []
    for j, pair in enumerate(_pairs(f)):
        for coord in pair:
            support = everything - {coord}
            group = stratum_stabilizer(spec, support)
            if group.free_rank:
                raise InvariantViolation(f"stratum {spec.label(coord)} = 0 has a positive-dimensional stabilizer")
            components.append(BoundaryComponent(j, f"{{{spec.label(coord)} = 0}}", group.order))
        if f.kind is FamilyKind.BLOWN_UP_QUADRIC:
            components.append(BoundaryComponent(j, f"E_{j}", exc_divisor_stabilizer(f, j).order))
    orders = []
    for j in range(f.n + 1):
        orders.append(max(c.order for c in components if c.hyperplane == j))
    return ChowQuotientPair(
        f.base_dim,
        tuple(_coefficient(m) for m in orders),
        tuple(orders),
        tuple(components),
    )


def quotient_space_report(f: FamilySpec) -> str:
    if f.kind is not FamilyKind.HYPERSURFACE:
        return f"not available: the join description covers the bidegree hypersurfaces, not {f.label}"
    k = str(f.n - 1).translate(_SUPERSCRIPTS)
    return f"S{k} ∗ CP{k}"


# ───────────────────────── polytopes ─────────────────────────
def moment_polytope(f: FamilySpec) -> Polytope:
    return convex_hull(monomial_data(ambient_spec(f)).exact_weights)


def chamber_inputs(f: FamilySpec) -> Tuple[List[Tuple[int, ...]], List[FrozenSet[int]]]:
    """Distinct monomial weights and the weight-index sets of every realizable support."""
    spec = ambient_spec(f)
    weights = sorted(set(monomial_data(spec).exact_weights))
    position = {w: i for i, w in enumerate(weights)}
    supports = set()
    for pattern in all_patterns(f):
        if realizable_support(f, pattern):
            supports.add(frozenset(position[w] for w in supported_weights(spec, pattern)))
    return weights, sorted(supports, key=lambda s: (len(s), sorted(s)))


# ───────────────────────── GIT quotients ─────────────────────────
def _sign(v: Fraction) -> int:
    return (v > 0) - (v < 0)


def diagonal_free(f: FamilySpec, pattern: Iterable[int]) -> bool:
    """True when every product x_i y_i vanishes on points with this support."""
    pattern = frozenset(pattern)
    return not any(i in pattern and j in pattern for i, j in _pairs(f))


def support_from_moment(f: FamilySpec, mu: Sequence) -> FrozenSet[int]:
    """Recover the support of a point with all x_i y_i = 0 from the signs of its moment value.

    For i > 0 the sign of mu_i picks x_i (positive) or y_i (negative); the sign of
    sum(mu) - (b - a) picks y_0 (positive) or x_0 (negative). Zero means both vanish.
    """
    if f.kind is not FamilyKind.HYPERSURFACE:
        raise WrongFamilyKindError(f"support recovery from moment signs needs a hypersurface, got {f.label}")
    mu = as_fraction_vector(mu)
    if len(mu) != f.n:
        raise InputError(f"moment value has {len(mu)} coordinates, the torus has rank {f.n}")
    # positive picks x_i, negative y_i; index 0 reads the shifted sum with the opposite sign
    signs = [-_sign(sum(mu) - (f.b - f.a))] + [_sign(v) for v in mu]
    support = set()
    for i, s in enumerate(signs):
        if s > 0:
            support.add(i)
        elif s < 0:
            support.add(f.n + 1 + i)
    support = frozenset(support)
    if not support & set(range(f.n + 1)) or not support & set(range(f.n + 1, 2 * f.n + 2)):
        raise InvalidStratumError(f"no point with vanishing diagonal products has moment value {format_vector(mu)}")
    return support


@dataclass(frozen=True)
class GitQuotient:
    u: Tuple[Fraction, ...]
    location: Location
    quotient: str
    quotient_map: Tuple[str, ...] = ()

    def to_json(self) -> dict:
        out = {"u": format_vector(self.u), "location": self.location.value, "quotient": self.quotient}
        if self.quotient_map:
            out["quotient_map"] = list(self.quotient_map)
        return out


def git_quotient(f: FamilySpec, u: Sequence, P: Optional[Polytope] = None) -> GitQuotient:
    """The quotient over u: empty outside P, a point on its boundary, P^{n-1} inside."""
    u = as_fraction_vector(u)
    location = locate(moment_polytope(f) if P is None else P, u)
    if f.kind is not FamilyKind.HYPERSURFACE:
        return GitQuotient(u, location, "not available")
    if location is Location.OUTSIDE:
        return GitQuotient(u, location, "empty")
    if location is Location.BOUNDARY:
        return GitQuotient(u, location, "point")
    return GitQuotient(u, location, f"P^{f.n - 1}", tuple(chow_quotient_map(f).describe()))
