"""Exact rational convex geometry at desk scale.

Hulls are computed by brute force over affinely independent subsets in the
coordinates of the affine hull (pivot columns of its row-reduced direction
space).  Everything is ``Fraction``; sympy is used for rank, nullspace and
row reduction.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache, reduce
from itertools import combinations
from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple

import sympy

from settings import MAX_AMBIENT_DIM, MAX_CHAMBER_CELLS, MAX_CHAMBER_RANK, MAX_CHAMBER_WEIGHTS, MAX_WALLS
from utils import as_fraction_vector, format_rational, format_vector
from quotients.errors import DimensionGuardError, InputError, ScaleGuardError

logger = logging.getLogger(__name__)

Vector = Tuple[Fraction, ...]


# ───────────────────────── small exact helpers ─────────────────────────
def _dot(a: Sequence, b: Sequence) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def _sub(a: Sequence, b: Sequence) -> Vector:
    return tuple(x - y for x, y in zip(a, b))


def _to_sympy(rows: Sequence[Sequence[Fraction]]) -> sympy.Matrix:
    return sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in r] for r in rows])


def _from_sympy(value) -> Fraction:
    value = sympy.Rational(value)
    return Fraction(int(value.p), int(value.q))


def _primitive(vec: Sequence[Fraction]) -> Tuple[Optional[Tuple[int, ...]], Fraction]:
    """Scale a rational vector to a primitive integer vector; returns (ints, scale)."""
    if not any(vec):
        return None, Fraction(0)
    den = reduce(math.lcm, (Fraction(x).denominator for x in vec), 1)
    ints = [int(Fraction(x) * den) for x in vec]
    g = reduce(math.gcd, (abs(i) for i in ints), 0)
    return tuple(i // g for i in ints), Fraction(den, g)


def _det(rows: Sequence[Sequence[Fraction]]) -> Fraction:
    n = len(rows)
    if n == 0:
        return Fraction(1)
    if n == 1:
        return rows[0][0]
    if n == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    if n == 3:
        (a, b, c), (d, e, f), (g, h, i) = rows
        return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)
    return _from_sympy(_to_sympy(rows).det())


def _normal(directions: Sequence[Vector], k: int) -> Vector:
    """Generalized cross product of k-1 directions in Q^k."""
    if k == 1:
        return (Fraction(1),)
    out = []
    for j in range(k):
        minor = [tuple(x for c, x in enumerate(r) if c != j) for r in directions]
        out.append((-1) ** j * _det(minor))
    return tuple(out)


# ───────────────────────── polytope types ─────────────────────────
class Location(str, Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


@dataclass(frozen=True)
class Facet:
    """Inequality normal·x <= offset (or an equation normal·x == offset)."""
    normal: Tuple[int, ...]
    offset: Fraction

    def value(self, u: Sequence[Fraction]) -> Fraction:
        return _dot(self.normal, u) - self.offset

    def to_json(self) -> dict:
        return {"normal": format_vector(self.normal), "offset": format_rational(self.offset)}


@dataclass(frozen=True)
class AffineFrame:
    """Affine hull x = origin + (y - origin[pivots])·basis, y = x[pivots]."""
    origin: Vector
    pivots: Tuple[int, ...]
    basis: Tuple[Vector, ...]
    equations: Tuple[Facet, ...]

    @property
    def dim(self) -> int:
        return len(self.pivots)

    @classmethod
    def of(cls, points: Sequence[Vector]) -> "AffineFrame":
        origin = points[0]
        d = len(origin)
        diffs = [_sub(p, origin) for p in points[1:] if p != origin]
        if not diffs:
            eqs = tuple(Facet(tuple(int(i == j) for j in range(d)), origin[i]) for i in range(d))
            return cls(origin, (), (), eqs)
        M = _to_sympy(diffs)
        rref, pivots = M.rref()
        basis = tuple(tuple(_from_sympy(x) for x in rref.row(i)) for i in range(len(pivots)))
        eqs = []
        for ns in M.nullspace():
            normal, _ = _primitive([_from_sympy(x) for x in ns])
            lead = next(v for v in normal if v)
            if lead < 0:
                normal = tuple(-v for v in normal)
            eqs.append(Facet(normal, _dot(normal, origin)))
        return cls(origin, tuple(pivots), basis, tuple(sorted(eqs, key=lambda f: f.normal)))

    def project(self, x: Sequence[Fraction]) -> Vector:
        return tuple(x[j] for j in self.pivots)

    def lift(self, y: Sequence[Fraction]) -> Vector:
        x = list(self.origin)
        for c, row in zip(_sub(y, self.project(self.origin)), self.basis):
            if c:
                x = [a + c * b for a, b in zip(x, row)]
        return tuple(x)


@dataclass(frozen=True)
class Polytope:
    vertices: Tuple[Vector, ...]
    facets: Tuple[Facet, ...]
    equations: Tuple[Facet, ...]
    ambient_dim: int
    dim: int
    frame: AffineFrame

    def locate(self, u: Sequence) -> Location:
        return locate(self, u)

    def contains(self, u: Sequence) -> bool:
        return locate(self, u) is not Location.OUTSIDE

    def margin(self, u: Sequence[float]) -> float:
        """Euclidean-style margin to the relative boundary; positive inside."""
        u = [float(x) for x in u]
        off = max(
            (abs(sum(n * x for n, x in zip(e.normal, u)) - float(e.offset)) / math.hypot(*e.normal)
             for e in self.equations),
            default=0.0,
        )
        if self.dim == 0:
            return -math.dist(u, [float(x) for x in self.vertices[0]])
        inner = min(
            (float(f.offset) - sum(n * x for n, x in zip(f.normal, u))) / math.hypot(*f.normal)
            for f in self.facets
        )
        return inner - off

    @property
    def centroid(self) -> Vector:
        n = len(self.vertices)
        return tuple(sum(c) / n for c in zip(*self.vertices))

    def to_json(self) -> dict:
        return {
            "vertices": [format_vector(v) for v in self.vertices],
            "facets": [f.to_json() for f in self.facets],
            "equations": [e.to_json() for e in self.equations],
            "dim": self.dim,
            "ambient_dim": self.ambient_dim,
        }


# ───────────────────────── hull ─────────────────────────
def _full_dim_facets(ys: Sequence[Vector], k: int) -> List[Tuple[Tuple[int, ...], Fraction]]:
    if k == 1:
        vals = [y[0] for y in ys]
        return [((1,), max(vals)), ((-1,), -min(vals))]
    found = set()
    for combo in combinations(range(len(ys)), k):
        base = ys[combo[0]]
        normal, _ = _primitive(_normal([_sub(ys[c], base) for c in combo[1:]], k))
        if normal is None:
            continue
        offset = _dot(normal, base)
        vals = [_dot(normal, y) - offset for y in ys]
        if all(v <= 0 for v in vals):
            found.add((normal, offset))
        elif all(v >= 0 for v in vals):
            found.add((tuple(-v for v in normal), -offset))
    return sorted(found)


def _is_vertex(y: Vector, facets, k: int) -> bool:
    active = [n for n, b in facets if _dot(n, y) == b]
    if len(active) < k:
        return False
    return sympy.Matrix(active).rank() == k


def convex_hull(points: Iterable[Sequence]) -> Polytope:
    """Exact V- and H-representation of the hull of rational points."""
    pts = sorted({as_fraction_vector(p) for p in points})
    if not pts:
        raise InputError("convex_hull needs at least one point")
    d = len(pts[0])
    if any(len(p) != d for p in pts):
        raise InputError("points have mixed dimensions")
    if d > MAX_AMBIENT_DIM:
        raise DimensionGuardError(f"ambient dimension {d} exceeds guard {MAX_AMBIENT_DIM}")
    frame = AffineFrame.of(pts)
    k = frame.dim
    if k == 0:
        return Polytope((pts[0],), (), frame.equations, d, 0, frame)
    ys = [frame.project(p) for p in pts]
    facets_y = _full_dim_facets(ys, k)
    vertices = tuple(p for p, y in zip(pts, ys) if _is_vertex(y, facets_y, k))
    facets = []
    for normal_y, offset in facets_y:
        normal = [0] * d
        for j, v in zip(frame.pivots, normal_y):
            normal[j] = v
        facets.append(Facet(tuple(normal), offset))
    return Polytope(vertices, tuple(facets), frame.equations, d, k, frame)


def locate(P: Polytope, u: Sequence) -> Location:
    """Classify u against the closed polytope; boundary means relative boundary."""
    u = as_fraction_vector(u)
    if len(u) != P.ambient_dim:
        raise InputError(f"dimension mismatch: point has {len(u)} coordinates, polytope {P.ambient_dim}")
    if any(e.value(u) != 0 for e in P.equations):
        return Location.OUTSIDE
    if P.dim == 0:
        return Location.INTERIOR
    vals = [f.value(u) for f in P.facets]
    if any(v > 0 for v in vals):
        return Location.OUTSIDE
    if any(v == 0 for v in vals):
        return Location.BOUNDARY
    return Location.INTERIOR


@lru_cache(maxsize=4096)
def cached_hull(points: Tuple[Vector, ...]) -> Polytope:
    return convex_hull(points)


def hull_contains(points: Iterable[Sequence], u: Sequence) -> bool:
    key = tuple(sorted({as_fraction_vector(p) for p in points}))
    if not key:
        return False
    return cached_hull(key).contains(u)


# ───────────────────────── chambers ─────────────────────────
Constraint = Tuple[Vector, Fraction]
Cell = Tuple[Tuple[Vector, ...], Tuple[Constraint, ...]]


@dataclass(frozen=True)
class Wall:
    normal: Tuple[int, ...]
    offset: Fraction
    kind: str

    def value(self, y: Sequence[Fraction]) -> Fraction:
        return _dot(self.normal, y) - self.offset


def _canonical_wall(normal: Sequence[Fraction], offset: Fraction, kind: str) -> Optional[Wall]:
    ints, scale = _primitive(normal)
    if ints is None:
        return None
    offset = offset * scale
    if next(v for v in ints if v) < 0:
        ints, offset = tuple(-v for v in ints), -offset
    return Wall(ints, offset, kind)


def _walls(weights: Sequence[Vector], supports: Sequence[FrozenSet[int]], frame: AffineFrame, m: int) -> List[Wall]:
    k = frame.dim
    origin_y = frame.project(frame.origin)
    walls = {}

    def add(wall: Optional[Wall]):
        if wall is not None and (wall.normal, wall.offset) not in walls:
            walls[(wall.normal, wall.offset)] = wall

    # linear hyperplanes spanned by (m-1)-subsets, restricted to the affine hull
    for subset in combinations(sorted(set(weights)), m - 1):
        if subset:
            nullspace = _to_sympy(subset).nullspace()
        else:
            nullspace = [sympy.eye(m).col(0)] if m == 1 else []
        if len(nullspace) != 1:
            continue
        n = [_from_sympy(x) for x in nullspace[0]]
        a = [_dot(row, n) for row in frame.basis]
        b = _dot(a, origin_y) - _dot(n, frame.origin)
        add(_canonical_wall(a, b, "linear"))

    # hyperplanes bounding the weight hull of each realizable support
    for s in supports:
        hull = cached_hull(tuple(sorted({frame.project(weights[j]) for j in s})))
        if hull.dim == k:
            for f in hull.facets:
                add(_canonical_wall(f.normal, f.offset, "support"))
        elif hull.equations:
            f = hull.equations[0]
            add(_canonical_wall(f.normal, f.offset, "support"))
    return list(walls.values())


def _active(y: Vector, constraints: Sequence[Constraint]) -> FrozenSet[int]:
    return frozenset(i for i, (n, b) in enumerate(constraints) if _dot(n, y) == b)


def _is_edge(common: FrozenSet[int], constraints: Sequence[Constraint], k: int) -> bool:
    if len(common) < k - 1:
        return False
    if k <= 3:
        # constraints of a cell are distinct hyperplanes
        return True
    return _to_sympy([constraints[i][0] for i in common]).rank() == k - 1


def _prune(vertices: Tuple[Vector, ...], constraints: Tuple[Constraint, ...], k: int) -> Cell:
    kept = tuple(c for c in constraints if sum(_dot(c[0], y) == c[1] for y in vertices) >= k)
    return vertices, kept


def _split(cell: Cell, wall: Wall, k: int) -> List[Cell]:
    vertices, constraints = cell
    vals = [wall.value(y) for y in vertices]
    if all(v >= 0 for v in vals) or all(v <= 0 for v in vals):
        return [cell]
    active = [_active(y, constraints) for y in vertices]
    cuts = []
    for i, j in combinations(range(len(vertices)), 2):
        if vals[i] * vals[j] >= 0 or not _is_edge(active[i] & active[j], constraints, k):
            continue
        t = vals[i] / (vals[i] - vals[j])
        cuts.append(tuple(a + (b - a) * t for a, b in zip(vertices[i], vertices[j])))
    on = tuple(y for y, v in zip(vertices, vals) if v == 0) + tuple(cuts)
    normal = tuple(Fraction(x) for x in wall.normal)
    upper = tuple(y for y, v in zip(vertices, vals) if v > 0) + on
    lower = tuple(y for y, v in zip(vertices, vals) if v < 0) + on
    return [
        _prune(upper, constraints + ((tuple(-x for x in normal), -wall.offset),), k),
        _prune(lower, constraints + ((normal, wall.offset),), k),
    ]


def _cell_polytope(cell: Cell, P: Polytope) -> Polytope:
    frame = P.frame
    facets = []
    for normal_y, offset in cell[1]:
        ints, scale = _primitive(normal_y)
        normal = [0] * P.ambient_dim
        for j, v in zip(frame.pivots, ints):
            normal[j] = v
        facets.append(Facet(tuple(normal), offset * scale))
    vertices = tuple(sorted(frame.lift(y) for y in cell[0]))
    return Polytope(vertices, tuple(sorted(facets, key=lambda f: (f.normal, f.offset))),
                    P.equations, P.ambient_dim, P.dim, frame)


@dataclass(frozen=True)
class Chamber:
    polytope: Polytope
    sample: Vector
    provenance: Tuple[int, ...]
    lower_dimensional: bool

    def to_json(self) -> dict:
        return {
            "polytope": self.polytope.to_json(),
            "sample": format_vector(self.sample),
            "provenance": list(self.provenance),
            "lower_dimensional": self.lower_dimensional,
        }


@dataclass(frozen=True)
class ChamberComplex:
    polytope: Polytope
    chambers: Tuple[Chamber, ...]
    weights: Tuple[Vector, ...]
    supports: Tuple[FrozenSet[int], ...]
    wall_count: int

    def profile(self, u: Sequence) -> Tuple[int, ...]:
        return tuple(
            i for i, s in enumerate(self.supports)
            if hull_contains([self.weights[j] for j in s], u)
        )

    def chambers_containing(self, u: Sequence) -> List[int]:
        return [i for i, c in enumerate(self.chambers) if c.polytope.contains(u)]

    def to_json(self) -> dict:
        return {
            "polytope": self.polytope.to_json(),
            "chambers": [c.to_json() for c in self.chambers],
            "supports": [sorted(s) for s in self.supports],
            "walls": self.wall_count,
            "precision": "exact",
        }


def git_chambers(weights: Sequence[Sequence], realizable_supports: Iterable[Iterable[int]]) -> ChamberComplex:
    """Cells of the wall arrangement inside the hull of ``weights``.

    Walls are the linear hyperplanes spanned by (m-1)-subsets of weights and
    the hyperplanes bounding the weight hull of each realizable support, all
    taken inside the affine hull of the polytope, so the support profile is
    constant on the interior of every chamber.  Cells keep their vertices and
    their inequalities; a wall only splits cells with vertices strictly on
    both sides of it.
    """
    ws = tuple(as_fraction_vector(w) for w in weights)
    if not ws:
        raise InputError("git_chambers needs at least one weight")
    m = len(ws[0])
    if m > MAX_CHAMBER_RANK or len(ws) > MAX_CHAMBER_WEIGHTS:
        raise ScaleGuardError(
            f"chamber enumeration limited to rank {MAX_CHAMBER_RANK} and {MAX_CHAMBER_WEIGHTS} weights "
            f"(got rank {m}, {len(ws)} weights)"
        )
    supports = tuple(frozenset(s) for s in realizable_supports)
    for s in supports:
        if not s or any(not 0 <= i < len(ws) for i in s):
            raise InputError(f"support {sorted(s)} does not index the weight list")

    P = convex_hull(ws)
    frame, k = P.frame, P.dim
    if k == 0:
        walls, cells = [], [((frame.project(P.vertices[0]),), ())]
    else:
        vertices_y = tuple(frame.project(v) for v in P.vertices)
        walls = [
            w for w in _walls(ws, sorted(set(supports), key=sorted), frame, m)
            if any(w.value(y) > 0 for y in vertices_y) and any(w.value(y) < 0 for y in vertices_y)
        ]
        if len(walls) > MAX_WALLS:
            raise ScaleGuardError(f"{len(walls)} walls exceed guard {MAX_WALLS}")
        start = tuple((tuple(Fraction(f.normal[j]) for j in frame.pivots), f.offset) for f in P.facets)
        cells = [(vertices_y, start)]
        for wall in walls:
            cells = [part for cell in cells for part in _split(cell, wall, k)]
            if len(cells) > MAX_CHAMBER_CELLS:
                raise ScaleGuardError(f"more than {MAX_CHAMBER_CELLS} chambers")
    logger.info("chamber arrangement: %d walls, %d cells", len(walls), len(cells))

    complex_ = ChamberComplex(P, (), ws, supports, len(walls))
    chambers = []
    for cell in cells:
        poly = P if k == 0 else _cell_polytope(cell, P)
        sample = poly.centroid
        chambers.append(Chamber(poly, sample, complex_.profile(sample), P.dim < m))
    chambers.sort(key=lambda c: c.sample)
    return ChamberComplex(P, tuple(chambers), ws, supports, len(walls))
