from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from scipy.optimize import linprog
from scipy.spatial import ConvexHull

from quotients.errors import DimensionGuardError, InputError, ScaleGuardError
from quotients.families import FamilySpec, chamber_inputs
from quotients import polyhedral
from quotients.polyhedral import Location, convex_hull, git_chambers, hull_contains, locate

HEXAGON = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)]


def _as_fractions(points):
    return {tuple(Fraction(x) for x in p) for p in points}


def _linprog_member(vertices, u):
    V = np.array([[float(x) for x in v] for v in vertices])
    A_eq = np.vstack([V.T, np.ones((1, len(V)))])
    b_eq = np.concatenate([np.array([float(x) for x in u]), [1.0]])
    return linprog(np.zeros(len(V)), A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * len(V), method="highs").status == 0


@pytest.fixture
def hexagon():
    return convex_hull(HEXAGON)


# ───── hulls ─────
def test_hexagon_vertices(hexagon):
    assert set(hexagon.vertices) == _as_fractions(HEXAGON)
    assert len(hexagon.facets) == 6
    assert hexagon.dim == 2 and not hexagon.equations


def test_hexagon_drops_interior_points():
    P = convex_hull(HEXAGON + [(0, 0), (Fraction(1, 2), 0)])
    assert set(P.vertices) == _as_fractions(HEXAGON)


def test_segment_midpoint_dropped():
    P = convex_hull([(0, 0), (1, 0), (2, 0)])
    assert set(P.vertices) == _as_fractions([(0, 0), (2, 0)])
    assert P.dim == 1 and len(P.equations) == 1


def test_single_point():
    P = convex_hull([(3, 4), (3, 4)])
    assert P.dim == 0 and P.vertices == ((Fraction(3), Fraction(4)),)
    assert locate(P, (3, 4)) is Location.INTERIOR
    assert locate(P, (3, 5)) is Location.OUTSIDE


def test_facets_are_primitive_outward(hexagon):
    center = (Fraction(0), Fraction(0))
    for f in hexagon.facets:
        assert np.gcd.reduce([abs(v) for v in f.normal]) == 1
        assert f.value(center) < 0


def test_hull_idempotent(hexagon):
    assert convex_hull(hexagon.vertices).vertices == hexagon.vertices


def test_hull_guards():
    with pytest.raises(InputError):
        convex_hull([])
    with pytest.raises(InputError):
        convex_hull([(0, 0), (1, 0, 0)])
    with pytest.raises(DimensionGuardError):
        convex_hull([(0,) * 5, (1,) * 5])


# ───── membership ─────
@pytest.mark.parametrize("u,expected", [
    ((0, 0), Location.INTERIOR),
    ((1, 0), Location.BOUNDARY),
    ((Fraction(1, 2), Fraction(1, 2)), Location.BOUNDARY),
    ((1, 1), Location.OUTSIDE),
    ((Fraction(1, 3), Fraction(-1, 3)), Location.INTERIOR),
])
def test_locate_hexagon(hexagon, u, expected):
    assert locate(hexagon, u) is expected


def test_locate_relative_to_affine_hull():
    P = convex_hull([(0, 0), (2, 0)])
    assert locate(P, (1, 0)) is Location.INTERIOR
    assert locate(P, (2, 0)) is Location.BOUNDARY
    assert locate(P, (1, Fraction(1, 10 ** 9))) is Location.OUTSIDE


def test_locate_dimension_mismatch(hexagon):
    with pytest.raises(InputError):
        locate(hexagon, (0, 0, 0))


def test_membership_matches_linprog(hexagon):
    rng = np.random.default_rng(3)
    for _ in range(200):
        u = tuple(Fraction(int(v), 5) for v in rng.integers(-8, 9, size=2))
        loc = locate(hexagon, u)
        if loc is Location.BOUNDARY:
            continue
        assert (loc is Location.INTERIOR) == _linprog_member(hexagon.vertices, u)


def test_hull_contains_is_closed():
    assert hull_contains([(0, 0), (1, 0), (0, 1)], (Fraction(1, 2), Fraction(1, 2)))
    assert not hull_contains([(0, 0), (1, 0), (0, 1)], (1, 1))
    assert not hull_contains([], (0, 0))


def test_margin_sign(hexagon):
    assert hexagon.margin((0.0, 0.0)) > 0
    assert hexagon.margin((2.0, 0.0)) < 0


# ───── chambers ─────
def test_rank_one_chambers():
    complex_ = git_chambers([(-1,), (1,)], [{0}, {1}, {0, 1}])
    assert [set(c.polytope.vertices) for c in complex_.chambers] == [
        _as_fractions([(-1,), (0,)]),
        _as_fractions([(0,), (1,)]),
    ]
    # the single points {-1} and {1} only meet the chambers at their ends
    assert [c.provenance for c in complex_.chambers] == [(2,), (2,)]


def test_equal_weights_single_chamber():
    complex_ = git_chambers([(1, 1), (1, 1)], [{0}])
    assert len(complex_.chambers) == 1
    assert complex_.chambers[0].polytope.dim == 0
    assert complex_.chambers[0].lower_dimensional


def test_chamber_guards():
    with pytest.raises(ScaleGuardError):
        git_chambers([(0, 0, 0, 0), (1, 0, 0, 0)], [{0, 1}])
    with pytest.raises(InputError):
        git_chambers([(0,), (1,)], [{5}])


def test_x3_11_chambers_against_grid():
    weights, supports = chamber_inputs(FamilySpec.hypersurface(2, 1, 1))
    complex_ = git_chambers(weights, supports)
    P = complex_.polytope
    interiors = 0
    for i, j in product(range(-12, 13), repeat=2):
        u = (Fraction(i, 12), Fraction(j, 12))
        if not P.contains(u):
            continue
        owners = complex_.chambers_containing(u)
        assert owners
        for idx in owners:
            chamber = complex_.chambers[idx]
            if locate(chamber.polytope, u) is Location.INTERIOR:
                interiors += 1
                assert complex_.profile(u) == chamber.provenance
    assert interiors > 0
    assert len({c.provenance for c in complex_.chambers}) > 1


def _volume(polytope):
    return ConvexHull(np.array([[float(x) for x in v] for v in polytope.vertices])).volume


def _assert_profiles_constant(complex_, rng, samples):
    P = complex_.polytope
    lo = [min(v[j] for v in P.vertices) for j in range(P.ambient_dim)]
    hi = [max(v[j] for v in P.vertices) for j in range(P.ambient_dim)]
    for _ in range(samples):
        u = tuple(Fraction(int(rng.integers(int(a) * 7, int(b) * 7 + 1)), 7) for a, b in zip(lo, hi))
        if not P.contains(u):
            continue
        owners = complex_.chambers_containing(u)
        assert owners, u
        for idx in owners:
            chamber = complex_.chambers[idx]
            if locate(chamber.polytope, u) is Location.INTERIOR:
                assert complex_.profile(u) == chamber.provenance


@pytest.mark.parametrize("f", [FamilySpec.quadric(2), FamilySpec.hypersurface(3, 1, 2)])
def test_rank_three_chambers_tile_the_polytope(f):
    complex_ = git_chambers(*chamber_inputs(f))
    assert complex_.polytope.dim == 3 and len(complex_.chambers) > 1
    assert all(c.polytope.dim == 3 and len(c.polytope.vertices) >= 4 for c in complex_.chambers)
    total = sum(_volume(c.polytope) for c in complex_.chambers)
    assert total == pytest.approx(_volume(complex_.polytope))
    _assert_profiles_constant(complex_, np.random.default_rng(5), 150)


def test_chamber_facets_hold_at_vertices():
    complex_ = git_chambers(*chamber_inputs(FamilySpec.quadric(2)))
    for chamber in complex_.chambers:
        poly = chamber.polytope
        for facet in poly.facets:
            values = [facet.value(v) for v in poly.vertices]
            assert max(values) == 0
            assert sum(v == 0 for v in values) >= 3
        assert locate(poly, chamber.sample) is Location.INTERIOR


def test_chamber_cell_guard(monkeypatch):
    monkeypatch.setattr(polyhedral, "MAX_CHAMBER_CELLS", 1)
    with pytest.raises(ScaleGuardError):
        git_chambers(*chamber_inputs(FamilySpec.hypersurface(2, 1, 1)))
