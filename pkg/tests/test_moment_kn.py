import math
from fractions import Fraction

import numpy as np
import pytest

from quotients.errors import InputError, UnrealizableSupportError
from quotients.families import FamilySpec, ambient_spec, chow_quotient_map, moment_polytope
from quotients.moment_kn import (
    AmbientPoint,
    KNStatus,
    _Objective,
    act,
    fibre_orbit_probe,
    kn_minimize,
    moment_map,
    moment_map_exact,
    monomial_data,
    sample_point,
    semistable_exact,
    separation_direction,
    squared_moduli,
)


@pytest.fixture
def x3_11():
    # coordinates x0, x1, x2, y0, y1, y2
    return ambient_spec(FamilySpec.hypersurface(2, 1, 1))


@pytest.fixture
def rng():
    return np.random.default_rng(11)


# ───── points ─────
def test_point_normalized_per_factor(x3_11):
    p = AmbientPoint.create(x3_11, [2, 0, 0, 0, 3j, 0])
    assert all(abs(np.linalg.norm(f) - 1) < 1e-15 for f in p.factors)
    assert p.support() == frozenset({0, 4})


def test_point_rejects_zero_factor(x3_11):
    with pytest.raises(InputError):
        AmbientPoint.create(x3_11, [0, 0, 0, 1, 0, 0])


def test_point_rejects_equation_violation(x3_11):
    with pytest.raises(InputError):
        AmbientPoint.create(x3_11, [1, 0, 0, 1, 0, 0])


# ───── moment map ─────
def test_fixed_point_maps_to_its_weight(x3_11):
    p = AmbientPoint.create(x3_11, [0, 1, 0, 0, 0, 1])
    assert np.allclose(moment_map(x3_11, p), [1, -1], atol=0)


def test_symmetric_point_maps_to_zero(x3_11):
    s = 1 / math.sqrt(2)
    p = AmbientPoint.create(x3_11, [s, s, 0, s, -s, 0])
    assert np.max(np.abs(moment_map(x3_11, p))) < 1e-15


def test_moment_map_in_polytope_and_invariant(x3_11, rng):
    P = moment_polytope(FamilySpec.hypersurface(2, 1, 1))
    for _ in range(50):
        p = sample_point(x3_11, rng)
        if p is None:
            continue
        mu = moment_map(x3_11, p)
        assert P.margin(mu) >= -1e-10
        rotated = act(x3_11, p, np.zeros(2), rng.uniform(0, 2 * np.pi, 2))
        assert np.max(np.abs(moment_map(x3_11, rotated) - mu)) < 1e-10


def test_translation_law_is_exact(rng):
    for _ in range(20):
        weights = [tuple(Fraction(int(v), 3) for v in rng.integers(-6, 7, size=2)) for _ in range(5)]
        squared = [Fraction(int(v), 7) for v in rng.integers(1, 20, size=5)]
        chi = tuple(Fraction(int(v), 5) for v in rng.integers(-5, 6, size=2))
        shifted = [tuple(a + c for a, c in zip(w, chi)) for w in weights]
        base = moment_map_exact(weights, squared)
        assert moment_map_exact(shifted, squared) == tuple(b + c for b, c in zip(base, chi))


def test_objective_is_convex_along_lines(x3_11, rng):
    p = sample_point(x3_11, rng)
    data = monomial_data(x3_11)
    obj = _Objective(squared_moduli(x3_11, p), data.weights, np.array([0.2, -0.1]))
    h = 1e-3
    for _ in range(30):
        s0, d = rng.normal(size=2) * 3, rng.normal(size=2)
        second = obj.value(s0 + h * d) - 2 * obj.value(s0) + obj.value(s0 - h * d)
        assert second >= -1e-8


# ───── Kempf-Ness ─────
def test_kn_fixed_point_at_its_vertex(x3_11):
    p = AmbientPoint.create(x3_11, [1, 0, 0, 0, 1, 0])
    res = kn_minimize(x3_11, p, (-1, 0))
    assert res.status is KNStatus.CONVERGED
    assert res.iterations == 0
    assert not res.minimizer.any()


def test_kn_diverges_with_separation(x3_11):
    p = AmbientPoint.create(x3_11, [1, 0, 0, 0, 1, 0])
    res = kn_minimize(x3_11, p, (0, 0))
    assert res.status is KNStatus.DIVERGED
    assert res.separation == (Fraction(1), Fraction(0))


def test_kn_converges_at_interior_point(x3_11, rng):
    p = sample_point(x3_11, rng)
    u = (Fraction(1, 4), Fraction(-1, 8))
    res = kn_minimize(x3_11, p, u, tol=1e-9)
    assert res.status is KNStatus.CONVERGED
    assert res.gradient_norm <= 1e-9
    flowed = act(x3_11, p, res.minimizer)
    assert np.max(np.abs(moment_map(x3_11, flowed) - [0.25, -0.125])) < 1e-8


def test_kn_result_json_carries_tolerance(x3_11):
    p = AmbientPoint.create(x3_11, [1, 0, 0, 0, 1, 0])
    out = kn_minimize(x3_11, p, (0, 0), tol=1e-6).to_json()
    assert out["precision"] == "tol=1e-06"
    assert out["separation"] == ["1/1", "0/1"]


def test_kn_rejects_wrong_rank(x3_11):
    p = AmbientPoint.create(x3_11, [1, 0, 0, 0, 1, 0])
    with pytest.raises(InputError):
        kn_minimize(x3_11, p, (0, 0, 0))


def test_separation_direction_none_inside():
    assert separation_direction([(0, 0), (1, 0), (0, 1)], (Fraction(1, 4), Fraction(1, 4))) is None


# ───── exact semistability ─────
def test_semistable_full_support(x3_11):
    assert semistable_exact(x3_11, range(6), (Fraction(1, 3), 0))


def test_single_monomial_support_unstable_at_origin(x3_11):
    assert not semistable_exact(x3_11, {0, 4}, (0, 0))


def test_unrealizable_support_rejected(x3_11):
    with pytest.raises(UnrealizableSupportError):
        semistable_exact(x3_11, {0, 3}, (0, 0))


def test_kn_agrees_with_exact(x3_11, rng):
    checked = 0
    for _ in range(40):
        p = sample_point(x3_11, rng)
        u = tuple(Fraction(int(v), 4) for v in rng.integers(-6, 7, size=2))
        P = moment_polytope(FamilySpec.hypersurface(2, 1, 1))
        if p is None or abs(P.margin(u)) < 1e-6:
            continue
        expected = semistable_exact(x3_11, p.support(), u)
        assert (kn_minimize(x3_11, p, u).status is KNStatus.CONVERGED) == expected
        checked += 1
    assert checked > 0


# ───── fibre probe ─────
def test_probe_vertex_is_single_orbit(x3_11):
    monomials = chow_quotient_map(FamilySpec.hypersurface(2, 1, 1)).monomials
    report = fibre_orbit_probe(x3_11, monomials, (1, 0), trials=12, seed=0)
    assert report.converged > 0
    assert report.single_orbit


def test_vertex_fibre_reports_vanishing_quotient_map(x3_11):
    monomials = chow_quotient_map(FamilySpec.hypersurface(2, 1, 1)).monomials
    report = fibre_orbit_probe(x3_11, monomials, (1, 0), trials=12, seed=0)
    assert report.quotient_map_vanishes
    assert report.vanishing == report.converged and report.distinct_values == 0
    out = report.to_json()
    assert out["quotient_map_vanishes"] and out["vanishing_values"] == report.converged


def test_probe_interior_sees_several_values(x3_11):
    monomials = chow_quotient_map(FamilySpec.hypersurface(2, 1, 1)).monomials
    report = fibre_orbit_probe(x3_11, monomials, (0, 0), trials=12, seed=0)
    assert report.location == "interior"
    assert report.distinct_values >= 2
    assert report.verdict == "multiple values"
    assert report.vanishing == 0 and not report.quotient_map_vanishes


def test_probe_zero_trials_inconclusive(x3_11):
    monomials = chow_quotient_map(FamilySpec.hypersurface(2, 1, 1)).monomials
    report = fibre_orbit_probe(x3_11, monomials, (1, 0), trials=0, seed=0)
    assert report.verdict == "inconclusive"
    assert not report.single_orbit


def test_probe_is_reproducible_and_parallel_safe(x3_11):
    monomials = chow_quotient_map(FamilySpec.hypersurface(2, 1, 1)).monomials
    serial = fibre_orbit_probe(x3_11, monomials, (0, -1), trials=6, seed=5)
    threaded = fibre_orbit_probe(x3_11, monomials, (0, -1), trials=6, seed=5, workers=3)
    assert serial.to_json() == threaded.to_json()
