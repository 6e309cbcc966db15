import math
from fractions import Fraction

import numpy as np
import pytest

from quotients.errors import InputError, PreconditionError
from quotients.log_canonical import (
    OnePS,
    PlaneDivisor,
    blowup_discrepancy_concurrent,
    degenerate,
    glct_bound,
    glct_bound_via_search,
    initial_form_vector,
    is_lc_concurrent,
    lc_feasible,
    numeric_limit,
    worst_case_degenerations,
    x1,
    x2,
    x3,
)

TOWARD_CENTER = OnePS((1, 1, 0))


# ───── divisors ─────
def test_divisor_factors_and_merges():
    D = PlaneDivisor.of([(x1 * x2, Fraction(1, 2)), (2 * x1, Fraction(1, 4))])
    assert D.coefficients == [Fraction(3, 4), Fraction(1, 2)]
    assert D.degree == Fraction(5, 4)


def test_divisor_drops_zero_coefficients():
    assert PlaneDivisor.of([(x1, 0)]).components == ()


@pytest.mark.parametrize("pairs", [
    [("x1 + 1", Fraction(1))],
    [(x1, Fraction(-1))],
    [(x1 - x1, Fraction(1))],
])
def test_divisor_rejects(pairs):
    with pytest.raises(InputError):
        PlaneDivisor.of(pairs)


def test_divisor_json():
    D = PlaneDivisor.from_json([{"poly": "x1 + x2", "coeff": "1/2"}])
    assert D.to_json() == [{"poly": "x1 + x2", "coeff": "1/2"}]
    with pytest.raises(InputError):
        PlaneDivisor.from_json([{"polynomial": "x1"}])


def test_one_parameter_subgroup_needs_distinct_weights():
    with pytest.raises(InputError):
        OnePS((2, 2, 2))


# ───── degeneration ─────
def test_line_degenerates_through_center():
    D = PlaneDivisor.of([(x1 + x2 + x3, 1)])
    assert degenerate(D, TOWARD_CENTER) == PlaneDivisor.of([(x1 + x2, 1)])


def test_fixed_line_stays():
    D = PlaneDivisor.of([(x3, Fraction(1, 3))])
    assert degenerate(D, TOWARD_CENTER) == D


def test_coinciding_limits_merge():
    D = PlaneDivisor.of([(x1 + x2 + x3, Fraction(1, 3)), (x1 + x2 - x3, Fraction(1, 3))])
    assert degenerate(D, TOWARD_CENTER).coefficients == [Fraction(2, 3)]


def test_degenerations_pass_through_center():
    D = PlaneDivisor.of([(x1 ** 3 + x2 * x3 ** 2 - 2 * x3 ** 3, 1), (x1 ** 2 + x3 ** 2, 1)])
    for F, _ in degenerate(D, TOWARD_CENTER).components:
        assert F.as_expr().subs({x1: 0, x2: 0, x3: 1}) == 0


def test_swap_commutes_with_symmetric_degeneration():
    D = PlaneDivisor.of([(x1 + 2 * x2 + x3, Fraction(1, 2)), (x1 ** 2 - x2 * x3, Fraction(1, 3))])
    assert degenerate(D.swap(), TOWARD_CENTER) == degenerate(D, TOWARD_CENTER).swap()


@pytest.mark.parametrize("weights", [(2, 0, 1), (1, -1, 0), (0, 0, 1), (-2, 1, 1)])
def test_numeric_limit_matches_initial_form(weights):
    F = PlaneDivisor.of([(x1 ** 3 - 2 * x1 * x2 * x3 + 3 * x2 ** 2 * x3 + x3 ** 3 + x1 * x2 ** 2, 1)]).components[0][0]
    w = OnePS(weights)
    monomials, limit = numeric_limit(F, w)
    monomials_exact, exact = initial_form_vector(F, w)
    assert monomials == monomials_exact
    assert np.max(np.abs(limit - exact)) < 1e-6


# ───── concurrent lines ─────
def test_three_lines_at_threshold():
    D = PlaneDivisor.of([(x1, Fraction(2, 3)), (x2, Fraction(2, 3)), (x1 + x2, Fraction(2, 3))])
    assert is_lc_concurrent(D)
    assert blowup_discrepancy_concurrent(D) == 1


def test_heavy_line_not_lc():
    assert not is_lc_concurrent(PlaneDivisor.of([(x1, Fraction(11, 10))]))


def test_empty_divisor():
    assert is_lc_concurrent(PlaneDivisor())
    assert blowup_discrepancy_concurrent(PlaneDivisor()) == -1


def test_discrepancy_arithmetic():
    D = PlaneDivisor.of([(x1, Fraction(1, 2)), (x2, 1)])
    assert blowup_discrepancy_concurrent(D) == Fraction(1, 2)


def test_other_common_point():
    D = PlaneDivisor.of([(x1 - x3, Fraction(1, 2)), (x2, Fraction(1, 2))])
    assert is_lc_concurrent(D, (1, 0, 1))


@pytest.mark.parametrize("D", [
    PlaneDivisor.of([(x3, Fraction(1, 2))]),
    PlaneDivisor.of([(x1 * x2 + x3 ** 2, Fraction(1, 2))]),
])
def test_concurrent_precondition(D):
    with pytest.raises(PreconditionError):
        is_lc_concurrent(D)


# ───── glct bound ─────
@pytest.mark.parametrize("gamma,lam,expected", [
    (Fraction(1, 2), 1, True),
    (0, Fraction(1, 3), True),
    (0, "0.34", False),
    (Fraction(3, 4), 10 ** 6, True),
    (Fraction(2, 3), 2, True),
    (Fraction(2, 3), Fraction(201, 100), False),
])
def test_lc_feasible(gamma, lam, expected):
    assert lc_feasible(gamma, lam) is expected


@pytest.mark.parametrize("gamma,expected", [
    (Fraction(1, 2), Fraction(1)),
    (Fraction(2, 3), Fraction(2)),
    (Fraction(0), Fraction(1, 3)),
    (Fraction(3, 4), math.inf),
    (Fraction(9, 10), math.inf),
    (Fraction(74, 100), Fraction(13)),
])
def test_glct_bound(gamma, expected):
    assert glct_bound(gamma) == expected


def test_glct_search_agrees_and_is_monotone():
    previous = Fraction(0)
    for k in range(75):
        gamma = Fraction(k, 100)
        bound = glct_bound(gamma)
        assert bound == glct_bound_via_search(gamma)
        assert bound >= previous
        previous = bound
    assert glct_bound_via_search(Fraction(3, 4)) == math.inf


def test_glct_bound_domain():
    with pytest.raises(PreconditionError):
        glct_bound(1)
    with pytest.raises(PreconditionError):
        lc_feasible(Fraction(1, 2), -1)


def test_worst_case_degenerations_reproduce_constraints():
    for k in range(8):
        gamma = Fraction(k, 8)
        for j in range(13):
            lam = Fraction(j, 6)
            configurations = worst_case_degenerations(gamma, lam)
            assert len(configurations) == 4
            assert lc_feasible(gamma, lam) == all(is_lc_concurrent(D) for _, D in configurations)
