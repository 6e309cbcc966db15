import math

import numpy as np
import pytest
from sympy.matrices.normalforms import invariant_factors

from quotients.errors import ArithmeticOverflowError, InputError, InvalidStratumError, InvariantViolation
from quotients.families import FamilySpec, ambient_spec, raw_quadric_spec
from quotients.lattice_core import (
    IntegerMatrix,
    StabilizerGroup,
    TorusActionSpec,
    difference_matrix,
    effective_character_map,
    enumerate_stabilizer,
    global_stabilizer,
    make_effective,
    smith_normal_form,
    stratum_stabilizer,
)


@pytest.fixture
def x3_12():
    # X^3_{1,2}: x0..x2 are 0..2, y0..y2 are 3..5
    return ambient_spec(FamilySpec.hypersurface(2, 1, 2))


# ───── Smith normal form ─────
def test_snf_textbook_example():
    A = IntegerMatrix.from_rows([[2, 4, 4], [-6, 6, 12], [10, -4, -16]])
    snf = smith_normal_form(A)
    assert snf.invariant_factors == [2, 6, 12]
    assert snf.U @ snf.D @ snf.V == A
    assert snf.U.is_unimodular() and snf.V.is_unimodular()


def test_snf_inverse_pair():
    A = IntegerMatrix.from_rows([[4, 6], [6, 9], [2, 0]])
    snf = smith_normal_form(A)
    assert snf.V @ snf.V_inv == IntegerMatrix.identity(2)


@pytest.mark.parametrize("rows", [
    [[3]],
    [[1, 2, 3]],
    [[6], [10], [15]],
    [[2, 0], [0, 3]],
])
def test_snf_small_cases(rows):
    A = IntegerMatrix.from_rows(rows)
    snf = smith_normal_form(A)
    oracle = [abs(int(f)) for f in invariant_factors(A.to_sympy()) if f != 0]
    assert snf.invariant_factors == oracle
    assert snf.U @ snf.D @ snf.V == A


def test_snf_random_against_sympy():
    rng = np.random.default_rng(7)
    for _ in range(40):
        rows, cols = rng.integers(1, 5, size=2)
        A = IntegerMatrix.from_rows(rng.integers(-9, 10, size=(rows, cols)).tolist())
        snf = smith_normal_form(A)
        nonzero = snf.invariant_factors
        assert all(b % a == 0 for a, b in zip(nonzero, nonzero[1:]))
        assert nonzero == [abs(int(f)) for f in invariant_factors(A.to_sympy()) if f != 0]


@pytest.mark.parametrize("rows", [[[-3]], [[0, -4], [-6, 0]], [[-1, 2], [3, -4], [5, 6]]])
def test_snf_diagonal_is_nonnegative(rows):
    A = IntegerMatrix.from_rows(rows)
    snf = smith_normal_form(A)
    assert all(d >= 0 for d in snf.D.diagonal())
    assert snf.U @ snf.D @ snf.V == A
    assert snf.V_inv @ snf.V == IntegerMatrix.identity(len(rows[0]))


def test_snf_zero_matrix():
    snf = smith_normal_form(IntegerMatrix.from_rows([[0, 0], [0, 0]]))
    assert snf.invariant_factors == [] and snf.rank == 0


def test_overflow_guard():
    with pytest.raises(ArithmeticOverflowError):
        IntegerMatrix.from_rows([[10 ** 13]])


def test_matrix_rejects_ragged_rows():
    with pytest.raises(InputError):
        IntegerMatrix.from_rows([[1, 2], [3]])


# ───── specs ─────
def test_spec_rejects_inhomogeneous_equation():
    with pytest.raises(InputError):
        TorusActionSpec(1, (1,), ((0,), (1,)), equation=(((1, 0), 1), ((0, 1), 1)))


def test_spec_rejects_wrong_weight_count():
    with pytest.raises(InputError):
        TorusActionSpec(1, (2,), ((0,), (1,)))


# ───── stabilizers ─────
def test_stabilizer_group_chain():
    with pytest.raises(InvariantViolation):
        StabilizerGroup((2, 3))
    assert StabilizerGroup((2, 4)).order == 8
    assert StabilizerGroup().is_trivial


def test_hypersurface_global_stabilizer_trivial(x3_12):
    assert global_stabilizer(x3_12).is_trivial


def test_stratum_orders_of_x3_12(x3_12):
    everything = set(range(6))
    # {y1 = 0} carries Z/2, {x1 = 0} is generic
    assert stratum_stabilizer(x3_12, everything - {4}).order == 2
    assert stratum_stabilizer(x3_12, everything - {1}).order == 1


def test_positive_dimensional_stabilizer(x3_12):
    group = stratum_stabilizer(x3_12, {0, 3})
    assert group.free_rank == 2 and group.order == 1


def test_empty_factor_rejected(x3_12):
    with pytest.raises(InvalidStratumError):
        difference_matrix(x3_12, {0, 1, 2})


@pytest.mark.parametrize("alpha,beta", [(1, 2), (2, 3), (3, 4), (4, 4)])
def test_enumeration_matches_snf(alpha, beta):
    f = FamilySpec.hypersurface(2, alpha, beta)
    spec = ambient_spec(f)
    everything = set(range(spec.n_coords))
    for coord in range(spec.n_coords):
        support = everything - {coord}
        group = stratum_stabilizer(spec, support)
        expected = 12 ** group.free_rank * math.prod(math.gcd(d, 12) for d in group.invariant_factors)
        assert enumerate_stabilizer(spec, support, 12) == expected


# ───── effective action ─────
def test_raw_quadric_has_order_two_kernel():
    assert global_stabilizer(raw_quadric_spec(2)).order == 2


def test_effective_quadric():
    effective = make_effective(raw_quadric_spec(2))
    assert effective.torus_rank == 3
    assert global_stabilizer(effective).is_trivial
    assert effective.weights[0] == (0, 0, 0)


def test_make_effective_idempotent():
    effective = ambient_spec(FamilySpec.quadric(3))
    assert make_effective(effective) == effective


def test_even_weights_halved():
    spec = TorusActionSpec(1, (1,), ((0,), (2,)))
    weights = make_effective(spec).weights
    assert weights[0] == (0,) and abs(weights[1][0]) == 1


def test_character_map_rejects_vectors_outside_lattice():
    cmap = effective_character_map(raw_quadric_spec(2))
    with pytest.raises(InvariantViolation):
        cmap((1, 0, 0))


# ───── random actions ─────
def _random_spec(rng):
    rank = int(rng.integers(1, 4))
    factors = tuple(int(f) for f in rng.integers(1, 3, size=int(rng.integers(1, 3))))
    count = sum(f + 1 for f in factors)
    weights = tuple(tuple(int(v) for v in rng.integers(-3, 4, size=rank)) for _ in range(count))
    return TorusActionSpec(rank, factors, weights)


def _random_support(rng, spec):
    support = set()
    for block in spec.factor_ranges:
        coords = list(block)
        picked = [c for c in coords if rng.integers(2)]
        support.update(picked or [coords[int(rng.integers(len(coords)))]])
    return support


def _unimodular(rng, rank):
    M = np.eye(rank, dtype=np.int64)
    for _ in range(6):
        if rank > 1:
            i, j = rng.choice(rank, size=2, replace=False)
            M[i] += int(rng.integers(-2, 3)) * M[j]
    if rng.integers(2):
        M[0] = -M[0]
    return M


def test_random_stabilizers_match_enumeration():
    rng = np.random.default_rng(11)
    for _ in range(30):
        spec = _random_spec(rng)
        support = _random_support(rng, spec)
        group = stratum_stabilizer(spec, support)
        expected = 12 ** group.free_rank * math.prod(math.gcd(d, 12) for d in group.invariant_factors)
        assert enumerate_stabilizer(spec, support, 12) == expected, (spec.weights, sorted(support))


def test_make_effective_random_specs_trivial():
    rng = np.random.default_rng(12)
    for _ in range(30):
        spec = _random_spec(rng)
        assert global_stabilizer(make_effective(spec)).is_trivial, spec.weights


def test_stabilizers_invariant_under_change_of_basis():
    rng = np.random.default_rng(13)
    for _ in range(30):
        spec = _random_spec(rng)
        M = _unimodular(rng, spec.torus_rank)
        moved = spec.with_weights(spec.torus_rank, [tuple(int(v) for v in np.array(w) @ M) for w in spec.weights])
        support = _random_support(rng, spec)
        assert stratum_stabilizer(moved, support) == stratum_stabilizer(spec, support)
        assert global_stabilizer(make_effective(moved)).is_trivial
