"""Exact integer-lattice computations for diagonal torus actions.

Weights live in Z^m (m = torus rank).  Projective rescaling in each factor is
quotiented out by measuring weights against one reference coordinate per
factor, so every stabilizer here is computed from a matrix of weight
differences and its Smith normal form.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from math import prod
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import sympy
from sympy import ZZ
from sympy.matrices.normalforms import smith_normal_decomp

from settings import MAX_ENTRY
from quotients.errors import ArithmeticOverflowError, InputError, InvalidStratumError, InvariantViolation

logger = logging.getLogger(__name__)

Row = Tuple[int, ...]
Monomial = Tuple[Tuple[int, ...], Fraction]


def _guard(value: int, limit: int = None) -> int:
    limit = MAX_ENTRY if limit is None else limit
    if abs(value) > limit:
        raise ArithmeticOverflowError(f"integer {value} exceeds magnitude guard {limit}")
    return value


# ───────────────────────── IntegerMatrix ─────────────────────────
@dataclass(frozen=True)
class IntegerMatrix:
    rows: Tuple[Row, ...]

    def __post_init__(self):
        if not self.rows or not self.rows[0]:
            raise InputError("IntegerMatrix needs at least one row and one column")
        width = len(self.rows[0])
        for r in self.rows:
            if len(r) != width:
                raise InputError("ragged IntegerMatrix rows")
            for v in r:
                if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                    raise InputError(f"non-integer entry {v!r}")
                _guard(int(v))

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[int]]) -> "IntegerMatrix":
        return cls(tuple(tuple(int(v) for v in r) for r in rows))

    @classmethod
    def identity(cls, n: int) -> "IntegerMatrix":
        return cls(tuple(tuple(int(i == j) for j in range(n)) for i in range(n)))

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.rows), len(self.rows[0])

    def __matmul__(self, other: "IntegerMatrix") -> "IntegerMatrix":
        if self.shape[1] != other.shape[0]:
            raise InputError(f"shape mismatch {self.shape} @ {other.shape}")
        cols = list(zip(*other.rows))
        return IntegerMatrix(tuple(
            tuple(_guard(sum(a * b for a, b in zip(r, c))) for c in cols) for r in self.rows
        ))

    def to_sympy(self) -> sympy.Matrix:
        return sympy.Matrix([list(r) for r in self.rows])

    def det(self) -> int:
        if self.shape[0] != self.shape[1]:
            raise InputError("determinant of a non-square matrix")
        return int(self.to_sympy().det())

    def is_unimodular(self) -> bool:
        return self.shape[0] == self.shape[1] and abs(self.det()) == 1

    def diagonal(self) -> List[int]:
        return [self.rows[i][i] for i in range(min(self.shape))]


# ───────────────────────── Smith normal form ─────────────────────────
@dataclass(frozen=True)
class SmithForm:
    """A = U·D·V with U, V unimodular; V_inv is kept for lattice coordinates."""
    U: IntegerMatrix
    D: IntegerMatrix
    V: IntegerMatrix
    V_inv: IntegerMatrix

    @property
    def invariant_factors(self) -> List[int]:
        return [d for d in self.D.diagonal() if d != 0]

    @property
    def rank(self) -> int:
        return len(self.invariant_factors)


def smith_normal_form(A: IntegerMatrix) -> SmithForm:
    """A = U·D·V from sympy's decomposition D = S·A·T, so U = S^-1 and V = T^-1."""
    D, S, T = smith_normal_decomp(A.to_sympy(), domain=ZZ)
    for i in range(min(D.shape)):
        if D[i, i] < 0:
            D[i, :] = -D[i, :]
            S[i, :] = -S[i, :]
    U, V = S.inv(), T.inv()
    if any(not v.is_integer for v in list(U) + list(V)):
        raise InvariantViolation("Smith transforms are not unimodular")
    return SmithForm(
        U=IntegerMatrix.from_rows(U.tolist()),
        D=IntegerMatrix.from_rows(D.tolist()),
        V=IntegerMatrix.from_rows(V.tolist()),
        V_inv=IntegerMatrix.from_rows(T.tolist()),
    )


# ───────────────────────── Torus action specs ─────────────────────────
@dataclass(frozen=True)
class TorusActionSpec:
    """Diagonal torus action on a product of projective spaces.

    ``factors`` lists projective dimensions; coordinates are indexed globally,
    factor by factor.  ``equation`` is an optional hypersurface given as
    (exponent vector, coefficient) monomials.
    """
    torus_rank: int
    factors: Tuple[int, ...]
    weights: Tuple[Row, ...]
    equation: Tuple[Monomial, ...] = ()
    labels: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.torus_rank < 0:
            raise InputError("torus rank must be non-negative")
        if not self.factors or any(f < 0 for f in self.factors):
            raise InputError("factors must be non-empty projective dimensions")
        if len(self.weights) != self.n_coords:
            raise InputError(f"expected {self.n_coords} weights, got {len(self.weights)}")
        for w in self.weights:
            if len(w) != self.torus_rank:
                raise InputError(f"weight {w} does not have length {self.torus_rank}")
            for v in w:
                _guard(int(v))
        if self.labels and len(self.labels) != self.n_coords:
            raise InputError("labels must name every coordinate")
        if self.equation:
            degrees = {self.multidegree(e) for e, _ in self.equation}
            if len(degrees) != 1:
                raise InputError(f"equation is not multihomogeneous: degrees {sorted(degrees)}")
            eq_weights = {self.monomial_weight(e) for e, _ in self.equation}
            if len(eq_weights) != 1:
                raise InputError("equation is not homogeneous for the torus")

    @property
    def n_coords(self) -> int:
        return sum(f + 1 for f in self.factors)

    @property
    def factor_ranges(self) -> List[range]:
        out, start = [], 0
        for f in self.factors:
            out.append(range(start, start + f + 1))
            start += f + 1
        return out

    def factor_of(self, coord: int) -> int:
        for k, rng in enumerate(self.factor_ranges):
            if coord in rng:
                return k
        raise InputError(f"coordinate {coord} out of range")

    def label(self, coord: int) -> str:
        return self.labels[coord] if self.labels else f"c{coord}"

    def multidegree(self, exponents: Sequence[int]) -> Tuple[int, ...]:
        if len(exponents) != self.n_coords:
            raise InputError("exponent vector has the wrong length")
        return tuple(sum(exponents[c] for c in rng) for rng in self.factor_ranges)

    def monomial_weight(self, exponents: Sequence[int]) -> Row:
        total = [0] * self.torus_rank
        for c, e in enumerate(exponents):
            if e:
                total = [t + e * w for t, w in zip(total, self.weights[c])]
        return tuple(total)

    @property
    def equation_weight(self) -> Optional[Row]:
        if not self.equation:
            return None
        return self.monomial_weight(self.equation[0][0])

    def with_weights(self, torus_rank: int, weights: Sequence[Row]) -> "TorusActionSpec":
        return TorusActionSpec(
            torus_rank=torus_rank,
            factors=self.factors,
            weights=tuple(tuple(w) for w in weights),
            equation=self.equation,
            labels=self.labels,
        )

    def to_json(self) -> dict:
        return {
            "torus_rank": self.torus_rank,
            "factors": list(self.factors),
            "weights": {self.label(c): list(w) for c, w in enumerate(self.weights)},
            "equation": [
                {"exponents": list(e), "coeff": f"{Fraction(c).numerator}/{Fraction(c).denominator}"}
                for e, c in self.equation
            ],
        }


# ───────────────────────── Stabilizers ─────────────────────────
@dataclass(frozen=True)
class StabilizerGroup:
    """Diagonalizable group (C*)^free_rank x Z/d_1 x ... x Z/d_k, d_i | d_{i+1}."""
    invariant_factors: Tuple[int, ...] = ()
    free_rank: int = 0

    def __post_init__(self):
        factors = self.invariant_factors
        if any(d < 1 for d in factors):
            raise InvariantViolation(f"invalid invariant factors {factors}")
        for d, e in zip(factors, factors[1:]):
            if e % d:
                raise InvariantViolation(f"divisibility chain broken in {factors}")

    @property
    def order(self) -> int:
        return prod(self.invariant_factors)

    @property
    def is_trivial(self) -> bool:
        return self.order == 1 and self.free_rank == 0

    def to_json(self) -> dict:
        return {"invariant_factors": list(self.invariant_factors), "order": self.order, "free_rank": self.free_rank}


def _full_support(spec: TorusActionSpec) -> frozenset:
    return frozenset(range(spec.n_coords))


def _references(spec: TorusActionSpec, support: Iterable[int]) -> List[int]:
    support = set(support)
    refs = []
    for k, rng in enumerate(spec.factor_ranges):
        inside = [c for c in rng if c in support]
        if not inside:
            raise InvalidStratumError(f"support is empty in factor {k}")
        refs.append(inside[0])
    return refs


def difference_matrix(spec: TorusActionSpec, support: Optional[Iterable[int]] = None) -> List[Row]:
    """Rows w_c - w_ref for every supported non-reference coordinate c."""
    support = _full_support(spec) if support is None else frozenset(support)
    bad = [c for c in support if not 0 <= c < spec.n_coords]
    if bad:
        raise InvalidStratumError(f"support indices out of range: {sorted(bad)}")
    refs = _references(spec, support)
    rows = []
    for ref, rng in zip(refs, spec.factor_ranges):
        w0 = spec.weights[ref]
        for c in rng:
            if c in support and c != ref:
                rows.append(tuple(a - b for a, b in zip(spec.weights[c], w0)))
    return rows


def _stabilizer_from_rows(rows: List[Row], m: int) -> StabilizerGroup:
    if m == 0:
        return StabilizerGroup()
    nonzero = [r for r in rows if any(r)]
    if not nonzero:
        return StabilizerGroup((), m)
    snf = smith_normal_form(IntegerMatrix.from_rows(nonzero))
    factors = snf.invariant_factors
    return StabilizerGroup(tuple(d for d in factors if d > 1), m - len(factors))


def stratum_stabilizer(spec: TorusActionSpec, support: Iterable[int]) -> StabilizerGroup:
    """Generic stabilizer of the locus where exactly ``support`` is nonzero."""
    rows = difference_matrix(spec, support)
    return _stabilizer_from_rows(rows, spec.torus_rank)


def global_stabilizer(spec: TorusActionSpec) -> StabilizerGroup:
    return stratum_stabilizer(spec, _full_support(spec))


def enumerate_stabilizer(spec: TorusActionSpec, support: Iterable[int], k: int = 12) -> int:
    """Count k-th-root-of-unity tuples t in T fixing the generic point of the stratum."""
    rows = difference_matrix(spec, support)
    m = spec.torus_rank
    if m == 0:
        return 1
    grid = np.indices((k,) * m).reshape(m, -1).T
    if not rows:
        return len(grid)
    delta = np.array(rows, dtype=np.int64)
    return int(np.all((grid @ delta.T) % k == 0, axis=1).sum())


# ───────────────────────── Effective action ─────────────────────────
@dataclass(frozen=True)
class CharacterLatticeMap:
    """Coordinates on the lattice L spanned by within-factor weight differences.

    A vector v in L is v = sum c_i * d_i * V_i, so c_i = (v . V_inv)_i / d_i.
    """
    rank: int
    divisors: Tuple[int, ...]
    V_inv: Optional[IntegerMatrix]
    references: Tuple[int, ...]

    @property
    def is_identity(self) -> bool:
        return self.V_inv is None

    def __call__(self, vector: Sequence[int]) -> Row:
        if self.is_identity:
            return tuple(int(v) for v in vector)
        if not any(vector):
            return (0,) * self.rank
        image = (IntegerMatrix.from_rows([vector]) @ self.V_inv).rows[0]
        out = []
        for i, value in enumerate(image):
            if i < self.rank:
                if value % self.divisors[i]:
                    raise InvariantViolation(f"{tuple(vector)} does not lie in the character lattice")
                out.append(value // self.divisors[i])
            elif value:
                raise InvariantViolation(f"{tuple(vector)} has a component outside the character lattice")
        return tuple(out)


def effective_character_map(spec: TorusActionSpec) -> CharacterLatticeMap:
    refs = tuple(_references(spec, _full_support(spec)))
    rows = [r for r in difference_matrix(spec) if any(r)]
    m = spec.torus_rank
    if not rows:
        return CharacterLatticeMap(0, (), IntegerMatrix.identity(m) if m else None, refs)
    snf = smith_normal_form(IntegerMatrix.from_rows(rows))
    divisors = tuple(snf.invariant_factors)
    if len(divisors) == m and all(d == 1 for d in divisors):
        return CharacterLatticeMap(m, divisors, None, refs)
    return CharacterLatticeMap(len(divisors), divisors, snf.V_inv, refs)


def make_effective(spec: TorusActionSpec) -> TorusActionSpec:
    """Re-express the action through the quotient torus T' acting effectively.

    Each factor's reference coordinate gets weight zero; other weights become
    lattice coordinates of w_c - w_ref.
    """
    cmap = effective_character_map(spec)
    refs = cmap.references
    new_weights = []
    for c in range(spec.n_coords):
        ref = refs[spec.factor_of(c)]
        diff = tuple(a - b for a, b in zip(spec.weights[c], spec.weights[ref]))
        new_weights.append(cmap(diff))
    result = spec.with_weights(cmap.rank, new_weights)
    logger.debug("effective torus rank %d (was %d), divisors %s", cmap.rank, spec.torus_rank, cmap.divisors)
    return result
