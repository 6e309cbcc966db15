"""Kähler-Einstein certificates: Chow quotient pair -> glct bound -> Tian.

The chain is: glct of the quotient pair bounds glct_H(X) from below through
min{1, glct_H(Y, B)}, and Tian's criterion certifies a metric once that value
exceeds dim/(dim+1).  The criterion is only sufficient, so a failed
comparison yields Inconclusive, never a non-existence claim.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import sympy

from utils import ExtendedRational, format_rational
from quotients.errors import InvariantViolation, PreconditionError
from quotients.families import (
    ChowQuotientPair,
    FamilyKind,
    FamilySpec,
    ambient_spec,
    boundary_from_stabilizers,
    chow_boundary,
    is_fano,
    is_smooth,
)
from quotients.lattice_core import IntegerMatrix, TorusActionSpec
from quotients.log_canonical import glct_bound

logger = logging.getLogger(__name__)


def tian_threshold(dim: int) -> Fraction:
    if dim < 1:
        raise PreconditionError(f"dimension must be positive, got {dim}")
    return Fraction(dim, dim + 1)


# ───────────────────────── symmetry ─────────────────────────
def _parity(perm: Sequence[int]) -> int:
    seen, odd = set(), 0
    for start in range(len(perm)):
        length, i = 0, start
        while i not in seen:
            seen.add(i)
            i = perm[i]
            length += 1
        if length:
            odd ^= (length - 1) & 1
    return odd


def coordinate_permutation(f: FamilySpec, sigma: Sequence[int]) -> Tuple[int, ...]:
    """Lift sigma in S_{n+1} to a permutation of the ambient coordinates.

    Hypersurface: x_i -> x_sigma(i), y_i -> y_sigma(i).  Quadric kinds: the pair
    (x_2i, x_2i+1) goes to the pair of sigma(i), swapped inside every pair when
    sigma is odd.
    """
    n = f.n
    if f.kind is FamilyKind.HYPERSURFACE:
        return tuple(sigma[i] for i in range(n + 1)) + tuple(n + 1 + sigma[i] for i in range(n + 1))
    flip = _parity(sigma)
    return tuple(2 * sigma[c // 2] + ((c % 2) ^ flip) for c in range(2 * n + 2))


def symmetry_generators(f: FamilySpec) -> List[Tuple[int, ...]]:
    n = f.n
    transposition = (1, 0) + tuple(range(2, n + 1))
    cycle = tuple((i + 1) % (n + 1) for i in range(n + 1))
    return [coordinate_permutation(f, transposition), coordinate_permutation(f, cycle)]


def induced_lattice_action(spec: TorusActionSpec, permutation: Sequence[int]) -> IntegerMatrix:
    """Integer matrix A with A(w_c - w_c') = w_perm(c) - w_perm(c') on the character lattice."""
    refs = [next(iter(rng)) for rng in spec.factor_ranges]
    rows, images = [], []
    for ref, rng in zip(refs, spec.factor_ranges):
        for c in rng:
            if c == ref:
                continue
            rows.append([a - b for a, b in zip(spec.weights[c], spec.weights[ref])])
            images.append([a - b for a, b in zip(spec.weights[permutation[c]], spec.weights[permutation[ref]])])
    D, D_img = sympy.Matrix(rows), sympy.Matrix(images)
    if D.rank() != spec.torus_rank:
        raise InvariantViolation("weight differences do not span the character lattice")
    At = (D.T * D).inv() * D.T * D_img
    if D * At != D_img or any(not v.is_integer for v in At):
        raise InvariantViolation(f"permutation {tuple(permutation)} does not normalize the torus")
    return IntegerMatrix.from_rows(At.T.tolist())


def fixed_space_is_zero(matrices: Sequence[IntegerMatrix]) -> bool:
    """The common fixed subspace of the matrices in M (x) Q is zero."""
    if not matrices:
        return False
    m = matrices[0].shape[0]
    stacked = sympy.Matrix.vstack(*(A.to_sympy() - sympy.eye(m) for A in matrices))
    return stacked.rank() == m


def symmetry_check(f: FamilySpec) -> bool:
    spec = ambient_spec(f)
    mats = [induced_lattice_action(spec, g) for g in symmetry_generators(f)]
    return fixed_space_is_zero(mats)


# ───────────────────────── certificates ─────────────────────────
class Verdict(str, Enum):
    CERTIFIED = "Certified"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class TrailStep:
    step: str
    citation: str
    value: str

    def to_json(self) -> dict:
        return {"step": self.step, "citation": self.citation, "value": self.value}


@dataclass(frozen=True)
class KECertificate:
    family: FamilySpec
    dim_X: int
    pair: ChowQuotientPair
    gamma: Fraction
    pair_glct_bound: Optional[ExtendedRational]
    glct_upstairs: Optional[Fraction]
    tian_threshold: Fraction
    symmetry_ok: bool
    fano: bool
    smooth: bool
    verdict: Verdict
    reason: str
    trail: Tuple[TrailStep, ...] = field(default=())

    def to_json(self) -> dict:
        return {
            "family": self.family.to_json(),
            "dim": self.dim_X,
            "pair": self.pair.to_json(),
            "base_dim": self.pair.base_dim,
            "gamma": format_rational(self.gamma),
            "pair_glct_bound": format_rational(self.pair_glct_bound),
            "glct_upstairs": format_rational(self.glct_upstairs),
            "tian_threshold": format_rational(self.tian_threshold),
            "symmetry_ok": self.symmetry_ok,
            "fano": self.fano,
            "smooth": self.smooth,
            "verdict": self.verdict.value,
            "reason": self.reason,
            "trail": [s.to_json() for s in self.trail],
            "precision": "exact",
        }


def certify(f: FamilySpec) -> KECertificate:
    trail: List[TrailStep] = []
    problems: List[str] = []

    def record(step: str, citation: str, value):
        trail.append(TrailStep(step, citation, value if isinstance(value, str) else str(value).lower()))

    record("family", "family definition", f"{f.label} of dimension {f.dim}")
    fano = is_fano(f)
    record("fano", "Fano iff alpha, beta < n+1" if f.kind is FamilyKind.HYPERSURFACE
           else ("W is Fano (recorded fact)" if f.kind is FamilyKind.BLOWN_UP_QUADRIC else "quadrics are Fano"), fano)
    if not fano:
        problems.append("not Fano, Tian's criterion does not apply")
    smooth = is_smooth(f)
    record("smooth", "Jacobian criterion", smooth)
    if not smooth:
        problems.append("singular, only smooth members are certified")
    record("assumptions", "Chow quotient lower bound hypotheses",
           "log terminal Fano and surjective quotient map assumed, not verified")

    symmetry_ok = symmetry_check(f)
    record("symmetry", f"S_{f.n + 1} fixes only the origin of the character lattice", symmetry_ok)
    if not symmetry_ok:
        problems.append("symmetry check failed")

    pair = chow_boundary(f)
    if boundary_from_stabilizers(f) != pair:
        raise InvariantViolation(f"boundary pairs of {f.label} disagree")
    gamma = pair.gamma
    record("chow_quotient", "boundary divisor from maximal generic stabilizer orders", pair.label)

    threshold = tian_threshold(f.dim)
    bound: Optional[ExtendedRational] = None
    upstairs: Optional[Fraction] = None
    if pair.base_dim != 2:
        problems.append("no glct bound available for this base")
    else:
        bound = glct_bound(gamma)
        record("pair_glct", "S_4-invariant glct lower bound for (P^2, B_gamma)", format_rational(bound))
        upstairs = Fraction(1) if bound == math.inf else min(Fraction(1), bound)
        record("glct_upstairs", "torus quotient reduction: glct_H(X) >= min{1, glct_H(Y, B)}", format_rational(upstairs))
        holds = upstairs > threshold
        record("tian", "Tian's criterion alpha_G(X) > dim/(dim+1)",
               f"{format_rational(upstairs)} {'>' if holds else '<='} {format_rational(threshold)}")
        if not holds:
            problems.append(f"glct bound {format_rational(upstairs)} does not exceed {format_rational(threshold)}")

    verdict = Verdict.INCONCLUSIVE if problems else Verdict.CERTIFIED
    reason = "; ".join(problems) if problems else "invariant Kähler-Einstein metric exists by Tian's criterion"
    record("verdict", "Tian's criterion is sufficient, not necessary", verdict.value)
    logger.info("certificate for %s: %s (%s)", f.label, verdict.value, reason)
    return KECertificate(
        family=f,
        dim_X=f.dim,
        pair=pair,
        gamma=gamma,
        pair_glct_bound=bound,
        glct_upstairs=upstairs,
        tian_threshold=threshold,
        symmetry_ok=symmetry_ok,
        fano=fano,
        smooth=smooth,
        verdict=verdict,
        reason=reason,
        trail=tuple(trail),
    )


def enumerate_base_plane_families(max_exponent: int = 6) -> List[FamilySpec]:
    """Fano families whose Chow quotient base is P^2, hypersurfaces up to the swap alpha <-> beta."""
    out = [
        FamilySpec.hypersurface(3, alpha, beta)
        for alpha in range(1, max_exponent + 1)
        for beta in range(alpha, max_exponent + 1)
    ]
    out += [FamilySpec.quadric(3), FamilySpec.blown_up_quadric(3)]
    return [f for f in out if is_fano(f)]
