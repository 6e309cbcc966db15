"""Property suites behind the ``verify`` command.

Each suite is seeded, counts passed and failed checks, and is tabulated with
pandas so the CLI can emit one JSON document.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import linprog
from sympy.matrices.normalforms import invariant_factors

from settings import KN_TOL
from quotients.families import (
    FamilySpec,
    all_patterns,
    ambient_spec,
    boundary_from_stabilizers,
    chow_boundary,
    chow_quotient_map,
    diagonal_free,
    find_witness,
    moment_polytope,
    realizable_support,
    support_from_moment,
)
from quotients.ke_certifier import Verdict, certify, enumerate_base_plane_families
from quotients.lattice_core import IntegerMatrix, enumerate_stabilizer, smith_normal_form, stratum_stabilizer
from quotients.log_canonical import (
    OnePS,
    PlaneDivisor,
    degenerate,
    glct_bound,
    glct_bound_via_search,
    initial_form_vector,
    numeric_limit,
    x1,
    x2,
    x3,
)
from quotients.moment_kn import (
    KNStatus,
    act,
    fibre_orbit_probe,
    kn_minimize,
    moment_map,
    moment_map_exact,
    monomial_data,
    sample_point,
    semistable_exact,
    squared_moduli,
    supported_weights,
)
from quotients.polyhedral import Location, cached_hull, convex_hull, locate

logger = logging.getLogger(__name__)


@dataclass
class SuiteResult:
    name: str
    passed: int = 0
    failed: int = 0

    def check(self, ok: bool, what: str = ""):
        if ok:
            self.passed += 1
        else:
            self.failed += 1
            logger.warning("%s: check failed %s", self.name, what)


# ───────────────────────── lattice ─────────────────────────
def suite_snf(rng: np.random.Generator, samples: int = 150) -> SuiteResult:
    res = SuiteResult("snf")
    for _ in range(samples):
        rows, cols = rng.integers(1, 5, size=2)
        A = IntegerMatrix.from_rows(rng.integers(-5, 6, size=(rows, cols)).tolist())
        snf = smith_normal_form(A)
        diag = snf.D.diagonal()
        off_diag = all(v == 0 for i, r in enumerate(snf.D.rows) for j, v in enumerate(r) if i != j)
        nonzero = [d for d in diag if d]
        chain = all(b % a == 0 for a, b in zip(nonzero, nonzero[1:])) and all(d > 0 for d in nonzero)
        oracle = [abs(int(f)) for f in invariant_factors(A.to_sympy()) if f != 0]
        res.check(
            snf.U @ snf.D @ snf.V == A and snf.U.is_unimodular() and snf.V.is_unimodular()
            and off_diag and chain and nonzero == oracle,
            str(A.rows),
        )
    return res


def suite_stabilizers(max_n: int = 3, max_exponent: int = 4, k: int = 12) -> SuiteResult:
    res = SuiteResult("stabilizer_oracle")
    for n in range(2, max_n + 1):
        for alpha in range(1, max_exponent + 1):
            for beta in range(1, max_exponent + 1):
                f = FamilySpec.hypersurface(n, alpha, beta)
                spec = ambient_spec(f)
                for pattern in all_patterns(f):
                    group = stratum_stabilizer(spec, pattern)
                    expected = k ** group.free_rank * math.prod(math.gcd(d, k) for d in group.invariant_factors)
                    res.check(enumerate_stabilizer(spec, pattern, k) == expected, f"{f.label} {sorted(pattern)}")
    return res


# ───────────────────────── polytopes ─────────────────────────
def _linprog_member(vertices: np.ndarray, u: np.ndarray) -> bool:
    count = len(vertices)
    A_eq = np.vstack([vertices.T, np.ones((1, count))])
    b_eq = np.concatenate([u, [1.0]])
    out = linprog(np.zeros(count), A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * count, method="highs")
    return out.status == 0


def suite_hull_membership(rng: np.random.Generator, samples: int = 300) -> SuiteResult:
    res = SuiteResult("hull_membership")
    for f in (FamilySpec.hypersurface(2, 1, 1), FamilySpec.hypersurface(3, 1, 2)):
        P = moment_polytope(f)
        V = np.array([[float(x) for x in v] for v in P.vertices])
        res.check(convex_hull(P.vertices).vertices == P.vertices, f"idempotence {f.label}")
        lo, hi = V.min(axis=0) - 1, V.max(axis=0) + 1
        for _ in range(samples):
            u = tuple(Fraction(int(rng.integers(int(a) * 7, int(b) * 7 + 1)), 7) for a, b in zip(lo, hi))
            loc = locate(P, u)
            if loc is Location.BOUNDARY:
                continue
            res.check((loc is Location.INTERIOR) == _linprog_member(V, np.array([float(x) for x in u])), str(u))
    return res


# ───────────────────────── families ─────────────────────────
def suite_boundary_pairs(max_n: int = 4, max_exponent: int = 6) -> SuiteResult:
    res = SuiteResult("boundary_pairs")
    families = [
        FamilySpec.hypersurface(n, a, b)
        for n in range(2, max_n + 1) for a in range(1, max_exponent + 1) for b in range(1, max_exponent + 1)
    ] + [FamilySpec.blown_up_quadric(n) for n in range(2, max_n + 1)]
    for f in families:
        closed, derived = chow_boundary(f), boundary_from_stabilizers(f)
        coefficient_form = all(
            0 <= c < 1 and c == Fraction(m - 1, m) for c, m in zip(derived.coefficients, derived.stabilizer_orders)
        )
        res.check(closed == derived and coefficient_form, f.label)
    return res


def suite_realizability(rng: np.random.Generator) -> SuiteResult:
    res = SuiteResult("realizability")
    for alpha, beta in ((1, 1), (1, 2), (2, 3)):
        f = FamilySpec.hypersurface(2, alpha, beta)
        for pattern in all_patterns(f):
            witness = find_witness(f, pattern, rng)
            res.check(realizable_support(f, pattern) == (witness is not None), f"{f.label} {sorted(pattern)}")
    return res


def suite_quotient_maps(rng: np.random.Generator, samples: int = 20) -> SuiteResult:
    res = SuiteResult("quotient_maps")
    for f in (FamilySpec.hypersurface(3, 1, 2), FamilySpec.hypersurface(2, 2, 3), FamilySpec.quadric(3)):
        spec = ambient_spec(f)
        qmap = chow_quotient_map(f)
        for _ in range(samples):
            p = sample_point(spec, rng)
            if p is None:
                continue
            phases = rng.uniform(0, 2 * np.pi, spec.torus_rank)
            s = rng.normal(size=spec.torus_rank)
            v0 = qmap.evaluate(p.flat)
            v1 = qmap.evaluate(act(spec, p, s, phases).flat)
            v0, v1 = v0 / np.linalg.norm(v0), v1 / np.linalg.norm(v1)
            res.check(abs(abs(np.vdot(v0, v1)) - 1) < 1e-9, f.label)
    return res


# ───────────────────────── moment maps ─────────────────────────
def suite_moment(rng: np.random.Generator, samples: int = 500) -> SuiteResult:
    res = SuiteResult("moment_kn")
    families = [
        FamilySpec.hypersurface(n, alpha, beta) for n in (2, 3) for alpha in (1, 2, 3) for beta in range(alpha, 4)
    ] + [FamilySpec.quadric(2), FamilySpec.quadric(3)]
    for f in families:
        spec = ambient_spec(f)
        P = moment_polytope(f)
        patterns = [p for p in all_patterns(f) if realizable_support(f, p)]
        for _ in range(samples):
            p = sample_point(spec, rng)
            if p is None:
                continue
            mu = moment_map(spec, p)
            res.check(P.margin(mu) >= -1e-10, f"mu in P for {f.label}")
            phases = rng.uniform(0, 2 * np.pi, spec.torus_rank)
            res.check(np.max(np.abs(moment_map(spec, act(spec, p, np.zeros(spec.torus_rank), phases)) - mu)) < 1e-10,
                      f"K invariance {f.label}")

            pattern = patterns[int(rng.integers(len(patterns)))]
            q = sample_point(spec, rng, support=pattern)
            if q is None:
                continue
            u = tuple(Fraction(int(rng.integers(-12, 13)), 8) for _ in range(spec.torus_rank))
            hull = cached_hull(tuple(sorted({tuple(Fraction(x) for x in w) for w in supported_weights(spec, pattern)})))
            if abs(hull.margin(u)) < 1e-6:
                continue
            expected = semistable_exact(spec, pattern, u)
            status = kn_minimize(spec, q, u, tol=KN_TOL).status
            res.check((status is KNStatus.CONVERGED) == expected, f"kn vs exact {f.label} u={u}")
    return res


def suite_fibre_collapse(seed: int, trials: int = 24) -> SuiteResult:
    res = SuiteResult("fibre_collapse")
    cases = [
        (FamilySpec.hypersurface(2, 1, 1), ((1, 0), (0, -1), (1, -1)), (0, 0)),
        (FamilySpec.hypersurface(3, 1, 2), ((2, 0, 0), (0, -1, 0), (2, -1, 0)), (0, 0, 0)),
    ]
    for f, vertices, control in cases:
        spec, qmap = ambient_spec(f), chow_quotient_map(f)
        for vertex in vertices:
            report = fibre_orbit_probe(spec, qmap.monomials, vertex, trials, seed)
            res.check(report.single_orbit and report.converged >= 20, f"{f.label} vertex {vertex}")
        interior = fibre_orbit_probe(spec, qmap.monomials, control, trials, seed)
        res.check(interior.distinct_values >= 2 and not interior.quotient_map_vanishes, f"{f.label} interior {control}")
    return res


def suite_sign_supports(rng: np.random.Generator, samples: int = 60) -> SuiteResult:
    res = SuiteResult("sign_supports")
    for f in (FamilySpec.hypersurface(2, 1, 1), FamilySpec.hypersurface(2, 1, 2),
              FamilySpec.hypersurface(3, 1, 2), FamilySpec.hypersurface(3, 2, 3)):
        spec = ambient_spec(f)
        weights = monomial_data(spec).exact_weights
        patterns = [p for p in all_patterns(f) if diagonal_free(f, p)]
        for _ in range(samples):
            pattern = patterns[int(rng.integers(len(patterns)))]
            p = sample_point(spec, rng, support=pattern)
            if p is None:
                continue
            mu = moment_map_exact(weights, squared_moduli(spec, p))
            res.check(support_from_moment(f, mu) == p.support(), f"{f.label} {sorted(pattern)}")
    return res


# ───────────────────────── plane pairs ─────────────────────────
def _random_divisor(rng: np.random.Generator) -> PlaneDivisor:
    monomials = [x1 ** i * x2 ** j * x3 ** (3 - i - j) for i in range(4) for j in range(4 - i)]
    while True:
        coeffs = rng.integers(-3, 4, size=len(monomials))
        if coeffs.any():
            break
    cubic = sum(int(c) * m for c, m in zip(coeffs, monomials))
    return PlaneDivisor.of([(cubic, Fraction(1, 2))])


def suite_degeneration(rng: np.random.Generator, divisors: int = 100, subgroups: int = 10) -> SuiteResult:
    res = SuiteResult("degeneration")
    for _ in range(divisors):
        D = _random_divisor(rng)
        for _ in range(subgroups):
            w = tuple(int(v) for v in rng.integers(-2, 3, size=3))
            if len(set(w)) == 1:
                continue
            ps = OnePS(w)
            for F, _ in D.components:
                _, limit = numeric_limit(F, ps)
                _, exact = initial_form_vector(F, ps)
                res.check(np.max(np.abs(limit - exact)) < 1e-6, f"{F.as_expr()} w={w}")
        sym = OnePS((1, 1, 0))
        res.check(degenerate(D.swap(), sym) == degenerate(D, sym).swap(), "swap equivariance")
    return res


def suite_glct() -> SuiteResult:
    res = SuiteResult("glct_search")
    previous = None
    for k in range(75):
        gamma = Fraction(k, 100)
        bound = glct_bound(gamma)
        res.check(bound == glct_bound_via_search(gamma), f"gamma={gamma}")
        if previous is not None:
            res.check(bound >= previous, f"monotone at {gamma}")
        previous = bound
    res.check(glct_bound(Fraction(3, 4)) == math.inf and glct_bound_via_search(Fraction(3, 4)) == math.inf, "3/4")
    return res


def suite_certificates() -> SuiteResult:
    res = SuiteResult("certificates")
    certified = {f.label for f in enumerate_base_plane_families() if certify(f).verdict is Verdict.CERTIFIED}
    res.check(certified == {"X^5_{1,2}", "X^5_{1,3}", "W^6"}, str(sorted(certified)))
    for f in enumerate_base_plane_families():
        cert = certify(f)
        res.check(cert.glct_upstairs is None or cert.glct_upstairs <= 1, f.label)
    return res


SUITES: Dict[str, Callable[[int], SuiteResult]] = {
    "snf": lambda seed: suite_snf(np.random.default_rng([seed, 1])),
    "stabilizer_oracle": lambda seed: suite_stabilizers(),
    "hull_membership": lambda seed: suite_hull_membership(np.random.default_rng([seed, 2])),
    "boundary_pairs": lambda seed: suite_boundary_pairs(),
    "realizability": lambda seed: suite_realizability(np.random.default_rng([seed, 3])),
    "quotient_maps": lambda seed: suite_quotient_maps(np.random.default_rng([seed, 4])),
    "moment_kn": lambda seed: suite_moment(np.random.default_rng([seed, 5])),
    "fibre_collapse": lambda seed: suite_fibre_collapse(seed),
    "sign_supports": lambda seed: suite_sign_supports(np.random.default_rng([seed, 7])),
    "degeneration": lambda seed: suite_degeneration(np.random.default_rng([seed, 6])),
    "glct_search": lambda seed: suite_glct(),
    "certificates": lambda seed: suite_certificates(),
}


def run_suites(seed: int = 0, names: List[str] = None) -> Tuple[pd.DataFrame, bool]:
    rows = []
    for name in names or list(SUITES):
        start = time.perf_counter()
        result = SUITES[name](seed)
        logger.info("suite %s: %d passed, %d failed in %.2fs", name, result.passed, result.failed,
                    time.perf_counter() - start)
        rows.append(result.__dict__.copy())
    table = pd.DataFrame(rows, columns=["name", "passed", "failed"])
    return table, bool((table["failed"] == 0).all())
