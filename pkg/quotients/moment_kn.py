"""Moment maps, Kempf-Ness minimization and support-polytope semistability.

Points of a product of projective spaces are embedded by the Segre monomials
(one coordinate per factor); the monomial of coordinates (c_1, ..., c_k) has
torus weight w_{c_1} + ... + w_{c_k}.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp, softmax

from settings import EQUATION_TOL, KN_MAX_ITER, KN_NORM_BOUND, KN_TOL, PROBE_TOL
from utils import as_fraction_vector, format_vector
from quotients.errors import InputError, UnrealizableSupportError
from quotients.lattice_core import TorusActionSpec
from quotients.polyhedral import Location, cached_hull, hull_contains, locate

logger = logging.getLogger(__name__)


# ───────────────────────── monomial data ─────────────────────────
@dataclass(frozen=True)
class MonomialData:
    indices: Tuple[Tuple[int, ...], ...]
    exact_weights: Tuple[Tuple[int, ...], ...]
    rank: int

    @property
    def weights(self) -> np.ndarray:
        return np.array(self.exact_weights, dtype=float).reshape(len(self.indices), self.rank)


@lru_cache(maxsize=64)
def monomial_data(spec: TorusActionSpec) -> MonomialData:
    indices = tuple(product(*spec.factor_ranges))
    weights = tuple(
        tuple(sum(col) for col in zip(*(spec.weights[c] for c in idx))) if spec.torus_rank else ()
        for idx in indices
    )
    return MonomialData(indices, weights, spec.torus_rank)


def supported_weights(spec: TorusActionSpec, support: Iterable[int]) -> List[Tuple[int, ...]]:
    """Weights of the Segre monomials not vanishing on the given coordinate support."""
    support = set(support)
    data = monomial_data(spec)
    return sorted({w for idx, w in zip(data.indices, data.exact_weights) if all(c in support for c in idx)})


# ───────────────────────── points ─────────────────────────
@dataclass
class AmbientPoint:
    """Point of the product space with each factor vector of unit norm."""
    factors: List[np.ndarray]

    @classmethod
    def create(cls, spec: TorusActionSpec, coords: Sequence[complex], tol: float = EQUATION_TOL,
               check_equation: bool = True) -> "AmbientPoint":
        coords = np.asarray(coords, dtype=complex)
        if coords.shape != (spec.n_coords,):
            raise InputError(f"expected {spec.n_coords} coordinates, got {coords.shape[0] if coords.ndim else 0}")
        parts = []
        for k, rng in enumerate(spec.factor_ranges):
            block = coords[rng.start:rng.stop]
            norm = np.linalg.norm(block)
            if norm == 0 or not np.isfinite(norm):
                raise InputError(f"factor {k} of the point vanishes identically")
            parts.append(block / norm)
        point = cls(parts)
        if check_equation and spec.equation:
            residual, scale = equation_residual(spec, point)
            if residual > tol * max(scale, 1e-300):
                raise InputError(f"point violates the equation: residual {residual:.3e}")
        return point

    @property
    def flat(self) -> np.ndarray:
        return np.concatenate(self.factors)

    def support(self) -> FrozenSet[int]:
        return frozenset(int(i) for i in np.flatnonzero(self.flat))

    def to_json(self) -> list:
        return [[float(z.real), float(z.imag)] for z in self.flat]


def equation_residual(spec: TorusActionSpec, p: AmbientPoint) -> Tuple[float, float]:
    x = p.flat
    terms = [complex(c) * np.prod(x ** np.array(e)) for e, c in spec.equation]
    return abs(sum(terms)), sum(abs(t) for t in terms)


def squared_moduli(spec: TorusActionSpec, p: AmbientPoint) -> np.ndarray:
    data = monomial_data(spec)
    mod2 = np.abs(p.flat) ** 2
    return np.array([np.prod(mod2[list(idx)]) for idx in data.indices])


def moment_map(spec: TorusActionSpec, p: AmbientPoint) -> np.ndarray:
    """sum |c_w|^2 w / sum |c_w|^2 over the Segre monomials."""
    q = squared_moduli(spec, p)
    total = q.sum()
    if total == 0:
        raise InputError("all monomial coordinates vanish")
    return (q[:, None] * monomial_data(spec).weights).sum(axis=0) / total


def moment_map_exact(weights: Sequence[Sequence], squared: Sequence) -> Tuple[Fraction, ...]:
    q = [Fraction(v) for v in squared]
    total = sum(q)
    if total == 0:
        raise InputError("all squared moduli vanish")
    ws = [as_fraction_vector(w) for w in weights]
    return tuple(sum(qi * w[j] for qi, w in zip(q, ws)) / total for j in range(len(ws[0])))


def act(spec: TorusActionSpec, p: AmbientPoint, s: Sequence[float], phases: Optional[Sequence[float]] = None) -> AmbientPoint:
    W = np.array(spec.weights, dtype=float).reshape(spec.n_coords, spec.torus_rank)
    s = np.asarray(s, dtype=float)
    exponent = W @ s if spec.torus_rank else np.zeros(spec.n_coords)
    if phases is not None:
        exponent = exponent + 1j * (W @ np.asarray(phases, dtype=float))
    x = p.flat
    out = []
    for rng in spec.factor_ranges:
        block = exponent[rng.start:rng.stop]
        # rescale per factor before exponentiating so large s stays finite
        shift = np.max(block.real[x[rng.start:rng.stop] != 0]) if np.any(x[rng.start:rng.stop]) else 0.0
        out.append(x[rng.start:rng.stop] * np.exp(block - shift))
    return AmbientPoint.create(spec, np.concatenate(out), check_equation=False)


# ───────────────────────── Kempf-Ness ─────────────────────────
class KNStatus(str, Enum):
    CONVERGED = "Converged"
    DIVERGED = "Diverged"
    ITERATION_LIMIT = "IterationLimit"


@dataclass
class KNSolveResult:
    status: KNStatus
    minimizer: np.ndarray
    moment_value: np.ndarray
    gradient_norm: float
    iterations: int
    tol: float
    separation: Optional[Tuple[Fraction, ...]] = None

    def to_json(self) -> dict:
        return {
            "status": self.status.value,
            "minimizer": [float(v) for v in self.minimizer],
            "moment_value": [float(v) for v in self.moment_value],
            "gradient_norm": float(self.gradient_norm),
            "iterations": self.iterations,
            "separation": format_vector(self.separation) if self.separation is not None else None,
            "precision": f"tol={self.tol:g}",
        }


def separation_direction(points: Sequence[Sequence], u: Sequence) -> Optional[Tuple[Fraction, ...]]:
    """Direction d with <w - u, d> < 0 for every point w, or None when u lies in the hull."""
    P = cached_hull(tuple(sorted({as_fraction_vector(w) for w in points})))
    u = as_fraction_vector(u)
    for e in P.equations:
        v = e.value(u)
        if v:
            return tuple(Fraction(n if v > 0 else -n) for n in e.normal)
    for f in P.facets:
        if f.value(u) > 0:
            return tuple(Fraction(n) for n in f.normal)
    return None


class _Objective:
    """F(s) = 1/2 log sum q_w exp(2<w,s>) - <u,s>; grad F = mu(e^s p) - u."""

    def __init__(self, q: np.ndarray, W: np.ndarray, u: np.ndarray):
        keep = q > 0
        self.log_q = np.log(q[keep])
        self.W = W[keep]
        self.u = u

    def value(self, s: np.ndarray) -> float:
        return 0.5 * logsumexp(self.log_q + 2.0 * self.W @ s) - self.u @ s

    def derivatives(self, s: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        prob = softmax(self.log_q + 2.0 * self.W @ s)
        mu = prob @ self.W
        centered = self.W - mu
        hess = 2.0 * (centered.T * prob) @ centered
        return mu, mu - self.u, hess


def kn_minimize(spec: TorusActionSpec, p: AmbientPoint, u: Sequence, tol: float = KN_TOL,
                max_iter: int = KN_MAX_ITER, norm_bound: float = KN_NORM_BOUND) -> KNSolveResult:
    """Damped Newton on the Kempf-Ness function of p, flowing toward mu^{-1}(u)."""
    u_exact = as_fraction_vector(u)
    m = spec.torus_rank
    if len(u_exact) != m:
        raise InputError(f"u has {len(u_exact)} coordinates, torus rank is {m}")
    data = monomial_data(spec)
    q = squared_moduli(spec, p)
    support_w = [w for w, qi in zip(data.exact_weights, q) if qi > 0]
    s = np.zeros(m)
    u_f = np.array([float(x) for x in u_exact])
    obj = _Objective(q, data.weights, u_f)
    mu, grad, hess = obj.derivatives(s)

    direction = separation_direction(support_w, u_exact)
    if direction is not None:
        logger.debug("u outside the support hull, separation %s", direction)
        return KNSolveResult(KNStatus.DIVERGED, s, mu, float(np.linalg.norm(grad)), 0, tol, direction)

    for it in range(max_iter + 1):
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= tol:
            return KNSolveResult(KNStatus.CONVERGED, s, mu, gnorm, it, tol)
        if it == max_iter:
            break
        evals, evecs = np.linalg.eigh(hess)
        cutoff = 1e-14 * max(float(evals.max()), 1e-300)
        inv = np.where(evals > cutoff, 1.0 / np.where(evals > cutoff, evals, 1.0), 0.0)
        coeffs = evecs.T @ grad
        step = -(evecs @ (inv * coeffs))
        in_range = evecs @ np.where(evals > cutoff, coeffs, 0.0)
        if np.linalg.norm(grad - in_range) > 1e-3 * gnorm or not np.all(np.isfinite(step)):
            step = -grad
        f0, slope, alpha = obj.value(s), float(grad @ step), 1.0
        while alpha > 1e-12 and obj.value(s + alpha * step) > f0 + 1e-4 * alpha * slope:
            alpha *= 0.5
        s = s + alpha * step
        mu, grad, hess = obj.derivatives(s)
        logger.debug("kn iter %d: |grad| %.3e step %.3e", it, gnorm, alpha)
        if np.linalg.norm(s) > norm_bound:
            # exact recheck; inside the hull so no certificate exists
            direction = separation_direction(support_w, u_exact)
            status = KNStatus.DIVERGED if direction is not None else KNStatus.ITERATION_LIMIT
            return KNSolveResult(status, s, mu, float(np.linalg.norm(grad)), it + 1, tol, direction)
    return KNSolveResult(KNStatus.ITERATION_LIMIT, s, mu, float(np.linalg.norm(grad)), max_iter, tol)


# ───────────────────────── semistability ─────────────────────────
def _equation_variable_sets(spec: TorusActionSpec) -> List[FrozenSet[int]]:
    sets = [frozenset(c for c, e in enumerate(exps) if e) for exps, _ in spec.equation]
    seen = set()
    for s in sets:
        if seen & s:
            raise InputError("realizability rule needs equation monomials in disjoint variables")
        seen |= s
    return sets


def support_realizable(spec: TorusActionSpec, support: Iterable[int]) -> bool:
    support = frozenset(support)
    if any(not any(c in support for c in rng) for rng in spec.factor_ranges):
        return False
    if not spec.equation:
        return True
    alive = sum(1 for vs in _equation_variable_sets(spec) if vs <= support)
    return alive != 1


def semistable_exact(spec: TorusActionSpec, support: Iterable[int], u: Sequence) -> bool:
    """u lies in the closed hull of the weights of monomials alive on the support."""
    support = frozenset(support)
    if not support_realizable(spec, support):
        raise UnrealizableSupportError(
            f"support {sorted(support)} is not realized by any point; check realizable_support first"
        )
    return hull_contains(supported_weights(spec, support), u)


# ───────────────────────── sampling ─────────────────────────
def sample_point(spec: TorusActionSpec, rng: np.random.Generator,
                 support: Optional[Iterable[int]] = None) -> Optional[AmbientPoint]:
    """Complex Gaussian point of X with the given support, or None if none is produced.

    The equation is solved for the first variable of the first alive monomial
    that occurs in no other alive monomial.
    """
    n = spec.n_coords
    support = frozenset(range(n)) if support is None else frozenset(support)
    z = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2)
    z[[c for c in range(n) if c not in support]] = 0
    if spec.equation:
        alive = [(e, complex(c)) for e, c in spec.equation if all(z[v] != 0 for v, k in enumerate(e) if k)]
        if len(alive) == 1:
            return None
        if alive:
            others = [v for e, _ in alive[1:] for v, k in enumerate(e) if k]
            target, coeff = alive[0]
            free = [v for v, k in enumerate(target) if k and v not in others]
            if not free:
                return None
            v = free[0]
            rest = sum(c * np.prod(z ** np.array(e)) for e, c in alive[1:])
            partial = coeff * np.prod([z[i] ** k for i, k in enumerate(target) if k and i != v])
            power = -rest / partial
            if power == 0:
                return None
            z[v] = power ** (1.0 / target[v])
    try:
        point = AmbientPoint.create(spec, z)
    except InputError:
        return None
    return point if point.support() == support else None


# ───────────────────────── fibre probe ─────────────────────────
def _vanishes(v: np.ndarray, tol: float) -> bool:
    return float(np.vdot(v, v).real) <= tol


def _projective_classes(values: Sequence[np.ndarray], tol: float) -> int:
    # nonvanishing values only; projective directions of tiny vectors are noise
    reps: List[np.ndarray] = []
    for v in values:
        unit = v / math.sqrt(float(np.vdot(v, v).real))
        if not any(math.sqrt(max(0.0, 1 - abs(np.vdot(r, unit)) ** 2)) <= tol for r in reps):
            reps.append(unit)
    return len(reps)


def _real_classes(values: Sequence[np.ndarray], tol: float) -> int:
    reps: List[np.ndarray] = []
    for v in values:
        if not any(np.max(np.abs(v - r)) <= tol for r in reps):
            reps.append(v)
    return len(reps)


@dataclass
class FibreProbeReport:
    u: Tuple[Fraction, ...]
    location: str
    trials: int
    converged: int
    distinct_values: int
    distinct_moduli: int
    vanishing: int
    verdict: str
    tol: float
    probe_tol: float
    seed: int
    values: List[List[List[float]]] = field(default_factory=list)

    @property
    def single_orbit(self) -> bool:
        return self.verdict == "single orbit"

    @property
    def quotient_map_vanishes(self) -> bool:
        return self.converged > 0 and self.vanishing == self.converged

    def to_json(self) -> dict:
        return {
            "u": format_vector(self.u),
            "u_location": self.location,
            "trials": self.trials,
            "converged": self.converged,
            "distinct_values": self.distinct_values,
            "distinct_moduli": self.distinct_moduli,
            "vanishing_values": self.vanishing,
            "quotient_map_vanishes": self.quotient_map_vanishes,
            "verdict": self.verdict,
            "seed": self.seed,
            "values": self.values,
            "precision": f"kn_tol={self.tol:g}, probe_tol={self.probe_tol:g}",
        }


def fibre_orbit_probe(spec: TorusActionSpec, quotient_monomials: Sequence[Sequence[int]], u: Sequence,
                      trials: int, seed: int = 0, tol: float = KN_TOL, probe_tol: float = PROBE_TOL,
                      max_iter: int = KN_MAX_ITER, workers: int = 1) -> FibreProbeReport:
    """Flow random points of X to mu^{-1}(u) and compare their quotient values."""
    u_exact = as_fraction_vector(u)
    polytope = cached_hull(tuple(sorted({as_fraction_vector(w) for w in monomial_data(spec).exact_weights})))
    location = locate(polytope, u_exact)
    if location is not Location.BOUNDARY:
        logger.warning("fibre probe at %s point %s", location.value, format_vector(u_exact))
    exps = np.array(quotient_monomials)

    def run(index: int):
        rng = np.random.default_rng([seed, index])
        p = sample_point(spec, rng)
        if p is None:
            return None
        res = kn_minimize(spec, p, u_exact, tol=tol, max_iter=max_iter)
        if res.status is not KNStatus.CONVERGED:
            return None
        flowed = act(spec, p, res.minimizer)
        x = flowed.flat
        value = np.array([np.prod(x ** e) for e in exps])
        return value, np.abs(x) ** 2

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, range(trials)))
    else:
        outcomes = [run(i) for i in range(trials)]
    done = [o for o in outcomes if o is not None]

    alive = [v for v, _ in done if not _vanishes(v, probe_tol)]
    vanishing = len(done) - len(alive)
    n_values = _projective_classes(alive, probe_tol) + (1 if vanishing and alive else 0)
    n_moduli = _real_classes([mod for _, mod in done], probe_tol)
    if not done:
        verdict = "inconclusive"
        logger.warning("fibre probe: no converged samples out of %d trials", trials)
    elif not alive:
        # the quotient map carries no information here, only the moduli decide
        logger.info("fibre probe: quotient map vanishes on all %d converged samples", vanishing)
        verdict = "single orbit" if n_moduli == 1 else "multiple orbits"
    elif n_values == 1 and n_moduli == 1:
        verdict = "single orbit"
    elif n_values == 1:
        verdict = "single value"
    else:
        verdict = "multiple values"
    return FibreProbeReport(
        u=u_exact, location=location.value, trials=trials, converged=len(done),
        distinct_values=n_values, distinct_moduli=n_moduli, vanishing=vanishing, verdict=verdict,
        tol=tol, probe_tol=probe_tol, seed=seed,
        values=[[[float(z.real), float(z.imag)] for z in v] for v, _ in done[:5]],
    )
