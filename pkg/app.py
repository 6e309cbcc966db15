# app.py
import functools
import json
import logging
import sys

import click

from settings import KN_MAX_ITER, KN_TOL, LOG_LEVEL, PROBE_TOL
from utils import dump_json, format_rational, format_vector, parse_complex_vector, parse_fraction, parse_vector
from quotients.errors import ArithmeticOverflowError, InputError, PreconditionError
from quotients.families import (
    FamilyKind,
    FamilySpec,
    ambient_spec,
    boundary_from_stabilizers,
    chamber_inputs,
    chow_boundary,
    chow_quotient_map,
    git_quotient,
    is_fano,
    is_smooth,
    moment_polytope,
    quotient_space_report,
    raw_quadric_spec,
)
from quotients.ke_certifier import certify
from quotients.lattice_core import global_stabilizer
from quotients.log_canonical import glct_bound, glct_bound_via_search
from quotients.moment_kn import AmbientPoint, fibre_orbit_probe, kn_minimize
from quotients.polyhedral import git_chambers, locate
from quotients.verification import SUITES, run_suites


# ───────────────────────── Output ─────────────────────────
def _emit(payload, out):
    text = dump_json(payload)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _fail(kind: str, message: str, code: int = 2):
    click.echo(json.dumps({"error": kind, "message": message}, sort_keys=True), err=True)
    click.get_current_context().exit(code)


def handles_input_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ArithmeticOverflowError as e:
            _fail("ArithmeticOverflowError", str(e))
        except (InputError, ValueError) as e:
            _fail(type(e).__name__, str(e))
    return wrapper


def _family(selector):
    if not selector:
        raise InputError("--family is required")
    return FamilySpec.parse(selector)


def _u_for(spec, text):
    if not text:
        raise InputError("--u is required")
    u = parse_vector(text)
    if len(u) != spec.torus_rank:
        raise InputError(f"u has {len(u)} coordinates, the torus has rank {spec.torus_rank}")
    return u


family_option = click.option("--family", "selector", help='e.g. "hypersurface:n=3,alpha=1,beta=2", "quadric:n=3"')
out_option = click.option("--out", type=click.Path(dir_okay=False, writable=True), help="write JSON here instead of stdout")


# ───────────────────────── CLI ─────────────────────────
@click.group()
@click.option("--log-level", default=LOG_LEVEL, show_default=True,
              type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False))
def cli(log_level):
    """Torus quotients of symmetric T-varieties and Kähler-Einstein certificates."""
    logging.basicConfig(stream=sys.stderr, level=log_level.upper(),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


@cli.command()
@family_option
@out_option
@handles_input_errors
def analyze(selector, out):
    """Family summary: flags, effective weights, quotient map and Chow pair."""
    f = _family(selector)
    spec = ambient_spec(f)
    pair = chow_boundary(f)
    payload = {
        "family": f.to_json(),
        "fano": is_fano(f),
        "smooth": is_smooth(f),
        "action": spec.to_json(),
        "global_stabilizer": global_stabilizer(spec).to_json(),
        "quotient_map": chow_quotient_map(f).describe(),
        "chow_pair": pair.to_json(),
        "chow_pair_from_stabilizers": boundary_from_stabilizers(f).to_json(),
        "quotient_space": quotient_space_report(f),
        "precision": "exact",
    }
    if f.kind is not FamilyKind.HYPERSURFACE:
        payload["raw_global_stabilizer"] = global_stabilizer(raw_quadric_spec(f.n)).to_json()
    _emit(payload, out)


@cli.command()
@family_option
@click.option("--u", "u_text", help="comma-separated rationals; reports where u lies")
@out_option
@handles_input_errors
def polytope(selector, u_text, out):
    """Moment polytope of the ambient action."""
    f = _family(selector)
    P = moment_polytope(f)
    payload = {"family": f.to_json(), "polytope": P.to_json(), "precision": "exact"}
    if u_text:
        u = _u_for(ambient_spec(f), u_text)
        payload["u"] = format_vector(u)
        payload["u_location"] = locate(P, u).value
        payload["quotient"] = git_quotient(f, u, P).to_json()
    _emit(payload, out)


@cli.command()
@family_option
@out_option
@handles_input_errors
def chambers(selector, out):
    """GIT chamber complex of the moment polytope."""
    f = _family(selector)
    weights, supports = chamber_inputs(f)
    complex_ = git_chambers(weights, supports)
    payload = {"family": f.to_json(), "weights": [format_vector(w) for w in weights], **complex_.to_json()}
    for entry, chamber in zip(payload["chambers"], complex_.chambers):
        entry["quotient"] = git_quotient(f, chamber.polytope.centroid, complex_.polytope).quotient
    payload["boundary_quotient"] = "point" if f.kind is FamilyKind.HYPERSURFACE else "not available"
    _emit(payload, out)


@cli.command("kn-solve")
@family_option
@click.option("--point", "point_text", required=True, help="comma-separated complex coordinates, e.g. 1,0,0,0,1,0")
@click.option("--u", "u_text", help="comma-separated rationals")
@click.option("--tol", default=KN_TOL, show_default=True, type=float)
@click.option("--max-iter", default=KN_MAX_ITER, show_default=True, type=int)
@out_option
@handles_input_errors
def kn_solve(selector, point_text, u_text, tol, max_iter, out):
    """Kempf-Ness minimization of one point toward the fibre over u."""
    f = _family(selector)
    spec = ambient_spec(f)
    u = _u_for(spec, u_text)
    point = AmbientPoint.create(spec, parse_complex_vector(point_text))
    result = kn_minimize(spec, point, u, tol=tol, max_iter=max_iter)
    _emit({"family": f.to_json(), "u": format_vector(u), "point": point.to_json(), **result.to_json()}, out)


@cli.command("fibre-probe")
@family_option
@click.option("--u", "u_text", help="comma-separated rationals")
@click.option("--trials", default=24, show_default=True, type=click.IntRange(0))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--tol", default=KN_TOL, show_default=True, type=float)
@click.option("--probe-tol", default=PROBE_TOL, show_default=True, type=float)
@click.option("--max-iter", default=KN_MAX_ITER, show_default=True, type=int)
@click.option("--workers", default=1, show_default=True, type=click.IntRange(1))
@out_option
@handles_input_errors
def fibre_probe(selector, u_text, trials, seed, tol, probe_tol, max_iter, workers, out):
    """Do random points flowed to the fibre over u share one quotient value?"""
    f = _family(selector)
    spec = ambient_spec(f)
    u = _u_for(spec, u_text)
    report = fibre_orbit_probe(spec, chow_quotient_map(f).monomials, u, trials, seed=seed, tol=tol,
                               probe_tol=probe_tol, max_iter=max_iter, workers=workers)
    _emit({"family": f.to_json(), **report.to_json()}, out)


@cli.command("glct-bound")
@click.option("--gamma", "gamma_text", help='boundary coefficient, e.g. "1/2"')
@family_option
@out_option
@handles_input_errors
def glct_bound_command(gamma_text, selector, out):
    """Lower bound for the symmetric glct of (P^2, B_gamma), with the search cross-check."""
    if gamma_text is None and not selector:
        raise InputError("pass --gamma or --family")
    payload = {}
    if selector:
        f = _family(selector)
        pair = chow_boundary(f)
        if pair.base_dim != 2:
            raise PreconditionError(f"{f.label} has base P^{pair.base_dim}, the bound needs P^2")
        gamma = pair.gamma
        payload["family"] = f.to_json()
        if gamma_text is not None and parse_fraction(gamma_text) != gamma:
            raise InputError(f"--gamma {gamma_text} disagrees with the boundary coefficient of {f.label}")
    else:
        gamma = parse_fraction(gamma_text)
    bound, search = glct_bound(gamma), glct_bound_via_search(gamma)
    payload.update({
        "gamma": format_rational(gamma),
        "bound": format_rational(bound),
        "search": format_rational(search),
        "agree": bound == search,
        "precision": "exact",
    })
    _emit(payload, out)


@cli.command("certify")
@family_option
@out_option
@handles_input_errors
def certify_command(selector, out):
    """Kähler-Einstein certificate through the Chow quotient pair and Tian's criterion."""
    _emit(certify(_family(selector)).to_json(), out)


@cli.command()
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--suite", "names", multiple=True, type=click.Choice(sorted(SUITES)), help="run only these suites")
@out_option
@handles_input_errors
def verify(seed, names, out):
    """Run the property suites; exit status 1 when any check fails."""
    table, ok = run_suites(seed, list(names) or None)
    suites = [{"name": r.name, "passed": int(r.passed), "failed": int(r.failed)} for r in table.itertuples()]
    _emit({"seed": seed, "suites": suites, "ok": ok,
           "passed": int(table["passed"].sum()), "failed": int(table["failed"].sum())}, out)
    if not ok:
        click.get_current_context().exit(1)


# ───────────────────────── Main ─────────────────────────
if __name__ == "__main__":
    cli()
