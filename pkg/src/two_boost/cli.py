"""Command-line front end.

Every number printed here comes from a library call; this module only
parses arguments, merges configuration and formats results.

Exit codes: 0 ok, 1 usage, 2 degenerate input, 3 verification failure.
Negative coordinates are passed as ``--q0=-1,0``.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from typing import Optional

from . import __version__
from .action_index import maslov_transverse
from .apriori_bounds import homotopy_admissible, novikov_window_ok, window_constants
from .chord_solver import (DegenerateProblemError, RootOptions, TwoBoostProblem,
                           asymptotic_lower_bound, chord_from_eta, constant_circle,
                           find_roots, free_chords, parity_report, root_bound)
from ._parallel import pmap
from .hamiltonians import GridSpec
from .potential_cutoff import (HypothesisError, RadialPowerPotential, chord_radius_bound,
                               cutoff_membership, cutoff_spec, parse_potential, trap_set_check)
from .reporting import chord_record, chords_svg, records_to_csv, to_json
from .shooting import IntegratorConfig, compare_crit_sets, shoot, ShootOptions

EXIT_OK, EXIT_USAGE, EXIT_DEGENERATE, EXIT_VERIFY = 0, 1, 2, 3
COMMANDS = ("chords", "sweep", "maslov", "bounds", "cutoff", "shoot", "verify", "plot")

DEFAULTS = {
    "q0": "1,0", "q1": "0,1", "c": None, "format": None, "output": None,
    "samples": 256, "nudge_c": 0.0, "bracket_tol": 1e-12, "no_index": False,
    "free": False, "a": None, "b": None, "j_norm": 1.0, "h_norm": 0.0, "eps": 0.0,
    "variant": "base", "dhs_sup": None, "alpha": None, "r0": 1.0, "grid": 64,
    "no_membership": False, "potential": None, "seeds": 64, "atol": 1e-14, "rtol": 1e-14,
    "compare": False, "suite": "default", "mutate_beta": False, "all_signs": False,
    "c_values": None,
}
TOLERANCE_KEYS = ("bracket_tol", "atol", "rtol")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    command: str
    problem: dict
    output_format: str
    output_path: Optional[str]
    tolerances: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        for k, v in self.tolerances.items():
            if not v > 0:
                raise UsageError(f"tolerance {k} must be positive, got {v}")


def _point(text) -> tuple:
    if isinstance(text, (list, tuple)):
        vals = [float(v) for v in text]
    else:
        try:
            vals = [float(v) for v in str(text).split(",")]
        except ValueError:
            raise UsageError(f"cannot parse point {text!r}; expected x,y") from None
    if len(vals) != 2:
        raise UsageError(f"point {text!r} must have two coordinates")
    return tuple(vals)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="two-boost", description="Chords between two cotangent fibers at fixed energy.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, fmt=("csv", "json")):
        sp.add_argument("--config", help="JSON file with option values; flags take precedence")
        sp.add_argument("--format", choices=fmt)
        sp.add_argument("--output", "-o", help="output file (default stdout)")

    def problem(sp, need_c=True):
        sp.add_argument("--q0", help="start point x,y")
        sp.add_argument("--q1", help="end point x,y")
        if need_c:
            sp.add_argument("--c", type=float, help="energy c > 0")

    sp = sub.add_parser("chords", help="all chords of H0 with action, index and certificates")
    problem(sp)
    common(sp)
    sp.add_argument("--samples", type=int, help="samples per chord")
    sp.add_argument("--nudge-c", type=float, dest="nudge_c", help="add EPS to c")
    sp.add_argument("--bracket-tol", type=float, dest="bracket_tol")
    sp.add_argument("--no-index", action="store_true", default=None, dest="no_index")

    sp = sub.add_parser("sweep", help="root counts and lower bounds over a list of energies")
    problem(sp, need_c=False)
    common(sp)
    sp.add_argument("--c-values", dest="c_values", help="comma separated energies")
    sp.add_argument("--bracket-tol", type=float, dest="bracket_tol")

    sp = sub.add_parser("maslov", help="transverse indices of all chords")
    problem(sp)
    common(sp, ("json",))
    sp.add_argument("--free", action="store_true", default=None,
                    help="use the kinetic Hamiltonian |p|^2/2")

    sp = sub.add_parser("bounds", help="a-priori constants for an action window")
    common(sp, ("json",))
    sp.add_argument("--a", type=float)
    sp.add_argument("--b", type=float)
    sp.add_argument("--c", type=float)
    sp.add_argument("--j-norm", type=float, dest="j_norm")
    sp.add_argument("--h-norm", type=float, dest="h_norm")
    sp.add_argument("--eps", type=float)
    sp.add_argument("--q0")
    sp.add_argument("--q1")
    sp.add_argument("--variant", choices=("base", "positive"))
    sp.add_argument("--dhs-sup", type=float, dest="dhs_sup")

    sp = sub.add_parser("cutoff", help="confinement box, cutoff and trap-set check for V = a/r^alpha")
    problem(sp)
    common(sp, ("json",))
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--a", type=float)
    sp.add_argument("--r0", type=float)
    sp.add_argument("--grid", type=int, help="grid points per axis for the membership check")
    sp.add_argument("--no-membership", action="store_true", default=None, dest="no_membership")

    sp = sub.add_parser("shoot", help="chords of H0 - V by shooting")
    problem(sp)
    common(sp)
    sp.add_argument("--potential", help="'a/r^alpha', e.g. 0.1/r^3")
    sp.add_argument("--a", type=float, help="amplitude, with --alpha instead of --potential")
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--r0", type=float)
    sp.add_argument("--seeds", type=int, help="number of momentum angles seeded")
    sp.add_argument("--atol", type=float)
    sp.add_argument("--rtol", type=float)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--no-index", action="store_true", default=None, dest="no_index")
    sp.add_argument("--compare", action="store_true", default=None,
                    help="also shoot the cutoff Hamiltonian and compare chord sets")

    sp = sub.add_parser("verify", help="run an acceptance suite")
    common(sp, ("json",))
    sp.add_argument("--suite", choices=("default", "figures", "cutoff", "fast"))
    sp.add_argument("--mutate-beta", action="store_true", default=None, dest="mutate_beta",
                    help="flip the sign of the cutoff slope; the cutoff check must fail")

    sp = sub.add_parser("plot", help="SVG of chord projections to the q-plane")
    problem(sp, need_c=False)
    common(sp, ("svg",))
    sp.add_argument("--c", type=float, action="append", help="energy; repeat to overlay")
    sp.add_argument("--all-signs", action="store_true", default=None, dest="all_signs",
                    help="include negative chords")
    return p


def resolve(args: argparse.Namespace) -> dict:
    """Merge flags over the JSON config over defaults."""
    cfg = {}
    path = getattr(args, "config", None)
    if path:
        try:
            with open(path) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    out = {}
    for key, default in DEFAULTS.items():
        flag = getattr(args, key, None)
        out[key] = flag if flag is not None else cfg.get(key, default)
    return out


def make_run_config(command: str, opts: dict) -> RunConfig:
    fmt = opts["format"] or {"maslov": "json", "bounds": "json", "cutoff": "json",
                             "verify": "json", "plot": "svg"}.get(command, "csv")
    tol = {k: opts[k] for k in TOLERANCE_KEYS}
    prob = {k: opts[k] for k in ("q0", "q1", "c")}
    return RunConfig(command=command, problem=prob, output_format=fmt,
                     output_path=opts["output"], tolerances=tol, options=opts)


def _problem(rc: RunConfig, c=None) -> TwoBoostProblem:
    c = rc.problem["c"] if c is None else c
    if c is None:
        raise UsageError("--c is required")
    try:
        return TwoBoostProblem(_point(rc.problem["q0"]), _point(rc.problem["q1"]), c)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _degenerate(prob, roots):
    bad = [r.eta for r in roots if r.degenerate]
    raise DegenerateProblemError(
        f"degenerate root(s) at eta = {', '.join(format(e, '.17g') for e in bad)} for c = {prob.c:.17g}: "
        "f and f' vanish together, which happens only for a non-generic energy. "
        "Retry with a slightly different energy, e.g. --nudge-c 1e-6.")


def cmd_chords(rc: RunConfig) -> str:
    o = rc.options
    prob = _problem(rc)
    if o["nudge_c"]:
        prob = prob.nudged(o["nudge_c"])
    roots = find_roots(prob, RootOptions(bracket_tol=rc.tolerances["bracket_tol"]))
    if any(r.degenerate for r in roots):
        _degenerate(prob, roots)
    recs = [chord_record(chord_from_eta(prob, r.eta, o["samples"]), with_index=not o["no_index"])
            for r in roots]
    circle = None
    if prob.q0 == prob.q1:
        centre, radius = constant_circle(prob.q0a, prob.c)
        circle = {"centre": centre, "radius": radius, "n_nonzero_roots": len(roots)}
        sys.stderr.write(f"q0 = q1: constant solutions form the momentum circle centred at "
                         f"({centre[0]:.17g}, {centre[1]:.17g}) with radius {radius:.17g}; "
                         f"{len(roots)} nonzero roots\n")
    if rc.output_format == "csv":
        return records_to_csv(recs)
    body = {"q0": prob.q0, "q1": prob.q1, "c": prob.c, "delta0": root_bound(prob), "records": recs}
    if circle is not None:
        body["constant_circle"] = circle
    return to_json(body)


def cmd_sweep(rc: RunConfig) -> str:
    o = rc.options
    cv = o["c_values"]
    if cv is None:
        raise UsageError("--c-values is required")
    cs = [float(v) for v in cv.split(",")] if isinstance(cv, str) else [float(v) for v in cv]
    probs = [_problem(rc, c) for c in cs]
    ropts = RootOptions(bracket_tol=rc.tolerances["bracket_tol"])

    def row(prob):
        roots = find_roots(prob, ropts)
        degenerate = any(r.degenerate for r in roots)
        rep = None if degenerate else parity_report(prob, ropts)
        r0, r1, th = prob.polar_data()
        return {"c": prob.c, "n_plus": sum(r.eta > 0 for r in roots),
                "n_minus": sum(r.eta < 0 for r in roots),
                "lower_bound": asymptotic_lower_bound(r0, r1, th, prob.c),
                "delta0": root_bound(prob), "degenerate": degenerate,
                "both_odd": None if rep is None else rep.both_odd,
                "sign_alternation": None if rep is None else rep.sign_alternation}

    rows = pmap(row, probs)
    if rc.output_format == "json":
        return to_json({"q0": probs[0].q0, "q1": probs[0].q1, "rows": rows})
    from .reporting import fmt
    keys = list(rows[0]) if rows else ["c"]
    lines = [",".join(keys)]
    for r in rows:
        lines.append(",".join(fmt(v) if isinstance(v, float) else ("" if v is None else str(v).lower())
                              for v in r.values()))
    return "\n".join(lines) + "\n"


def cmd_maslov(rc: RunConfig) -> str:
    prob = _problem(rc)
    if rc.options["free"]:
        chs = free_chords(prob.q0a, prob.q1a, prob.c)
    else:
        roots = find_roots(prob)
        if any(r.degenerate for r in roots):
            _degenerate(prob, roots)
        chs = [chord_from_eta(prob, r.eta) for r in roots]
    out = []
    for ch in chs:
        m = maslov_transverse(ch)
        out.append({"eta": ch.eta, "mu_tr": m.mu_tr, "crossings": m.crossings,
                    "winding": m.winding, "n_samples": m.n_samples})
    return to_json({"q0": prob.q0, "q1": prob.q1, "c": prob.c,
                    "hamiltonian": "free" if rc.options["free"] else "copernican", "chords": out})


def cmd_bounds(rc: RunConfig) -> str:
    o = rc.options
    for k in ("a", "b"):
        if o[k] is None:
            raise UsageError(f"--{k} is required")
    c = o["c"] if o["c"] is not None else rc.problem["c"]
    if c is None:
        raise UsageError("--c is required")
    try:
        bc = window_constants(o["a"], o["b"], c, o["j_norm"], o["h_norm"], o["eps"],
                              _point(o["q0"]), _point(o["q1"]), o["variant"])
        body = {"constants": bc.as_dict(), "novikov_window_ok": novikov_window_ok(o["a"], o["b"], c)}
        if o["dhs_sup"] is not None:
            body["homotopy_admissible"] = homotopy_admissible(o["dhs_sup"], c, o["j_norm"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return to_json(body)


def _potential(o) -> RadialPowerPotential:
    try:
        if o["potential"]:
            return parse_potential(o["potential"], o["r0"])
        if o["a"] is None or o["alpha"] is None:
            raise UsageError("give --potential a/r^alpha or both --a and --alpha")
        return RadialPowerPotential(o["a"], o["alpha"], o["r0"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_cutoff(rc: RunConfig) -> str:
    o = rc.options
    prob = _problem(rc)
    V = _potential(o)
    try:
        box = chord_radius_bound(V, prob.c, prob.q0, prob.q1)
        spec = cutoff_spec(V, prob.c, prob.q0, prob.q1)
    except HypothesisError as exc:
        raise UsageError(str(exc)) from None
    trap = trap_set_check(spec, V)
    body = {"potential": {"a": V.a, "alpha": V.alpha, "r0": V.r0}, "c": prob.c,
            "chord_box": asdict(box),
            "cutoff": {"R1": spec.R1, "beta": spec.beta, "supV": spec.supV,
                       "outer_radius": spec.outer_radius},
            "trap_set": asdict(trap)}
    if not o["no_membership"]:
        n = o["grid"]
        mem = cutoff_membership(spec, V, GridSpec(n_r=n, n_theta=n, n_p=n))
        body["class_H"] = asdict(mem)
    return to_json(body)


def cmd_shoot(rc: RunConfig) -> str:
    o = rc.options
    prob = _problem(rc)
    V = _potential(o) if (o["potential"] or o["a"] is not None) else None
    cfg = IntegratorConfig(atol=rc.tolerances["atol"], rtol=rc.tolerances["rtol"])
    sopts = ShootOptions(n_psi=o["seeds"])
    if o["compare"]:
        if V is None:
            raise UsageError("--compare needs a potential")
        try:
            spec = cutoff_spec(V, prob.c, prob.q0, prob.q1)
        except HypothesisError as exc:
            raise UsageError(str(exc)) from None
        cmp = compare_crit_sets(prob, V, spec, cfg=cfg, opts=sopts, with_index=not o["no_index"])
        body = {"matched": [[chord_record(a, not o["no_index"]), chord_record(b, not o["no_index"])]
                            for a, b in cmp.matched],
                "only_H": [chord_record(ch, False) for ch in cmp.only_H],
                "only_H1": [chord_record(ch, False) for ch in cmp.only_H1],
                "index_mismatch": cmp.index_mismatch, "cross_seeded": cmp.cross_seeded}
        return to_json(body)
    res = shoot(prob, V, cfg=cfg, opts=sopts, n_samples=o["samples"])
    recs = [chord_record(ch, with_index=not o["no_index"]) for ch in res.chords]
    if rc.output_format == "csv":
        return records_to_csv(recs)
    return to_json({"q0": prob.q0, "q1": prob.q1, "c": prob.c, "n_seeds": res.n_seeds,
                    "records": recs, "diagnostics": res.diagnostics})


def cmd_verify(rc: RunConfig):
    from .verification import run_suite
    results = run_suite(rc.options["suite"], mutate_beta=bool(rc.options["mutate_beta"]))
    ok = all(r.passed for r in results)
    body = {"suite": rc.options["suite"], "status": "pass" if ok else "fail",
            "criteria": [r.as_dict() for r in results]}
    return to_json(body), (EXIT_OK if ok else EXIT_VERIFY)


def cmd_plot(rc: RunConfig) -> str:
    o = rc.options
    cs = rc.problem["c"]
    if not cs:
        raise UsageError("--c is required")
    cs = cs if isinstance(cs, list) else [cs]
    groups = []
    for c in cs:
        prob = _problem(rc, c)
        roots = find_roots(prob)
        keep = [r for r in roots if o["all_signs"] or r.eta > 0]
        groups.append((prob.c, [chord_from_eta(prob, r.eta) for r in keep]))
    return chords_svg(groups, _point(rc.problem["q0"]), _point(rc.problem["q1"]),
                      title="chords from q0 to q1")


HANDLERS = {"chords": cmd_chords, "sweep": cmd_sweep, "maslov": cmd_maslov, "bounds": cmd_bounds,
            "cutoff": cmd_cutoff, "shoot": cmd_shoot, "verify": cmd_verify, "plot": cmd_plot}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = resolve(args)
        rc = make_run_config(args.command, opts)
        out = HANDLERS[rc.command](rc)
    except UsageError as exc:
        sys.stderr.write(f"two-boost: error: {exc}\n")
        return EXIT_USAGE
    except DegenerateProblemError as exc:
        sys.stderr.write(f"two-boost: {exc}\n")
        return EXIT_DEGENERATE
    code = EXIT_OK
    if isinstance(out, tuple):
        out, code = out
    if rc.output_path:
        with open(rc.output_path, "w", newline="\n") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
