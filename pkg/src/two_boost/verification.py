"""Acceptance suites run by ``two-boost verify``.

Each check returns a `CheckResult` with an id, a status, the measured
quantity and the tolerance it was held to.  Random problems come from a
seeded generator, so a suite run is reproducible.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction

import numpy as np

from .action_index import DiscretizedPath, action_eval, maslov_transverse
from .apriori_bounds import (eta_bound_small_gradient, homotopy_admissible, knm_box,
                             novikov_window_ok, window_constants)
from .chord_solver import (BOUNDARY_TOL, ENERGY_TOL, ODE_TOL, TwoBoostProblem,
                           asymptotic_lower_bound, chord_from_eta, f_eval, find_roots,
                           free_chords, g_delta_analysis, inverse_scaling_map,
                           parity_report, root_bound, scaled_chord, scaling_map)
from .hamiltonians import CopernicanH0, GridSpec
from .potential_cutoff import (RadialPowerPotential, chord_radius_bound, cutoff_membership,
                               cutoff_spec, trap_set_check)
from .shooting import compare_crit_sets, shoot

UNIT_Q0 = (1.0, 0.0)
UNIT_Q1 = (0.0, 1.0)
FIGURE_COUNTS = {0.2: 1, 0.1: 3, 0.05: 5}


@dataclass
class CheckResult:
    id: int
    name: str
    status: str
    measured: object
    tolerance: object
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def as_dict(self) -> dict:
        return asdict(self)


def _result(i, name, ok, measured, tol, **detail):
    return CheckResult(i, name, "pass" if ok else "fail", measured, tol, detail)


def random_problem(rng, c_range=(0.02, 2.0), q_max=2.0):
    """Endpoints uniform in the disc of radius q_max, c log-uniform in c_range."""
    def pt():
        r = q_max * math.sqrt(rng.uniform())
        t = rng.uniform(0, 2 * math.pi)
        return (r * math.cos(t), r * math.sin(t))
    c = math.exp(rng.uniform(math.log(c_range[0]), math.log(c_range[1])))
    return TwoBoostProblem(pt(), pt(), c)


def uniqueness_problem(rng):
    """Random problem in the regime |q0||q1| <= 2c with q0 != q1."""
    while True:
        p = random_problem(rng)
        pq = np.linalg.norm(p.q0a) * np.linalg.norm(p.q1a)
        if pq <= 2 * p.c and not np.allclose(p.q0a, p.q1a):
            return p


def check_figures(i=1):
    t0 = time.perf_counter()
    counts = {}
    for c in FIGURE_COUNTS:
        roots = find_roots(TwoBoostProblem(UNIT_Q0, UNIT_Q1, c))
        counts[c] = sum(1 for r in roots if r.eta > 0)
    dt = time.perf_counter() - t0
    ok = counts == FIGURE_COUNTS and dt < 1.0
    return _result(i, "figure root counts", ok, {str(k): v for k, v in counts.items()},
                   {"counts": {str(k): v for k, v in FIGURE_COUNTS.items()}, "runtime_s": 1.0},
                   runtime_s=dt)


def check_uniqueness(n=200, seed=2, i=2):
    rng = np.random.default_rng(seed)
    fails = []
    for _ in range(n):
        p = uniqueness_problem(rng)
        roots = find_roots(p)
        npos = sum(r.eta > 0 for r in roots)
        nneg = sum(r.eta < 0 for r in roots)
        if (npos, nneg) != (1, 1):
            fails.append({"q0": p.q0, "q1": p.q1, "c": p.c, "n_plus": npos, "n_minus": nneg})
    return _result(i, "uniqueness regime", not fails, len(fails), 0, n=n, failures=fails[:5])


def check_confinement(n=500, seed=3, i=3):
    """Roots lie in [-delta0, delta0] and f has no sign change beyond it.

    The second part is an independent look: f is scanned on
    delta0 < |eta| <= 4 delta0.
    """
    rng = np.random.default_rng(seed)
    escapes = []
    for _ in range(n):
        p = random_problem(rng)
        d0 = root_bound(p)
        roots = find_roots(p)
        out = [r.eta for r in roots if abs(r.eta) > d0]
        for side in (1.0, -1.0):
            g = side * np.linspace(d0 * (1 + 1e-9), 4 * d0, 8192)
            v = f_eval(p, g)
            if np.any(np.sign(v[:-1]) != np.sign(v[1:])) or np.any(v == 0):
                out.append(float(side * 4 * d0))
        if out:
            escapes.append({"q0": p.q0, "q1": p.q1, "c": p.c, "eta": out})
    return _result(i, "root confinement", not escapes, len(escapes), 0, n=n, escapes=escapes[:5])


def check_parity(n=500, seed=4, i=4):
    rng = np.random.default_rng(seed)
    fails, excluded, done = [], 0, 0
    while done < n:
        p = random_problem(rng)
        if any(r.degenerate for r in find_roots(p)):
            excluded += 1
            continue
        rep = parity_report(p)
        done += 1
        if not (rep.both_odd and rep.sign_alternation):
            fails.append({"q0": p.q0, "q1": p.q1, "c": p.c, "report": asdict(rep)})
    return _result(i, "parity and sign alternation", not fails, len(fails), 0, n=n,
                   degenerate_excluded=excluded, failures=fails[:5])


def _criterion_problems(n_random=200, seed=2):
    probs = [TwoBoostProblem(UNIT_Q0, UNIT_Q1, c) for c in FIGURE_COUNTS]
    rng = np.random.default_rng(seed)
    probs += [uniqueness_problem(rng) for _ in range(n_random)]
    return probs


def check_certificates(n_random=200, i=5):
    worst = {"boundary": 0.0, "energy": 0.0, "ode": 0.0}
    n = 0
    for p in _criterion_problems(n_random):
        for r in find_roots(p):
            ch = chord_from_eta(p, r.eta, 256)
            n += 1
            for k in worst:
                worst[k] = max(worst[k], ch.residuals[k])
    tol = {"boundary": BOUNDARY_TOL, "energy": ENERGY_TOL, "ode": ODE_TOL}
    ok = all(worst[k] <= tol[k] for k in tol)
    return _result(i, "chord certificates at N=256", ok, worst, tol, n_chords=n)


def check_maslov(i=6):
    free = sorted(maslov_transverse(ch).mu_tr for ch in free_chords((0.0, 0.0), (1.0, 1.0), 1.0))
    cop = {}
    for c in (1.0, 0.5):
        p = TwoBoostProblem(UNIT_Q0, UNIT_Q1, c)
        pos = [r.eta for r in find_roots(p) if r.eta > 0]
        cop[str(c)] = [str(maslov_transverse(chord_from_eta(p, e)).mu_tr) for e in pos]
    ok = free == [Fraction(-1, 2), Fraction(1, 2)] and all(v == ["1/2"] for v in cop.values())
    return _result(i, "transverse index anchors", ok,
                   {"free": [str(m) for m in free], "copernican": cop},
                   {"free": ["-1/2", "1/2"], "copernican": "1/2", "equality": "exact"})


def check_scaling(i=7):
    detail = {}
    ok = True
    worst_trip = 0.0
    for d in (0.01, 0.1, 0.5):
        g = g_delta_analysis(UNIT_Q0, UNIT_Q1, d)
        ch = scaled_chord(UNIT_Q0, UNIT_Q1, d, g.eta_delta)
        img = scaling_map(ch, d)
        back = inverse_scaling_map(img, d)
        trip = float(np.max(np.abs(back.samples - ch.samples)))
        worst_trip = max(worst_trip, trip)
        in_bounds = g.lower <= g.eta_delta <= g.upper
        energy_ok = abs(img.c - 1.0 / d) <= 1e-12 * (1.0 / d)
        good = ch.certified() and img.certified() and in_bounds and energy_ok and trip <= 1e-12
        ok &= good
        detail[str(d)] = {"eta_delta": g.eta_delta, "lower": g.lower, "upper": g.upper,
                          "round_trip": trip, "certified": bool(ch.certified() and img.certified())}
    g = g_delta_analysis(UNIT_Q0, UNIT_Q1, 1e-3)
    lim = math.sqrt(2.0) / math.sqrt(2.0)
    conv = abs(g.eta_delta - lim)
    ok &= conv <= 1e-4
    return _result(i, "scaling bijection and kinetic limit", ok,
                   {"round_trip": worst_trip, "limit_error": conv},
                   {"round_trip": 1e-12, "limit_error": 1e-4}, per_delta=detail)


def check_asymptotic(i=8):
    cs = [0.2 / 2 ** k for k in range(7)]
    rows = []
    for c in cs:
        npos = sum(r.eta > 0 for r in find_roots(TwoBoostProblem(UNIT_Q0, UNIT_Q1, c)))
        lb = asymptotic_lower_bound(1.0, 1.0, math.pi / 2, c)
        rows.append({"c": c, "n_plus": npos, "lower_bound": lb})
    counts = [r["n_plus"] for r in rows]
    mono = all(a <= b for a, b in zip(counts, counts[1:])) and counts[-1] > counts[0]
    below = all(r["lower_bound"] <= r["n_plus"] for r in rows)
    at20 = next(r for r in rows if abs(r["c"] - 0.05) < 1e-15)
    ok = mono and below and at20["lower_bound"] == 1 and at20["n_plus"] == 5
    return _result(i, "asymptotic count", ok, rows,
                   {"lower_bound<=n_plus": True, "monotone": True, "c=1/20": [1, 5]})


def check_shooting_oracle(n=50, seed=9, i=9):
    rng = np.random.default_rng(seed)
    fails, worst = [], 0.0
    for _ in range(n):
        p = random_problem(rng, c_range=(0.3, 2.0), q_max=1.5)
        ref = [r.eta for r in find_roots(p)]
        got = [ch.eta for ch in shoot(p, None).chords]
        if len(ref) != len(got):
            fails.append({"q0": p.q0, "q1": p.q1, "c": p.c, "closed": ref, "shot": got})
            continue
        err = max((abs(a - b) for a, b in zip(ref, got)), default=0.0)
        worst = max(worst, err)
        if err > 1e-8:
            fails.append({"q0": p.q0, "q1": p.q1, "c": p.c, "error": err})
    return _result(i, "shooting against closed form", not fails,
                   {"max_eta_error": worst, "count_mismatches": len(fails)},
                   {"eta": 1e-8, "count": "exact"}, n=n, failures=fails[:5])


CUTOFF_CASES = (("0.1/r^3", 0.1, 3.0), ("0.2/r^2", 0.2, 2.0))


def check_cutoff(i=10, mutate_beta=False):
    """Trap set, class-H membership and equality of chord sets for both potentials.

    ``mutate_beta`` flips the sign of the cutoff slope; the suite must then
    fail with a trap-set witness.
    """
    t0 = time.perf_counter()
    detail = {}
    ok = True
    shot = {}
    for name, a, al in CUTOFF_CASES:
        V = RadialPowerPotential(a, al, 1.0)
        prob = TwoBoostProblem(UNIT_Q0, UNIT_Q1, 1.0)
        spec = cutoff_spec(V, 1.0, UNIT_Q0, UNIT_Q1)
        if mutate_beta:
            spec = replace(spec, beta=-spec.beta)
        trap = trap_set_check(spec, V)
        d = {"trap_passed": trap.passed, "trap_margin": trap.min_margin,
             "trap_witnesses": (trap.violations + trap.support_violations)[:3]}
        good = trap.passed and trap.min_margin > 0
        if good:
            mem = cutoff_membership(spec, V, GridSpec())
            cmp = compare_crit_sets(prob, V, spec)
            d.update({"class_H": mem.member, "c_estimate": mem.c_estimate,
                      "matched": len(cmp.matched), "only_H": [ch.eta for ch in cmp.only_H],
                      "only_H1": [ch.eta for ch in cmp.only_H1],
                      "index_mismatch": cmp.index_mismatch})
            good = mem.member and not cmp.only_H and not cmp.only_H1
            shot[name] = (V, [ch for pair in cmp.matched for ch in pair])
        ok &= good
        detail[name] = d
    dt = time.perf_counter() - t0
    ok &= dt < 30.0
    res = _result(i, "cutoff verification", ok, {"runtime_s": dt},
                  {"trap_margin": "> 0", "only_H/only_H1": "empty", "runtime_s": 30.0}, **detail)
    res.detail["_shot"] = shot
    return res


def check_bounds(crit10=None, n_random=200, i=11):
    bad = []
    n = 0
    for p in _criterion_problems(n_random):
        m = p.c * (1 + 1e-9)
        box = knm_box(p.q0, p.q1, 0, m)
        H = CopernicanH0()
        for r in find_roots(p):
            ch = chord_from_eta(p, r.eta, 256)
            n += 1
            h_action = action_eval(DiscretizedPath.from_chord(ch), ch.eta, H, p.c)
            inbox = box.contains(ch.samples, tol=1e-9)
            eb = eta_bound_small_gradient(p.c, abs(h_action))
            if not inbox or abs(ch.eta) > eb:
                bad.append({"q0": p.q0, "q1": p.q1, "c": p.c, "eta": ch.eta,
                            "in_box": inbox, "eta_bound": eb, "action": h_action})
    shot_out = []
    n_shot = 0
    if crit10 is not None:
        for name, (V, chs) in crit10.detail.get("_shot", {}).items():
            cb = chord_radius_bound(V, 1.0, UNIT_Q0, UNIT_Q1)
            for ch in chs:
                n_shot += 1
                if not cb.contains(ch.samples):
                    shot_out.append({"potential": name, "eta": ch.eta})
    ok = not bad and not shot_out and (crit10 is None or n_shot > 0)
    return _result(i, "bound containment", ok,
                   {"closed_violations": len(bad), "shot_violations": len(shot_out)}, 0,
                   n_chords=n, n_shot=n_shot, failures=(bad + shot_out)[:5])


def check_constants(i=12):
    bc = window_constants(-1.0, 1.0, 1.0, 1.0, 0.0, 0.0)
    y_hand = 1.5 * (1.0 + 1.0 / math.sqrt(2.0) + 2.0)
    nov = (novikov_window_ok(3.0, 1.0, 2.0), novikov_window_ok(3.0 + 1e-9, 1.0, 2.0),
           novikov_window_ok(10.0, 1.0, 2.0))
    hom = (homotopy_admissible(1.0 / 6.0, 1.0, 1.0), homotopy_admissible(1.0 / 6.0 + 1e-12, 1.0, 1.0))
    construction = []
    for c in (0.05, 0.2, 1.0, 5.0):
        dhs = 2.0 * c / 50.0
        construction.append(homotopy_admissible(dhs, c, math.sqrt(1.0 / (6.0 * c))))
    ok = (bc.y_frak == y_hand and nov == (True, False, False) and hom == (True, False)
          and all(construction))
    return _result(i, "constant calculator", ok,
                   {"y_frak": bc.y_frak, "novikov": list(nov), "homotopy": list(hom),
                    "construction": construction},
                   {"y_frak": y_hand, "novikov": [True, False, False], "homotopy": [True, False],
                    "construction": "all admissible"})


SUITES = {
    "default": tuple(range(1, 13)),
    "figures": (1,),
    "cutoff": (10,),
    "fast": (1, 6, 7, 8, 12),
}


def run_suite(name: str = "default", mutate_beta: bool = False) -> list:
    """Run the checks of a suite in criterion order."""
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    ids = SUITES[name]
    out, c10 = [], None
    table = {1: check_figures, 2: check_uniqueness, 3: check_confinement, 4: check_parity,
             5: check_certificates, 6: check_maslov, 7: check_scaling, 8: check_asymptotic,
             9: check_shooting_oracle, 12: check_constants}
    for i in ids:
        if i == 10:
            c10 = check_cutoff(mutate_beta=mutate_beta)
            out.append(c10)
        elif i == 11:
            out.append(check_bounds(c10))
        else:
            out.append(table[i]())
    for r in out:
        r.detail.pop("_shot", None)
    return out
