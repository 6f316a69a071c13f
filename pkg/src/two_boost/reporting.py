"""Chord records and their CSV, JSON and SVG renderings.

Floats are written with 17 significant digits and fields in a fixed order,
so identical inputs give byte-identical output.
"""
from __future__ import annotations

import io
import json
from fractions import Fraction

import numpy as np

from .action_index import DiscretizedPath, action_eval, maslov_transverse

CSV_HEADER = "eta,f_value,f_prime,action,maslov_tr,res_boundary,res_energy,res_ode"
FIELDS = CSV_HEADER.split(",")
SVG_POINTS = 512
SVG_MARGIN = 0.10
SVG_SIZE = 640


def fmt(x) -> str:
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if x is None:
        return ""
    return format(float(x), ".17g")


def chord_record(chord, with_index: bool = True) -> dict:
    """Flat record of a chord with action, index and residual certificates."""
    path = DiscretizedPath.from_chord(chord)
    action = action_eval(path, chord.eta, chord.hamiltonian, chord.c)
    mu = None
    if with_index:
        m = chord.extra.get("maslov")
        mu = (m if m is not None else maslov_transverse(chord)).mu_tr
    r = chord.residuals
    return {
        "eta": chord.eta,
        "f_value": chord.f_value,
        "f_prime": chord.f_prime,
        "action": action,
        "maslov_tr": mu,
        "res_boundary": r.get("boundary"),
        "res_energy": r.get("energy"),
        "res_ode": r.get("ode"),
        "n_samples": chord.n_samples,
    }


def records_to_csv(records) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for rec in records:
        buf.write(",".join(fmt(rec[k]) for k in FIELDS) + "\n")
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, Fraction):
        return fmt(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return fmt(v) if not np.isfinite(v) else float(fmt(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def to_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=False) + "\n"


_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2",
           "#7f7f7f", "#bcbd22", "#17becf"]


def chords_svg(groups, q0, q1, title: str = "") -> str:
    """Polylines of chord projections to the q-plane.

    ``groups`` is a list of ``(c, [chords])``.  Each chord is drawn with
    512 points; the view box is the bounding box of all curves and
    endpoints with a 10% margin.
    """
    curves = []
    for c, chs in groups:
        for ch in chs:
            curves.append((c, ch.eta, ch.path(SVG_POINTS)[:, :2]))
    pts = [np.asarray(q0, float)[None], np.asarray(q1, float)[None]] + [cv[2] for cv in curves]
    allp = np.concatenate(pts)
    lo, hi = allp.min(axis=0), allp.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    lo = lo - SVG_MARGIN * span
    span = span * (1 + 2 * SVG_MARGIN)
    scale = SVG_SIZE / max(span)
    w, h = span * scale

    def tx(p):
        # flip y so the plane is drawn with the usual orientation
        return (p[0] - lo[0]) * scale, (lo[1] + span[1] - p[1]) * scale

    out = io.StringIO()
    out.write(f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.3f}" height="{h + 20 * (len(curves) + 1):.3f}" '
              f'viewBox="0 0 {w:.3f} {h + 20 * (len(curves) + 1):.3f}">\n')
    if title:
        out.write(f"<title>{title}</title>\n")
    out.write(f'<rect x="0" y="0" width="{w:.3f}" height="{h:.3f}" fill="white" stroke="#cccccc"/>\n')
    for i, (c, eta, q) in enumerate(curves):
        col = _COLORS[i % len(_COLORS)]
        pts_s = " ".join("%.4f,%.4f" % tx(p) for p in q)
        out.write(f'<polyline fill="none" stroke="{col}" stroke-width="1.5" points="{pts_s}"/>\n')
    for name, q in (("q0", q0), ("q1", q1)):
        x, y = tx(np.asarray(q, float))
        out.write(f'<circle cx="{x:.4f}" cy="{y:.4f}" r="4" fill="black"/>\n')
        out.write(f'<text x="{x + 6:.4f}" y="{y - 6:.4f}" font-size="12">{name}</text>\n')
    for i, (c, eta, _) in enumerate(curves):
        col = _COLORS[i % len(_COLORS)]
        y = h + 18 * (i + 1)
        out.write(f'<line x1="8" y1="{y - 4:.1f}" x2="28" y2="{y - 4:.1f}" stroke="{col}" stroke-width="2"/>\n')
        out.write(f'<text x="34" y="{y:.1f}" font-size="12">c = {c:.6g}, eta = {eta:.6g}</text>\n')
    out.write("</svg>\n")
    return out.getvalue()
