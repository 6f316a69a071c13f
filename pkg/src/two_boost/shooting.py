"""Chords of H0 - V (or any Hamiltonian of the same shape) by shooting.

Unknowns are an angle psi on the circle of momenta over q0 lying in the
energy level, and the multiplier eta.  Newton's method drives the
projected endpoint of the time-eta trajectory onto q1.
"""
from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _backend
from ._parallel import n_threads, pmap  # noqa: F401  (n_threads re-exported)
from .chord_solver import (BOUNDARY_TOL, Chord, TwoBoostProblem, find_roots,
                           initial_momentum, root_bound)
from .hamiltonians import CopernicanH0, Hamiltonian, PerturbedHamiltonian, Potential, ZeroPotential

log = logging.getLogger(__name__)


class IntegrationError(RuntimeError):
    pass


class NoIntersectionError(ValueError):
    """The fiber over q does not meet the energy level."""


@dataclass(frozen=True)
class IntegratorConfig:
    """Adaptive embedded Runge-Kutta 4(5); the 4th-order solution is propagated."""

    atol: float = 1e-14
    rtol: float = 1e-14
    max_steps: int = 2_000_000

    def energy_tol(self, c: float) -> float:
        return 1e-8 * (1.0 + abs(c))


NEWTON_CFG = IntegratorConfig(atol=1e-12, rtol=1e-12)
COARSE_CFG = IntegratorConfig(atol=1e-9, rtol=1e-9)
COARSE_SWITCH = 1e-6


@dataclass
class Trajectory:
    samples: np.ndarray
    steps: int
    energy_drift: float


def integrate(H: Hamiltonian, x0, T: float, cfg: IntegratorConfig = IntegratorConfig(),
              n_out: int = 2, fixed_steps: int = 0) -> Trajectory:
    """Flow x0 for time T under X_H; samples at ``n_out`` uniform times."""
    x0 = np.asarray(x0, dtype=float)
    ks = H.kernel_spec
    if ks is not None:
        out, steps, status = _backend.kernel_integrate(ks[0], ks[1], x0, float(T), n_out,
                                                       cfg.atol, cfg.rtol, cfg.max_steps,
                                                       fixed_steps)
    else:
        fn = lambda y: H.field(np.asarray(y))
        out, steps, status = _backend.integrate_field(fn, x0, float(T), n_out, cfg.atol,
                                                      cfg.rtol, cfg.max_steps, fixed_steps)
    if status != 0:
        raise IntegrationError(
            {1: "max_steps exceeded", 2: "step size underflow", 3: "non-finite state"}[status])
    e = H.value(out)
    return Trajectory(samples=out, steps=int(steps), energy_drift=float(np.max(np.abs(e - e[0]))))


def energy_circle(q, c: float, V: Optional[Potential] = None):
    """Momenta over q with H0 - V = c: p(psi) = -J q + rho (cos psi, sin psi).

    Returns ``(p_of_psi, centre, rho)``.
    """
    q = np.asarray(q, dtype=float)
    v = 0.0 if V is None else float(V.value_q(q))
    rad = q @ q + 2.0 * (c + v)
    if not rad > 0:
        raise NoIntersectionError("the fiber over q misses the energy level")
    rho = math.sqrt(rad)
    centre = np.array([-q[1], q[0]])

    def p_of_psi(psi):
        return centre + rho * np.array([math.cos(psi), math.sin(psi)])

    return p_of_psi, centre, rho


def psi_of_momentum(q, p, c: float, V: Optional[Potential] = None) -> float:
    _, centre, _ = energy_circle(q, c, V)
    d = np.asarray(p, dtype=float) - centre
    return float(math.atan2(d[1], d[0]))


@dataclass(frozen=True)
class ShootOptions:
    n_psi: int = 64
    max_iter: int = 40
    fd_rel: float = 1e-7
    dedupe: float = 1e-6
    tol_residual: float = 1e-11
    eta_cap_factor: float = 3.0
    basin_radius: float = 1e-4
    min_abs_eta: float = 1e-6
    max_halvings: int = 8
    stall_iter: int = 12
    stall_residual: float = 1e-2


@dataclass
class ShootResult:
    chords: list
    diagnostics: list = field(default_factory=list)
    n_seeds: int = 0


def _resolve(prob: TwoBoostProblem, V, hamiltonian):
    if hamiltonian is not None:
        return hamiltonian
    if V is None or isinstance(V, ZeroPotential):
        return CopernicanH0()
    return PerturbedHamiltonian(V)


def closed_form_seeds(prob: TwoBoostProblem) -> list:
    """(psi, eta) of the chords of H0 itself; exact seeds when V vanishes."""
    out = []
    for r in find_roots(prob):
        p0 = initial_momentum(prob.q0a, prob.q1a, r.eta)
        out.append((psi_of_momentum(prob.q0a, p0, prob.c), r.eta))
    return out


def default_seeds(prob: TwoBoostProblem, n_psi: int = 64) -> list:
    """Closed-form pairs plus a grid of n_psi angles times eta seeds.

    The eta seeds are the H0 roots together with +-k pi/2 for
    k = 1 .. 2 ceil(2 delta0 / pi).
    """
    exact = closed_form_seeds(prob)
    etas = [e for _, e in exact]
    kmax = 2 * math.ceil(2 * root_bound(prob) / math.pi)
    etas += [s * k * math.pi / 2 for k in range(1, kmax + 1) for s in (1.0, -1.0)]
    psis = np.linspace(-math.pi, math.pi, n_psi, endpoint=False)
    return exact + [(float(p), float(e)) for e in etas for p in psis]


def _wrap(a):
    return (a + math.pi) % (2 * math.pi) - math.pi


class _Shooter:
    def __init__(self, prob, H, V, cfg, opts):
        self.prob, self.H, self.cfg, self.opts = prob, H, cfg, opts
        self.p_of_psi, _, _ = energy_circle(prob.q0a, prob.c, V)
        self.q0, self.q1 = prob.q0a, prob.q1a
        self.eta_cap = opts.eta_cap_factor * max(root_bound(prob), 1.0) + 10.0

    def start(self, psi):
        return np.concatenate([self.q0, self.p_of_psi(psi)])

    def end(self, psi, eta, cfg):
        return integrate(self.H, self.start(psi), eta, cfg).samples[-1]

    def residual(self, psi, eta, cfg):
        xe = self.end(psi, eta, cfg)
        return xe[:2] - self.q1, xe

    def newton(self, psi, eta, cfg, found=None, lock=None, coarse=None):
        """Damped Newton from (psi, eta).

        Iterates use ``coarse`` integration while the residual exceeds
        COARSE_SWITCH, then ``cfg``.  Returns ``(z, message)``.
        """
        o = self.opts
        use = cfg if coarse is None else coarse
        try:
            F, xe = self.residual(psi, eta, use)
        except IntegrationError as exc:
            return None, f"integration failed at seed: {exc}"
        nF = np.linalg.norm(F)
        for it in range(o.max_iter):
            if use is not cfg and nF <= COARSE_SWITCH:
                use = cfg
                F, xe = self.residual(psi, eta, use)
                nF = np.linalg.norm(F)
            if use is cfg and nF <= o.tol_residual:
                return (psi, eta), None
            if it >= o.stall_iter and nF > o.stall_residual:
                return None, "no convergence"
            hp = o.fd_rel * (1.0 + abs(psi))
            he = o.fd_rel * (1.0 + abs(eta))
            try:
                Fp, _ = self.residual(psi + hp, eta, use)
                # the eta column continues the same trajectory for a short time
                xe2 = integrate(self.H, xe, he, use).samples[-1]
            except IntegrationError as exc:
                return None, f"integration failed: {exc}"
            Jm = np.column_stack([(Fp - F) / hp, (xe2[:2] - xe[:2]) / he])
            det = Jm[0, 0] * Jm[1, 1] - Jm[0, 1] * Jm[1, 0]
            if abs(det) <= 1e-13 * max(np.max(np.abs(Jm)) ** 2, 1e-300):
                return None, "singular Jacobian"
            dz = -np.array([Jm[1, 1] * F[0] - Jm[0, 1] * F[1],
                            -Jm[1, 0] * F[0] + Jm[0, 0] * F[1]]) / det
            lam = 1.0
            for _ in range(o.max_halvings + 1):
                psi_n, eta_n = psi + lam * dz[0], eta + lam * dz[1]
                Fn = None
                if abs(eta_n) <= self.eta_cap:
                    try:
                        Fn, xn = self.residual(psi_n, eta_n, use)
                    except IntegrationError:
                        Fn = None
                if Fn is not None and np.linalg.norm(Fn) < nF:
                    break
                lam *= 0.5
            else:
                if use is cfg and nF <= 1e3 * o.tol_residual:
                    return (psi, eta), None
                return None, "line search failed"
            psi, eta, F, xe, nF = _wrap(psi_n), eta_n, Fn, xn, np.linalg.norm(Fn)
            if found is not None and it >= 2:
                with lock:
                    for (fp, fe) in found:
                        if abs(_wrap(psi - fp)) + abs(eta - fe) < o.basin_radius:
                            return (fp, fe), "joined a known solution"
        if use is cfg and nF <= o.tol_residual:
            return (psi, eta), None
        return None, "no convergence"


def _match(a, b, tol):
    return abs(_wrap(a[0] - b[0])) + abs(a[1] - b[1]) < tol


def _polish(sh: _Shooter, z, cfg):
    # restart from a rounded point so the result does not depend on seed order
    z0 = (round(z[0], 8), round(z[1], 8))
    out, _ = sh.newton(z0[0], z0[1], cfg)
    return out if out is not None else z


def shot_chord(prob: TwoBoostProblem, H: Hamiltonian, V, psi: float, eta: float,
               cfg: IntegratorConfig = IntegratorConfig(), n_samples: int = 256) -> Chord:
    """Sample and certify the trajectory attached to a converged (psi, eta)."""
    p_of_psi, _, _ = energy_circle(prob.q0a, prob.c, V)
    x0 = np.concatenate([prob.q0a, p_of_psi(psi)])
    tr = integrate(H, x0, eta, cfg, n_out=n_samples)
    xs = tr.samples
    # ODE residual: re-integrate every sampling interval with fixed steps
    seg = eta / (n_samples - 1)
    ode = 0.0
    for k in range(n_samples - 1):
        y = integrate(H, xs[k], seg, cfg, n_out=2, fixed_steps=16).samples[-1]
        ode = max(ode, float(np.max(np.abs(y - xs[k + 1]))))
    res = {
        "boundary": float(max(np.max(np.abs(xs[0, :2] - prob.q0a)),
                              np.max(np.abs(xs[-1, :2] - prob.q1a)))),
        "energy": float(np.max(np.abs(H.value(xs) - prob.c))),
        "ode": ode,
    }

    def sampler(n, h=1e-6):
        ys = integrate(H, x0, eta, cfg, n_out=n).samples
        phis = np.empty((n, 4, 4))
        for i in range(4):
            e = np.zeros(4)
            e[i] = h
            plus = integrate(H, x0 + e, eta, cfg, n_out=n).samples
            minus = integrate(H, x0 - e, eta, cfg, n_out=n).samples
            phis[:, :, i] = (plus - minus) / (2 * h)
        return ys, phis

    return Chord(eta=float(eta), q0=prob.q0a, q1=prob.q1a, c=prob.c, samples=xs, kind="shot",
                 residuals=res, hamiltonian=H, psi=float(psi),
                 extra={"sampler": sampler, "energy_drift": tr.energy_drift})


def _solve_all(sh: _Shooter, seeds, cfg, opts, polish_cfg):
    found, diags = [], []
    lock = threading.Lock()

    def run(seed):
        z, msg = sh.newton(seed[0], seed[1], NEWTON_CFG, found, lock, coarse=COARSE_CFG)
        if z is not None and abs(z[1]) >= opts.min_abs_eta:
            with lock:
                if not any(_match(z, f, opts.dedupe) for f in found):
                    found.append(z)
        elif msg and msg not in ("no convergence", "line search failed"):
            diags.append({"seed": seed, "message": msg})
            if msg == "singular Jacobian":
                log.info("seed %s skipped: singular Jacobian", seed)
        return None

    pmap(run, seeds)
    polished = []
    for z in found:
        zp = _polish(sh, z, polish_cfg)
        if abs(zp[1]) >= opts.min_abs_eta and not any(_match(zp, f, opts.dedupe) for f in polished):
            polished.append(zp)
    polished.sort(key=lambda z: z[1])
    return polished, diags


def shoot(prob: TwoBoostProblem, V: Optional[Potential] = None, seeds: Optional[Sequence] = None,
          cfg: IntegratorConfig = IntegratorConfig(), opts: ShootOptions = ShootOptions(),
          hamiltonian: Optional[Hamiltonian] = None, n_samples: int = 256) -> ShootResult:
    """Chords of ``hamiltonian`` (default H0 - V) at energy c from q0 to q1.

    The momentum circle over q0 is taken from H0 - V; it is also the level
    set of any Hamiltonian that agrees with H0 - V near that circle.
    Newton runs in a looser tolerance, converged points are polished in
    ``cfg``, deduplicated and sorted by eta.
    """
    H = _resolve(prob, V, hamiltonian)
    seeds = default_seeds(prob, opts.n_psi) if seeds is None else list(seeds)
    if not seeds:
        raise ValueError("at least one seed is required")
    sh = _Shooter(prob, H, V, cfg, opts)
    zs, diags = _solve_all(sh, seeds, None, opts, cfg)
    chords = [shot_chord(prob, H, V, z[0], z[1], cfg, n_samples) for z in zs]
    if not chords:
        diags.append({"message": "no seed converged"})
    return ShootResult(chords=chords, diagnostics=diags, n_seeds=len(seeds))


@dataclass
class CritComparison:
    matched: list
    only_H: list
    only_H1: list
    index_mismatch: list = field(default_factory=list)
    cross_seeded: int = 0


def compare_crit_sets(prob: TwoBoostProblem, V: Potential, spec, seeds: Optional[Sequence] = None,
                      cfg: IntegratorConfig = IntegratorConfig(), opts: ShootOptions = ShootOptions(),
                      with_index: bool = True) -> CritComparison:
    """Shoot the same seeds for H0 - V and for the cutoff H0 - phi V and match the chords.

    A chord found for only one Hamiltonian is used as a seed for the other
    before it is declared unmatched, which separates solver misses from
    genuine differences.  Transverse indices are reported for both members
    of each matched pair; disagreements are listed, not asserted.
    """
    from .potential_cutoff import CutoffHamiltonian
    from .action_index import maslov_transverse
    H = PerturbedHamiltonian(V)
    H1 = CutoffHamiltonian(spec, V)
    seeds = default_seeds(prob, opts.n_psi) if seeds is None else list(seeds)
    sh, sh1 = _Shooter(prob, H, V, cfg, opts), _Shooter(prob, H1, V, cfg, opts)
    za, _ = _solve_all(sh, seeds, None, opts, cfg)
    zb, _ = _solve_all(sh1, seeds, None, opts, cfg)
    cross = 0

    def cross_seed(src, dst_list, dst_shooter):
        nonlocal cross
        for z in src:
            if not any(_match(z, w, opts.dedupe) for w in dst_list):
                cross += 1
                w, _ = dst_shooter.newton(z[0], z[1], cfg)
                if w is not None and not any(_match(w, u, opts.dedupe) for u in dst_list):
                    dst_list.append(w)

    cross_seed(za, zb, sh1)
    cross_seed(zb, za, sh)
    matched, only_a = [], []
    rest_b = list(zb)
    for z in sorted(za, key=lambda z: z[1]):
        hit = next((w for w in rest_b if _match(z, w, opts.dedupe)), None)
        if hit is None:
            only_a.append(shot_chord(prob, H, V, z[0], z[1], cfg))
        else:
            rest_b.remove(hit)
            matched.append((shot_chord(prob, H, V, z[0], z[1], cfg),
                            shot_chord(prob, H1, V, hit[0], hit[1], cfg)))
    only_b = [shot_chord(prob, H1, V, w[0], w[1], cfg) for w in rest_b]
    mism = []
    if with_index:
        for a, b in matched:
            ma, mb = maslov_transverse(a), maslov_transverse(b)
            a.extra["maslov"] = ma
            b.extra["maslov"] = mb
            if ma.mu_tr != mb.mu_tr:
                mism.append((a.eta, str(ma.mu_tr), str(mb.mu_tr)))
    return CritComparison(matched=matched, only_H=only_a, only_H1=only_b,
                          index_mismatch=mism, cross_seeded=cross)
