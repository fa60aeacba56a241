"""Penalized computation of the largest m-subharmonic minorant of an obstacle.

For a smooth obstacle h the envelope is reached through the family

    log sigma_m(w) = (w - h) / eps + log(F_* + eps),

where F is the raw sigma_m value of h itself (a polynomial in the relative
eigenvalues, defined whether or not h is in the cone) and F_* = max(F, 0).
Each eps reuses the Newton core with zeroth-order coefficient 1/eps; the
residual is evaluated in log form throughout, which is what keeps the stiff
small-eps regime free of exponential overflow.  Solutions are warm-started
down the schedule.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .geometry import ScalarField
from .hessop import sigma_m
from .solver import SolveReport, SolverConfig, _continuity_solve, _Equation, _newton

__all__ = ["EnvelopeReport", "msh_envelope", "contact_set"]


@dataclass
class EnvelopeReport:
    eps_path: list  # (eps, SolveReport)
    monotone_violation_sup: float
    contact_fraction: float
    complementarity_sup: float
    complementarity_path: list = field(default_factory=list)
    obstacle_excess_sup: float = 0.0  # max over eps of sup(w_eps - h)
    converged: bool = True
    wallclock: float = 0.0


def contact_set(w, h, tol):
    """Mask of points where the envelope touches the obstacle: h - w <= tol."""
    if w.grid != h.grid:
        raise InputError("fields live on different grids")
    return (h.data - w.data) <= tol


def _complementarity_sup(sigma, h_data, w_data, hscale):
    gap = (h_data - w_data) / hscale
    return float(np.max(np.minimum(sigma, gap)))


def msh_envelope(h, omega, m, eps_schedule, cfg=None):
    """Envelope of the obstacle h via the decreasing penalization schedule.

    Returns the final iterate and an EnvelopeReport.  A Newton failure at
    some eps yields a partial report flagged not converged, carrying the
    last eps that did converge.
    """
    cfg = cfg or SolverConfig()
    if h.grid != omega.grid:
        raise InputError("obstacle and metric live on different grids")
    eps_schedule = [float(e) for e in eps_schedule]
    if not eps_schedule or abs(eps_schedule[0] - 1.0) > 1e-12:
        raise InputError("eps schedule must start at 1")
    if any(e <= 0 for e in eps_schedule) or any(
        b >= a for a, b in zip(eps_schedule, eps_schedule[1:])
    ):
        raise InputError("eps schedule must be positive and strictly decreasing")

    start = time.perf_counter()
    grid = omega.grid
    big_f = sigma_m(h, omega, m).sigma.data
    f_star = np.maximum(big_f, 0.0)
    hscale = max(1.0, float(np.max(np.abs(h.data))))

    eps_path = []
    comp_path = []
    w = None
    eps_cur = None
    excess = 0.0
    violation = 0.0
    converged = True
    pending = list(eps_schedule)
    insertions = 0
    while pending:
        eps = pending[0]
        eq = _Equation(omega, m, q=1.0 / eps)
        harr = -h.data / eps + np.log(f_star + eps)
        trace = []
        if w is None:
            w_eps, t_path, margin, ok, failure = _continuity_solve(eq, harr, cfg, trace)
        else:
            state, iters, ok, failure = _newton(eq, w, harr, cfg, 1.0, trace)
            if ok:
                w_eps, t_path, margin = state.u, [(1.0, iters, state.res_sup)], state.margin
        if not ok and w is not None and insertions < 3 * len(eps_schedule):
            # Warm start rejected: descend more gently through an intermediate
            # penalization strength.  Once successive converged values stop
            # making relative progress the schedule has hit the resolution
            # wall (sigma below stencil cancellation noise off the contact
            # set) and pushing further only burns iterations.
            mid = math.sqrt(eps_cur * eps)
            if mid < 0.99 * eps_cur:
                insertions += 1
                pending.insert(0, mid)
                continue
        report = SolveReport(
            converged=ok,
            t_path=t_path,
            cone_margin_min=margin,
            sup_u=float(np.max(w_eps)),
            inf_u=float(np.min(w_eps)),
            wallclock=0.0,
            trace=trace,
            failure=failure,
        )
        eps_path.append((eps, report))
        if not ok:
            converged = False
            if w is None:
                w = w_eps
            break
        if w is not None:
            # w_eps increases as eps decreases; record any overshoot
            violation = max(violation, float(np.max(w - w_eps)))
        w = w_eps
        eps_cur = eps
        pending.pop(0)
        excess = max(excess, float(np.max(w - h.data)))
        sig = sigma_m(ScalarField(grid, w), omega, m).sigma.data
        comp_path.append((eps, _complementarity_sup(sig, h.data, w, hscale)))

    contact_tol = max(100.0 * cfg.newton_tol, eps_schedule[-1] ** 2)
    w_field = ScalarField(grid, w)
    frac = float(np.mean(contact_set(w_field, h, contact_tol)))
    report = EnvelopeReport(
        eps_path=eps_path,
        monotone_violation_sup=violation,
        contact_fraction=frac,
        complementarity_sup=comp_path[-1][1] if comp_path else math.inf,
        complementarity_path=comp_path,
        obstacle_excess_sup=excess,
        converged=converged,
        wallclock=time.perf_counter() - start,
    )
    return w_field, report
