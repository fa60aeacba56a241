"""Experiment drivers checking the solver's analytic estimates.

Norms here are grid quadrature: the flat-torus volume form has constant
density, so the discrete L^p norm is the h^{2n}-weighted power sum and the
sup norm is a plain max.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import InputError
from .geometry import ScalarField, complex_hessian_array, gradient_sup_array
from .hessop import sk_table_of_state, state_matrices
from .solver import SolverConfig, solve_normalized

__all__ = [
    "MaxPrincipleReport",
    "check_max_principle",
    "StabilityRecord",
    "stability_sweep",
    "stability_records_csv",
    "DecayReport",
    "sublevel_volume_decay",
    "laplacian_gradient_ratio",
    "lp_norm",
]


def lp_norm(u, p):
    """Discrete L^p norm with h^{2n} quadrature weights."""
    h = u.grid.h
    weight = h ** (2 * u.grid.n)
    return float((np.sum(np.abs(u.data) ** p) * weight) ** (1.0 / p))


@dataclass
class MaxPrincipleReport:
    ok: bool
    upper_margin: float  # (-inf H) - sup u, should be >= -tol
    lower_margin: float  # inf u - (-sup H), should be >= -tol


def check_max_principle(u, H, tol):
    """sup u <= -inf H and inf u >= -sup H, with slack tol."""
    upper = (-H.inf()) - u.sup()
    lower = u.inf() - (-H.sup())
    return MaxPrincipleReport(
        ok=(upper >= -tol and lower >= -tol),
        upper_margin=upper,
        lower_margin=lower,
    )


@dataclass
class StabilityRecord:
    delta: float
    p: float
    a: float
    lhs: float  # ||u - v||_inf
    rhs: float  # ||f - g||_p^a
    ratio: float
    legal: bool  # a < 1/(m+1) and p > n/m

    def to_dict(self):
        return asdict(self)


def stability_sweep(f, psi, deltas, p, a, omega, m, cfg=None,
                    eps_schedule=(1.0, 0.3, 0.1, 0.03)):
    """Perturb f along psi and record the stability ratios.

    Each delta solves the normalized equation for g = f (1 + delta psi); the
    base solve for f is shared.  Illegal exponents are allowed for
    exploratory runs and are just flagged on the records.
    """
    cfg = cfg or SolverConfig()
    if p <= 0 or a <= 0:
        raise InputError("exponents must be positive")
    n = omega.grid.n
    legal = (a < 1.0 / (m + 1)) and (p > n / m)
    fdata = f.data
    if float(np.min(fdata)) <= 0:
        raise InputError("f must be strictly positive")

    u_base, _, _ = solve_normalized(f, omega, m, eps_schedule, cfg)
    records = []
    for delta in deltas:
        gdata = fdata * (1.0 + delta * psi.data)
        if float(np.min(gdata)) <= 0:
            raise InputError(f"perturbed density nonpositive at delta={delta}")
        g = ScalarField(f.grid, gdata)
        if delta == 0:
            records.append(StabilityRecord(delta=0.0, p=p, a=a, lhs=0.0,
                                           rhs=0.0, ratio=0.0, legal=legal))
            continue
        v, _, _ = solve_normalized(g, omega, m, eps_schedule, cfg)
        lhs = float(np.max(np.abs(u_base.data - v.data)))
        rhs = lp_norm(ScalarField(f.grid, fdata - gdata), p) ** a
        ratio = lhs / rhs if rhs > 0 else 0.0
        records.append(StabilityRecord(delta=float(delta), p=p, a=a,
                                       lhs=lhs, rhs=rhs, ratio=ratio, legal=legal))
    return records


def stability_records_csv(records, path):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["delta", "p", "a", "lhs", "rhs", "ratio", "legal"]
        )
        writer.writeheader()
        for rec in records:
            writer.writerow(rec.to_dict())


@dataclass
class DecayReport:
    rows: list  # (t, fraction, t * fraction)
    bounded: bool
    bound_ratio: float

    def to_json(self):
        return json.dumps(
            {"rows": self.rows, "bounded": self.bounded,
             "bound_ratio": self.bound_ratio},
            sort_keys=True,
        )


def sublevel_volume_decay(phi, t_list, omega, m, tol=1e-9):
    """Grid-measure fraction of {phi < -t} and the t * fraction diagnostic.

    Requires sup phi = 0 and phi m-subharmonic (closed cone).  The product
    t * fraction must stay within a factor 10 of its maximum over the
    sublist t <= 1, the discrete echo of the C/t sublevel decay.
    """
    if abs(phi.sup()) > tol:
        raise InputError("phi must be normalized to sup phi = 0")
    table = sk_table_of_state(state_matrices(phi.data, omega), omega, m)
    if float(np.min(table[..., 1 : m + 1])) < -tol:
        raise InputError("phi is not (omega,m)-subharmonic on the grid")
    t_list = sorted(float(t) for t in t_list)
    if not t_list or t_list[0] <= 0:
        raise InputError("t values must be positive")
    rows = []
    for t in t_list:
        frac = float(np.mean(phi.data < -t))
        rows.append((t, frac, t * frac))
    reference = max(tf for t, _, tf in rows if t <= 1.0) if any(
        t <= 1.0 for t, _, _ in rows
    ) else max(tf for _, _, tf in rows)
    worst = max(tf for _, _, tf in rows)
    bounded = worst <= 10.0 * reference + tol
    ratio = worst / reference if reference > 0 else (0.0 if worst == 0 else math.inf)
    return DecayReport(rows=rows, bounded=bounded, bound_ratio=ratio)


def laplacian_gradient_ratio(u):
    """sup spectral radius of dd^c u over (1 + sup |grad u|^2).

    Purely diagnostic: the Laplacian-versus-gradient constant of the second
    order estimate is unknown, so this is reported and never asserted.
    """
    hess = complex_hessian_array(u.data, u.grid)
    radius = float(np.max(np.abs(np.linalg.eigvalsh(hess))))
    gsup = gradient_sup_array(u.data, u.grid)
    return radius / (1.0 + gsup**2)
