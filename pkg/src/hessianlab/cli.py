"""Command-line entry point and reproducible experiment bundles.

Field specs use the compact grammar  kind:freq-vector:amplitude  with kind
in {cos, sin}, the frequency vector comma-separated over the real axes
(x_1, y_1, ..., x_n, y_n), and terms joined by '+' or ';'.  Example for
n = 2:  "cos:1,0,0,0:0.5+sin:0,0,0,1:0.25".  A constant offset is a zero
frequency cosine: "cos:0,0,0,0:1".

Configuration may come from a JSON file (--config); explicit flags override
file values.  All outputs land under --out.  Wall-clock timings are printed
but never written into output files, and the echoed configuration omits the
output path itself, so identical (config, seed) pairs reproduce every output
file bit-exactly.

Exit codes: 0 success, 1 convergence failure, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .envelope import msh_envelope
from .errors import InputError
from .experiments import (
    default_density_terms,
    default_direction_terms,
    mms_study,
)
from .geometry import MetricField, ScalarField, TorusGrid, make_field, write_field
from .inequalities import (
    laplacian_gradient_ratio,
    stability_records_csv,
    stability_sweep,
    sublevel_volume_decay,
)
from .solver import SolverConfig, solve_exponential, solve_normalized
from .symfunc import verify_cone_inequalities

_SUBCOMMANDS = ("verify-cone", "solve", "normalized", "envelope", "mms",
                "stability-sweep", "decay")


def parse_field_spec(spec, n):
    """Parse the kind:freqs:amplitude grammar into make_field terms."""
    terms = []
    for chunk in spec.replace(";", "+").split("+"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(":")
        if len(parts) != 3:
            raise InputError(f"bad field term {chunk!r} (want kind:freqs:amplitude)")
        kind, freqs, amp = parts
        try:
            kvec = tuple(int(x) for x in freqs.split(","))
            amp = float(amp)
        except ValueError as exc:
            raise InputError(f"bad field term {chunk!r}") from exc
        if len(kvec) != 2 * n:
            raise InputError(
                f"term {chunk!r} has {len(kvec)} frequencies, expected {2*n}"
            )
        if kind == "cos":
            terms.append((kvec, amp, 0.0))
        elif kind == "sin":
            terms.append((kvec, 0.0, amp))
        else:
            raise InputError(f"unknown field kind {kind!r}")
    if not terms:
        raise InputError("empty field spec")
    return terms


def _parse_float_list(text):
    return [float(x) for x in str(text).split(",") if x != ""]


def _parse_int_list(text):
    return [int(x) for x in str(text).split(",") if x != ""]


def _threads(args):
    if getattr(args, "threads", None):
        return int(args.threads)
    env = os.environ.get("HESSIANLAB_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _solver_config(args):
    kwargs = {}
    for name in ("newton_tol", "krylov_tol"):
        val = getattr(args, name, None)
        if val is not None:
            kwargs[name] = float(val)
    for name in ("max_newton", "t_steps"):
        val = getattr(args, name, None)
        if val is not None:
            kwargs[name] = int(val)
    if getattr(args, "precond", None) is not None:
        kwargs["krylov_precond"] = args.precond
    if getattr(args, "no_cone_guard", False):
        kwargs["cone_guard"] = False
    return SolverConfig(**kwargs)


def _echo_config(args, outdir):
    resolved = {
        k: v for k, v in sorted(vars(args).items())
        if k not in ("out", "config", "func") and v is not None
    }
    path = outdir / "resolved_config.json"
    path.write_text(json.dumps(resolved, indent=2, sort_keys=True) + "\n")


def _write_json(outdir, name, doc):
    (outdir / name).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _grid(args):
    cap = getattr(args, "memory_cap", None)
    return TorusGrid(args.n, args.N, memory_cap=cap if cap else 2 << 30)


def _metric(args, grid):
    scale = getattr(args, "metric_scale", None)
    return MetricField.flat(grid, scale=scale if scale else 1.0)


def _solve_report_doc(report):
    return {
        "converged": report.converged,
        "t_path": [[t, it, res] for t, it, res in report.t_path],
        "cone_margin_min": report.cone_margin_min,
        "sup_u": report.sup_u,
        "inf_u": report.inf_u,
        "failure": report.failure,
    }


def _cmd_verify_cone(args, outdir):
    report = verify_cone_inequalities(
        args.n, args.m, args.samples, args.seed, tol=args.tol,
        workers=_threads(args),
    )
    _write_json(outdir, "report.json", report.to_dict())
    ok = report.all_pass()
    print(f"verify-cone n={args.n} m={args.m}: "
          f"{'all pass' if ok else 'VIOLATIONS'}, theta_hat={report.theta_hat:.6g}")
    return 0 if ok else 1


def _cmd_solve(args, outdir):
    grid = _grid(args)
    omega = _metric(args, grid)
    H = make_field(grid, parse_field_spec(args.H, grid.n))
    u, report = solve_exponential(H, omega, args.m, _solver_config(args))
    write_field(outdir / "u.field", u, kind="u")
    (outdir / "newton_trace.jsonl").write_text(report.trace_jsonl())
    doc = _solve_report_doc(report)
    # diagnostic only: the second-order-vs-gradient constant is unknown
    doc["laplacian_gradient_ratio"] = laplacian_gradient_ratio(u)
    _write_json(outdir, "report.json", doc)
    print(f"solve: converged={report.converged} sup_u={report.sup_u:.6g} "
          f"inf_u={report.inf_u:.6g} wallclock={report.wallclock:.2f}s")
    return 0 if report.converged else 1


def _cmd_normalized(args, outdir):
    grid = _grid(args)
    omega = _metric(args, grid)
    f = make_field(grid, parse_field_spec(args.f, grid.n))
    u, c, report = solve_normalized(
        f, omega, args.m, _parse_float_list(args.eps_schedule), _solver_config(args)
    )
    write_field(outdir / "u.field", u, kind="u")
    doc = {
        "converged": report.converged,
        "c": c,
        "c_estimates": report.c_estimates,
        "c_gaps": report.c_gaps,
        "tol_c": report.tol_c,
        "final_mismatch": report.final_mismatch,
        "sup_u": report.sup_u,
        "inf_u": report.inf_u,
        "eps_path": [[eps, _solve_report_doc(rep)] for eps, rep in report.eps_path],
    }
    _write_json(outdir, "report.json", doc)
    trace = "".join(rep.trace_jsonl() for _, rep in report.eps_path)
    (outdir / "newton_trace.jsonl").write_text(trace)
    print(f"normalized: converged={report.converged} c={c:.8g} "
          f"mismatch={report.final_mismatch:.3g} wallclock={report.wallclock:.2f}s")
    return 0 if report.converged else 1


def _cmd_envelope(args, outdir):
    grid = _grid(args)
    omega = _metric(args, grid)
    h = make_field(grid, parse_field_spec(args.h, grid.n))
    w, report = msh_envelope(
        h, omega, args.m, _parse_float_list(args.eps_schedule), _solver_config(args)
    )
    write_field(outdir / "w.field", w, kind="w")
    doc = {
        "converged": report.converged,
        "monotone_violation_sup": report.monotone_violation_sup,
        "contact_fraction": report.contact_fraction,
        "complementarity_sup": report.complementarity_sup,
        "complementarity_path": report.complementarity_path,
        "obstacle_excess_sup": report.obstacle_excess_sup,
        "eps_path": [[eps, _solve_report_doc(rep)] for eps, rep in report.eps_path],
    }
    _write_json(outdir, "report.json", doc)
    print(f"envelope: converged={report.converged} "
          f"contact_fraction={report.contact_fraction:.4f} "
          f"wallclock={report.wallclock:.2f}s")
    return 0 if report.converged else 1


def _cmd_mms(args, outdir):
    rows, orders = mms_study(
        args.n, args.m, _parse_int_list(args.N_list),
        amplitude=args.amplitude, cfg=_solver_config(args),
    )
    doc = {
        "rows": [
            {"N": r.N, "sup_error": r.sup_error, "final_residual": r.final_residual,
             "newton_iterations": r.newton_iterations, "converged": r.converged}
            for r in rows
        ],
        "observed_orders": orders,
    }
    _write_json(outdir, "report.json", doc)
    for r in rows:
        print(f"mms N={r.N}: sup_error={r.sup_error:.6e} "
              f"residual={r.final_residual:.2e} converged={r.converged}")
    if orders:
        print("observed orders: " + ", ".join(f"{o:.3f}" for o in orders))
    return 0 if all(r.converged for r in rows) else 1


def _cmd_stability_sweep(args, outdir):
    grid = _grid(args)
    omega = _metric(args, grid)
    f_terms = (parse_field_spec(args.f, grid.n) if args.f
               else default_density_terms(grid.n))
    psi_terms = (parse_field_spec(args.psi, grid.n) if args.psi
                 else default_direction_terms(grid.n))
    f = make_field(grid, f_terms)
    psi = make_field(grid, psi_terms)
    records = stability_sweep(
        f, psi, _parse_float_list(args.deltas), args.p, args.a,
        omega, args.m, _solver_config(args),
        eps_schedule=tuple(_parse_float_list(args.eps_schedule)),
    )
    stability_records_csv(records, outdir / "records.csv")
    ratios = [r.ratio for r in records if r.ratio > 0]
    summary = {
        "records": [r.to_dict() for r in records],
        "max_ratio": max(ratios) if ratios else 0.0,
        "min_ratio": min(ratios) if ratios else 0.0,
    }
    _write_json(outdir, "summary.json", summary)
    for r in records:
        print(f"delta={r.delta:g}: lhs={r.lhs:.4e} rhs={r.rhs:.4e} ratio={r.ratio:.4f}")
    return 0


def _cmd_decay(args, outdir):
    grid = _grid(args)
    omega = _metric(args, grid)
    phi = make_field(grid, parse_field_spec(args.phi, grid.n))
    data = phi.data - float(np.max(phi.data))  # normalize sup = 0
    report = sublevel_volume_decay(
        ScalarField(grid, data), _parse_float_list(args.t_list), omega, args.m
    )
    with open(outdir / "table.csv", "w") as fh:
        fh.write("t,fraction,t_fraction\n")
        for t, frac, tf in report.rows:
            fh.write(f"{t!r},{frac!r},{tf!r}\n")
    _write_json(outdir, "summary.json", json.loads(report.to_json()))
    print(f"decay: bounded={report.bounded} ratio={report.bound_ratio:.4f}")
    return 0 if report.bounded else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hessianlab",
        description="Numerical laboratory for complex m-Hessian equations "
                    "on flat tori.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=None,
                       help="worker pool size (default: HESSIANLAB_THREADS or cores)")
        p.add_argument("--config", default=None,
                       help="JSON config file; explicit flags override it")

    def grid_flags(p):
        p.add_argument("--n", type=int, required=False)
        p.add_argument("--m", type=int, required=False)
        p.add_argument("--N", type=int, required=False)
        p.add_argument("--metric-scale", dest="metric_scale", type=float, default=None)
        p.add_argument("--memory-cap", dest="memory_cap", type=int, default=None)

    def solver_flags(p):
        p.add_argument("--newton-tol", dest="newton_tol", type=float, default=None)
        p.add_argument("--krylov-tol", dest="krylov_tol", type=float, default=None)
        p.add_argument("--max-newton", dest="max_newton", type=int, default=None)
        p.add_argument("--t-steps", dest="t_steps", type=int, default=None)
        p.add_argument("--precond", choices=("auto", "diagonal", "spectral"),
                       default=None)
        p.add_argument("--no-cone-guard", dest="no_cone_guard", action="store_true")

    p = sub.add_parser("verify-cone", help="randomized cone inequality suite")
    common(p)
    p.add_argument("--n", type=int, required=False)
    p.add_argument("--m", type=int, required=False)
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=_cmd_verify_cone)

    p = sub.add_parser("solve", help="exponential-type equation log sigma = u + H")
    common(p); grid_flags(p); solver_flags(p)
    p.add_argument("--H", required=False, help="field spec for H")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("normalized", help="sigma_m(u) = c f with sup u = 0")
    common(p); grid_flags(p); solver_flags(p)
    p.add_argument("--f", required=False, help="field spec for f (> 0)")
    p.add_argument("--eps-schedule", dest="eps_schedule",
                   default="1,0.3,0.1,0.03,0.01")
    p.set_defaults(func=_cmd_normalized)

    p = sub.add_parser("envelope", help="penalized m-subharmonic envelope")
    common(p); grid_flags(p); solver_flags(p)
    p.add_argument("--h", required=False, help="field spec for the obstacle")
    p.add_argument("--eps-schedule", dest="eps_schedule",
                   default="1,0.3,0.1,0.03,0.01")
    p.set_defaults(func=_cmd_envelope)

    p = sub.add_parser("mms", help="manufactured-solution convergence study")
    common(p); solver_flags(p)
    p.add_argument("--n", type=int, required=False)
    p.add_argument("--m", type=int, required=False)
    p.add_argument("--N-list", dest="N_list", default="8,16")
    p.add_argument("--amplitude", type=float, default=0.25)
    p.set_defaults(func=_cmd_mms)

    p = sub.add_parser("stability-sweep", help="perturbation stability ratios")
    common(p); grid_flags(p); solver_flags(p)
    p.add_argument("--f", default=None)
    p.add_argument("--psi", default=None)
    p.add_argument("--deltas", default="0.1,0.01,0.001")
    p.add_argument("--p", type=float, required=False)
    p.add_argument("--a", type=float, required=False)
    p.add_argument("--eps-schedule", dest="eps_schedule", default="1,0.3,0.1,0.03")
    p.set_defaults(func=_cmd_stability_sweep)

    p = sub.add_parser("decay", help="sublevel volume decay table")
    common(p); grid_flags(p)
    p.add_argument("--phi", required=False)
    p.add_argument("--t-list", dest="t_list", default="0.1,0.3,1,3")
    p.set_defaults(func=_cmd_decay)

    return parser


def _apply_config_file(args):
    if not getattr(args, "config", None):
        return args
    path = Path(args.config)
    if not path.exists():
        raise InputError(f"config file {path} not found")
    doc = json.loads(path.read_text())
    if not isinstance(doc, dict):
        raise InputError("config file must hold a JSON object")
    for key, value in doc.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            raise InputError(f"config key {key!r} unknown for this subcommand")
        if getattr(args, dest) in (None, False):  # flags override the file
            setattr(args, dest, value)
    return args


_REQUIRED = {
    "verify-cone": ("n", "m"),
    "solve": ("n", "m", "N", "H"),
    "normalized": ("n", "m", "N", "f"),
    "envelope": ("n", "m", "N", "h"),
    "mms": ("n", "m"),
    "stability-sweep": ("n", "m", "N", "p", "a"),
    "decay": ("n", "m", "N", "phi"),
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args = _apply_config_file(args)
        for name in _REQUIRED[args.command]:
            if getattr(args, name, None) is None:
                raise InputError(f"missing required option --{name.replace('_','-')}")
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        code = args.func(args, outdir)
        _echo_config(args, outdir)
        return code
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 -- CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
