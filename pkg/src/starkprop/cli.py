"""Command-line front end.

Subcommands::

    starkprop propagate --mu 1 --eps 0.05 --state 1,0.1,0.25,0.05,0.95,0.18 \\
        --t-end 30 --samples 200 --format csv
    starkprop classify  --mu 1 --eps 0.5  --state ...
    starkprop search    --n 5 --m 6 [--p 7] --seed 1 --budget 200000 --tol 1e-9
    starkprop verify    --mu 1 --eps 0.05 --state ... --t-end 30 --samples 50 --tol 1e-6

Exit codes: 0 success, 1 numerical failure, 2 usage error, 3 trajectory
escaped before the end of the requested grid (rows up to the escape are
emitted).  Numerical failures print a machine-readable JSON object
``{"code", "message", "context"}`` on stderr.  All numeric output carries 17
significant digits.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import analysis, oracle
from .errors import Degenerate, StarkError
from .propagation import (
    CartesianState,
    StarkModel,
    build_propagation,
    context_summary,
    sample_trajectory,
    time_of,
)

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_USAGE = 2
EXIT_ESCAPED = 3

CSV_HEADER = "t,tau,x,y,z,vx,vy,vz,xi,eta,phi"
_ROW_KEYS = CSV_HEADER.split(",")


class _UsageError(Exception):
    pass


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _dump_json(obj, indent: int = 0) -> str:
    """JSON with floats rendered at 17 significant digits."""
    pad = " " * indent
    if isinstance(obj, dict):
        items = ",\n".join(
            f'{pad}  {json.dumps(str(k))}: {_dump_json(v, indent + 2).lstrip()}'
            for k, v in obj.items()
        )
        return f"{pad}{{\n{items}\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            inner = ", ".join(
                _fmt(v) if isinstance(v, float) else str(v) for v in obj
            )
            return f"{pad}[{inner}]"
        items = ",\n".join(_dump_json(v, indent + 2) for v in obj)
        return f"{pad}[\n{items}\n{pad}]"
    if isinstance(obj, bool):
        return pad + ("true" if obj else "false")
    if isinstance(obj, float):
        if math.isnan(obj) or math.isinf(obj):
            return pad + json.dumps(None)
        return pad + _fmt(obj)
    return pad + json.dumps(obj)


def _emit(text: str, out_path: str | None):
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
            if not text.endswith("\n"):
                fh.write("\n")
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _error_json(exc: StarkError) -> str:
    return json.dumps(exc.to_dict(), sort_keys=True)


def _parse_state(text: str) -> CartesianState:
    parts = text.split(",")
    if len(parts) != 6:
        raise _UsageError("--state needs 6 comma-separated numbers x,y,z,vx,vy,vz")
    try:
        vals = [float(p) for p in parts]
    except ValueError as exc:
        raise _UsageError(f"bad --state component: {exc}") from exc
    return CartesianState(r=tuple(vals[:3]), v=tuple(vals[3:]))


def _model_from(args) -> StarkModel:
    try:
        return StarkModel(mu=args.mu, eps=args.eps)
    except (ValueError, StarkError) as exc:
        raise _UsageError(f"bad model parameters: {exc}") from exc


def _add_model_state_flags(p: argparse.ArgumentParser):
    p.add_argument("--mu", type=float, required=True, help="gravitational parameter")
    p.add_argument("--eps", type=float, required=True, help="field acceleration along +z")
    p.add_argument("--state", type=str, required=True,
                   help="initial state: x,y,z,vx,vy,vz")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="starkprop",
        description="Closed-form propagation and analysis of the 3-D Stark problem",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("propagate", help="sample a trajectory on a time grid")
    _add_model_state_flags(p)
    grid = p.add_mutually_exclusive_group(required=True)
    grid.add_argument("--t-end", type=float, help="end of the real-time grid (t0 = 0)")
    grid.add_argument("--tau-end", type=float, help="end of the fictitious-time grid")
    p.add_argument("--samples", type=int, default=100, help="grid points (>= 2)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", type=str, default=None, help="output path (default stdout)")

    p = sub.add_parser("classify", help="bound/unbound report for one state")
    _add_model_state_flags(p)
    p.add_argument("--out", type=str, default=None)

    p = sub.add_parser("search", help="find (quasi-)periodic orbits")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--p", type=int, default=None,
                   help="rotation denominator: search closed orbits")
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0, help="RNG seed (reproducible)")
    p.add_argument("--budget", type=int, default=200_000,
                   help="max residual evaluations")
    p.add_argument("--tol", type=float, default=None,
                   help="ratio tolerance (quasi) or closure tolerance (periodic)")
    p.add_argument("--out", type=str, default=None)

    p = sub.add_parser("verify", help="analytic propagation vs integration oracle")
    _add_model_state_flags(p)
    p.add_argument("--t-end", type=float, required=True)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--tol", type=float, default=1e-6,
                   help="max allowed relative position error")
    p.add_argument("--out", type=str, default=None)
    return ap


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _degenerate_rows(state, model, times):
    rows = []
    from .propagation import cartesian_to_parabolic

    ps0 = cartesian_to_parabolic(state)
    s2 = ps0.xi**2 + ps0.eta**2
    for t in times:
        cart = analysis.degenerate_propagate(state, model, float(t))
        ps = cartesian_to_parabolic(cart)
        rows.append({
            "t": float(t), "tau": float(t) / s2,
            "x": cart.r[0], "y": cart.r[1], "z": cart.r[2],
            "vx": cart.v[0], "vy": cart.v[1], "vz": cart.v[2],
            "xi": ps.xi, "eta": ps.eta, "phi": ps.phi,
        })
    return rows


def cmd_propagate(args) -> int:
    state = _parse_state(args.state)
    model = _model_from(args)
    if args.samples < 2:
        raise _UsageError("--samples must be at least 2")
    end = args.t_end if args.t_end is not None else args.tau_end
    if end == 0.0:
        raise _UsageError("grid end must be nonzero")

    meta: dict = {}
    try:
        ctx = build_propagation(state, model)
        if args.t_end is not None:
            times = np.linspace(0.0, args.t_end, args.samples)
        else:
            taus = np.linspace(0.0, args.tau_end, args.samples)
            times = np.array([time_of(float(tq), ctx) for tq in taus])
        rows = sample_trajectory(ctx, times)
        meta = context_summary(ctx)
        rep = analysis.classify_boundness(ctx)
        meta["boundness"] = rep.to_dict()
        if ctx.bound:
            pp = analysis.real_periods(ctx)
            meta["period_tau_xi"] = pp.T_xi
            meta["period_tau_eta"] = pp.T_eta
        else:
            meta["asymptotic_azimuth_rad"] = analysis.asymptotic_azimuth(ctx)
    except Degenerate:
        if args.t_end is None:
            raise _UsageError("--tau-end is not supported for degenerate orbits")
        times = np.linspace(0.0, args.t_end, args.samples)
        rows = _degenerate_rows(state, model, times)
        meta = {
            "mu": model.mu, "eps": model.eps, "degenerate": True,
            "boundness": {"kind": analysis.BOUND, "degenerate": True},
        }

    truncated = len(rows) < args.samples
    meta["escaped_before_grid_end"] = truncated
    meta["rows_emitted"] = len(rows)

    if args.format == "csv":
        lines = [CSV_HEADER]
        for row in rows:
            lines.append(",".join(_fmt(row[k]) for k in _ROW_KEYS))
        _emit("\n".join(lines), args.out)
    else:
        payload = {"meta": meta, "rows": [[row[k] for k in _ROW_KEYS] for row in rows]}
        _emit(_dump_json(payload), args.out)
    return EXIT_ESCAPED if truncated else EXIT_OK


def cmd_classify(args) -> int:
    state = _parse_state(args.state)
    model = _model_from(args)
    try:
        ctx = build_propagation(state, model)
    except Degenerate:
        payload = {
            "kind": analysis.BOUND,
            "degenerate": True,
            "e_R": None, "threshold": None, "margin": 0.0,
        }
        _emit(_dump_json(payload), args.out)
        return EXIT_OK
    rep = analysis.classify_boundness(ctx)
    payload = rep.to_dict()
    if rep.is_bound:
        pp = analysis.real_periods(ctx)
        payload["period_tau_xi"] = pp.T_xi
        payload["period_tau_eta"] = pp.T_eta
    else:
        payload["asymptotic_azimuth_rad"] = analysis.asymptotic_azimuth(ctx)
        payload["tau_escape"] = ctx.tau_escape
    _emit(_dump_json(payload), args.out)
    return EXIT_OK


def cmd_search(args) -> int:
    if args.n <= 0 or args.m <= 0 or math.gcd(args.n, args.m) != 1:
        raise _UsageError("--n and --m must be coprime positive integers")
    kw = {"seed": args.seed, "max_evaluations": args.budget}
    if args.p is None:
        if args.tol is not None:
            kw["ratio_tol"] = args.tol
        cfg = analysis.SearchConfig(**kw)
        result = analysis.find_quasi_periodic(args.n, args.m, config=cfg, mu=args.mu)
    else:
        if args.tol is not None:
            kw["closure_tol"] = args.tol
        cfg = analysis.SearchConfig(**kw)
        result = analysis.find_periodic(args.n, args.m, args.p, config=cfg, mu=args.mu)
    _emit(_dump_json(result.to_dict()), args.out)
    return EXIT_OK


def run_verify(state, model, t_end, samples, tol, ctx=None) -> tuple[dict, bool]:
    """Compare analytic propagation against the integration oracle.

    Returns (report, passed).  ``ctx`` may inject a prebuilt (possibly
    tampered) propagation context for fault testing.
    """
    if ctx is None:
        ctx = build_propagation(state, model)
    times = np.linspace(0.0, t_end, samples)
    rows = sample_trajectory(ctx, times)
    times = times[: len(rows)]
    cfg = oracle.IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14)
    traj = oracle.integrate_cartesian(state, model, float(t_end), cfg, t_eval=times)

    per_quantity: dict[str, list[float]] = {k: [] for k in ("x", "y", "z", "vx", "vy", "vz")}
    pos_rel: list[float] = []
    for k, row in enumerate(rows):
        ref = traj.states[k]
        mine = np.array([row["x"], row["y"], row["z"], row["vx"], row["vy"], row["vz"]])
        for i, key in enumerate(("x", "y", "z", "vx", "vy", "vz")):
            per_quantity[key].append(float(abs(mine[i] - ref[i])))
        pos_rel.append(
            float(np.linalg.norm(mine[:3] - ref[:3]) / max(np.linalg.norm(ref[:3]), 1e-300))
        )
    report = {
        "samples": len(rows),
        "tolerance": tol,
        "max_position_rel_error": max(pos_rel) if pos_rel else None,
        "median_position_rel_error": float(np.median(pos_rel)) if pos_rel else None,
        "per_quantity_abs_error": per_quantity,
    }
    passed = bool(pos_rel) and max(pos_rel) <= tol
    report["passed"] = passed
    return report, passed


def cmd_verify(args) -> int:
    state = _parse_state(args.state)
    model = _model_from(args)
    if args.samples < 2:
        raise _UsageError("--samples must be at least 2")
    report, passed = run_verify(state, model, args.t_end, args.samples, args.tol)
    _emit(_dump_json(report), args.out)
    return EXIT_OK if passed else EXIT_NUMERICAL


def main(argv=None) -> int:
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors already; normalize --help to 0
        return int(exc.code or 0)
    try:
        if args.command == "propagate":
            return cmd_propagate(args)
        if args.command == "classify":
            return cmd_classify(args)
        if args.command == "search":
            return cmd_search(args)
        if args.command == "verify":
            return cmd_verify(args)
        raise _UsageError(f"unknown command {args.command!r}")
    except _UsageError as exc:
        sys.stderr.write(json.dumps({"code": "usage", "message": str(exc), "context": {}}))
        sys.stderr.write("\n")
        return EXIT_USAGE
    except StarkError as exc:
        sys.stderr.write(_error_json(exc))
        sys.stderr.write("\n")
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
