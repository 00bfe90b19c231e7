"""Command line entry point: ``hthk <command> SCENARIO [options]``.

JSON goes to stdout, a one-line human summary to stderr.  Exit status is 0
on success (a false theorem condition is a result, not an error), 1 on
runtime or validation errors and 2 on usage errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import _kernels
from .convergence import check_theorem2
from .fixed_topology import fvct
from .invariants import structural_violations
from .leaders import check_theorem3, leader_report
from .model import OpinionState, build_digraph, build_matrix
from .neighborhoods import check_theorem1
from .scenario import ScenarioError, ScenarioFile, load_scenario
from .simulator import Mode, NonFiniteError, detect_tau, simulate, trajectory_states
from .structure import analyze_structure

SVG_MAX_POINTS = 2000


class CliError(Exception):
    pass


# ---------------------------------------------------------------------------
# output helpers

def write_atomic(path: Path, data: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _num(v: float) -> str:
    # repr-free fixed format so the output never depends on locale
    return format(float(v), ".17g")


def trajectory_csv(initial: OpinionState, nsteps: int, mode: Mode) -> str:
    """All states x(0..nsteps), regenerated deterministically in chunks."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"x_{i + 1}" for i in range(initial.n)])
    g0 = build_digraph(initial) if mode is Mode.FROZEN else None
    state, t = initial, 0
    w.writerow(["0"] + [_num(v) for v in initial.opinions])
    while t < nsteps:
        k = min(4096, nsteps - t)
        traj = trajectory_states(state, k, mode, g0)
        for s in range(1, k + 1):
            w.writerow([str(t + s)] + [_num(v) for v in traj[s]])
        state = state.with_opinions(traj[k])
        t += k
    return buf.getvalue()


def trajectory_svg(ts: np.ndarray, xs: np.ndarray, width: int = 800, height: int = 500) -> str:
    if len(ts) > SVG_MAX_POINTS:
        keep = np.unique(np.linspace(0, len(ts) - 1, SVG_MAX_POINTS).astype(int))
        ts, xs = ts[keep], xs[keep]
    pad = 40
    t0, t1 = float(ts[0]), float(max(ts[-1], ts[0] + 1))
    lo, hi = float(xs.min()), float(xs.max())
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5

    def px(t):
        return pad + (t - t0) / (t1 - t0) * (width - 2 * pad)

    def py(v):
        return height - pad - (v - lo) / (hi - lo) * (height - 2 * pad)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
             f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
             f'<text x="{width / 2}" y="{height - 8}" font-size="12" text-anchor="middle">t</text>',
             f'<text x="{pad}" y="{pad - 8}" font-size="10">{hi:.4g}</text>',
             f'<text x="{pad}" y="{height - pad + 14}" font-size="10">{lo:.4g}</text>']
    for i in range(xs.shape[1]):
        hue = (i * 137) % 360
        pts = " ".join(f"{px(t):.2f},{py(v):.2f}" for t, v in zip(ts, xs[:, i]))
        parts.append(f'<polyline fill="none" stroke="hsl({hue},70%,40%)" stroke-width="1" points="{pts}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def digraph_text(state: OpinionState) -> str:
    g = build_digraph(state)
    st = analyze_structure(g)
    lines = [f"{i + 1} -> {j + 1}" for i, j in g.edges()]
    lines.append("")
    lines.append("# scc class members")
    for k, (c, members) in enumerate(zip(st.class_of, st.sccs)):
        lines.append(f"# {k + 1} {c.value} " + " ".join(str(int(v) + 1) for v in members))
    return "\n".join(lines) + "\n"


def _json(obj) -> str:
    def default(o):
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        raise TypeError(type(o).__name__)

    def clean(o):
        if isinstance(o, float) and not math.isfinite(o):
            return None
        if isinstance(o, dict):
            return {k: clean(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [clean(v) for v in o]
        return o
    return json.dumps(clean(json.loads(json.dumps(obj, default=default))), indent=2)


# ---------------------------------------------------------------------------
# scenario handling

def _scenario(args) -> ScenarioFile:
    sc = load_scenario(Path(args.scenario))
    opts = sc.options
    if args.tie_tol is not None:
        if args.tie_tol < 0:
            raise CliError("--tie-tol must be >= 0")
        opts = replace(opts, tie_tol=args.tie_tol)
    if args.tol is not None:
        if args.tol <= 0:
            raise CliError("--tol must be > 0")
        opts = replace(opts, convergence_tol=args.tol)
    if args.max_steps is not None:
        if args.max_steps < 1:
            raise CliError("--max-steps must be >= 1")
        opts = replace(opts, max_steps=args.max_steps)
    if args.window is not None:
        if args.window < 1:
            raise CliError("--window must be >= 1")
        opts = replace(opts, stability_window=args.window)
    if args.mode is not None:
        opts = replace(opts, mode=Mode(args.mode))
    return replace(sc, options=opts)


def _analysis_state(sc: ScenarioFile, args) -> OpinionState:
    state = sc.state()
    k = args.at_step or 0
    if k < 0:
        raise CliError("--at-step must be >= 0")
    if k:
        state = state.with_opinions(trajectory_states(state, k, sc.options.mode)[k])
    return state


# ---------------------------------------------------------------------------
# commands

def cmd_simulate(sc: ScenarioFile, args):
    o = sc.options
    state = sc.state()
    rep = simulate(state, o.max_steps, o.convergence_tol, o.mode)
    tau = detect_tau(rep, o.stability_window)
    out = {"command": "simulate", "n": state.n, "report": rep.to_dict(),
           "stability_window": o.stability_window, "tau": tau, "backend": _kernels.BACKEND}
    files = {}
    if args.out:
        ts, xs = rep.trajectory()
        files = {
            "trajectory.csv": trajectory_csv(state, rep.steps_run, o.mode),
            "trajectory.svg": trajectory_svg(ts, xs),
            "digraph_initial.txt": digraph_text(state),
            "digraph_final.txt": digraph_text(state.with_opinions(rep.final_opinions)),
        }
    summary = (f"simulate: {rep.steps_run} steps, converged={rep.converged}, "
               f"tau_candidate={rep.tau_candidate}, tau={tau}")
    return out, files, summary


def cmd_classify(sc, args):
    state = _analysis_state(sc, args)
    st = analyze_structure(build_digraph(state))
    out = {"command": "classify", "at_step": args.at_step or 0, "structure": st.to_dict()}
    files = {"digraph.txt": digraph_text(state)} if args.out else {}
    counts = {c.value: sum(1 for k in st.class_of if k is c) for c in set(st.class_of)}
    return out, files, f"classify: {len(st.sccs)} SCCs {counts}"


def cmd_fvct(sc, args):
    state = _analysis_state(sc, args)
    res = fvct(state)
    out = {"command": "fvct", "at_step": args.at_step or 0, "result": res.to_dict()}
    return out, {}, "fvct: " + " ".join(f"{v:.6g}" for v in res.fvct[:20])


def cmd_thm1(sc, args):
    z = sc.equilibrium()
    if z is None:
        raise CliError("check-thm1 needs an equilibrium 'z = ...' in the scenario")
    y0 = _analysis_state(sc, args)
    c = check_theorem1(z, y0, args.horizon)
    out = {"command": "check-thm1", "horizon": args.horizon, "check": c.to_dict()}
    return out, {}, (f"check-thm1: applicable={c.applicable} "
                     f"verified={c.conclusions_verified} {c.reason or c.violation or ''}")


def cmd_thm2(sc, args):
    state = _analysis_state(sc, args)
    c = check_theorem2(state)
    out = {"command": "check-thm2", "at_step": args.at_step or 0, "check": c.to_dict()}
    return out, {}, f"check-thm2: conditions {['T' if v else 'F' for v in c.cond]}"


def cmd_thm3(sc, args):
    state = _analysis_state(sc, args)
    c = check_theorem3(state, args.horizon)
    out = {"command": "check-thm3", "horizon": args.horizon, "check": c.to_dict()}
    return out, {}, (f"check-thm3: status={c.status} fvct_constant={c.fvct_constant} "
                     f"k_limits={c.k_limits_achieved} entrained={c.direction_entrained}")


def cmd_leaders(sc, args):
    state = _analysis_state(sc, args)
    g = build_digraph(state)
    rep = leader_report(build_matrix(g), analyze_structure(g))
    out = {"command": "leaders", "at_step": args.at_step or 0, "report": rep.to_dict()}
    radii = ", ".join(f"{rep.rho[k]:.4f}" for k in rep.open_sccs)
    return out, {}, f"leaders: {len(rep.open_sccs)} open-minded SCCs, rho = [{radii}]"


def fuzz_one(seed_seq: np.random.SeedSequence, n_min: int, n_max: int, max_steps: int,
             tol: float, window: int) -> dict:
    rng = np.random.default_rng(seed_seq)
    n = int(rng.integers(n_min, n_max + 1))
    x = rng.uniform(0.0, 1.0, n)
    r = rng.uniform(0.05, 0.5, n)
    state = OpinionState(x, r)
    viol = structural_violations(state)
    rep = simulate(state, max_steps, tol)
    ts, xs = rep.trajectory()
    if np.any(np.diff(xs.max(axis=1)) > 0) or np.any(np.diff(xs.min(axis=1)) < 0):
        viol.append("opinion range grew")
    return {"n": n, "tau": detect_tau(rep, window), "tau_candidate": rep.tau_candidate,
            "converged": rep.converged, "steps_run": rep.steps_run, "violations": viol}


def cmd_fuzz(args):
    if args.count < 1:
        raise CliError("--count must be >= 1")
    if not 1 <= args.n_min <= args.n_max:
        raise CliError("need 1 <= --n-min <= --n-max")
    max_steps = args.max_steps or 100_000
    tol = args.tol or 1e-12
    window = args.window or 100
    seeds = np.random.SeedSequence(args.seed).spawn(args.count)
    jobs = [(s, args.n_min, args.n_max, max_steps, tol, window) for s in seeds]
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as ex:
            results = list(ex.map(fuzz_one, *zip(*jobs)))
    else:
        results = [fuzz_one(*j) for j in jobs]
    taus = [r["tau"] for r in results if r["tau"] is not None]
    viol = [{"trial": i, "violations": r["violations"]} for i, r in enumerate(results) if r["violations"]]
    summary = {
        "trials": args.count, "seed": args.seed,
        "tau_certified": len(taus), "tau_inconclusive": args.count - len(taus),
        "tau_min": min(taus) if taus else None,
        "tau_median": float(np.median(taus)) if taus else None,
        "tau_max": max(taus) if taus else None,
        "tau_histogram": {str(k): int(v) for k, v in zip(*np.unique(taus, return_counts=True))} if taus else {},
        "violations": viol,
    }
    out = {"command": "fuzz", "summary": summary, "trials": results}
    return out, {}, (f"fuzz: {args.count} trials, {len(taus)} certified tau, "
                     f"{len(viol)} with violations")


COMMANDS = {
    "simulate": cmd_simulate, "classify": cmd_classify, "fvct": cmd_fvct,
    "check-thm1": cmd_thm1, "check-thm2": cmd_thm2, "check-thm3": cmd_thm3,
    "leaders": cmd_leaders,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hthk", description="Heterogeneous bounded-confidence dynamics.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario=True):
        if scenario:
            sp.add_argument("scenario", help="scenario file")
        sp.add_argument("--max-steps", type=int)
        sp.add_argument("--tol", type=float, help="convergence tolerance on the step delta")
        sp.add_argument("--tie-tol", type=float)
        sp.add_argument("--window", type=int, help="stability window for tau")
        sp.add_argument("--mode", choices=[m.value for m in Mode])
        sp.add_argument("--out", type=Path, help="directory for report and data files")

    for name in COMMANDS:
        sp = sub.add_parser(name)
        common(sp)
        sp.add_argument("--at-step", type=int, default=0, help="analyse x(k) instead of x(0)")
        if name in ("check-thm1", "check-thm3"):
            sp.add_argument("--horizon", type=int, default=500 if name == "check-thm1" else 10_000)

    fz = sub.add_parser("fuzz")
    common(fz, scenario=False)
    fz.add_argument("--seed", type=int, default=0)
    fz.add_argument("--count", type=int, default=100)
    fz.add_argument("--n-min", type=int, default=3)
    fz.add_argument("--n-max", type=int, default=20)
    fz.add_argument("--workers", type=int, default=1)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        if args.command == "fuzz":
            out, files, summary = cmd_fuzz(args)
        else:
            sc = _scenario(args)
            out, files, summary = COMMANDS[args.command](sc, args)
        text = _json(out)
        if args.out:
            write_atomic(args.out / "report.json", text + "\n")
            for name, data in files.items():
                write_atomic(args.out / name, data)
    except (CliError, ScenarioError, NonFiniteError, ValueError, RuntimeError, OSError) as e:
        print(f"hthk: error: {e}", file=sys.stderr)
        return 1
    sys.stdout.write(text + "\n")
    print(summary, file=sys.stderr)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
