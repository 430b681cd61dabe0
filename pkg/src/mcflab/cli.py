"""Command-line entry point: ``mcflab <subcommand> [options]``."""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .checks import Check
from .config import ConfigError, ExperimentConfig, load_config
from .exact import solve_bowl, solve_shrinker
from .experiments import REGISTRY, ExperimentFailure, RunManifest, run
from .io import atomic_write, csv_text, dumps
from .report import emit_report
from .spectral import eigentable


def _config(args, **over):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        over["seed"] = args.seed
    return cfg.replace(**over) if over else cfg


def _finish(out_dir, name, checks, extra=None):
    """Write a manifest for an ad-hoc subcommand and print its report."""
    from . import __version__

    m = RunManifest(name, extra or {}, __version__, [c.as_dict() for c in checks], [])
    atomic_write(os.path.join(out_dir, "manifest.json"), dumps(m.as_dict()))
    text, _ = emit_report(m)
    sys.stdout.write(text)
    return 0 if m.passed else 1


def _run_ids(cfg, ids, out_dir, jobs):
    jobs = max(1, jobs)
    work = [(cfg.replace(experiment=i).values, os.path.join(out_dir, i)) for i in ids]
    if jobs == 1:
        results = [_worker(w) for w in work]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_worker, work))
    for i, r in zip(ids, results):
        if isinstance(r, str):
            sys.stderr.write(f"{i}: {r}\n")
    paths = [d for (_, d), r in zip(work, results) if not isinstance(r, str)]
    failed = any(isinstance(r, str) for r in results)
    text, js = emit_report(paths) if paths else ("", dumps({"runs": []}))
    atomic_write(os.path.join(out_dir, "report.txt"), text)
    atomic_write(os.path.join(out_dir, "report.json"), js)
    sys.stdout.write(text)
    ok = not failed and all(r.passed for r in results if not isinstance(r, str))
    return 0 if ok else 1


def _worker(item):
    values, out_dir = item
    try:
        return run(ExperimentConfig(values), out_dir)
    except ExperimentFailure as exc:
        return str(exc)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_soliton(args):
    cfg = _config(args)
    b = solve_bowl(args.n, args.c, args.r_max, tol=cfg.ode_tol, num=args.num)
    atomic_write(os.path.join(args.out_dir, "bowl.csv"),
                 csv_text("mcflab.graph/1", ["r", "f", "f_r"], zip(b.profile.r, b.profile.f, b.slope)))
    target = args.c / (args.n - 1)
    checks = [
        Check("bowl_residual", b.residual, 1e-6, "<="),
        Check("slope_ratio_at_rmax", b.slope_ratio_at_rmax, (0.99 * target, 1.01 * target), "in"),
    ]
    return _finish(args.out_dir, "soliton", checks, {**cfg.snapshot(), "n": args.n, "c": args.c, "r_max": args.r_max})


def cmd_shrinker(args):
    cfg = _config(args)
    checks = []
    R = np.sqrt(2.0 * (args.n - 1))
    for a in args.a:
        s = solve_shrinker(args.n, a, a_min=cfg.a_min)
        body = s.u > 0
        lower = R * np.sqrt(np.clip(1 - (s.y[body] / a) ** 2, 0, None))
        atomic_write(os.path.join(args.out_dir, f"shrinker_a{a:g}.csv"),
                     csv_text("mcflab.shrinker/1", ["y", "u"], zip(s.y, s.u)))
        checks += [
            Check(f"u_at_2[a={a:g}]", s.u_at(2.0), R - a**-2, "<="),
            Check(f"lower_bound_gap[a={a:g}]", float(np.min(s.u[body] - lower)), 0.0, ">="),
            Check(f"ode_residual[a={a:g}]", s.residual, 1e-8, "<="),
        ]
    return _finish(args.out_dir, "shrinker", checks, {**cfg.snapshot(), "n": args.n})


def cmd_experiment(ids):
    def cmd(args):
        return _run_ids(_config(args), ids, args.out_dir, args.jobs)
    return cmd


def cmd_spectrum(args):
    rows = eigentable(args.n, args.l_max, args.d_max)
    atomic_write(os.path.join(args.out_dir, "eigentable.csv"),
                 csv_text("mcflab.eigentable/1", ["l", "d", "lambda", "multiplicity", "eigenvalue", "class"], rows))
    if args.table_only:
        for row in rows:
            print(*row)
        return 0
    return _run_ids(_config(args), ["spectral-table"], args.out_dir, 1)


def cmd_neck(args):
    from .neck import (
        ParabolicNeighborhood, NeckPatch, certify_symmetry, neck_improvement_experiment,
    )

    cfg = _config(args)
    if args.mode == "sweep-L":
        return _run_ids(cfg, ["neck-improvement"], args.out_dir, 1)
    if args.mode == "improve":
        r = neck_improvement_experiment(cfg.seed, args.L or cfg.L, min(cfg.eps, cfg.eps1), n=cfg.n, eps1=cfg.eps1)
        atomic_write(os.path.join(args.out_dir, "improvement.json"),
                     dumps({"seed": r.seed, "L": r.L, "eps_in": r.eps_in, "eps_out": r.eps_out, "ratio": r.ratio}))
        return _finish(args.out_dir, "neck-improve", [Check("ratio", r.ratio, 0.5, "<=")], cfg.snapshot())
    # certify: a round cylinder whose axis is displaced by a known offset
    n = cfg.n
    offset = np.zeros(n)
    offset[0] = args.shift
    R = 2.0

    def radius(theta, z, t):
        ct = theta @ offset
        return ct + np.sqrt(R**2 - offset @ offset + ct**2)

    z = np.linspace(-2.0, 2.0, 41)
    times = np.linspace(-2.0, -1.0, 5)
    patch = NeckPatch.from_function(n, z, times, radius, d_max=4)
    nb = ParabolicNeighborhood(0.0, -1.0, 1.0, 1.0, patch.H_center())
    cert = certify_symmetry(patch, nb)
    center = cert.frame.q[:n]
    atomic_write(os.path.join(args.out_dir, "certificate.json"),
                 dumps({"epsilon": cert.epsilon, "amplitude": cert.amplitude, "center": center,
                        "converged": cert.converged, "samples": cert.samples}))
    checks = [
        Check("axis_offset_error", float(np.linalg.norm(center - offset)), 1e-3, "<="),
        Check("amplitude_ok", cert.amplitude_ok, True, "is"),
    ]
    return _finish(args.out_dir, "neck-certify", checks, cfg.snapshot())


def cmd_sweep(args):
    ids = [s for s in args.ids.split(",") if s] if args.ids else list(REGISTRY)
    unknown = [i for i in ids if i not in REGISTRY]
    if unknown:
        raise ConfigError(f"unknown experiment id(s): {', '.join(unknown)}")
    return _run_ids(_config(args), ids, args.out_dir, args.jobs)


def cmd_report(args):
    text, js = emit_report(args.manifests)
    sys.stdout.write(text)
    if args.json:
        atomic_write(args.json, js)
    return 0 if '"passed": false' not in js else 1


# ---------------------------------------------------------------------------


def build_parser():
    def flags(suppress):
        g = argparse.ArgumentParser(add_help=False)
        d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        g.add_argument("--config", default=d(None), help="flat key=value configuration file")
        g.add_argument("--out-dir", default=d("mcflab-out"), help="output directory")
        g.add_argument("--seed", type=int, default=d(None), help="override the configured seed")
        g.add_argument("--jobs", type=int, default=d(1), help="experiments run in parallel")
        return g

    # global flags are accepted before or after the subcommand
    common = flags(True)
    p = argparse.ArgumentParser(prog="mcflab", description=__doc__, parents=[flags(False)])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("soliton", parents=[common], help="construct the bowl soliton")
    s.add_argument("--n", type=int, default=3)
    s.add_argument("--c", type=float, default=1.0)
    s.add_argument("--r-max", type=float, default=100.0)
    s.add_argument("--num", type=int, default=2001)
    s.set_defaults(func=cmd_soliton)

    s = sub.add_parser("shrinker", parents=[common], help="construct compact-ended shrinkers")
    s.add_argument("--n", type=int, default=3)
    s.add_argument("--a", type=float, action="append", help="repeatable; default 10 and 20")
    s.set_defaults(func=cmd_shrinker)

    s = sub.add_parser("flow", parents=[common], help="exact-solution oracles and bowl runs")
    s.add_argument("--case", choices=["oracles", "bowl", "rr-z", "sandwich", "harnack"], default="oracles")
    s.set_defaults(func=lambda a: cmd_experiment([{
        "oracles": "cylinder-oracle", "bowl": "bowl-translation", "rr-z": "rr-z-asymptotics",
        "sandwich": "vanishing-time-sandwich", "harnack": "harnack-signs"}[a.case]])(a))

    s = sub.add_parser("rescaled", parents=[common], help="rescaled-flow decay and Gaussian area")
    s.set_defaults(func=cmd_experiment(["rescaled-decay", "gaussian-area"]))

    s = sub.add_parser("spectrum", parents=[common], help="eigenvalue table and gap checks")
    s.add_argument("--n", type=int, default=3)
    s.add_argument("--l-max", type=int, default=6)
    s.add_argument("--d-max", type=int, default=3)
    s.add_argument("--table-only", action="store_true")
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("neck", parents=[common], help="symmetry certification and neck improvement")
    s.add_argument("--mode", choices=["certify", "improve", "sweep-L"], default="certify")
    s.add_argument("--L", type=float)
    s.add_argument("--shift", type=float, default=0.05, help="axis offset for --mode certify")
    s.set_defaults(func=cmd_neck)

    s = sub.add_parser("sweep", parents=[common], help="run registered experiments")
    s.add_argument("--ids", help="comma-separated experiment ids (default: all)")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("report", parents=[common], help="summarize manifests or run directories")
    s.add_argument("manifests", nargs="*")
    s.add_argument("--json", help="write the JSON summary here")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "command", None) == "shrinker" and not args.a:
        args.a = [10.0, 20.0]
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"mcflab: configuration error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
