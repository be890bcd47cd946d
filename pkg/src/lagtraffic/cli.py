"""Command-line experiment harness.

Subcommands: simulate, compare-ftl, zero-filter, filter-study, verify.
Exit status: 0 on success, 1 when a verification campaign reports
violations, 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import experiments, verify
from .config import (OUTDIR_ENV, ConfigError, ExperimentConfig,
                     apply_assignments, load_config_file)
from .kernels import FAMILIES
from .output import write_csv

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_CONFIG = 2

_FLAG_KEYS = ("kernel", "kernels", "alpha", "ell", "velocity", "profile",
              "t_end", "safety", "boundary", "outdir", "record_every",
              "tail_tol", "seed", "trials")

# per-command base configurations (paper defaults at desk-runnable scale)
_BASES = {
    "simulate": ExperimentConfig(kernel="exp", alphas=(0.125,), ell=1.0 / 500,
                                 t_end=1.2, profile="box:1,0.05,0.75"),
    "compare-ftl": ExperimentConfig(kernel="exp", alphas=(0.5,), ell=0.06,
                                    t_end=1.4, profile="box:1,0.05,0.75"),
    "zero-filter": ExperimentConfig(kernel="exp",
                                    alphas=(0.5, 0.125, 0.03125, 0.0078125),
                                    ell=1.0 / 2000, t_end=1.2,
                                    profile="box:1,0.05,0.75"),
    "filter-study": ExperimentConfig(kernels=FAMILIES,
                                     alphas=(1.0 / 16, 1.0 / 64),
                                     ell=1.0 / 2500, t_end=1.2,
                                     profile="box:1,0.05,0.75"),
    "verify": ExperimentConfig(),
}

# --paper-scale swaps in the heaviest published parameters
_PAPER_SCALE = {
    "compare-ftl": {"ell": "0.005"},
    "filter-study": {"ell": "0.0001", "alpha": "0.015625,0.00390625"},
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lagtraffic",
        description="Nonlocal Lagrangian traffic-flow experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="key = value manifest file")
        sp.add_argument("--kernel", choices=FAMILIES)
        sp.add_argument("--kernels", help="comma-separated kernel families")
        sp.add_argument("--alpha", help="filter size, or comma-separated list")
        sp.add_argument("--ell", help="car length / Lagrangian cell width")
        sp.add_argument("--velocity", help="speed law name (default linear)")
        sp.add_argument("--profile",
                        help="initial density, box:in,out,halfwidth or "
                             "piecewise:v0,b1,v1,...")
        sp.add_argument("--t-end", dest="t_end", help="final time")
        sp.add_argument("--safety", help="CFL safety factor in (0, 1]")
        sp.add_argument("--boundary", choices=("ghost", "fold"))
        sp.add_argument("--outdir", help="output directory "
                        f"(env {OUTDIR_ENV} overrides)")
        sp.add_argument("--record-every", dest="record_every",
                        help="record every k-th step (0 = final only)")
        sp.add_argument("--tail-tol", dest="tail_tol",
                        help="kernel tail truncation tolerance")
        sp.add_argument("--seed", help="campaign RNG seed")
        sp.add_argument("--trials", help="campaign trial count")
        sp.add_argument("--paper-scale", action="store_true",
                        help="use the paper's heaviest parameters")

    for name, handler in (("simulate", cmd_simulate),
                          ("compare-ftl", cmd_compare_ftl),
                          ("zero-filter", cmd_zero_filter),
                          ("filter-study", cmd_filter_study),
                          ("verify", cmd_verify)):
        sp = sub.add_parser(name)
        common(sp)
        sp.set_defaults(func=handler, base=name)
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = _BASES[args.base]
    if args.paper_scale and args.base in _PAPER_SCALE:
        cfg = apply_assignments(cfg, _PAPER_SCALE[args.base])
    if args.config:
        cfg = load_config_file(cfg, args.config)
    flags = {k: v for k in _FLAG_KEYS
             if (v := getattr(args, k, None)) is not None}
    cfg = apply_assignments(cfg, flags)
    env_outdir = os.environ.get(OUTDIR_ENV)
    if env_outdir:
        cfg = replace(cfg, outdir=env_outdir)
    # verify may deliberately break the CFL condition (negative control)
    return cfg.validate(allow_unsafe_cfl=args.base == "verify")


def cmd_simulate(args) -> int:
    cfg = resolve_config(args)
    traj = experiments.run_simulate(cfg)
    final = traj.final
    print(f"simulate: {traj.grid.n_cells} cells, {len(traj.dts)} steps, "
          f"t = {final.t:g}; w range [{final.w.min():.6g}, {final.w.max():.6g}]")
    print(f"wrote {Path(cfg.outdir) / 'trajectory.csv'}")
    return EXIT_OK


def cmd_compare_ftl(args) -> int:
    cfg = resolve_config(args)
    result = experiments.run_compare_ftl(cfg)
    for kind in sorted(result.centroids):
        print(f"{kind:>10}: {result.states[kind].n_cars} cars, "
              f"centroid {result.centroids[kind]:.6f}")
    print(f"wrote {len(result.files)} files to {cfg.outdir}")
    return EXIT_OK


def cmd_zero_filter(args) -> int:
    cfg = resolve_config(args)
    result = experiments.run_zero_filter(cfg)
    print(f"{'alpha':>12} {'L1(1/w, rho)':>14} {'rate bound':>12} "
          f"{'gap(y,w)':>12}")
    for row in result.rows:
        print(f"{row.alpha:>12.6g} {row.l1_error:>14.6g} "
              f"{row.rate_bound:>12.6g} {row.gap:>12.6g}")
    if result.slope is not None:
        print(f"fitted log-log slope: {result.slope:.4f}")
    print(f"wrote {len(result.files)} files to {cfg.outdir}")
    return EXIT_OK


def cmd_filter_study(args) -> int:
    cfg = resolve_config(args)
    result = experiments.run_filter_study(cfg)
    for row in result.rows:
        print(f"{row.kernel:>8} alpha={row.alpha:<10.6g} "
              f"gap={row.gap:.6g}")
    for name, ratio in sorted(result.shrink_ratios.items()):
        mark = "  [gap fails to shrink]" if name in result.flagged else ""
        print(f"{name:>8} gap shrink ratio {ratio:.3f}{mark}")
    print(f"wrote {len(result.files)} files to {cfg.outdir}")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = resolve_config(args)
    results = verify.run_all(cfg.seed, cfg.trials, safety=cfg.safety)
    write_csv(Path(cfg.outdir) / "verify_report.csv",
              ("check", "trials", "violations", "worst_margin"),
              ((r.name, r.trials, r.violations, r.worst) for r in results))
    failed = False
    for r in results:
        status = "ok" if r.ok else "FAIL"
        failed = failed or not r.ok
        print(f"{r.name:>20}: {status}  trials={r.trials} "
              f"violations={r.violations} worst={r.worst:.3e}")
    print(f"wrote {Path(cfg.outdir) / 'verify_report.csv'}")
    return EXIT_VERIFICATION if failed else EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
