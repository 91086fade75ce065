"""Command-line front end.

Subcommands:
  price     solve the obstacle problem and dump the value surface
  simulate  draw exact paths and dump them
  converge  solve on a ladder of refined grids and report probe values
  verify    run the verification suite and write a summary

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import os
import sys
import time

import numpy as np

from .config import RunConfig, load_config
from .dynamics import simulate_paths
from .errors import BnsError, ConfigError
from .kernels import IDENTITY_TILT
from .mc import price_american
from .solver import Grid, solve, solve_localized
from .verify import probe_value, run_suite

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _load(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out_dir = args.out
    os.makedirs(cfg.out_dir, exist_ok=True)
    return cfg


def _writer(cfg: RunConfig, name: str):
    path = os.path.join(cfg.out_dir, name)
    fh = open(path, "w", newline="")
    return path, fh, csv.writer(fh)


def cmd_price(args) -> int:
    cfg = _load(args)
    if cfg.delta is not None:
        j0 = int(round(cfg.delta / cfg.grid.dv))
        grid = Grid(cfg.grid.x_min, cfg.grid.x_max, cfg.grid.n_x,
                    j0 * cfg.grid.dv, cfg.grid.v_max,
                    cfg.grid.n_v - j0, cfg.grid.n_t)
        surface = solve_localized(grid, cfg.params, cfg.kernel,
                                  IDENTITY_TILT, cfg.payoff, cfg.scheme)
    else:
        surface = solve(cfg.grid, cfg.params, cfg.kernel, IDENTITY_TILT,
                        cfg.payoff, cfg.scheme)
    value = probe_value(surface, cfg.x0, cfg.v0)

    probe_path, fh, w = _writer(cfg, "probe.csv")
    with fh:
        w.writerow(["method", "value", "std_error", "n_paths", "n_dates",
                    "seed", "wall_time"])
        w.writerow(["ipde", f"{value:.12g}", 0.0, "", "", cfg.seed, ""])
        if not args.skip_mc:
            t0 = time.perf_counter()
            est, _ = price_american(cfg.x0, cfg.v0, cfg.params, cfg.kernel,
                                    IDENTITY_TILT, cfg.payoff, cfg.n_paths,
                                    cfg.n_dates, cfg.seed)
            wall = time.perf_counter() - t0
            w.writerow(["lsmc", f"{est.value:.12g}",
                        f"{est.std_error:.6g}", est.n_paths,
                        est.n_exercise_dates, cfg.seed, f"{wall:.3f}"])

    path, fh, w = _writer(cfg, "surface.csv")
    with fh:
        w.writerow(["t", "x", "v", "u", "exercised"])
        g = surface.grid
        for m, t in enumerate(surface.t_nodes):
            for i, x in enumerate(g.x_nodes):
                for j, v in enumerate(g.v_nodes):
                    w.writerow([f"{t:.10g}", f"{x:.10g}", f"{v:.10g}",
                                f"{surface.u[m, i, j]:.12g}",
                                int(surface.exercise_mask[m, i, j])])
    print(f"value at (x0={cfg.x0:g}, v0={cfg.v0:g}, t=0): {value:.8f}")
    print(f"surface written to {path}, probes to {probe_path}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load(args)
    times = np.linspace(0.0, cfg.params.T, args.n_times + 1)
    n = args.n_paths or min(cfg.n_paths, 1000)
    V, Vs, X, Z = simulate_paths(cfg.kernel, cfg.params, cfg.x0, cfg.v0,
                                 times, n, cfg.seed)
    path, fh, w = _writer(cfg, "paths.csv")
    with fh:
        w.writerow(["path_id", "t", "V", "V_star", "X", "Z_cum"])
        for p in range(n):
            for k, t in enumerate(times):
                w.writerow([p, f"{t:.10g}", f"{V[p, k]:.12g}",
                            f"{Vs[p, k]:.12g}", f"{X[p, k]:.12g}",
                            f"{Z[p, k]:.12g}"])
    print(f"{n} paths on {times.size} dates written to {path}")
    return EXIT_OK


def cmd_converge(args) -> int:
    cfg = _load(args)
    g0 = cfg.grid
    path, fh, w = _writer(cfg, "convergence.csv")
    with fh:
        w.writerow(["n_x", "n_v", "n_t", "value_at_probe", "runtime_ms"])
        for level in range(args.levels):
            f = 2 ** level
            grid = Grid(g0.x_min, g0.x_max, (g0.n_x - 1) * f + 1, g0.v_lo,
                        g0.v_max, (g0.n_v - 1) * f + 1, g0.n_t * f)
            t0 = time.perf_counter()
            surface = solve(grid, cfg.params, cfg.kernel, IDENTITY_TILT,
                            cfg.payoff, cfg.scheme)
            ms = 1000.0 * (time.perf_counter() - t0)
            val = probe_value(surface, cfg.x0, cfg.v0)
            w.writerow([grid.n_x, grid.n_v, grid.n_t,
                        f"{val:.12g}", f"{ms:.1f}"])
            print(f"{grid.n_x:5d} x {grid.n_v:4d} x {grid.n_t:5d}  "
                  f"value {val:.8f}  ({ms:.0f} ms)")
    print(f"convergence table written to {path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _load(args)
    reports = run_suite(cfg)
    path, fh, w = _writer(cfg, "verify.csv")
    with fh:
        w.writerow(["check", "status", "measured", "bound",
                    "budget_grid", "budget_stat"])
        for rep in reports:
            w.writerow([rep.name, rep.status, f"{rep.measured:.6g}",
                        f"{rep.bound:.6g}", f"{rep.budget_grid:.6g}",
                        f"{rep.budget_stat:.6g}"])
    failed = 0
    for rep in reports:
        print(f"[{rep.status:>4}] {rep.name}: measured {rep.measured:.4g} "
              f"vs bound {rep.bound:.4g}"
              + (f"  ({rep.detail})" if rep.detail else ""))
        failed += rep.status == "fail"
    print(f"summary written to {path}")
    if failed:
        print(f"{failed} check(s) failed")
        return EXIT_VERIFY_FAIL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bnsprice",
        description="American option pricing in an OU stochastic "
                    "volatility model")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="INI config file")
        p.add_argument("--seed", type=int, default=None,
                       help="override mc.seed from the config")
        p.add_argument("--out", default=None,
                       help="override output.dir from the config")

    p = sub.add_parser("price", help="solve and dump the value surface")
    common(p)
    p.add_argument("--skip-mc", action="store_true",
                   help="omit the Monte Carlo probe row")
    p.set_defaults(fn=cmd_price)

    p = sub.add_parser("simulate", help="draw exact paths")
    common(p)
    p.add_argument("--n-paths", type=int, default=None)
    p.add_argument("--n-times", type=int, default=50,
                   help="number of time steps in the dump grid")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("converge", help="grid refinement ladder")
    common(p)
    p.add_argument("--levels", type=int, default=3)
    p.set_defaults(fn=cmd_converge)

    p = sub.add_parser("verify", help="run the verification suite")
    common(p)
    p.set_defaults(fn=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BnsError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
