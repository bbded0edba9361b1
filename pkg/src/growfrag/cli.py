"""Command-line front end: direct, measure, invert, coercivity, sweep, golden.

Every subcommand is a thin adapter over the library calls; artifacts land
in a run directory and are listed in its manifest.json.  Progress and
human-readable notes go to stderr, machine-readable results to files (plus
TAP lines on stdout for ``golden`` and the PASS/FAIL line of
``coercivity``).

Exit codes: 0 success, 1 solver or convergence failure, 2 usage/config error.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from ._backend import backend_name
from ._version import __version__
from .coercivity import COL_WINDOW, ROW_WINDOW, certify_coercivity
from .direct import check_eigen_identities, solve_steady
from .errors import ConfigError, GrowFragError
from .harness import (
    combine_sweeps,
    config_digest,
    golden_config,
    golden_ids,
    run_golden_suite,
    sweep_alpha,
)
from .inverse import ReconstructionConfig, reconstruct
from .io import RunManifest, ensure_run_dir, read_grid_csv, write_csv, write_grid_csv, write_json
from .measure import Measurement, add_noise
from .model import GridFunction, build_grid, build_kernel, load_config

_METHODS = {"brute": "brute", "qr": "quasirev", "filter": "filtering"}


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


# --------------------------------------------------------------------------
# subcommand implementations
# --------------------------------------------------------------------------

def _cmd_direct(args) -> int:
    config = load_config(args.config)
    run_dir = ensure_run_dir(args.outdir, f"direct-{config_digest(config)}")
    manifest = RunManifest("direct", config.describe(), inputs=[str(args.config)])
    _log(f"solving direct problem on {config.grid.cells} cells ({backend_name()} backend)")

    snapshots = []

    def on_snapshot(step, profile):
        path = manifest.add_output(run_dir / f"snapshot_{step:07d}.csv")
        write_grid_csv(path, profile, "density")
        snapshots.append(step)

    pair = solve_steady(
        config, tol=args.tol, max_steps=args.max_steps, safety=args.safety,
        snapshot_every=args.snapshot_every,
        on_snapshot=on_snapshot if args.snapshot_every else None,
    )
    ident = check_eigen_identities(pair, config)
    write_grid_csv(manifest.add_output(run_dir / "steady.csv"), pair.profile, "density")
    write_json(manifest.add_output(run_dir / "summary.json"), {
        "malthus": pair.malthus,
        "iterations": pair.iterations,
        "residual": pair.residual,
        "dt": pair.dt,
        "malthus_identity_defect": ident.malthus_defect,
        "moment_identity_defect": ident.moment_defect,
        "safety": args.safety,
        "tol": args.tol,
        "backend": backend_name(),
        "version": __version__,
    })
    manifest.write(run_dir, 0)
    _log(f"growth rate {pair.malthus:.8f} after {pair.iterations} steps -> {run_dir}")
    return 0


def _cmd_measure(args) -> int:
    profile = read_grid_csv(args.profile)
    if args.malthus is not None:
        malthus = args.malthus
    elif args.summary is not None:
        with open(args.summary, encoding="utf-8") as fh:
            malthus = json.load(fh)["malthus"]
    else:
        raise ConfigError("measure needs --malthus or --summary")

    from .direct import EigenPair  # local: only the container is needed here
    pair = EigenPair(profile, float(malthus), 0, 0.0, 0.0)
    m = add_noise(pair, args.epsilon, args.seed, perturb_malthus=args.perturb_malthus)

    run_dir = ensure_run_dir(args.outdir, f"measure-e{args.epsilon}-s{args.seed}")
    manifest = RunManifest("measure",
                           {"epsilon": args.epsilon, "seed": args.seed,
                            "perturb_malthus": args.perturb_malthus},
                           inputs=[str(args.profile)])
    write_grid_csv(manifest.add_output(run_dir / "noisy.csv"), m.profile, "density")
    write_json(manifest.add_output(run_dir / "measurement.json"), {
        "epsilon": m.epsilon, "seed": m.seed, "malthus": m.malthus,
    })
    manifest.write(run_dir, 0)
    _log(f"measurement written -> {run_dir}")
    return 0


def _load_measurement(args) -> Measurement:
    profile = read_grid_csv(args.profile)
    malthus, epsilon, seed = args.malthus, 0.0, 0
    if args.meta is not None:
        with open(args.meta, encoding="utf-8") as fh:
            meta = json.load(fh)
        malthus = meta["malthus"] if malthus is None else malthus
        epsilon = meta.get("epsilon", 0.0)
        seed = meta.get("seed", 0)
    if malthus is None:
        raise ConfigError("invert needs --malthus or --meta")
    return Measurement(profile, float(malthus), float(epsilon), int(seed))


def _cmd_invert(args) -> int:
    m = _load_measurement(args)
    grid = m.grid
    if args.growth_csv is not None:
        growth = read_grid_csv(args.growth_csv)
        if growth.grid != grid:
            raise ConfigError("growth CSV grid does not match the profile grid")
    else:
        growth = GridFunction(grid, grid.nodes ** args.growth_exponent)
    kernel = build_kernel(args.kernel, grid)

    rc = ReconstructionConfig(
        method=_METHODS[args.method], alpha=args.alpha,
        qr_exponent=args.k, weight_exponent=args.p, floor=args.n_floor,
    )
    result = reconstruct(m, growth, kernel, rc, true_speed=args.true_c)

    run_dir = ensure_run_dir(args.outdir, f"invert-{args.method}-a{args.alpha}")
    manifest = RunManifest("invert", {
        "method": args.method, "alpha": args.alpha, "k": args.k, "p": args.p,
        "n_floor": args.n_floor, "true_c": args.true_c, "kernel": args.kernel,
    }, inputs=[str(args.profile)])
    write_csv(manifest.add_output(run_dir / "reconstruction.csv"),
              ["x", "rate_density", "division_rate"],
              [grid.nodes, result.rate_density.values, result.division.values])
    write_json(manifest.add_output(run_dir / "diagnostics.json"), {
        "speed": result.speed, "method": result.method, "alpha": result.alpha,
        **result.diagnostics,
    })
    manifest.write(run_dir, 0)
    _log(f"reconstruction ({result.method}) -> {run_dir}; speed estimate {result.speed:.6g}")
    return 0


def _cmd_coercivity(args) -> int:
    grid = build_grid(args.length, args.cells)
    kernel = build_kernel(args.kernel, grid)
    report = certify_coercivity(kernel, args.p, args.r,
                                row_window=(args.row_lo, args.row_hi),
                                col_window=(args.col_lo, args.col_hi))
    payload = {
        "kernel": args.kernel, "L": args.length, "ka": args.cells,
        "r": report.r, "p": report.p,
        "row_moment": report.row_moment, "col_moment": report.col_moment,
        "product": report.product, "beta": report.beta,
        "satisfied": report.satisfied,
    }
    print(json.dumps(payload, sort_keys=True))
    print(f"{'PASS' if report.satisfied else 'FAIL'}: product={report.product:.6f} "
          f"(threshold 0.25), beta={report.beta:.6f}")
    return 0


def _cmd_sweep(args) -> int:
    config = load_config(args.config)
    method = _METHODS[args.method]
    alphas = np.geomspace(args.alpha_min, args.alpha_max, args.alpha_count)
    seeds = list(range(args.seed0, args.seed0 + args.seeds))
    _log(f"direct solve for the sweep truth ({backend_name()} backend)")
    pair = solve_steady(config)
    reports = []
    for eps in args.epsilon:
        _log(f"sweep eps={eps}: {len(alphas)} alphas x {len(seeds)} seeds")
        reports.append(sweep_alpha(config, method, eps, seeds, list(alphas),
                                   pair=pair, workers=args.workers))
    merged = combine_sweeps(reports)

    run_dir = ensure_run_dir(args.outdir, f"sweep-{merged.provenance}")
    manifest = RunManifest("sweep", {
        "method": args.method, "epsilon": args.epsilon, "seeds": args.seeds,
        "alpha_grid": [float(a) for a in alphas], "config": config.describe(),
    }, inputs=[str(args.config)])
    rows = merged.rows
    write_csv(manifest.add_output(run_dir / "sweep.csv"),
              ["alpha", "epsilon", "seed", "error", "weighted_error", "speed_error"],
              [np.array([r.alpha for r in rows]),
               np.array([r.epsilon for r in rows]),
               np.array([float(r.seed) for r in rows]),
               np.array([r.error for r in rows]),
               np.array([r.weighted_error for r in rows]),
               np.array([r.speed_error for r in rows])])
    write_json(manifest.add_output(run_dir / "summary.json"), {
        "method": args.method,
        "optimal_alpha": {str(k): v for k, v in merged.optimal_alpha.items()},
        "provenance": merged.provenance,
        "failed_rows": sum(r.failed for r in rows),
    })
    manifest.write(run_dir, 0)
    _log(f"sweep -> {run_dir}")
    return 0


def _cmd_golden(args) -> int:
    ids = args.only if args.only else golden_ids()
    configs = {cid: golden_config(cid) for cid in ids}
    summary = run_golden_suite(configs, emit=print)
    return 0 if summary.passed else 1


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="growfrag",
        description="Growth-fragmentation steady states and division-rate reconstruction.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("direct", help="solve the direct problem to its steady state")
    p.add_argument("--config", required=True, help="TOML problem configuration")
    p.add_argument("--outdir", default="runs")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-steps", type=int, default=2_000_000)
    p.add_argument("--safety", type=float, default=0.9)
    p.add_argument("--snapshot-every", type=int, default=None,
                   help="write an intermediate profile CSV every S steps")
    p.set_defaults(fn=_cmd_direct)

    p = sub.add_parser("measure", help="add multiplicative noise to a steady profile")
    p.add_argument("--profile", required=True, help="steady profile CSV (x, density)")
    p.add_argument("--malthus", type=float, default=None, help="growth rate of the profile")
    p.add_argument("--summary", default=None, help="summary.json from a direct run")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--perturb-malthus", action="store_true")
    p.add_argument("--outdir", default="runs")
    p.set_defaults(fn=_cmd_measure)

    p = sub.add_parser("invert", help="reconstruct the division rate from a measurement")
    p.add_argument("--method", choices=sorted(_METHODS), required=True)
    p.add_argument("--profile", required=True, help="measured profile CSV")
    p.add_argument("--malthus", type=float, default=None)
    p.add_argument("--meta", default=None, help="measurement.json sidecar")
    p.add_argument("--growth-exponent", type=float, default=1.0,
                   help="power-law growth exponent (ignored with --growth-csv)")
    p.add_argument("--growth-csv", default=None, help="growth rate CSV on the same grid")
    p.add_argument("--kernel", default="uniform",
                   choices=["uniform", "gaussian", "mitosis"])
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--k", type=float, default=2.34, help="stabilizer exponent (qr)")
    p.add_argument("--p", type=float, default=4.0, help="weight exponent (diagnostics)")
    p.add_argument("--n-floor", type=float, default=None,
                   help="division floor; default 1e-12 * max(reference)")
    p.add_argument("--true-c", type=float, default=None,
                   help="override the speed estimator with a known value")
    p.add_argument("--outdir", default="runs")
    p.set_defaults(fn=_cmd_invert)

    p = sub.add_parser("coercivity", help="certify weighted-space solvability of a kernel")
    p.add_argument("--kernel", default="uniform", choices=["uniform", "gaussian", "mitosis"])
    p.add_argument("--length", type=float, default=25.0)
    p.add_argument("--cells", type=int, default=300)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--row-lo", type=float, default=ROW_WINDOW[0])
    p.add_argument("--row-hi", type=float, default=ROW_WINDOW[1])
    p.add_argument("--col-lo", type=float, default=COL_WINDOW[0])
    p.add_argument("--col-hi", type=float, default=COL_WINDOW[1])
    p.set_defaults(fn=_cmd_coercivity)

    p = sub.add_parser("sweep", help="error-vs-alpha study against the direct truth")
    p.add_argument("--config", required=True)
    p.add_argument("--method", choices=sorted(_METHODS), required=True)
    p.add_argument("--epsilon", type=float, action="append", required=True,
                   help="noise level; repeat for a ladder")
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--seed0", type=int, default=1000)
    p.add_argument("--alpha-min", type=float, default=1e-3)
    p.add_argument("--alpha-max", type=float, default=0.9)
    p.add_argument("--alpha-count", type=int, default=12)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--outdir", default="runs")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("golden", help="re-run the reference configurations (TAP output)")
    p.add_argument("--only", nargs="*", default=None, help="subset of config ids")
    p.set_defaults(fn=_cmd_golden)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as err:
        _log(f"configuration error: {err}")
        return 2
    except (ValueError, FileNotFoundError) as err:
        _log(f"invalid input: {err}")
        return 2
    except GrowFragError as err:
        _log(f"solver failure: {err}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
