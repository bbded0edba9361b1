#!/usr/bin/env python3
"""Regenerate the committed golden data under src/growfrag/golden.

Run from the repository root after any intentional change to the numerics:

    python scripts/make_golden.py [--cells 300]

Each reference configuration is solved to steady state; the profile, growth
rate, identity defects and the three reconstruction errors at the showcase
regularization weights are frozen.  A cross-check at twice the resolution
prints alongside (the identity defects should drop by about half).
"""
import argparse
import json
from pathlib import Path

from growfrag.direct import check_eigen_identities, solve_steady
from growfrag.harness import GOLDEN_ALPHAS, golden_config, golden_ids, relative_l2_error
from growfrag.inverse import ReconstructionConfig, estimate_speed, reconstruct
from growfrag.io import write_grid_csv
from growfrag.measure import add_noise
from growfrag.model import GridFunction

GOLDEN_DIR = Path(__file__).resolve().parents[1] / "src" / "growfrag" / "golden"


def freeze(config_id: str, cells: int) -> dict:
    config = golden_config(config_id, cells=cells)
    pair = solve_steady(config)
    ident = check_eigen_identities(pair, config)
    growth = config.growth_values()
    truth = GridFunction(config.grid,
                         config.division(config.grid.nodes) * pair.profile.values)
    clean = add_noise(pair, 0.0, seed=0)
    qr_alpha, fl_alpha = GOLDEN_ALPHAS[config_id]
    errors = {}
    for method, alpha, key in (("quasirev", qr_alpha, "quasirev_error"),
                               ("filtering", fl_alpha, "filtering_error"),
                               ("brute", 0.5, "brute_error")):
        rc = ReconstructionConfig(method=method, alpha=alpha)
        result = reconstruct(clean, growth, config.kernel, rc)
        errors[key] = relative_l2_error(truth, result.rate_density)
    speed_err = abs(estimate_speed(clean, growth) - config.speed) / config.speed
    meta = {
        "cells": cells,
        "length": config.grid.length,
        "malthus": pair.malthus,
        "iterations": pair.iterations,
        "malthus_identity_defect": ident.malthus_defect,
        "moment_identity_defect": ident.moment_defect,
        "speed_estimate_error": speed_err,
        "quasirev_alpha": qr_alpha,
        "filtering_alpha": fl_alpha,
        **errors,
    }
    write_grid_csv(GOLDEN_DIR / f"{config_id}_profile.csv", pair.profile, "density")
    with open(GOLDEN_DIR / f"{config_id}.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return meta


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--cells", type=int, default=300)
    parser.add_argument("--check-refined", action="store_true",
                        help="also solve at twice the resolution and report defects")
    args = parser.parse_args()
    GOLDEN_DIR.mkdir(parents=True, exist_ok=True)
    for cid in golden_ids():
        meta = freeze(cid, args.cells)
        print(f"{cid}: malthus={meta['malthus']:.8f} "
              f"d_rate={meta['malthus_identity_defect']:.4%} "
              f"d_moment={meta['moment_identity_defect']:.4%} "
              f"qr={meta['quasirev_error']:.3%} fl={meta['filtering_error']:.3%} "
              f"brute={meta['brute_error']:.3%} c_err={meta['speed_estimate_error']:.3%}")
        if args.check_refined:
            config = golden_config(cid, cells=2 * args.cells)
            pair = solve_steady(config)
            ident = check_eigen_identities(pair, config)
            print(f"  refined x2: malthus={pair.malthus:.8f} "
                  f"d_rate={ident.malthus_defect:.4%} d_moment={ident.moment_defect:.4%}")


if __name__ == "__main__":
    main()
