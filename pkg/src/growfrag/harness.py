"""Study orchestration: error metric, alpha/noise sweeps, golden regression.

The six reference configurations pair each division-rate profile with both
kernels at the growth laws and speeds used throughout the studies; their
committed steady states, growth rates and reconstruction errors live under
``growfrag/golden`` and are re-checked by ``run_golden_suite``.
"""
from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from ._version import __version__
from .direct import EigenPair, check_eigen_identities, fragmentation_step, solve_steady
from .inverse import ReconstructionConfig, estimate_speed, reconstruct
from .measure import add_noise
from .model import (
    GridFunction,
    ProblemConfig,
    RateSpec,
    build_grid,
    build_kernel,
    grid_function,
    quadrature,
)


def relative_l2_error(truth: GridFunction, estimate: GridFunction,
                      weight_exponent: float = 0.0) -> float:
    """``||truth - estimate|| / ||truth||`` in the (optionally weighted) L2 norm."""
    if truth.grid != estimate.grid:
        raise ValueError("truth and estimate live on different grids")
    diff = GridFunction(truth.grid, (truth.values - estimate.values) ** 2)
    ref = GridFunction(truth.grid, truth.values ** 2)
    denom = quadrature(ref, weight_exponent)
    if denom <= 0.0:
        raise ValueError("reference function has zero norm")
    return float(np.sqrt(quadrature(diff, weight_exponent) / denom))


# --------------------------------------------------------------------------
# reference configurations
# --------------------------------------------------------------------------

_GOLDEN_SPECS = {
    # id: (kernel kind, growth exponent, speed, division spec)
    "uniform-gx-gauss": ("uniform", 1.0, 0.015, RateSpec.gaussian_bump()),
    "uniform-gx3-tray": ("uniform", 1.0 / 3.0, 0.5, RateSpec.tray()),
    "uniform-gx2-quad": ("uniform", 0.5, 1.0, RateSpec.capped_quadratic()),
    "gaussian-gx-tray": ("gaussian", 1.0, 0.1, RateSpec.tray()),
    "gaussian-gx3-gauss": ("gaussian", 1.0 / 3.0, 0.5, RateSpec.gaussian_bump()),
    "gaussian-gx2-quad": ("gaussian", 0.5, 1.0, RateSpec.capped_quadratic()),
}

# showcase regularization weights per config: (quasirev alpha, filtering alpha)
GOLDEN_ALPHAS = {
    "uniform-gx-gauss": (0.01, 0.00355),
    "uniform-gx3-tray": (0.00648, 0.013),
    "uniform-gx2-quad": (0.0195, 0.037),
    "gaussian-gx-tray": (0.03541, 0.001),
    "gaussian-gx3-gauss": (0.03743, 0.003),
    "gaussian-gx2-quad": (0.03766, 0.03),
}

LENGTH, CELLS = 25.0, 300


def golden_config(config_id: str, cells: int = CELLS, initial: str = "step") -> ProblemConfig:
    """Instantiate one of the six reference configurations."""
    try:
        kernel_kind, exponent, speed, division = _GOLDEN_SPECS[config_id]
    except KeyError:
        raise KeyError(f"unknown config id {config_id!r}; "
                       f"choose from {sorted(_GOLDEN_SPECS)}") from None
    grid = build_grid(LENGTH, cells)
    return ProblemConfig(
        grid=grid,
        speed=speed,
        growth=RateSpec.power_law(exponent),
        division=division,
        kernel=build_kernel(kernel_kind, grid),
        initial=initial,
    )


def golden_ids() -> list[str]:
    return list(_GOLDEN_SPECS)


def config_digest(config: ProblemConfig, extra: dict | None = None) -> str:
    """Short stable hash of a configuration (plus package version)."""
    payload = {"config": config.describe(), "version": __version__}
    if extra:
        payload["extra"] = extra
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


# --------------------------------------------------------------------------
# sweeps
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    alpha: float
    epsilon: float
    seed: int
    error: float
    weighted_error: float
    speed_error: float
    failed: bool = False


@dataclass(frozen=True)
class SweepReport:
    """Grid of reconstruction errors over (alpha, seed) at one noise level."""

    config_id: str
    method: str
    rows: list[SweepRow]
    mean_error: dict[float, float]
    optimal_alpha: dict[float, float]
    provenance: str = ""


def sweep_alpha(config: ProblemConfig, method: str, epsilon: float,
                seeds, alpha_grid, pair: EigenPair | None = None,
                config_id: str = "custom", workers: int = 1,
                weight_exponent: float = 4.0) -> SweepReport:
    """Score reconstructions against the direct-problem truth over an alpha grid.

    Each (alpha, seed) cell draws one noisy measurement, reconstructs, and
    records the relative L2 error of the reconstructed division flux (and
    the weighted variant).  Solver failures flag the row and the sweep
    continues.  Rows come back sorted by (epsilon, alpha, seed) regardless
    of scheduling.
    """
    alpha_grid = list(alpha_grid)
    if not alpha_grid or sorted(alpha_grid) != alpha_grid:
        raise ValueError("alpha grid must be nonempty and ascending")
    seeds = [int(s) for s in seeds]
    if pair is None:
        pair = solve_steady(config)
    growth = config.growth_values()
    truth = GridFunction(config.grid,
                         config.division(config.grid.nodes) * pair.profile.values)

    def one(alpha: float, seed: int) -> SweepRow:
        m = add_noise(pair, epsilon, seed)
        try:
            rc = ReconstructionConfig(method=method, alpha=alpha)
            result = reconstruct(m, growth, config.kernel, rc)
        except Exception:
            return SweepRow(alpha, epsilon, seed, np.inf, np.inf, np.inf, failed=True)
        err = relative_l2_error(truth, result.rate_density)
        werr = relative_l2_error(truth, result.rate_density, weight_exponent)
        c_err = abs(result.speed - config.speed) / config.speed
        return SweepRow(alpha, epsilon, seed, err, werr, c_err)

    jobs = [(a, s) for a in alpha_grid for s in seeds]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda js: one(*js), jobs))
    else:
        rows = [one(a, s) for a, s in jobs]
    rows.sort(key=lambda r: (r.epsilon, r.alpha, r.seed))

    by_alpha: dict[float, list[float]] = {}
    for row in rows:
        if not row.failed:
            by_alpha.setdefault(row.alpha, []).append(row.error)
    mean_error = {a: float(np.mean(v)) for a, v in by_alpha.items()}
    best = min(mean_error, key=mean_error.get) if mean_error else np.nan
    return SweepReport(
        config_id=config_id,
        method=method,
        rows=rows,
        mean_error=mean_error,
        optimal_alpha={epsilon: best},
        provenance=config_digest(config, {"method": method, "epsilon": epsilon}),
    )


def combine_sweeps(reports: list[SweepReport]) -> SweepReport:
    """Merge single-noise-level sweeps of one method into a ladder report."""
    if not reports:
        raise ValueError("nothing to combine")
    methods = {r.method for r in reports}
    if len(methods) != 1:
        raise ValueError(f"cannot combine different methods {methods}")
    rows = sorted((row for r in reports for row in r.rows),
                  key=lambda r: (r.epsilon, r.alpha, r.seed))
    optimal = {}
    for r in reports:
        optimal.update(r.optimal_alpha)
    return SweepReport(
        config_id=reports[0].config_id,
        method=reports[0].method,
        rows=rows,
        mean_error=reports[0].mean_error if len(reports) == 1 else {},
        optimal_alpha=optimal,
        provenance=reports[0].provenance,
    )


# --------------------------------------------------------------------------
# golden regression suite
# --------------------------------------------------------------------------

@dataclass
class GoldenSummary:
    lines: list[str] = field(default_factory=list)
    failures: int = 0
    checks: int = 0

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def record(self, ok: bool, label: str):
        self.checks += 1
        if not ok:
            self.failures += 1
        self.lines.append(f"{'ok' if ok else 'not ok'} {self.checks} - {label}")


def _load_golden(config_id: str) -> tuple[dict, np.ndarray]:
    base = resources.files("growfrag") / "golden"
    meta = json.loads((base / f"{config_id}.json").read_text())
    profile = np.loadtxt(str(base / f"{config_id}_profile.csv"),
                         delimiter=",", skiprows=1)[:, 1]
    return meta, profile


def run_golden_suite(configs: dict[str, ProblemConfig] | None = None,
                     emit=None, strictness: float = 1.0) -> GoldenSummary:
    """Re-run the reference configurations against the committed results.

    Emits one TAP-style line per check.  The first check per configuration
    is the division-step number balance (it trips first when kernel
    normalization is broken); then growth rate, steady profile, identity
    defects and reconstruction errors are compared at fixed tolerances.
    ``strictness`` scales every tolerance (0.01 makes the comparisons 100x
    tighter, which is expected to fail and demonstrates sensitivity).
    """
    summary = GoldenSummary()
    scale = float(strictness)
    if configs is None:
        configs = {cid: golden_config(cid) for cid in golden_ids()}

    for cid, config in configs.items():
        try:
            meta, ref_profile = _load_golden(cid)
        except FileNotFoundError:
            raise FileNotFoundError(
                f"golden data for {cid!r} is missing from the package") from None

        probe = grid_function(config.grid, lambda x: np.exp(-0.5 * (x - 8.0) ** 2))
        division = config.division_values()
        dt = 0.1 / max(1.0, float(division.values.max()))
        stepped = fragmentation_step(probe, division, config.kernel, dt)
        beff = division.values.copy()
        beff[:config.kernel.report.resolved_from] = 0.0
        expected_gain = dt * float((beff * probe.values).sum()) * config.grid.dx
        balance = abs(quadrature(stepped) - quadrature(probe) - expected_gain)
        summary.record(balance <= 1e-12 * scale, f"{cid}: division-step number balance")

        pair = solve_steady(config)
        summary.record(
            abs(pair.malthus - meta["malthus"]) <= 1e-7 * scale * abs(meta["malthus"]),
            f"{cid}: growth rate matches golden",
        )
        l1 = float(np.abs(pair.profile.values - ref_profile).sum()) * config.grid.dx
        summary.record(l1 <= 1e-7 * scale, f"{cid}: steady profile matches golden (L1)")

        ident = check_eigen_identities(pair, config)
        summary.record(ident.malthus_defect <= 0.02 * scale,
                       f"{cid}: growth-rate identity within 2%")
        summary.record(ident.moment_defect <= 0.02 * scale,
                       f"{cid}: moment identity within 2%")

        growth = config.growth_values()
        truth = GridFunction(config.grid, division.values * pair.profile.values)
        m = add_noise(pair, 0.0, seed=0)
        qr_alpha, fl_alpha = GOLDEN_ALPHAS[cid]
        for method, alpha, key in (("quasirev", qr_alpha, "quasirev_error"),
                                   ("filtering", fl_alpha, "filtering_error"),
                                   ("brute", 0.5, "brute_error")):
            rc = ReconstructionConfig(method=method, alpha=alpha)
            err = relative_l2_error(truth, reconstruct(m, growth, config.kernel, rc).rate_density)
            tol = max(0.05 * meta[key], 5e-4) * scale
            summary.record(abs(err - meta[key]) <= tol,
                           f"{cid}: {method} reconstruction error matches golden")
        c_est = estimate_speed(m, growth)
        summary.record(abs(c_est - config.speed) / config.speed <= 0.01 * scale,
                       f"{cid}: speed estimate within 1% on clean data")

    if emit is not None:
        for line in summary.lines:
            emit(line)
        emit(f"# {summary.checks - summary.failures}/{summary.checks} checks passed")
    return summary
