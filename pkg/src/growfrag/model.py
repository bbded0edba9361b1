"""Grids, rate functions, fragmentation kernels and the discrete function algebra.

Everything downstream (steady solver, measurement model, reconstruction)
works on node samples over a uniform size mesh ``x_i = i*dx`` for
``i = 0..cells``.  Integrals are node-based rectangle sums ``sum f_i w_i dx``,
which is the quadrature the discrete systems in the solvers are written for;
swapping in a higher-order rule would change their triangular matrices.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml


# --------------------------------------------------------------------------
# grid and grid functions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Grid:
    """Uniform 1-D size mesh on [0, length] with ``cells`` cells.

    Nodes are ``x_i = i * dx`` for ``i = 0..cells`` (``cells + 1`` values),
    ``dx = length / cells``.
    """

    length: float
    cells: int

    def __post_init__(self):
        if not (self.length > 0):
            raise ValueError(f"grid length must be positive, got {self.length}")
        if self.cells < 2:
            raise ValueError(f"grid needs at least 2 cells, got {self.cells}")

    @property
    def dx(self) -> float:
        return self.length / self.cells

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.cells + 1) * self.dx

    @property
    def npoints(self) -> int:
        return self.cells + 1


def build_grid(length: float, cells: int) -> Grid:
    """Build the uniform mesh; ``dx`` is exactly ``length / cells``."""
    return Grid(float(length), int(cells))


@dataclass(frozen=True)
class GridFunction:
    """A real function sampled at the grid nodes (density or rate)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.npoints,):
            raise ValueError(
                f"expected {self.grid.npoints} node values, got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid function values must be finite")
        object.__setattr__(self, "values", vals)


def grid_function(grid: Grid, f) -> GridFunction:
    """Sample a callable or array onto the grid nodes."""
    if callable(f):
        vals = np.asarray(f(grid.nodes), dtype=float)
    else:
        vals = np.asarray(f, dtype=float)
    return GridFunction(grid, vals)


def quadrature(f: GridFunction, weight_exponent: float = 0.0) -> float:
    """Node-based rectangle integral ``sum_i f_i x_i^p dx``.

    For negative exponents the ``x = 0`` node is dropped (its weight is
    singular there); for ``p = 0`` the node-0 term is included with unit
    weight.
    """
    x = f.grid.nodes
    p = float(weight_exponent)
    if p == 0.0:
        s = float(f.values.sum())
    elif p > 0:
        s = float((f.values * x ** p).sum())
    else:
        s = float((f.values[1:] * x[1:] ** p).sum())
    return s * f.grid.dx


# --------------------------------------------------------------------------
# rate functions (growth and division)
# --------------------------------------------------------------------------

_TRAY_LO, _TRAY_HI = 2.0, 15.0


def _tray(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    mid = ((x - _TRAY_LO) / (_TRAY_HI - _TRAY_LO)) ** 2
    return np.where(x < _TRAY_LO, 0.0, np.where(x > _TRAY_HI, 1.0, mid))


@dataclass(frozen=True)
class RateSpec:
    """A named size-dependent rate: growth speed shape or division rate.

    Kinds
    -----
    ``power``            x**exponent (used for the growth shape)
    ``capped-quadratic`` min(1, x^2/10)
    ``gaussian-bump``    exp(-0.08 (x-12)^2)
    ``tray``             0 below 2, ((x-2)/13)^2 on [2,15], 1 above 15
    ``table``            user-supplied node values
    """

    kind: str
    params: dict = field(default_factory=dict)

    @classmethod
    def power_law(cls, exponent: float) -> "RateSpec":
        return cls("power", {"exponent": float(exponent)})

    @classmethod
    def capped_quadratic(cls) -> "RateSpec":
        return cls("capped-quadratic")

    @classmethod
    def gaussian_bump(cls) -> "RateSpec":
        return cls("gaussian-bump")

    @classmethod
    def tray(cls) -> "RateSpec":
        return cls("tray")

    @classmethod
    def from_table(cls, values) -> "RateSpec":
        vals = np.asarray(values, dtype=float)
        if np.any(vals < 0):
            raise ValueError("table rate values must be nonnegative")
        return cls("table", {"values": vals})

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "power":
            return x ** self.params["exponent"]
        if self.kind == "capped-quadratic":
            return np.minimum(1.0, x * x / 10.0)
        if self.kind == "gaussian-bump":
            return np.exp(-0.08 * (x - 12.0) ** 2)
        if self.kind == "tray":
            return _tray(x)
        if self.kind == "table":
            vals = np.asarray(self.params["values"], dtype=float)
            if vals.shape != x.shape:
                raise ValueError("table rate length does not match the grid")
            return vals
        raise ValueError(f"unknown rate kind {self.kind!r}")

    def sample(self, grid: Grid) -> GridFunction:
        return GridFunction(grid, self(grid.nodes))


# --------------------------------------------------------------------------
# fragmentation kernels
# --------------------------------------------------------------------------

# Daughter-size distribution per mother column j: entries[i, j] ~ kappa(x_i, x_j).
# Columns 0 and 1 are identically zero: a mother of size 0 has no daughters,
# and a mother of size dx admits only the degenerate splits {0, dx}, which the
# mesh cannot represent without making the one-step division operator
# (I - 2 K dx) singular in its first row.  Division is therefore suppressed
# below node RESOLVED_FROM everywhere in the package.
RESOLVED_FROM = 2

_SS_SIGMA = 0.5  # self-similar gaussian: mean 1/2, variance 1/4, cut to [0,1]


def _trunc_gauss_density() -> Callable[[np.ndarray], np.ndarray]:
    z0 = (0.0 - 0.5) / (_SS_SIGMA * math.sqrt(2.0))
    z1 = (1.0 - 0.5) / (_SS_SIGMA * math.sqrt(2.0))
    mass = 0.5 * (math.erf(z1) - math.erf(z0))
    norm = 1.0 / (_SS_SIGMA * math.sqrt(2.0 * math.pi) * mass)

    def density(z: np.ndarray) -> np.ndarray:
        return norm * np.exp(-((z - 0.5) ** 2) / (2.0 * _SS_SIGMA ** 2))

    return density


@dataclass(frozen=True)
class KernelReport:
    """Construction diagnostics for a kernel matrix.

    ``max_mass_defect`` is the worst deviation of a resolved column's total
    mass from 1 (after normalization this is rounding noise).
    ``max_mean_defect`` is the worst relative deviation of a resolved
    column's mean daughter size from half the mother size.
    """

    max_mass_defect: float
    max_mean_defect: float
    resolved_from: int = RESOLVED_FROM


@dataclass(frozen=True)
class KernelMatrix:
    """Discretized daughter-size distribution with unit-mass columns."""

    grid: Grid
    entries: np.ndarray
    kind: str
    report: KernelReport

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.entries)


def _kernel_report(entries: np.ndarray, grid: Grid) -> KernelReport:
    x, dx = grid.nodes, grid.dx
    cols = entries[:, RESOLVED_FROM:]
    mass = cols.sum(axis=0) * dx
    mean = (x[:, None] * cols).sum(axis=0) * dx
    mean_defect = np.abs(mean / (x[RESOLVED_FROM:] / 2.0) - 1.0)
    return KernelReport(
        max_mass_defect=float(np.abs(mass - 1.0).max()),
        max_mean_defect=float(mean_defect.max()),
    )


def build_kernel(kind: str, grid: Grid, table: np.ndarray | None = None) -> KernelMatrix:
    """Build a fragmentation kernel matrix with normalized columns.

    Kinds: ``uniform`` (flat daughter density 1/mother), ``gaussian``
    (self-similar with a symmetric truncated-gaussian profile on [0, 1]),
    ``mitosis`` (two equal halves; the half-size point mass is split
    linearly between its two bracketing nodes, which keeps the column mean
    exact), and ``table`` (user matrix, renormalized).

    Every column ``j >= 2`` is scaled to unit mass ``sum_i k_ij dx = 1``;
    entries above the diagonal row (``i > j``) are zero.
    """
    x, dx, n = grid.nodes, grid.dx, grid.npoints
    entries = np.zeros((n, n))
    kind = {"self-similar-gaussian": "gaussian", "equal-mitosis": "mitosis"}.get(kind, kind)

    if kind == "uniform":
        for j in range(RESOLVED_FROM, n):
            entries[: j + 1, j] = 1.0 / x[j]
    elif kind == "gaussian":
        profile = _trunc_gauss_density()
        for j in range(RESOLVED_FROM, n):
            entries[: j + 1, j] = profile(x[: j + 1] / x[j]) / x[j]
    elif kind == "mitosis":
        for j in range(RESOLVED_FROM, n):
            i, rem = divmod(j, 2)  # half the mother size, in index units
            w = rem / 2.0
            entries[i, j] = (1.0 - w) / dx
            if w > 0.0:
                entries[i + 1, j] = w / dx
    elif kind == "table":
        if table is None:
            raise ValueError("table kernel needs an entry matrix")
        entries = np.asarray(table, dtype=float).copy()
        if entries.shape != (n, n):
            raise ValueError(f"kernel table must be {(n, n)}, got {entries.shape}")
        if np.any(entries < 0):
            raise ValueError("kernel entries must be nonnegative")
        entries[np.tril_indices(n, k=-1)] = 0.0
        entries[:, :RESOLVED_FROM] = 0.0
    else:
        raise ValueError(f"unknown kernel kind {kind!r}")

    for j in range(RESOLVED_FROM, n):
        mass = entries[:, j].sum() * dx
        if mass <= 0:
            raise ValueError(f"kernel column {j} has no mass")
        entries[:, j] /= mass

    return KernelMatrix(grid, entries, kind, _kernel_report(entries, grid))


def effective_division(division: GridFunction, kernel: KernelMatrix) -> np.ndarray:
    """Division-rate samples with the unresolved low nodes masked to zero.

    Keeps the discrete number balance of a fragmentation step exact: every
    division event removes one mother through a column that redistributes
    exactly two daughters.
    """
    vals = division.values.copy()
    vals[: kernel.report.resolved_from] = 0.0
    return vals


# --------------------------------------------------------------------------
# problem configuration
# --------------------------------------------------------------------------

INITIAL_KINDS = ("step", "maxwellian", "table")


def initial_profile(grid: Grid, kind: str, table: np.ndarray | None = None) -> GridFunction:
    """Starting density: a step on [5, 10], a Maxwellian at 10, or a table."""
    x = grid.nodes
    if kind == "step":
        vals = np.where((x >= 5.0) & (x <= 10.0), 0.2, 0.0)
    elif kind == "maxwellian":
        vals = np.exp(-((x - 10.0) ** 2) / 0.4) / math.sqrt(0.4 * math.pi)
    elif kind == "table":
        if table is None:
            raise ValueError("table initial data needs node values")
        vals = np.asarray(table, dtype=float)
    else:
        raise ValueError(f"unknown initial kind {kind!r}")
    if np.any(vals < 0) or vals.sum() <= 0:
        raise ValueError("initial data must be nonnegative with positive mass")
    return GridFunction(grid, vals)


@dataclass(frozen=True)
class ProblemConfig:
    """Full direct-problem setup: mesh, rates, kernel and initial datum."""

    grid: Grid
    speed: float
    growth: RateSpec
    division: RateSpec
    kernel: KernelMatrix
    initial: str = "step"

    def __post_init__(self):
        if not (self.speed > 0):
            raise ValueError("advection speed multiplier must be positive")
        if np.any(self.growth(self.grid.nodes)[1:] <= 0):
            raise ValueError("growth rate must be positive for x > 0")
        if np.any(self.division(self.grid.nodes) < 0):
            raise ValueError("division rate must be nonnegative")

    def growth_values(self) -> GridFunction:
        return self.growth.sample(self.grid)

    def division_values(self) -> GridFunction:
        return self.division.sample(self.grid)

    def initial_values(self) -> GridFunction:
        return initial_profile(self.grid, self.initial)

    def describe(self) -> dict:
        """Plain-data echo of the configuration (for manifests and hashing)."""
        return {
            "L": self.grid.length,
            "ka": self.grid.cells,
            "c": self.speed,
            "g": {"kind": self.growth.kind,
                  **{k: v for k, v in self.growth.params.items() if k != "values"}},
            "B": {"kind": self.division.kind,
                  **{k: v for k, v in self.division.params.items() if k != "values"}},
            "kernel": self.kernel.kind,
            "initial": self.initial,
        }


def _rate_from_section(section: dict, name: str) -> RateSpec:
    try:
        kind = section["kind"]
    except KeyError:
        raise ConfigError(f"section [{name}] needs a 'kind' key") from None
    if kind == "power":
        if "exponent" not in section:
            raise ConfigError(f"[{name}] kind 'power' needs an 'exponent'")
        return RateSpec.power_law(section["exponent"])
    if kind in ("capped-quadratic", "gaussian-bump", "tray"):
        return RateSpec(kind)
    if kind == "table":
        if "values" not in section:
            raise ConfigError(f"[{name}] kind 'table' needs 'values'")
        return RateSpec.from_table(section["values"])
    raise ConfigError(f"[{name}] has unknown kind {kind!r}")


def config_from_dict(raw: dict) -> ProblemConfig:
    """Build a ProblemConfig from parsed key-value data (see docs/config schema)."""
    try:
        length, cells, speed = raw["L"], raw["ka"], raw["c"]
    except KeyError as err:
        raise ConfigError(f"config is missing top-level key {err}") from None
    for name in ("g", "B", "kernel"):
        if name not in raw:
            raise ConfigError(f"config is missing section [{name}]")
    try:
        grid = build_grid(length, cells)
        kernel = build_kernel(raw["kernel"].get("kind", "uniform"), grid)
        initial = raw.get("initial", {}).get("kind", "step")
        if initial not in INITIAL_KINDS:
            raise ConfigError(f"unknown initial kind {initial!r}")
        return ProblemConfig(
            grid=grid,
            speed=float(speed),
            growth=_rate_from_section(raw["g"], "g"),
            division=_rate_from_section(raw["B"], "B"),
            kernel=kernel,
            initial=initial,
        )
    except ValueError as err:
        raise ConfigError(str(err)) from err


def load_config(path) -> ProblemConfig:
    """Read a TOML problem configuration file."""
    with open(path, "rb") as fh:
        try:
            raw = _toml.load(fh)
        except _toml.TOMLDecodeError as err:
            raise ConfigError(f"cannot parse {path}: {err}") from err
    return config_from_dict(raw)
