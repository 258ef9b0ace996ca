"""Uniform time grids, sampled signals, quadrature, noise injection, and error metrics.

Everything downstream works on uniformly sampled scalar signals sharing one
grid.  Windows are always snapped to grid points, which keeps the sliding
integration scheme free of interpolation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import simpson

from .errors import (
    InvalidRange,
    NonFinite,
    NonIntegerSpan,
    WindowMisaligned,
    ZeroReference,
)

#: Quadrature rule used when none is requested.  "simpson" exists as a
#: test-time hook for convergence and identity studies; all estimator paths
#: run on the trapezoid rule.
DEFAULT_RULE = "trapezoid"

_ALIGN_TOL = 1e-6  # endpoint mismatch allowed, as a fraction of dt
_SPAN_TOL = 1e-9   # (tf - t0)/dt distance to the nearest integer


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t0 + i*dt, i = 0..n-1, with t0 + (n-1)*dt == tf."""

    t0: float
    tf: float
    dt: float
    n: int

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    @property
    def span(self) -> float:
        return self.tf - self.t0

    def index_of(self, t: float) -> int:
        """Grid index of time t; raises WindowMisaligned off-grid."""
        i = round((t - self.t0) / self.dt)
        if i < 0 or i >= self.n or abs(self.t0 + i * self.dt - t) > _ALIGN_TOL * self.dt:
            raise WindowMisaligned(f"t={t} is not a grid point of {self}")
        return i

    def steps_of(self, length: float) -> int:
        """Number of steps spanned by a duration; must divide evenly."""
        m = round(length / self.dt)
        if m <= 0 or abs(m * self.dt - length) > _ALIGN_TOL * self.dt:
            raise WindowMisaligned(
                f"length {length} is not an integer multiple of dt={self.dt}"
            )
        return m


def make_grid(t0: float, tf: float, dt: float) -> TimeGrid:
    """Build a uniform grid over [t0, tf] with step dt.

    The span must be an integer number of steps to 1e-9 relative.
    """
    if tf <= t0:
        raise InvalidRange(f"tf={tf} must exceed t0={t0}")
    if dt <= 0:
        raise InvalidRange(f"dt={dt} must be positive")
    ratio = (tf - t0) / dt
    m = round(ratio)
    if m == 0 or abs(ratio - m) > _SPAN_TOL * max(1.0, ratio):
        raise NonIntegerSpan(f"(tf-t0)/dt = {ratio} is not an integer")
    return TimeGrid(t0=float(t0), tf=float(tf), dt=float(dt), n=m + 1)


@dataclass(frozen=True)
class SampledSignal:
    """Scalar signal sampled on a TimeGrid.  Values are finite by construction."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n,):
            raise InvalidRange(
                f"expected {self.grid.n} samples, got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise NonFinite("signal contains non-finite samples")
        object.__setattr__(self, "values", vals)

    def window_slice(self, a: float, b: float) -> slice:
        ia, ib = self.grid.index_of(a), self.grid.index_of(b)
        if ib <= ia:
            raise InvalidRange(f"window [{a}, {b}] is empty or reversed")
        return slice(ia, ib + 1)


@dataclass(frozen=True)
class NoiseSpec:
    """Additive white Gaussian noise, std = level_percent/100 * RMS(signal)."""

    level_percent: float
    seed: int

    def __post_init__(self):
        if self.level_percent < 0:
            raise InvalidRange("noise level must be nonnegative")


def _trapezoid(values: np.ndarray, dt: float) -> float:
    # Written so a constant integrand integrates exactly.
    inner = 0.5 * (values[0] + values[-1]) + float(np.sum(values[1:-1]))
    return dt * inner


def integrate(
    f: SampledSignal,
    a: float | None = None,
    b: float | None = None,
    rule: str = DEFAULT_RULE,
) -> float:
    """Integral of f over [a, b] (defaults to the full span).

    Composite trapezoid by default.  Window endpoints must be grid points.
    """
    a = f.grid.t0 if a is None else a
    b = f.grid.tf if b is None else b
    vals = f.values[f.window_slice(a, b)]
    if rule == "trapezoid":
        return _trapezoid(vals, f.grid.dt)
    if rule == "simpson":
        return float(simpson(vals, dx=f.grid.dt))
    raise InvalidRange(f"unknown quadrature rule {rule!r}")


def add_noise(y: SampledSignal, spec: NoiseSpec) -> SampledSignal:
    """Add seeded white Gaussian noise scaled to the signal's RMS.

    The same seed always produces the same unit realization, so the noise
    for level 2L equals exactly twice the noise for level L.
    """
    if spec.level_percent == 0:
        return y
    rms = float(np.sqrt(np.mean(y.values**2)))
    scale = spec.level_percent / 100.0 * rms
    unit = np.random.default_rng(spec.seed).standard_normal(y.grid.n)
    return replace(y, values=y.values + scale * unit)


def relative_l2_error(
    x: SampledSignal,
    xhat: SampledSignal,
    a: float | None = None,
    b: float | None = None,
) -> float:
    """||x - xhat||_2 / ||x||_2 over the window, in percent.

    Norms are computed by integrating the squared signals with the shared
    trapezoid rule.
    """
    if x.grid != xhat.grid:
        raise InvalidRange("signals must share a grid")
    diff = SampledSignal(x.grid, (x.values - xhat.values) ** 2)
    ref = SampledSignal(x.grid, x.values**2)
    den = integrate(ref, a, b)
    if den <= 0.0:
        raise ZeroReference("reference signal has zero L2 norm on the window")
    num = integrate(diff, a, b)
    return 100.0 * float(np.sqrt(num / den))


# -- CSV interchange ---------------------------------------------------------
#
# Format: header row "time,<name1>,<name2>,...", one row per grid point,
# comma separator, "\n" line endings, values with 15 significant digits.

def write_signals_csv(path, grid: TimeGrid, columns: list[tuple[str, np.ndarray]]) -> None:
    times = grid.times
    for name, vals in columns:
        if len(vals) != grid.n:
            raise InvalidRange(f"column {name!r} has {len(vals)} rows, grid has {grid.n}")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["time"] + [name for name, _ in columns])
        for i in range(grid.n):
            row = [f"{times[i]:.15g}"] + [f"{vals[i]:.15g}" for _, vals in columns]
            writer.writerow(row)


def read_signals_csv(path) -> tuple[TimeGrid, dict[str, np.ndarray]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    if not rows or header[0] != "time":
        raise InvalidRange(f"{path} is not a signals CSV")
    data = np.asarray(rows)
    times = data[:, 0]
    grid = make_grid(times[0], times[-1], times[1] - times[0])
    return grid, {name: data[:, j + 1] for j, name in enumerate(header[1:])}
