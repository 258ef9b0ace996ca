"""Finite-window state and disturbance estimators.

Each stage turns one differential relation into algebra: inner products
against a modulating family shift derivatives off the measured output, the
unknown is expanded in a basis over the window, and a least-squares solve on
the Gram matrix returns the coefficients.  Stages run in order x2 .. xn, each
consuming the series produced before it; the disturbance stage closes the
chain using the last equation.

Two equivalent formulations are provided.  The recursive one differentiates
the previous stage's reconstruction once; the direct one reaches back to the
measured output with higher-order derivatives of the modulating functions and
never differentiates an estimate.  An offline run uses one window spanning
the whole record; the online scheme slides a fixed-length window over the
grid and reports each window's reconstruction at a configurable interior
point (fraction ``eval_point`` of the window; the default 0.5 trades half a
window of delay for accuracy, 1.0 gives the zero-delay causal variant).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .basis import (
    BASIS_KINDS,
    MONOMIAL_SCALED,
    BasisFamily,
    GramMatrix,
    design_matrix,
    to_raw_coeffs,
)
from .errors import (
    ConfigError,
    EstimationError,
    MissingPrerequisite,
    NonFinite,
    OrderUnavailable,
    WindowTooLong,
)
from .modulating import ModFunSet, check_order, eval_derivative, make_family
from .signals import SampledSignal, TimeGrid
from .systems import TriangularSystem

OFFLINE = "offline"
ONLINE = "online"
RECURSIVE = "recursive"
DIRECT = "direct"


@dataclass(frozen=True)
class StageSpec:
    """Sizes for one estimation stage.

    truncation: basis coefficients solved per window.
    family_size: modulating functions stacked per window (>= truncation).
    exponent: family exponent offset; the guaranteed order is exponent + 1.
    """

    truncation: int
    family_size: int
    exponent: int


@dataclass(frozen=True)
class EstimatorConfig:
    states: tuple[StageSpec, ...]            # one spec per estimated state x2..xn
    disturbance: StageSpec | None = None
    scheme: str = OFFLINE
    window: float | None = None              # sliding window length, online only
    stride: int = 1                          # report every stride-th window
    eval_point: float = 0.5                  # in-window evaluation offset, online
    formulation: str = RECURSIVE
    basis_kind: str = MONOMIAL_SCALED

    def state_spec(self, k: int) -> StageSpec:
        if not 2 <= k <= len(self.states) + 1:
            raise MissingPrerequisite(f"no stage spec for state x{k}")
        return self.states[k - 2]

    def validate(self, n: int, grid: TimeGrid) -> None:
        """Check every solvability and order condition, naming violations."""
        if self.formulation not in (RECURSIVE, DIRECT):
            raise ConfigError(f"unknown formulation {self.formulation!r}")
        if self.scheme not in (OFFLINE, ONLINE):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.basis_kind not in BASIS_KINDS:
            raise ConfigError(f"unknown basis kind {self.basis_kind!r}")
        if len(self.states) != n - 1:
            raise ConfigError(
                f"need one stage spec per estimated state: got {len(self.states)}, "
                f"system dimension is {n}"
            )
        for k, spec in enumerate(self.states, start=2):
            self._check_spec(spec, f"state x{k}")
            if spec.family_size < spec.truncation:
                raise ConfigError(
                    f"state x{k}: family size {spec.family_size} is below "
                    f"truncation {spec.truncation} (solvability requires S >= M)"
                )
            if self.formulation == DIRECT and spec.exponent + 1 < k:
                raise ConfigError(
                    f"state x{k}: direct formulation needs modulating order >= {k}, "
                    f"family order is {spec.exponent + 1}"
                )
        if self.disturbance is not None:
            spec = self.disturbance
            self._check_spec(spec, "disturbance")
            if spec.family_size < spec.truncation:
                raise ConfigError(
                    f"disturbance: family size {spec.family_size} is below "
                    f"truncation {spec.truncation} (solvability requires D >= N)"
                )
            if self.formulation == DIRECT and spec.exponent + 1 < n:
                raise ConfigError(
                    f"disturbance: direct formulation needs modulating order >= {n}, "
                    f"family order is {spec.exponent + 1}"
                )
        if self.scheme == ONLINE:
            if self.window is None or self.window <= 0:
                raise ConfigError("online scheme requires a positive window length")
            if self.window > grid.span + 1e-12:
                raise WindowTooLong(
                    f"window {self.window} exceeds the record span {grid.span}"
                )
            grid.steps_of(self.window)  # raises WindowMisaligned when not a multiple
            if self.stride < 1:
                raise ConfigError("stride must be >= 1")
            if not 0.0 < self.eval_point <= 1.0:
                raise ConfigError("eval_point must lie in (0, 1]")

    @staticmethod
    def _check_spec(spec: StageSpec, label: str) -> None:
        if spec.truncation < 1:
            raise ConfigError(f"{label}: truncation must be >= 1")
        if spec.family_size < 1:
            raise ConfigError(f"{label}: family size must be >= 1")
        if spec.exponent < 1:
            raise ConfigError(f"{label}: exponent offset must be >= 1")


@dataclass
class EstimateSeries:
    """Per-window coefficients and the stitched reconstruction for one target.

    values covers the full grid, NaN outside [first_valid, last_valid] (and at
    skipped windows when stride > 1).  Coefficients are stored one row per
    reported window, in the raw-monomial convention.  theta_cond is shared by
    all windows because the Gram matrix is window-invariant.
    """

    name: str
    grid: TimeGrid
    values: np.ndarray
    first_valid: int
    last_valid: int
    coeffs: np.ndarray
    window_starts: np.ndarray
    residual_norms: np.ndarray
    theta_cond: float
    rank: int
    rank_deficient: bool

    @property
    def valid_times(self) -> tuple[float, float]:
        times = self.grid.times
        return float(times[self.first_valid]), float(times[self.last_valid])


# -- window machinery ---------------------------------------------------------

@dataclass
class _SeriesView:
    """Full-grid values plus the index range on which they are defined."""

    values: np.ndarray
    lo: int
    hi: int


def _as_view(obj, grid: TimeGrid) -> _SeriesView:
    if isinstance(obj, SampledSignal):
        if obj.grid != grid:
            raise MissingPrerequisite("signal lives on a different grid")
        return _SeriesView(obj.values, 0, grid.n - 1)
    if isinstance(obj, EstimateSeries):
        if obj.grid != grid:
            raise MissingPrerequisite("estimate lives on a different grid")
        return _SeriesView(obj.values, obj.first_valid, obj.last_valid)
    arr = np.asarray(obj, dtype=float)
    if arr.shape != (grid.n,):
        raise MissingPrerequisite(f"expected {grid.n} samples, got shape {arr.shape}")
    return _SeriesView(arr, 0, grid.n - 1)


class _StageOperator:
    """Precomputed modulation rows, Gram matrix and reconstruction helpers."""

    def __init__(
        self,
        spec: StageSpec,
        basis_kind: str,
        window: float,
        dt: float,
        orders: Sequence[int],
    ):
        self.family: ModFunSet = make_family(spec.exponent, spec.family_size, window)
        self.steps = round(window / dt)
        taus = dt * np.arange(self.steps + 1)
        weights = np.full(self.steps + 1, dt)
        weights[0] = weights[-1] = dt / 2
        self.rows = {
            j: np.stack([eval_derivative(m, j, taus) for m in self.family.members]) * weights
            for j in sorted(set(orders))
        }
        self.basis = BasisFamily(kind=basis_kind, size=spec.truncation, window=window)
        self.design = design_matrix(self.basis, taus)  # (steps+1, M)
        entries = self.rows[0] @ self.design if 0 in self.rows else None
        if entries is None:
            entries = (
                np.stack([eval_derivative(m, 0, taus) for m in self.family.members])
                * weights
            ) @ self.design
        self.theta = GramMatrix(entries=entries, cond=float(np.linalg.cond(entries)))


def solve_ls(theta: GramMatrix, rhs: np.ndarray) -> np.ndarray:
    """Least-squares coefficients for Theta a = rhs (rhs of length S).

    Rank-revealing (SVD-based); rank-deficient systems return the
    minimum-norm solution.  Stacked right-hand sides may be passed as a
    (S, W) matrix.
    """
    coeffs, _, _ = _solve_windows(theta, np.atleast_2d(np.asarray(rhs, dtype=float).T).T)
    return coeffs[:, 0] if np.asarray(rhs).ndim == 1 else coeffs


def _solve_windows(theta: GramMatrix, rhs: np.ndarray):
    if not np.all(np.isfinite(theta.entries)) or not np.all(np.isfinite(rhs)):
        raise NonFinite("least-squares inputs contain non-finite entries")
    s, m = theta.entries.shape
    if s < m:
        raise ConfigError(f"underdetermined system: {s} equations for {m} unknowns")
    coeffs, _, rank, _ = np.linalg.lstsq(theta.entries, rhs, rcond=None)
    residuals = np.linalg.norm(theta.entries @ coeffs - rhs, axis=0)
    return coeffs, residuals, int(rank)


def _run_stage(
    name: str,
    grid: TimeGrid,
    cfg: EstimatorConfig,
    spec: StageSpec,
    terms: list[tuple[int, float, _SeriesView]],
) -> EstimateSeries:
    """Solve one stage given its right-hand-side terms.

    Each term is (derivative order j, sign, signal view); the right-hand side
    per window is the signed sum of <phi^(j), view> over the window.
    """
    if cfg.scheme == OFFLINE:
        window, length = grid.span, grid.n - 1
    else:
        window, length = cfg.window, grid.steps_of(cfg.window)
    op = _StageOperator(spec, cfg.basis_kind, window, grid.dt, [j for j, _, _ in terms])

    lo = max(v.lo for _, _, v in terms)
    hi = min(v.hi for _, _, v in terms)
    if hi - lo < length:
        raise WindowTooLong(
            f"{name}: window of {length} steps exceeds the valid span "
            f"[{lo}, {hi}] of its inputs"
        )

    rhs = np.zeros((spec.family_size, hi - lo - length + 1))
    for order, sign, view in terms:
        seg = view.values[lo : hi + 1]
        wins = np.lib.stride_tricks.sliding_window_view(seg, length + 1)
        rhs += sign * (wins @ op.rows[order].T).T
    coeffs, residuals, rank = _solve_windows(op.theta, rhs)

    values = np.full(grid.n, np.nan)
    if cfg.scheme == OFFLINE:
        values[:] = op.design @ coeffs[:, 0]
        first, last = 0, grid.n - 1
        starts = np.array([lo])
    else:
        k_eval = min(length, max(0, round(cfg.eval_point * length)))
        idx = lo + k_eval + np.arange(rhs.shape[1])
        values[idx] = op.design[k_eval] @ coeffs
        first, last = int(idx[0]), int(idx[-1])
        starts = lo + np.arange(rhs.shape[1])

    return EstimateSeries(
        name=name,
        grid=grid,
        values=values,
        first_valid=first,
        last_valid=last,
        coeffs=to_raw_coeffs(coeffs.T, op.basis),  # broadcasts over windows
        window_starts=starts,
        residual_norms=residuals,
        theta_cond=op.theta.cond,
        rank=rank,
        rank_deficient=rank < spec.truncation,
    )


def _input_views(
    y: SampledSignal,
    u: SampledSignal | None,
    prev: Sequence,
    grid: TimeGrid,
) -> tuple[list[_SeriesView], np.ndarray]:
    state_views = [_as_view(y, grid)] + [_as_view(p, grid) for p in prev]
    u_vals = np.zeros(grid.n) if u is None else _as_view(u, grid).values
    return state_views, u_vals


def _f_view(
    system: TriangularSystem,
    r: int,
    state_views: list[_SeriesView],
    u_vals: np.ndarray,
    grid: TimeGrid,
) -> _SeriesView:
    """Evaluate f_r on the intersection of its arguments' valid ranges."""
    used = state_views[:r]
    lo = max(v.lo for v in used)
    hi = min(v.hi for v in used)
    args = [v.values[lo : hi + 1] for v in used]
    vals = np.broadcast_to(
        np.asarray(system.fs[r - 1](args, u_vals[lo : hi + 1]), dtype=float),
        (hi - lo + 1,),
    )
    full = np.full(grid.n, np.nan)
    full[lo : hi + 1] = vals
    return _SeriesView(full, lo, hi)


# -- public estimation operations ----------------------------------------------

def estimate_state_recursive(
    k: int,
    y: SampledSignal,
    u: SampledSignal | None,
    prev: Sequence,
    system: TriangularSystem,
    cfg: EstimatorConfig,
) -> EstimateSeries:
    """Estimate x_k from the previous stage's series.

    Per window the right-hand side is -<phi_i', xhat_{k-1}> - <phi_i,
    f_{k-1}(y, xhat_2.., u)>, with the measured output standing in for x1.
    """
    grid = y.grid
    if len(prev) < k - 2:
        raise MissingPrerequisite(f"state x{k} needs estimates for x2..x{k - 1}")
    spec = cfg.state_spec(k)
    state_views, u_vals = _input_views(y, u, prev[: k - 2], grid)
    f_term = _f_view(system, k - 1, state_views, u_vals, grid)
    terms = [(1, -1.0, state_views[k - 2]), (0, -1.0, f_term)]
    return _run_stage(f"x{k}", grid, cfg, spec, terms)


def estimate_state_direct(
    k: int,
    y: SampledSignal,
    u: SampledSignal | None,
    prev: Sequence,
    system: TriangularSystem,
    cfg: EstimatorConfig,
) -> EstimateSeries:
    """Estimate x_k reaching back to the output with higher derivatives.

    Per window the right-hand side is (-1)^(k-1) <phi_i^(k-1), y> minus the
    signed sum of <phi_i^(k-1-r), f_r> for r < k; it requires a family of
    order at least k.
    """
    grid = y.grid
    if len(prev) < k - 2:
        raise MissingPrerequisite(f"state x{k} needs estimates for x2..x{k - 1}")
    spec = cfg.state_spec(k)
    window = grid.span if cfg.scheme == OFFLINE else cfg.window
    family = make_family(spec.exponent, spec.family_size, window)
    if not check_order(family, k):
        raise OrderUnavailable(
            f"state x{k}: direct formulation needs order >= {k}, "
            f"family order is {family.min_order}"
        )
    state_views, u_vals = _input_views(y, u, prev[: k - 2], grid)
    terms = [(k - 1, float((-1) ** (k - 1)), state_views[0])]
    for r in range(1, k):
        f_term = _f_view(system, r, state_views, u_vals, grid)
        terms.append((k - 1 - r, -float((-1) ** (k - 1 - r)), f_term))
    return _run_stage(f"x{k}", grid, cfg, spec, terms)


def estimate_states_all(
    y: SampledSignal,
    u: SampledSignal | None,
    system: TriangularSystem,
    cfg: EstimatorConfig,
) -> list[EstimateSeries]:
    """Run the configured formulation for every state x2..xn in order."""
    cfg.validate(system.n, y.grid)
    stage = estimate_state_direct if cfg.formulation == DIRECT else estimate_state_recursive
    series: list[EstimateSeries] = []
    for k in range(2, system.n + 1):
        try:
            series.append(stage(k, y, u, series, system, cfg))
        except Exception as exc:
            raise EstimationError(f"estimation failed at state x{k}: {exc}") from exc
    return series


def estimate_disturbance(
    y: SampledSignal,
    u: SampledSignal | None,
    states: Sequence,
    system: TriangularSystem,
    cfg: EstimatorConfig,
) -> EstimateSeries:
    """Estimate the disturbance from the last equation.

    Right-hand side per window: -<phi_i', xhat_n> - <phi_i, f_n(y, xhat.., u)>.
    """
    grid = y.grid
    if cfg.disturbance is None:
        raise ConfigError("no disturbance stage configured")
    if len(states) < system.n - 1:
        raise MissingPrerequisite("disturbance stage needs every state estimate")
    state_views, u_vals = _input_views(y, u, states[: system.n - 1], grid)
    f_term = _f_view(system, system.n, state_views, u_vals, grid)
    terms = [(1, -1.0, state_views[-1]), (0, -1.0, f_term)]
    return _run_stage("d", grid, cfg, cfg.disturbance, terms)


def estimate_disturbance_direct(
    y: SampledSignal,
    u: SampledSignal | None,
    states: Sequence,
    system: TriangularSystem,
    cfg: EstimatorConfig,
) -> EstimateSeries:
    """Estimate the disturbance using only the output and the nonlinearities.

    Right-hand side per window: (-1)^n <phi_i^(n), y> minus the signed sum of
    <phi_i^(n-r), f_r> for r = 1..n; requires a family of order at least n.
    """
    grid = y.grid
    if cfg.disturbance is None:
        raise ConfigError("no disturbance stage configured")
    if len(states) < system.n - 1:
        raise MissingPrerequisite("disturbance stage needs every state estimate")
    n = system.n
    window = grid.span if cfg.scheme == OFFLINE else cfg.window
    family = make_family(cfg.disturbance.exponent, cfg.disturbance.family_size, window)
    if not check_order(family, n):
        raise OrderUnavailable(
            f"disturbance: direct formulation needs order >= {n}, "
            f"family order is {family.min_order}"
        )
    state_views, u_vals = _input_views(y, u, states[: n - 1], grid)
    terms = [(n, float((-1) ** n), state_views[0])]
    for r in range(1, n + 1):
        f_term = _f_view(system, r, state_views, u_vals, grid)
        terms.append((n - r, -float((-1) ** (n - r)), f_term))
    return _run_stage("d", grid, cfg, cfg.disturbance, terms)


def run_online(
    y: SampledSignal,
    u: SampledSignal | None,
    system: TriangularSystem,
    cfg: EstimatorConfig,
) -> dict[str, EstimateSeries]:
    """Sliding-window estimation of every state and the disturbance.

    Stages are chained densely (every window) so later stages see gap-free
    inputs; the configured stride only thins the reported series.
    """
    if cfg.scheme != ONLINE:
        raise ConfigError("run_online requires cfg.scheme == 'online'")
    cfg.validate(system.n, y.grid)
    states = estimate_states_all(y, u, system, cfg)
    out = {s.name: _thin(s, cfg.stride) for s in states}
    if cfg.disturbance is not None:
        dist_fn = (
            estimate_disturbance_direct if cfg.formulation == DIRECT else estimate_disturbance
        )
        try:
            dist = dist_fn(y, u, states, system, cfg)
        except Exception as exc:
            raise EstimationError(f"estimation failed at disturbance stage: {exc}") from exc
        out["d"] = _thin(dist, cfg.stride)
    return out


def _thin(series: EstimateSeries, stride: int) -> EstimateSeries:
    if stride <= 1 or len(series.window_starts) <= 1:
        return series
    keep = np.arange(0, len(series.window_starts), stride)
    eval_offset = series.first_valid - series.window_starts[0]
    values = np.full(series.grid.n, np.nan)
    kept_idx = series.window_starts[keep] + eval_offset
    values[kept_idx] = series.values[kept_idx]
    return EstimateSeries(
        name=series.name,
        grid=series.grid,
        values=values,
        first_valid=int(kept_idx[0]),
        last_valid=int(kept_idx[-1]),
        coeffs=series.coeffs[keep],
        window_starts=series.window_starts[keep],
        residual_norms=series.residual_norms[keep],
        theta_cond=series.theta_cond,
        rank=series.rank,
        rank_deficient=series.rank_deficient,
    )
