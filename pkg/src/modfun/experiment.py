"""Experiment configs, the simulate -> noise -> estimate -> compare pipeline,
and summary reporting.

Configs are single JSON documents (schema_version 1):

    {
      "schema_version": 1,
      "name": "pendulum-table1",
      "system": "pendulum",                  # preset name, or an inline spec
      "x0": [1.0, 0.0],                      # optional initial-state override
      "grid": {"t0": 0.0, "tf": 10.0, "dt": 0.01},
      "estimator": {
        "scheme": "online", "window": 1.0, "stride": 1, "eval_point": 0.5,
        "formulation": "recursive", "basis": "monomial-scaled",
        "states": [{"truncation": 7, "family_size": 7, "exponent": 2}],
        "disturbance": {"truncation": 3, "family_size": 3, "exponent": 2}
      },
      "noise": {"levels_percent": [0, 1, 3, 5, 10], "replicates": 10,
                "master_seed": 72011},
      "baselines": {"sto": {"fplus": 6.0}}    # optional
    }

An inline system spec replaces the preset name with expression strings:

    "system": {"n": 2, "f": ["0", "-x1"], "d": "0.5*sin(t)", "x0": [1, 0]}

where f_k may use x1..xk, u and t, and d may use t and x1..xn.

All randomness flows from the master seed: the noise seed for (level index
l, replicate r) is SeedSequence([master_seed, l, r]).  Artifacts are
bit-identical for identical configs.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .basis import MONOMIAL_SCALED
from .errors import ConfigError
from .estimator import (
    DIRECT,
    OFFLINE,
    ONLINE,
    RECURSIVE,
    EstimateSeries,
    EstimatorConfig,
    StageSpec,
    estimate_disturbance,
    estimate_disturbance_direct,
    estimate_states_all,
    run_online,
)
from .signals import (
    NoiseSpec,
    SampledSignal,
    TimeGrid,
    add_noise,
    make_grid,
    relative_l2_error,
    write_signals_csv,
)
from .systems import (
    SimResult,
    StoConfig,
    TriangularSystem,
    academic3,
    pendulum,
    simulate,
    sto_estimate,
)

SCHEMA_VERSION = 1
SUMMARY_HEADER = "noise_pct,seed,err_sto_pct,err_mf_pct,err_d_pct"

#: Fraction of the valid span dropped at each end for disturbance metrics;
#: polynomial bases are least reliable at the window boundary.
DIST_TRIM = 0.05

_SYSTEM_PRESETS = {"pendulum": pendulum, "academic3": academic3}

_EXPR_NAMES = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "tanh": np.tanh,
    "exp": np.exp, "log": np.log, "sqrt": np.sqrt, "abs": np.abs,
    "sign": np.sign, "pi": np.pi,
}


@dataclass(frozen=True)
class NoisePlan:
    levels_percent: tuple[float, ...]
    replicates: int
    master_seed: int

    def noise_seed(self, level_index: int, replicate: int) -> int:
        ss = np.random.SeedSequence([self.master_seed, level_index, replicate])
        return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    raw: dict                   # the parsed JSON document (replicated to workers)
    system: TriangularSystem
    grid: TimeGrid
    estimator: EstimatorConfig
    noise: NoisePlan
    sto: StoConfig | None


def _compile_expr(expr: str, names: list[str]):
    code = compile(expr, "<system-config>", "eval")
    unknown = set(code.co_names) - set(names) - set(_EXPR_NAMES)
    if unknown:
        raise ConfigError(f"expression {expr!r} uses unknown names {sorted(unknown)}")

    def fn(env: dict):
        return eval(code, {"__builtins__": {}}, {**_EXPR_NAMES, **env})

    return fn


def _system_from_spec(spec, x0_override) -> TriangularSystem:
    if isinstance(spec, str):
        if spec not in _SYSTEM_PRESETS:
            raise ConfigError(
                f"unknown system preset {spec!r}; available: {sorted(_SYSTEM_PRESETS)}"
            )
        system = _SYSTEM_PRESETS[spec]()
    elif isinstance(spec, dict):
        n = int(spec["n"])
        if len(spec.get("f", ())) != n:
            raise ConfigError(f"inline system needs {n} 'f' expressions")
        state_names = [f"x{i}" for i in range(1, n + 1)]
        fs = []
        for k, expr in enumerate(spec["f"], start=1):
            fn = _compile_expr(expr, state_names[:k] + ["u"])
            fs.append(
                lambda x, u, _fn=fn, _k=k: _fn(
                    {f"x{i + 1}": x[i] for i in range(_k)} | {"u": u}
                )
            )
        d_fn = _compile_expr(spec.get("d", "0"), state_names + ["t"])

        def dist(t, x, _fn=d_fn, _n=n):
            return _fn({f"x{i + 1}": x[i] for i in range(_n)} | {"t": t})

        x0 = spec.get("x0")
        if x0 is None or len(x0) != n:
            raise ConfigError("inline system needs an 'x0' of matching length")
        system = TriangularSystem(
            n=n, fs=tuple(fs), disturbance=dist, x0=tuple(float(v) for v in x0),
            name="custom",
        )
    else:
        raise ConfigError("'system' must be a preset name or an inline spec")
    if x0_override is not None:
        if len(x0_override) != system.n:
            raise ConfigError(f"x0 override must have {system.n} entries")
        system = system.with_x0(x0_override)
    return system


def _stage_from_dict(d: dict, label: str) -> StageSpec:
    try:
        return StageSpec(
            truncation=int(d["truncation"]),
            family_size=int(d["family_size"]),
            exponent=int(d["exponent"]),
        )
    except KeyError as exc:
        raise ConfigError(f"{label}: missing field {exc}") from exc


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Parse and fully validate a config document."""
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(
            f"unsupported schema_version {doc.get('schema_version')!r}; "
            f"expected {SCHEMA_VERSION}"
        )
    try:
        grid = make_grid(**{k: float(doc["grid"][k]) for k in ("t0", "tf", "dt")})
    except KeyError as exc:
        raise ConfigError(f"grid: missing field {exc}") from exc

    system = _system_from_spec(doc.get("system"), doc.get("x0"))

    est = doc.get("estimator", {})
    states = tuple(
        _stage_from_dict(d, f"state stage {i}") for i, d in enumerate(est.get("states", []))
    )
    dist_spec = est.get("disturbance")
    estimator = EstimatorConfig(
        states=states,
        disturbance=None if dist_spec is None else _stage_from_dict(dist_spec, "disturbance"),
        scheme=est.get("scheme", OFFLINE),
        window=est.get("window"),
        stride=int(est.get("stride", 1)),
        eval_point=float(est.get("eval_point", 0.5)),
        formulation=est.get("formulation", RECURSIVE),
        basis_kind=est.get("basis", MONOMIAL_SCALED),
    )
    estimator.validate(system.n, grid)

    noise_doc = doc.get("noise", {})
    levels = tuple(float(v) for v in noise_doc.get("levels_percent", []))
    if any(v < 0 for v in levels):
        raise ConfigError("noise levels must be nonnegative")
    if not levels:
        levels = (0.0,)
        replicates = 1
    else:
        replicates = int(noise_doc.get("replicates", 1))
    if replicates < 1:
        raise ConfigError("noise replicates must be >= 1")
    noise = NoisePlan(
        levels_percent=levels,
        replicates=replicates,
        master_seed=int(noise_doc.get("master_seed", 0)),
    )

    sto_doc = doc.get("baselines", {}).get("sto")
    sto = None
    if sto_doc is not None:
        if system.name != "pendulum":
            raise ConfigError("the sto baseline is defined for the pendulum system only")
        sto = StoConfig(fplus=float(sto_doc.get("fplus", 6.0)))

    return ExperimentConfig(
        name=doc.get("name", "experiment"),
        raw=doc,
        system=system,
        grid=grid,
        estimator=estimator,
        noise=noise,
        sto=sto,
    )


def preset_names() -> list[str]:
    root = resources.files("modfun") / "presets"
    return sorted(p.name.removesuffix(".json") for p in root.iterdir() if p.name.endswith(".json"))


def load_config(source: str) -> ExperimentConfig:
    """Load a config from a JSON file path or a shipped preset name."""
    path = Path(source)
    if path.exists():
        doc = json.loads(path.read_text())
    elif source in preset_names():
        doc = json.loads((resources.files("modfun") / "presets" / f"{source}.json").read_text())
    else:
        raise ConfigError(f"{source!r} is neither a config file nor a preset name")
    return config_from_dict(doc)


# -- pipeline ------------------------------------------------------------------

def _estimate_all(
    y: SampledSignal, config: ExperimentConfig
) -> dict[str, EstimateSeries]:
    cfg = config.estimator
    if cfg.scheme == ONLINE:
        return run_online(y, None, config.system, cfg)
    states = estimate_states_all(y, None, config.system, cfg)
    out = {s.name: s for s in states}
    if cfg.disturbance is not None:
        dist_fn = (
            estimate_disturbance_direct if cfg.formulation == DIRECT else estimate_disturbance
        )
        out["d"] = dist_fn(y, None, states, config.system, cfg)
    return out


def _series_error_pct(
    truth: SampledSignal, series: EstimateSeries, trim: float = 0.0
) -> float:
    """Relative L2 error of a series against truth over its valid span."""
    first, last = series.first_valid, series.last_valid
    span = last - first + 1
    cut = int(trim * span)
    first, last = first + cut, last - cut
    times = truth.grid.times
    est = SampledSignal(truth.grid, np.nan_to_num(series.values, nan=0.0))
    return relative_l2_error(truth, est, times[first], times[last])


def _replicate(
    config: ExperimentConfig,
    truth: SimResult,
    level_index: int,
    replicate: int,
    out_dir: Path | None,
) -> dict:
    level = config.noise.levels_percent[level_index]
    seed = config.noise.noise_seed(level_index, replicate)
    y = add_noise(truth.output, NoiseSpec(level_percent=level, seed=seed))

    estimates = _estimate_all(y, config)
    err_mf = _series_error_pct(truth.states[1], estimates["x2"]) if config.system.n >= 2 else math.nan
    err_d = (
        _series_error_pct(truth.disturbance, estimates["d"], trim=DIST_TRIM)
        if "d" in estimates
        else math.nan
    )

    sto_series = None
    err_sto = math.nan
    if config.sto is not None:
        sto_series = sto_estimate(y, config.sto)
        err_sto = relative_l2_error(truth.states[1], sto_series[1])

    if out_dir is not None:
        columns = [("y_noisy", y.values)]
        columns += [(f"x{i + 1}", s.values) for i, s in enumerate(truth.states)]
        columns += [
            (f"xhat_{i + 2}", estimates[f"x{i + 2}"].values)
            for i in range(config.system.n - 1)
            if f"x{i + 2}" in estimates
        ]
        columns += [("d", truth.disturbance.values)]
        if "d" in estimates:
            columns += [("dhat", estimates["d"].values)]
        if sto_series is not None:
            columns += [("sto_x1", sto_series[0].values), ("sto_x2", sto_series[1].values)]
        name = f"signals_L{level:g}_r{replicate}.csv"
        write_signals_csv(out_dir / name, config.grid, columns)

    return {
        "noise_pct": level,
        "seed": seed,
        "err_sto_pct": err_sto,
        "err_mf_pct": err_mf,
        "err_d_pct": err_d,
    }


def _replicate_job(args) -> dict:
    # Module-level so ProcessPoolExecutor can pickle it; systems carry
    # closures, so workers rebuild the config from the raw document.
    doc, states, dist, level_index, replicate, out_dir = args
    config = config_from_dict(doc)
    grid = config.grid
    truth = SimResult(
        states=tuple(SampledSignal(grid, col) for col in states),
        disturbance=SampledSignal(grid, dist),
    )
    return _replicate(config, truth, level_index, replicate, out_dir)


def run_experiment(
    config: ExperimentConfig,
    out_dir: str | Path,
    jobs: int = 1,
) -> list[dict]:
    """Run every (noise level, replicate) job and write the artifacts.

    Per job: a signals CSV with truth, noisy output, estimates and the
    baseline; then one summary.csv with a row per job.  Deterministic for a
    fixed config.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    truth = simulate(config.system, None, config.grid)

    tasks = [
        (li, r)
        for li in range(len(config.noise.levels_percent))
        for r in range(config.noise.replicates)
    ]
    if jobs > 1:
        states = np.stack([s.values for s in truth.states])
        payloads = [
            (config.raw, states, truth.disturbance.values, li, r, out) for li, r in tasks
        ]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_replicate_job, payloads))
    else:
        rows = [_replicate(config, truth, li, r, out) for li, r in tasks]

    rows.sort(key=lambda row: (row["noise_pct"], row["seed"]))
    with open(out / "summary.csv", "w", newline="") as fh:
        fh.write(SUMMARY_HEADER + "\n")
        for row in rows:
            fh.write(
                f"{row['noise_pct']:g},{row['seed']},{row['err_sto_pct']:.6f},"
                f"{row['err_mf_pct']:.6f},{row['err_d_pct']:.6f}\n"
            )
    return rows


def read_summary(out_dir: str | Path) -> list[dict]:
    path = Path(out_dir) / "summary.csv"
    if not path.exists():
        raise FileNotFoundError(f"no summary.csv under {out_dir}")
    rows = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != SUMMARY_HEADER:
            raise ConfigError(f"unexpected summary header {header!r}")
        for line in fh:
            level, seed, e_sto, e_mf, e_d = line.strip().split(",")
            rows.append(
                {
                    "noise_pct": float(level),
                    "seed": int(seed),
                    "err_sto_pct": float(e_sto),
                    "err_mf_pct": float(e_mf),
                    "err_d_pct": float(e_d),
                }
            )
    return rows


def summarize(rows: list[dict]) -> list[dict]:
    """Mean and std of each error column per noise level, sorted by level."""
    levels = sorted({row["noise_pct"] for row in rows})
    out = []
    for level in levels:
        group = [r for r in rows if r["noise_pct"] == level]
        entry = {"noise_pct": level, "count": len(group)}
        for col in ("err_sto_pct", "err_mf_pct", "err_d_pct"):
            vals = np.array([g[col] for g in group])
            entry[col] = (float(np.mean(vals)), float(np.std(vals)))
        entry["mf_worse"] = (
            not math.isnan(entry["err_sto_pct"][0])
            and entry["err_mf_pct"][0] >= entry["err_sto_pct"][0]
        )
        out.append(entry)
    return out


def format_report(stats: list[dict]) -> str:
    lines = [
        f"{'noise%':>7}  {'n':>3}  {'MF err%':>16}  {'STO err%':>16}  {'d err%':>16}  flag"
    ]
    for s in stats:
        def cell(col):
            mean, std = s[col]
            return "      --        " if math.isnan(mean) else f"{mean:8.3f} ±{std:6.3f}"

        flag = "MF-WORSE-THAN-STO" if s["mf_worse"] else ""
        lines.append(
            f"{s['noise_pct']:>7g}  {s['count']:>3}  {cell('err_mf_pct')}  "
            f"{cell('err_sto_pct')}  {cell('err_d_pct')}  {flag}"
        )
    return "\n".join(lines)
