"""Seeded Monte Carlo experiments that write CSV tables and a run manifest.

Every unit of work is keyed by ``(master_seed, trial, grid_index)``; all
random draws inside it (snapshots, ADMM start, random layout) come from
streams of that key. Results are gathered into a dict and written in sorted
order, so the thread count never changes the output.
"""

from __future__ import annotations

import csv
import enum
import math
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .admm import AdmmConfig, RhoBelowBoundWarning, Variant, admm_solve
from .beamformer import beampattern, optimal_sinr, subarray_sinrs
from .config import (
    ScenarioConfig,
    format_kv,
    parse_floats,
    read_kv,
    scenario_from_kv,
)
from .numerics import HermitianMatrix, ValidationError
from .selection import (
    Geometry,
    count_active,
    enumerate_all,
    fixed_geometry,
    tune_lambda,
)
from .signal_model import Scenario, data_covariance_true, generate_snapshots, sample_covariance

METHODS = ("ADMM", "BestEnum", "WorstEnum", "CompactULA", "SparseULA", "Nested", "Coprime", "Random", "WholeULA")
# layouts that exist for every L up to M
SINR_VS_L_METHODS = ("ADMM", "BestEnum", "WorstEnum", "CompactULA", "Random", "WholeULA")
_GEOMETRY_METHODS = {g.value: g for g in Geometry}

# stream tags for derived seeds
_SNAPSHOTS, _INIT, _RANDOM = 1, 2, 3


class ExperimentKind(enum.Enum):
    CONVERGENCE_TRACE = "convergence_trace"
    SPARSITY_VS_LAMBDA = "sparsity_vs_lambda"
    CPU_TIME_VS_T = "cpu_time_vs_t"
    CPU_TIME_VS_M = "cpu_time_vs_m"
    CPU_TIME_VS_L = "cpu_time_vs_l"
    BEAMPATTERN_COMPARE = "beampattern_compare"
    SINR_VS_DOA = "sinr_vs_doa"
    SINR_VS_SNR = "sinr_vs_snr"
    SINR_VS_T = "sinr_vs_t"
    SINR_VS_M = "sinr_vs_m"
    SINR_VS_L = "sinr_vs_l"


def derive_seed(master_seed: int, *keys: int) -> int:
    return int(np.random.SeedSequence([int(master_seed), *map(int, keys)]).generate_state(1, dtype=np.uint32)[0])


def check_methods(methods) -> tuple[str, ...]:
    methods = tuple(methods)
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ValidationError(f"unknown method label(s): {', '.join(unknown)}")
    return methods


def admm_config(sc: ScenarioConfig, init_seed: int = 0) -> AdmmConfig:
    return AdmmConfig(lam=sc.lam, rho=sc.rho, epsilon=sc.epsilon, eta=sc.eta, k_max=sc.k_max,
                      variant=Variant(sc.variant), init_seed=init_seed)


def covariance(s: Scenario, use_true_cov: bool, snapshots: int, seed: int) -> HermitianMatrix:
    if use_true_cov:
        return data_covariance_true(s)
    return sample_covariance(generate_snapshots(s, snapshots, seed, _SNAPSHOTS))


@dataclass(frozen=True)
class MethodRow:
    method: str
    sinr_db: float
    support: tuple[int, ...] = ()
    lambda_used: float = float("nan")


def compare_methods(
    s: Scenario,
    L: int,
    methods=METHODS,
    use_true_cov: bool = True,
    cfg: AdmmConfig | None = None,
    snapshots: int = 100,
    seed: int = 0,
    random_draws: int = 1,
    R: HermitianMatrix | None = None,
) -> list[MethodRow]:
    """Reduced-MVDR SINR of each selection method, highest first.

    Layouts that cannot be realized for ``(M, L)`` are left out. ``Random``
    reports the mean SINR (dB) over `random_draws` seeded subsets.
    """
    methods = check_methods(methods)
    if R is None:
        R = covariance(s, use_true_cov, snapshots, seed)
    if cfg is None:
        cfg = AdmmConfig(lam=1.0, init_seed=derive_seed(seed, _INIT))
    rows = []
    enum_cache = None
    for method in methods:
        if method == "ADMM":
            rep = tune_lambda(L, None, cfg, R, s.steering(), scenario=s)
            rows.append(MethodRow(method, rep.sinr_db, rep.support, rep.lambda_used))
        elif method in ("BestEnum", "WorstEnum"):
            if enum_cache is None:
                enum_cache = enumerate_all(s, R, L)
            rep = enum_cache[0] if method == "BestEnum" else enum_cache[1]
            rows.append(MethodRow(method, rep.sinr_db, rep.support))
        elif method == "WholeULA":
            full = tuple(range(s.m))
            rows.append(MethodRow(method, float(subarray_sinrs(np.array([full]), s, R)[0]), full))
        elif method == "Random":
            sups = [fixed_geometry(Geometry.RANDOM, s.m, L, seed=derive_seed(seed, _RANDOM, i)) for i in range(random_draws)]
            vals = subarray_sinrs(np.array(sups), s, R)
            rows.append(MethodRow(method, float(np.mean(vals)), sups[0]))
        else:
            try:
                sup = fixed_geometry(_GEOMETRY_METHODS[method], s.m, L)
            except ValidationError:
                continue
            rows.append(MethodRow(method, float(subarray_sinrs(np.array([sup]), s, R)[0]), sup))
    rows.sort(key=lambda r: -r.sinr_db)
    return rows


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment run.

    `grid` holds the swept values: λ for traces and sparsity curves, angles
    for beampatterns, and T / M / L / DOA / SNR for the others.
    """

    kind: ExperimentKind
    scenario: ScenarioConfig
    grid: tuple[float, ...]
    trials: int = 1
    master_seed: int = 0
    output_dir: str = "results"
    methods: tuple[str, ...] | None = None
    variants: tuple[str, ...] = ("l1", "reweighted")
    snr_list_db: tuple[float, ...] = ()
    interferer_offsets_deg: tuple[float, ...] = (-10.0, 10.0)
    random_draws: int = 1
    threads: int = field(default_factory=lambda: os.cpu_count() or 1, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", ExperimentKind(self.kind))
        if self.methods is None:
            default = SINR_VS_L_METHODS if self.kind is ExperimentKind.SINR_VS_L else METHODS
            object.__setattr__(self, "methods", default)
        object.__setattr__(self, "methods", check_methods(self.methods))
        if not self.grid:
            raise ValidationError("experiment grid is empty")
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        for v in self.variants:
            Variant(v)

    def manifest(self) -> dict:
        d = {
            "kind": self.kind.value,
            "grid": list(self.grid),
            "trials": self.trials,
            "master_seed": self.master_seed,
            "output_dir": self.output_dir,
            "methods": list(self.methods),
            "variants": list(self.variants),
            "snr_list_db": list(self.snr_list_db),
            "interferer_offsets_deg": list(self.interferer_offsets_deg),
            "random_draws": self.random_draws,
            "seed_rule": "SeedSequence([master_seed, trial, grid_index]) then stream tags 1=snapshots 2=admm_init 3=random_layout",
            "package_version": __version__,
        }
        for k, v in self.scenario.as_dict().items():
            d[f"scenario_{k}"] = v
        return d


def experiment_from_kv(kv: dict[str, str], base_dir: Path | None = None) -> ExperimentSpec:
    """Build a spec from an experiment file.

    The scenario comes from ``scenario = <path>`` (relative to the experiment
    file) or from inline ``scenario_<key>`` entries, as written in manifests.
    """
    if "kind" not in kv:
        raise ValidationError("experiment file needs 'kind'")
    inline = {k[len("scenario_"):]: v for k, v in kv.items() if k.startswith("scenario_")}
    if "scenario" in kv:
        path = Path(kv["scenario"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        sc = scenario_from_kv({**read_kv(path), **inline})
    elif inline:
        sc = scenario_from_kv(inline)
    else:
        raise ValidationError("experiment file needs a scenario")

    def names(key, default):
        return tuple(x.strip() for x in kv[key].split(",") if x.strip()) if key in kv else default

    try:
        kind = ExperimentKind(kv["kind"].strip().lower())
    except ValueError:
        raise ValidationError(f"unknown experiment kind {kv['kind']!r}") from None
    try:
        return ExperimentSpec(
            kind=kind,
            scenario=sc,
            grid=tuple(parse_floats(kv.get("grid", ""))),
            trials=int(kv.get("trials", 1)),
            master_seed=int(kv.get("master_seed", 0)),
            output_dir=kv.get("output_dir", "results"),
            methods=names("methods", None),
            variants=names("variants", ("l1", "reweighted")),
            snr_list_db=tuple(parse_floats(kv.get("snr_list_db", ""))),
            interferer_offsets_deg=tuple(parse_floats(kv.get("interferer_offsets_deg", "-10, 10"))),
            random_draws=int(kv.get("random_draws", 1)),
        )
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc


def load_experiment(path) -> ExperimentSpec:
    path = Path(path)
    return experiment_from_kv(read_kv(path), path.parent)


# -- work units ---------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return format(x, ".12g")
    if isinstance(x, (tuple, list)):
        return " ".join(str(i) for i in x)
    return str(x)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])
    return path


def _point_scenario(spec: ExperimentSpec, x: float):
    """Scenario, L and snapshot count at grid value `x` for the SINR/CPU sweeps."""
    sc = spec.scenario
    kind = spec.kind
    L, t = sc.L, sc.snapshots
    over = {}
    if kind is ExperimentKind.SINR_VS_DOA:
        over["soi_doa_deg"] = x
        over["interferer_doas_deg"] = [x + o for o in spec.interferer_offsets_deg]
    elif kind is ExperimentKind.SINR_VS_SNR:
        over["snr_db"] = x
    elif kind in (ExperimentKind.SINR_VS_T, ExperimentKind.CPU_TIME_VS_T):
        t = int(x)
    elif kind in (ExperimentKind.SINR_VS_M, ExperimentKind.CPU_TIME_VS_M):
        over["m"] = int(x)
    elif kind in (ExperimentKind.SINR_VS_L, ExperimentKind.CPU_TIME_VS_L):
        L = int(x)
    return sc.scenario(**over), L, t


def _sinr_unit(spec, gi, trial):
    x = spec.grid[gi]
    s, L, t = _point_scenario(spec, x)
    seed = derive_seed(spec.master_seed, trial, gi)
    cfg = admm_config(spec.scenario, derive_seed(seed, _INIT))
    rows = compare_methods(s, L, spec.methods, spec.scenario.use_true_cov, cfg, t, seed, spec.random_draws)
    out = {r.method: r.sinr_db for r in rows}
    out["Optimal"] = optimal_sinr(s)
    return out


def _cpu_unit(spec, gi, trial):
    s, L, t = _point_scenario(spec, spec.grid[gi])
    seed = derive_seed(spec.master_seed, trial, gi)
    R = covariance(s, spec.scenario.use_true_cov, t, seed)
    cfg = admm_config(spec.scenario, derive_seed(seed, _INIT))
    start = time.perf_counter()
    rep = tune_lambda(L, None, cfg, R, s.steering())
    elapsed = time.perf_counter() - start
    return {"time": elapsed, "solves": rep.search_iters}


def _sparsity_unit(spec, gi, trial):
    # one unit = one (snr, trial) pair; sweeps all lambdas and variants
    snrs = spec.snr_list_db or (spec.scenario.snr_db,)
    snr = snrs[gi]
    s = spec.scenario.scenario(snr_db=snr)
    seed = derive_seed(spec.master_seed, trial, gi)
    R = covariance(s, spec.scenario.use_true_cov, spec.scenario.snapshots, seed)
    base = admm_config(spec.scenario, derive_seed(seed, _INIT))
    out = {}
    for variant in spec.variants:
        for li, lam in enumerate(spec.grid):
            res = admm_solve(replace(base, lam=lam, variant=Variant(variant)), R, s.steering())
            out[(variant, li)] = 0 if res.collapsed else count_active(res.w)
    return out


def _run_units(fn, spec, n_grid):
    keys = [(gi, trial) for gi in range(n_grid) for trial in range(spec.trials)]

    def call(key):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RhoBelowBoundWarning)
            return key, fn(spec, *key)

    if spec.threads > 1 and len(keys) > 1:
        with ThreadPoolExecutor(max_workers=spec.threads) as pool:
            results = dict(pool.map(call, keys))
    else:
        results = dict(map(call, keys))
    return {k: results[k] for k in sorted(results)}


def _mean(vals):
    vals = [v for v in vals if v is not None and not math.isnan(v)]
    return float(np.mean(vals)) if vals else float("nan")


def run_experiment(spec: ExperimentSpec, threads: int | None = None) -> list[Path]:
    """Run `spec` and write ``<kind>.csv`` (plus extras) and ``manifest.txt``.

    Returns the written paths. CPU-time tables report both mean and median
    wall-clock seconds of the λ-tuned ADMM call.
    """
    if threads is not None:
        spec = replace(spec, threads=max(1, int(threads)))
    out = Path(spec.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ValidationError(f"cannot create output directory {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise ValidationError(f"output directory {out} is not writable")
    kind = spec.kind
    main = out / f"{kind.value}.csv"
    written = []

    if kind is ExperimentKind.CONVERGENCE_TRACE:
        rows = []
        for key, res in _run_units(_trace_unit, spec, len(spec.grid)).items():
            gi, trial = key
            for variant, r in res:
                for k in range(r.iterations):
                    rows.append((trial, spec.grid[gi], variant, k + 1, float(r.lagrangian_trace[k]),
                                 float(r.residual_trace[k]), float(r.gap_trace[k])))
        written.append(write_csv(main, ["trial", "lambda", "variant", "k", "lagrangian", "primal_residual",
                                        "feasibility_gap"], rows))

    elif kind is ExperimentKind.SPARSITY_VS_LAMBDA:
        snrs = spec.snr_list_db or (spec.scenario.snr_db,)
        res = _run_units(_sparsity_unit, spec, len(snrs))
        rows = []
        for si, snr in enumerate(snrs):
            for li, lam in enumerate(spec.grid):
                row = [snr, lam]
                for variant in spec.variants:
                    row.append(float(np.mean([res[(si, t)][(variant, li)] for t in range(spec.trials)])))
                rows.append(row)
        written.append(write_csv(main, ["snr_db", "lambda"] + [f"mean_active_{v}" for v in spec.variants], rows))

    elif kind in (ExperimentKind.CPU_TIME_VS_T, ExperimentKind.CPU_TIME_VS_M, ExperimentKind.CPU_TIME_VS_L):
        res = _run_units(_cpu_unit, spec, len(spec.grid))
        rows = []
        for gi, x in enumerate(spec.grid):
            times = [res[(gi, t)]["time"] for t in range(spec.trials)]
            solves = [res[(gi, t)]["solves"] for t in range(spec.trials)]
            rows.append((x, float(np.mean(times)), float(np.median(times)), float(np.mean(solves))))
        written.append(write_csv(main, ["x", "mean_time_s", "median_time_s", "mean_solves"], rows))

    elif kind is ExperimentKind.BEAMPATTERN_COMPARE:
        written.extend(_beampattern_compare(spec, out, main))

    else:
        res = _run_units(_sinr_unit, spec, len(spec.grid))
        cols = list(spec.methods) + ["Optimal"]
        rows = []
        for gi, x in enumerate(spec.grid):
            rows.append([x] + [_mean([res[(gi, t)].get(c, float("nan")) for t in range(spec.trials)]) for c in cols])
        written.append(write_csv(main, ["x"] + cols, rows))

    manifest = out / "manifest.txt"
    entries = spec.manifest()
    entries["outputs"] = [p.name for p in written]
    manifest.write_text(format_kv(entries), encoding="utf-8")
    written.append(manifest)
    return written


def _trace_unit(spec, gi, trial):
    s = spec.scenario.scenario()
    seed = derive_seed(spec.master_seed, trial, 0)
    R = covariance(s, spec.scenario.use_true_cov, spec.scenario.snapshots, seed)
    base = admm_config(spec.scenario, derive_seed(seed, _INIT))
    return [(v, admm_solve(replace(base, lam=spec.grid[gi], variant=Variant(v)), R, s.steering())) for v in spec.variants]


def _beampattern_compare(spec, out, main):
    s = spec.scenario.scenario()
    seed = derive_seed(spec.master_seed, 0, 0)
    R = covariance(s, spec.scenario.use_true_cov, spec.scenario.snapshots, seed)
    cfg = admm_config(spec.scenario, derive_seed(seed, _INIT))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RhoBelowBoundWarning)
        rows = compare_methods(s, spec.scenario.L, spec.methods, spec.scenario.use_true_cov, cfg,
                               spec.scenario.snapshots, seed, 1, R=R)
    from .beamformer import reduced_mvdr

    pattern_rows, sel_rows = [], []
    for r in rows:
        w = reduced_mvdr(r.support, s, R)
        gains = beampattern(w, spec.grid, s.m)
        pattern_rows.extend((r.method, a, float(g)) for a, g in zip(spec.grid, gains))
        sel_rows.append((r.method, r.support, r.lambda_used, r.sinr_db))
    return [
        write_csv(main, ["method", "angle_deg", "gain_db"], pattern_rows),
        write_csv(out / "selection_report.csv", ["method", "support", "lambda", "sinr_db"], sel_rows),
    ]
