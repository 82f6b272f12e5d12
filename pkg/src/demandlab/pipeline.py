"""Pipeline orchestration: simulate -> preprocess -> tune -> train -> inventory -> reports.

Each stage is a plain function over explicit inputs so the CLI subcommands and
the tests can drive any slice of the pipeline. All randomness flows from the
master seed via named stage seeds; artifacts that carry results (dataset,
models, reports) are byte-deterministic, while wall-clock telemetry is
confined to the manifest and the trials log.
"""

import configparser
import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

import demandlab
from demandlab import analytics, inventory, seeding
from demandlab.lstm.io import load_model, save_model
from demandlab.lstm.training import train
from demandlab.preprocess import (
    FeatureSchema,
    Scaler,
    SplitSpec,
    build_day_tensor,
    chronological_split,
    daily_averages,
    window_phase1,
    window_phase2,
)
from demandlab.simulation.config import (
    PLATFORMS,
    SimConfig,
    config_from_ini,
    config_to_ini,
)
from demandlab.simulation.engine import Dataset, run_simulation
from demandlab.tuning import GridSearchError, HyperGrid, HyperParams, grid_search

log = logging.getLogger(__name__)


@dataclass
class PipelineConfig:
    phases: list = field(default_factory=lambda: [1, 2])
    platforms: list = field(default_factory=lambda: list(PLATFORMS))
    grid_preset: str = "coarse"  # coarse | full
    phase1_window_days: int = 1
    plan_window_days: int = 7

    def validate(self):
        for phase in self.phases:
            if phase not in (1, 2):
                raise ValueError(f"phase must be 1 or 2, got {phase}")
        for platform in self.platforms:
            if platform not in PLATFORMS:
                raise ValueError(f"unknown platform {platform!r}")
        if self.grid_preset not in ("coarse", "full"):
            raise ValueError(f"grid preset must be coarse or full, got {self.grid_preset!r}")
        if self.phase1_window_days < 1:
            raise ValueError("phase1_window_days must be >= 1")
        if self.plan_window_days < 2:
            raise ValueError("plan_window_days must be >= 2")


def load_run_configs(path):
    """(SimConfig, SplitSpec, HyperGrid, PipelineConfig) from one INI file."""
    text = Path(path).read_text(encoding="utf-8")
    sim_cfg = config_from_ini(text)
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    parser.read_string(text)

    split = SplitSpec()
    if parser.has_section("split"):
        sec = parser["split"]
        split = SplitSpec(
            train_fraction=float(sec.get("train_fraction", split.train_fraction)),
            validation_fraction=float(sec.get("validation_fraction",
                                              split.validation_fraction)),
            test_fraction=float(sec.get("test_fraction", split.test_fraction)),
        )

    pipe = PipelineConfig()
    if parser.has_section("pipeline"):
        sec = parser["pipeline"]
        if "phases" in sec:
            pipe.phases = [int(v) for v in sec["phases"].split(",") if v.strip()]
        if "platforms" in sec:
            pipe.platforms = [v.strip() for v in sec["platforms"].split(",") if v.strip()]
        if "grid_preset" in sec:
            pipe.grid_preset = sec["grid_preset"].strip()
        if "phase1_window_days" in sec:
            pipe.phase1_window_days = int(sec["phase1_window_days"])
        if "plan_window_days" in sec:
            pipe.plan_window_days = int(sec["plan_window_days"])
    pipe.validate()

    grid = HyperGrid.coarse() if pipe.grid_preset == "coarse" else HyperGrid()
    if parser.has_section("grid"):
        sec = parser["grid"]
        for axis in ("epochs", "units", "batch_size", "layers"):
            if axis in sec:
                setattr(grid, axis, [int(v) for v in sec[axis].split(",") if v.strip()])
        for axis in ("dropout", "learning_rate"):
            if axis in sec:
                setattr(grid, axis, [float(v) for v in sec[axis].split(",") if v.strip()])
    return sim_cfg, split, grid, pipe


# ---------------------------------------------------------------------------
# Phase data preparation
# ---------------------------------------------------------------------------

@dataclass
class PhaseData:
    phase: int
    platform: str
    schema: FeatureSchema
    scaler: Scaler
    train_w: object
    val_w: object
    test_w: object
    n_train: int
    n_val: int
    demand_matrix: np.ndarray  # raw [days x 5] for this platform

    def invert_outputs(self, values: np.ndarray) -> np.ndarray:
        name = self.schema.target if self.phase == 1 else "daily_average"
        return self.scaler.inverse_column(name, values)

    def raw_targets(self, which: str = "test") -> np.ndarray:
        windowed = {"train": self.train_w, "val": self.val_w, "test": self.test_w}[which]
        days = windowed.sample_days
        if self.phase == 1:
            return self.demand_matrix[days]
        return self.demand_matrix.mean(axis=1)[days].reshape(-1, 1)


def _standardize_tensor(raw: np.ndarray, scaler: Scaler, n_scaled: int) -> np.ndarray:
    out = raw.copy()
    flat = out.reshape(-1, out.shape[-1])
    flat[:, :n_scaled] = scaler.transform(flat[:, :n_scaled])
    return out


def prepare_phase_data(dataset: Dataset, split: SplitSpec, phase: int, platform: str,
                       phase1_window_days: int = 1) -> PhaseData:
    n_train, n_val, _ = split.resolve(dataset.n_days)
    train_ds, val_ds, test_ds = chronological_split(dataset, split)
    food_categories = sorted(set(dataset.column("food_category")))
    schema = FeatureSchema.for_platform(platform, food_categories)
    demand_matrix = dataset.demand_matrix(platform)

    if phase == 1:
        raw = {}
        for name, part in (("train", train_ds), ("val", val_ds), ("test", test_ds)):
            raw[name], _, _ = build_day_tensor(part, schema)
        n_scaled = len(schema.scaled_features)
        rows = raw["train"].reshape(-1, raw["train"].shape[-1])[:, :n_scaled]
        scaler = Scaler.fit(rows, schema.scaled_features, segment="train")
        windows = {}
        offsets = {"train": 0, "val": n_train, "test": n_train + n_val}
        for name in raw:
            std = _standardize_tensor(raw[name], scaler, n_scaled)
            windows[name] = window_phase1(std, std[:, :, 0], n=phase1_window_days,
                                          day_offset=offsets[name],
                                          feature_names=schema.feature_names)
        return PhaseData(phase, platform, schema, scaler, windows["train"],
                         windows["val"], windows["test"], n_train, n_val, demand_matrix)

    daily = {
        "train": daily_averages(train_ds.demand_matrix(platform)),
        "val": daily_averages(val_ds.demand_matrix(platform)),
        "test": daily_averages(test_ds.demand_matrix(platform)),
    }
    scaler = Scaler.fit(daily["train"].reshape(-1, 1), ["daily_average"], segment="train")
    offsets = {"train": 0, "val": n_train, "test": n_train + n_val}
    windows = {name: window_phase2(scaler.transform_column("daily_average", series),
                                   day_offset=offsets[name])
               for name, series in daily.items()}
    return PhaseData(phase, platform, schema, scaler, windows["train"], windows["val"],
                     windows["test"], n_train, n_val, demand_matrix)


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------

def stage_simulate(sim_cfg: SimConfig, out_dir: Path) -> Dataset:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset = run_simulation(sim_cfg)
    dataset.to_csv(out_dir / "dataset.csv")
    (out_dir / "config.ini").write_text(config_to_ini(sim_cfg), encoding="utf-8")
    log.info("simulated %d rows (%d clamp events) -> %s", len(dataset),
             dataset.clamp_events, out_dir / "dataset.csv")
    # Downstream stages consume the persisted file, so running them through the
    # pipeline or as separate commands gives byte-identical artifacts.
    reloaded = Dataset.from_csv(out_dir / "dataset.csv")
    reloaded.clamp_events = dataset.clamp_events
    return reloaded


def stage_eda(dataset: Dataset, out_dir: Path) -> list:
    eda_dir = Path(out_dir) / "eda"
    eda_dir.mkdir(parents=True, exist_ok=True)
    written = []
    summary = []
    for platform in PLATFORMS:
        report = analytics.eda(dataset.demand_matrix(platform))
        base = eda_dir / f"{platform}"
        path = Path(f"{base}_daily.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("day,daily_average,cumulative_mean\n")
            for i, (avg, cm) in enumerate(zip(report.daily_average,
                                              report.cumulative_mean)):
                fh.write(f"{i},{avg:.6f},{cm:.6f}\n")
        written.append(path)
        path = Path(f"{base}_rolling_variance.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("day,rolling_variance\n")
            for i, rv in enumerate(report.rolling_variance):
                fh.write(f"{i + 6},{rv:.6f}\n")
        written.append(path)
        path = Path(f"{base}_histogram.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("bin_lo,bin_hi,count\n")
            for lo, hi, count in zip(report.hist_edges[:-1], report.hist_edges[1:],
                                     report.hist_counts):
                fh.write(f"{lo:.6f},{hi:.6f},{int(count)}\n")
        written.append(path)
        path = Path(f"{base}_qq.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("theoretical,sample\n")
            for t, s in zip(report.qq_theoretical, report.qq_sample):
                fh.write(f"{t:.6f},{s:.6f}\n")
        written.append(path)
        summary.append(
            f"{platform}: mean daily demand {report.daily_average.mean():.2f}, "
            f"final cumulative mean {report.cumulative_mean[-1]:.2f}, "
            f"mean 7-day rolling variance {report.rolling_variance.mean():.2f}")
    rho = inventory.estimate_correlation(dataset.column("demand_zomato"),
                                         dataset.column("demand_swiggy"))
    summary.append(f"platform demand correlation: {rho:.4f}")
    path = eda_dir / "summary.txt"
    path.write_text("\n".join(summary) + "\n", encoding="utf-8")
    written.append(path)
    return written


def stage_tune(dataset: Dataset, split: SplitSpec, phase: int, platform: str,
               grid: HyperGrid, master_seed: int, out_dir: Path,
               phase1_window_days: int = 1):
    """Grid search for one (phase, platform); persists trials log and best config."""
    data = prepare_phase_data(dataset, split, phase, platform, phase1_window_days)
    seed = seeding.derive_seed(master_seed, "tune", phase, platform)
    best, results = grid_search(data.train_w, data.val_w, grid, seed, progress=True)

    tune_dir = Path(out_dir) / "tuning"
    tune_dir.mkdir(parents=True, exist_ok=True)
    stem = f"phase{phase}_{platform}"
    with open(tune_dir / f"{stem}_trials.jsonl", "w", encoding="utf-8") as fh:
        for result in results:
            fh.write(json.dumps({
                "trial": result.index,
                "hyperparams": result.hyperparams.to_dict(),
                "final_val_loss": result.final_val_loss,
                "val_loss_curve": result.val_loss_curve,
                "seconds": result.seconds,
                "seed": result.seed,
                "diverged": result.diverged,
            }) + "\n")
    with open(tune_dir / f"{stem}_loss_curves.csv", "w", encoding="utf-8") as fh:
        fh.write("trial,epoch,val_loss\n")
        for result in results:
            for epoch, loss in enumerate(result.val_loss_curve):
                fh.write(f"{result.index},{epoch},{loss:.8f}\n")
    best_doc = {"hyperparams": best.hyperparams.to_dict(),
                "final_val_loss": best.final_val_loss,
                "trial": best.index, "seed": best.seed,
                "grid_cardinality": grid.cardinality}
    (tune_dir / f"{stem}_best.json").write_text(json.dumps(best_doc, indent=2),
                                                encoding="utf-8")
    return best, results


def stage_train_eval(dataset: Dataset, split: SplitSpec, phase: int, platform: str,
                     hp: HyperParams, master_seed: int, out_dir: Path,
                     phase1_window_days: int = 1):
    """Final training plus raw-unit test metrics and the actual-vs-predicted CSV."""
    data = prepare_phase_data(dataset, split, phase, platform, phase1_window_days)
    if data.test_w.n_samples == 0:
        raise ValueError("empty test split")
    seed = seeding.derive_seed(master_seed, "train", phase, platform)
    network, report = train(data.train_w, data.val_w, hp, seed)

    predictions = data.invert_outputs(network.predict(data.test_w.X))
    actual = data.raw_targets("test")
    metrics = analytics.MetricsReport(
        platform=platform, phase=phase,
        rmse=analytics.rmse(actual, predictions),
        mae=analytics.mae(actual, predictions),
        r2=analytics.r2(actual, predictions),
        training_seconds=report.seconds,
    )

    out_dir = Path(out_dir)
    models_dir = out_dir / "models"
    models_dir.mkdir(parents=True, exist_ok=True)
    model_path = models_dir / f"phase{phase}_{platform}.json"
    save_model(model_path, network, scaler=data.scaler.to_dict(), seed=seed,
               hyperparams=hp.to_dict(),
               metadata={"phase": phase, "platform": platform,
                         "phase1_window_days": phase1_window_days})

    reports_dir = out_dir / "reports"
    reports_dir.mkdir(parents=True, exist_ok=True)
    avp = reports_dir / f"actual_vs_predicted_phase{phase}_{platform}.csv"
    dates = dataset.dates
    with open(avp, "w", encoding="utf-8") as fh:
        if phase == 1:
            fh.write("date,slot,actual,predicted\n")
            for i, day in enumerate(data.test_w.sample_days):
                for slot in range(actual.shape[1]):
                    fh.write(f"{dates[day].isoformat()},{slot},"
                             f"{actual[i, slot]:.6f},{predictions[i, slot]:.6f}\n")
        else:
            fh.write("date,actual,predicted\n")
            for i, day in enumerate(data.test_w.sample_days):
                fh.write(f"{dates[day].isoformat()},{actual[i, 0]:.6f},"
                         f"{predictions[i, 0]:.6f}\n")
    return network, metrics, report, data


def forecast_total_demand(dataset: Dataset, split: SplitSpec, phase: int,
                          networks: dict, phase1_window_days: int = 1):
    """Summed-platform forecasts on the test split: (target days, totals)."""
    totals = None
    days = None
    for platform, network in networks.items():
        data = prepare_phase_data(dataset, split, phase, platform, phase1_window_days)
        preds = data.invert_outputs(network.predict(data.test_w.X))
        if phase == 2:
            preds = preds.reshape(-1)
        if totals is None:
            totals = preds
            days = data.test_w.sample_days
        else:
            if not np.array_equal(days, data.test_w.sample_days):
                raise ValueError("platform forecasts are misaligned")
            totals = totals + preds
    return days, totals


def stage_bullwhip(dataset: Dataset, split: SplitSpec, forecasts: dict,
                   params: inventory.NewsvendorParams, plan_window_days: int,
                   out_dir: Path, phases=(1, 2)):
    """Bullwhip report across the three segments plus inventory-series CSVs."""
    n_train, n_val, _ = split.resolve(dataset.n_days)
    report, plans = analytics.bullwhip_report(
        dataset.demand_matrix("zomato"), dataset.demand_matrix("swiggy"),
        n_train, n_val, forecasts, params, plan_window_days)

    reports_dir = Path(out_dir) / "reports"
    reports_dir.mkdir(parents=True, exist_ok=True)
    dates = dataset.dates
    for (phase, kind), plan in plans.items():
        if phase not in phases:
            continue
        plan.to_csv(reports_dir / f"inventory_phase{phase}_{kind}.csv", dates=dates)
    with open(reports_dir / "bullwhip.csv", "w", encoding="utf-8") as fh:
        fh.write("phase,segment,scope,bullwhip,inventory_variance,demand_variance,degenerate\n")
        for row in report.to_rows():
            if row["phase"] not in phases:
                continue
            value = "" if row["degenerate"] else f"{row['bullwhip']:.6f}"
            fh.write(f"{row['phase']},{row['segment']},{row['scope']},{value},"
                     f"{row['inventory_variance']:.6f},{row['demand_variance']:.6f},"
                     f"{int(row['degenerate'])}\n")
    return report


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(out_dir: Path, sim_cfg: SimConfig, timings: dict,
                   clamp_events: int = 0) -> Path:
    out_dir = Path(out_dir)
    artifacts = {}
    for path in sorted(out_dir.rglob("*")):
        if path.is_file() and path.name != "manifest.json":
            artifacts[str(path.relative_to(out_dir))] = _sha256(path)
    manifest = {
        "tool_version": demandlab.__version__,
        "seed": sim_cfg.seed,
        "config_hash": hashlib.sha256(config_to_ini(sim_cfg).encode("utf-8")).hexdigest(),
        "clamp_events": clamp_events,
        "timings_seconds": {k: round(v, 3) for k, v in timings.items()},
        "artifacts": artifacts,
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    return path


def write_phase_report(out_dir: Path, phase: int, metrics: dict,
                       bullwhip_report: analytics.BullwhipReport) -> Path:
    """Structured text report for one phase (metrics + bullwhip)."""
    lines = [f"phase {phase} report", "=" * 32, "", "test metrics (raw order units):"]
    for platform, m in sorted(metrics.items()):
        lines.append(f"  {platform:<8} RMSE {m.rmse:12.4f}  MAE {m.mae:12.4f}  "
                     f"R2 {m.r2:8.4f}")
    lines += ["", "bullwhip coefficients:"]
    for segment in analytics.SEGMENTS_B:
        for scope in analytics.SCOPES:
            try:
                cell = bullwhip_report.get(phase, segment, scope)
            except KeyError:
                continue
            shown = "degenerate" if cell.degenerate else f"{cell.ratio:.4f}"
            lines.append(f"  {segment:<10} {scope:<8} B = {shown}")
    reports_dir = Path(out_dir) / "reports"
    reports_dir.mkdir(parents=True, exist_ok=True)
    path = reports_dir / f"phase{phase}_report.txt"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def run_pipeline(sim_cfg: SimConfig, split: SplitSpec, grid: HyperGrid,
                 pipe: PipelineConfig, out_dir: Path) -> dict:
    """End to end run; returns a summary dict with metrics and reports."""
    pipe.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    timings = {}
    summary = {"metrics": {}, "best": {}}

    started = time.perf_counter()
    dataset = stage_simulate(sim_cfg, out_dir)
    timings["simulate"] = time.perf_counter() - started

    started = time.perf_counter()
    stage_eda(dataset, out_dir)
    timings["eda"] = time.perf_counter() - started

    networks = {}
    for phase in pipe.phases:
        networks[phase] = {}
        for platform in pipe.platforms:
            stage = f"tune_phase{phase}_{platform}"
            started = time.perf_counter()
            best, _ = stage_tune(dataset, split, phase, platform, grid, sim_cfg.seed,
                                 out_dir, pipe.phase1_window_days)
            timings[stage] = time.perf_counter() - started
            summary["best"][(phase, platform)] = best.hyperparams

            stage = f"train_phase{phase}_{platform}"
            started = time.perf_counter()
            network, metrics, _, _ = stage_train_eval(
                dataset, split, phase, platform, best.hyperparams, sim_cfg.seed,
                out_dir, pipe.phase1_window_days)
            timings[stage] = time.perf_counter() - started
            networks[phase][platform] = network
            summary["metrics"][(phase, platform)] = metrics
            log.info("phase %d %s: RMSE %.2f MAE %.2f R2 %.4f", phase, platform,
                     metrics.rmse, metrics.mae, metrics.r2)

    started = time.perf_counter()
    forecasts = {}
    for phase in pipe.phases:
        if len(networks[phase]) == len(PLATFORMS):
            days, totals = forecast_total_demand(dataset, split, phase, networks[phase],
                                                 pipe.phase1_window_days)
            forecasts[phase] = (days, totals)
    params = inventory.NewsvendorParams(z_score=sim_cfg.z_score)
    bw_report = stage_bullwhip(dataset, split, forecasts, params,
                               pipe.plan_window_days, out_dir, phases=pipe.phases)
    timings["bullwhip"] = time.perf_counter() - started
    summary["bullwhip"] = bw_report

    for phase in pipe.phases:
        phase_metrics = {platform: summary["metrics"][(phase, platform)]
                         for platform in pipe.platforms
                         if (phase, platform) in summary["metrics"]}
        write_phase_report(out_dir, phase, phase_metrics, bw_report)

    write_manifest(out_dir, sim_cfg, timings, dataset.clamp_events)
    summary["out_dir"] = out_dir
    return summary


def load_models(models_dir: Path, phase: int) -> dict:
    """Trained networks for one phase keyed by platform."""
    networks = {}
    for platform in PLATFORMS:
        path = Path(models_dir) / f"phase{phase}_{platform}.json"
        if not path.exists():
            raise FileNotFoundError(f"missing model file {path}")
        network, _ = load_model(path)
        networks[platform] = network
    return networks
