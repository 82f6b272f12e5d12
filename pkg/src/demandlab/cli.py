"""Command-line entry point wiring the pipeline stages together."""

import argparse
import json
import logging
import sys
from pathlib import Path

from demandlab import inventory, pipeline
from demandlab.simulation.config import PLATFORMS, SimConfig, default_config
from demandlab.simulation.engine import Dataset
from demandlab.tuning import HyperGrid, HyperParams

log = logging.getLogger(__name__)


def _load_configs(args):
    if getattr(args, "config", None):
        sim_cfg, split, grid, pipe = pipeline.load_run_configs(args.config)
    else:
        sim_cfg = default_config()
        split = pipeline.SplitSpec()
        pipe = pipeline.PipelineConfig()
        grid = HyperGrid.coarse()
    if getattr(args, "seed", None) is not None:
        sim_cfg.seed = args.seed
    if getattr(args, "grid", None):
        if args.grid == "coarse":
            grid = HyperGrid.coarse()
        elif args.grid == "full":
            grid = HyperGrid()
        else:
            grid = _grid_from_file(args.grid)
    if getattr(args, "phase", None) and args.phase != "both":
        pipe.phases = [int(args.phase)]
    if getattr(args, "platform", None) and args.platform != "both":
        pipe.platforms = [args.platform]
    return sim_cfg, split, grid, pipe


def _grid_from_file(path) -> HyperGrid:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    grid = HyperGrid.coarse()
    for axis in ("epochs", "units", "batch_size", "layers"):
        if axis in doc:
            setattr(grid, axis, [int(v) for v in doc[axis]])
    for axis in ("dropout", "learning_rate"):
        if axis in doc:
            setattr(grid, axis, [float(v) for v in doc[axis]])
    return grid


def _read_dataset(args) -> Dataset:
    return Dataset.from_csv(args.dataset)


def cmd_simulate(args) -> int:
    sim_cfg, _, _, _ = _load_configs(args)
    dataset = pipeline.stage_simulate(sim_cfg, Path(args.out_dir))
    pipeline.write_manifest(Path(args.out_dir), sim_cfg, {}, dataset.clamp_events)
    print(f"wrote {len(dataset)} rows to {Path(args.out_dir) / 'dataset.csv'}")
    return 0


def cmd_eda(args) -> int:
    dataset = _read_dataset(args)
    written = pipeline.stage_eda(dataset, Path(args.out_dir))
    print(f"wrote {len(written)} EDA files under {Path(args.out_dir) / 'eda'}")
    return 0


def cmd_tune(args) -> int:
    sim_cfg, split, grid, pipe = _load_configs(args)
    dataset = _read_dataset(args)
    for phase in pipe.phases:
        for platform in pipe.platforms:
            best, results = pipeline.stage_tune(dataset, split, phase, platform, grid,
                                                sim_cfg.seed, Path(args.out_dir),
                                                pipe.phase1_window_days)
            print(f"phase {phase} {platform}: best of {len(results)} trials -> "
                  f"{best.hyperparams.to_dict()} (val loss {best.final_val_loss:.6f})")
    return 0


def cmd_train(args) -> int:
    sim_cfg, split, _, pipe = _load_configs(args)
    dataset = _read_dataset(args)
    for phase in pipe.phases:
        for platform in pipe.platforms:
            best_path = Path(args.out_dir) / "tuning" / f"phase{phase}_{platform}_best.json"
            if args.best:
                best_path = Path(args.best)
            doc = json.loads(best_path.read_text(encoding="utf-8"))
            hp = HyperParams(**doc["hyperparams"])
            _, metrics, _, _ = pipeline.stage_train_eval(
                dataset, split, phase, platform, hp, sim_cfg.seed, Path(args.out_dir),
                pipe.phase1_window_days)
            print(f"phase {phase} {platform}: RMSE {metrics.rmse:.2f} "
                  f"MAE {metrics.mae:.2f} R2 {metrics.r2:.4f}")
    return 0


def cmd_bullwhip(args) -> int:
    sim_cfg, split, _, pipe = _load_configs(args)
    dataset = _read_dataset(args)
    models_dir = Path(args.models_dir) if args.models_dir else Path(args.out_dir) / "models"
    forecasts = {}
    for phase in pipe.phases:
        networks = pipeline.load_models(models_dir, phase)
        days, totals = pipeline.forecast_total_demand(dataset, split, phase, networks,
                                                      pipe.phase1_window_days)
        forecasts[phase] = (days, totals)
    params = inventory.NewsvendorParams(z_score=sim_cfg.z_score)
    report = pipeline.stage_bullwhip(dataset, split, forecasts, params,
                                     pipe.plan_window_days, Path(args.out_dir),
                                     phases=tuple(pipe.phases))
    print(report.to_text())
    return 0


def cmd_pipeline(args) -> int:
    sim_cfg, split, grid, pipe = _load_configs(args)
    summary = pipeline.run_pipeline(sim_cfg, split, grid, pipe, Path(args.out_dir))
    for (phase, platform), metrics in sorted(summary["metrics"].items()):
        print(f"phase {phase} {platform}: RMSE {metrics.rmse:.2f} "
              f"MAE {metrics.mae:.2f} R2 {metrics.r2:.4f}")
    print(summary["bullwhip"].to_text())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="demandlab",
        description="Two-platform demand simulation, LSTM forecasting, newsvendor "
                    "inventory, and bullwhip analysis.")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, dataset=False, models=False, best=False):
        p.add_argument("--config", help="INI config file")
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--out-dir", default="out", help="artifact directory")
        p.add_argument("--phase", choices=["1", "2", "both"], default="both")
        p.add_argument("--platform", choices=[*PLATFORMS, "both"], default="both")
        p.add_argument("--grid", help="coarse | full | path to a JSON grid file")
        if dataset:
            p.add_argument("--dataset", required=True, help="dataset CSV path")
        if models:
            p.add_argument("--models-dir", help="directory with trained model files")
        if best:
            p.add_argument("--best", help="explicit best-config JSON (overrides tuning dir)")

    common(sub.add_parser("simulate", help="generate the demand dataset"))
    common(sub.add_parser("eda", help="exploratory statistics"), dataset=True)
    common(sub.add_parser("tune", help="hyperparameter grid search"), dataset=True)
    common(sub.add_parser("train", help="train the tuned model and evaluate"),
           dataset=True, best=True)
    common(sub.add_parser("bullwhip", help="bullwhip report from trained models"),
           dataset=True, models=True)
    common(sub.add_parser("pipeline", help="run every stage end to end"))
    return parser


_COMMANDS = {
    "simulate": cmd_simulate,
    "eda": cmd_eda,
    "tune": cmd_tune,
    "train": cmd_train,
    "bullwhip": cmd_bullwhip,
    "pipeline": cmd_pipeline,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except Exception as exc:  # surface stage errors with a nonzero exit
        log.error("%s", exc)
        if args.verbose:
            raise
        return 1


if __name__ == "__main__":
    sys.exit(main())
