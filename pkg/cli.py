"""
Operator command line for the handover co-simulation.

Usage:
    python cli.py run --scenario scenarios/default.json --mode oracle --seed 1 --out out/run
    python cli.py campaign --modes default oracle --runs 30 --out out/campaign
    python cli.py gen-data --seed 1 --out data/rsrp.csv
    python cli.py train --data data/rsrp.csv --arch gru --out models/gru.json
    python cli.py grid-search --data data/rsrp.csv --arch lstm --budget 5 --out models/search
    python cli.py report --campaign out/campaign --metric mean_delay_ms

Exit codes: 0 ok, 2 configuration error, 3 model error, 4 data error,
5 missing campaign runs.
"""
import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from dotenv import load_dotenv
from pydantic import ValidationError

from nn.dataset import DATASET_COLUMNS, DatasetError, load_dataset
from nn.grid_search import grid_search, search_report, search_space
from nn.model import ModelConfig
from nn.persistence import ModelError, save_model
from nn.training import train
from simulation.runner import MODES, ScenarioError, Simulation, configure_mode, load_mode_model
from simulation.scenario import Scenario, default_scenario, load_scenario
from stats.summary import MissingModeError, load_campaign, summarize, write_summary
from traffic.metrics import AGGREGATE_KEYS, METRIC_FILES, write_outputs

load_dotenv()

logger = logging.getLogger("cli")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MODEL = 3
EXIT_DATA = 4
EXIT_MISSING_RUNS = 5


class CommandError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _scenario(args) -> Scenario:
    try:
        scenario = load_scenario(args.scenario) if args.scenario else default_scenario()
        if getattr(args, "duration", None) is not None:
            scenario = Scenario.model_validate({**scenario.model_dump(), "duration": args.duration})
        return scenario
    except FileNotFoundError:
        raise CommandError(f"scenario file {args.scenario} does not exist", EXIT_CONFIG)
    except (OSError, ValidationError, ValueError) as e:
        raise CommandError(f"invalid scenario: {e}", EXIT_CONFIG)


def run_one(scenario: Scenario, mode: str, seed: Optional[int], model_ref, out_dir) -> dict:
    """Run one (mode, seed) and write its outputs; returns the aggregates."""
    configured = configure_mode(scenario, mode, seed, model_ref)
    model = load_mode_model(mode, configured.model_ref) if mode in ("lstm", "gru") else None
    metrics = Simulation(configured, model).run()
    write_outputs(metrics, out_dir)
    return metrics.aggregates


def _campaign_job(job) -> dict:
    scenario_json, mode, seed, model_ref, out_dir = job
    return run_one(Scenario.model_validate_json(scenario_json), mode, seed, model_ref, out_dir)


def cmd_run(args) -> int:
    scenario = _scenario(args)
    aggregates = run_one(scenario, args.mode, args.seed, args.model, args.out)
    logger.info(f"Run finished: {json.dumps(aggregates)}")
    return EXIT_OK


def cmd_campaign(args) -> int:
    if args.runs < 1:
        raise CommandError("--runs must be at least 1", EXIT_CONFIG)
    scenario = _scenario(args)
    models = {"lstm": args.lstm_model, "gru": args.gru_model}
    for mode in args.modes:
        if mode not in MODES:
            raise CommandError(f"unknown mode '{mode}'", EXIT_CONFIG)
        if mode in models:
            # fail before any run starts
            load_mode_model(mode, configure_mode(scenario, mode, None, models[mode]).model_ref)

    out = Path(args.out)
    jobs = []
    for mode in args.modes:
        for seed in range(args.seed_base, args.seed_base + args.runs):
            run_dir = out / mode / str(seed)
            if (run_dir / METRIC_FILES["aggregates"]).exists():
                logger.info(f"Skipping {mode}/{seed}: already complete")
                continue
            jobs.append((scenario.model_dump_json(), mode, seed, models.get(mode), str(run_dir)))

    logger.info(f"Campaign: {len(jobs)} runs to do with {args.workers} worker(s)")
    if args.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            for done, _ in enumerate(pool.map(_campaign_job, jobs), start=1):
                logger.info(f"Campaign progress {done}/{len(jobs)}")
    else:
        for done, job in enumerate(jobs, start=1):
            _campaign_job(job)
            logger.info(f"Campaign progress {done}/{len(jobs)}")
    return EXIT_OK


def cmd_gen_data(args) -> int:
    scenario = _scenario(args)
    update = {"ho_mode": "default", "traffic": []}
    if args.seed is not None:
        update["seed"] = args.seed
    # the dump must hold every report of the run
    update["sdl_capacity"] = max(scenario.sdl_capacity, scenario.duration // scenario.report_period_ms + 1)
    scenario = Scenario.model_validate({**scenario.model_dump(), **update})
    simulation = Simulation(scenario)
    simulation.run()
    frame = simulation.ric.sdl.to_frame()[DATASET_COLUMNS]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out, index=False)
    logger.info(f"Wrote {len(frame)} samples to {out}")
    return EXIT_OK


def _train_config(args, **overrides) -> ModelConfig:
    fields = {
        "arch": args.arch,
        "epochs": args.epochs,
        "seed": args.seed,
    }
    for name in ("lookback", "batch_size", "learning_rate", "activation", "optimizer", "patience"):
        value = getattr(args, name, None)
        if value is not None:
            fields[name] = value
    fields.update(overrides)
    try:
        return ModelConfig(**fields)
    except ValidationError as e:
        raise CommandError(f"invalid model configuration: {e}", EXIT_CONFIG)


def _write_report(report, path: Path):
    path.write_text(json.dumps(report.to_dict(), indent=2) + "\n")


def cmd_train(args) -> int:
    dataset = load_dataset(args.data)
    config = _train_config(args)
    model, report = train(config, dataset)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out)
    _write_report(report, out.with_suffix(".report.json"))
    return EXIT_OK


def cmd_grid_search(args) -> int:
    dataset = load_dataset(args.data)
    configs = search_space(args.arch, epochs=args.epochs, seed=args.seed)
    results = grid_search(configs, dataset, budget=args.budget, seed=args.seed, workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    search_report(results).to_csv(out / "search_report.csv", index=False)
    best = results[0]
    save_model(best.model, out / "model.json")
    _write_report(best.report, out / "model.report.json")
    logger.info(f"Best configuration: {best.config.model_dump()} (val mse {best.val_mse:.6g})")
    return EXIT_OK


def cmd_report(args) -> int:
    runs = load_campaign(args.campaign)
    if not runs:
        raise CommandError(f"no finished runs under {args.campaign}", EXIT_MISSING_RUNS)
    modes = args.modes or sorted(runs, key=lambda mode: (MODES.index(mode) if mode in MODES else len(MODES), mode))
    out = Path(args.out or args.campaign)
    for metric in args.metric:
        summary = summarize(runs, metric, modes)
        for path in write_summary(summary, out):
            logger.info(f"Wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cli.py", description="Predictive handover co-simulation")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run one scenario")
    run.add_argument("--scenario", help="scenario JSON (default: built-in 3-cell road)")
    run.add_argument("--mode", choices=MODES, default="default")
    run.add_argument("--model", help="trained model file for lstm/gru modes")
    run.add_argument("--seed", type=int)
    run.add_argument("--duration", type=int, help="override the scenario duration (ms)")
    run.add_argument("--out", required=True)
    run.set_defaults(handler=cmd_run)

    campaign = commands.add_parser("campaign", help="seeded repetitions per mode")
    campaign.add_argument("--scenario")
    campaign.add_argument("--modes", nargs="+", default=["default", "oracle"])
    campaign.add_argument("--runs", type=int, default=30)
    campaign.add_argument("--seed-base", type=int, default=1)
    campaign.add_argument("--lstm-model")
    campaign.add_argument("--gru-model")
    campaign.add_argument("--duration", type=int)
    campaign.add_argument("--workers", type=int, default=int(os.getenv("CAMPAIGN_WORKERS", "1")))
    campaign.add_argument("--out", required=True)
    campaign.set_defaults(handler=cmd_campaign)

    gen = commands.add_parser("gen-data", help="dump KPM RSRP history for training")
    gen.add_argument("--scenario")
    gen.add_argument("--seed", type=int)
    gen.add_argument("--duration", type=int)
    gen.add_argument("--out", required=True)
    gen.set_defaults(handler=cmd_gen_data)

    for name, handler in (("train", cmd_train), ("grid-search", cmd_grid_search)):
        sub = commands.add_parser(name, help=f"{name.replace('-', ' ')} a recurrent RSRP predictor")
        sub.add_argument("--data", required=True)
        sub.add_argument("--arch", choices=("lstm", "gru"), required=True)
        sub.add_argument("--epochs", type=int, default=200)
        sub.add_argument("--seed", type=int, default=0)
        sub.add_argument("--out", required=True)
        sub.set_defaults(handler=handler)
        if name == "train":
            sub.add_argument("--lookback", type=int, default=15)
            sub.add_argument("--batch-size", type=int, default=16)
            sub.add_argument("--learning-rate", "--lr", type=float, default=1e-4)
            sub.add_argument("--activation", choices=("relu", "linear"), default="relu")
            sub.add_argument("--optimizer", choices=("adam", "rmsprop"))
            sub.add_argument("--patience", type=int, default=20)
        else:
            sub.add_argument("--budget", type=int)
            sub.add_argument("--workers", type=int, default=1)

    report = commands.add_parser("report", help="ANOVA comparison tables for a campaign")
    report.add_argument("--campaign", required=True)
    report.add_argument("--metric", nargs="+", default=["mean_delay_ms"], choices=AGGREGATE_KEYS[2:])
    report.add_argument("--modes", nargs="+")
    report.add_argument("--out")
    report.set_defaults(handler=cmd_report)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(
        level=os.getenv("LOG_LEVEL", "INFO").upper(),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except CommandError as e:
        logger.error(str(e))
        return e.code
    except ModelError as e:
        logger.error(f"Model error: {e}")
        return EXIT_MODEL
    except DatasetError as e:
        logger.error(f"Data error: {e}")
        return EXIT_DATA
    except MissingModeError as e:
        logger.error(f"Missing runs: {e}")
        return EXIT_MISSING_RUNS
    except (ScenarioError, ValidationError) as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
