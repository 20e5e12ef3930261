import argparse
import logging
import os
import signal
import sys

from pas_npn_lab.core.config import harness_config, runtime_config
from pas_npn_lab.core.errors import LabError
from pas_npn_lab.core.logging import setup_logging
from pas_npn_lab.harness.config import ExperimentConfig, list_presets, load_config
from pas_npn_lab.harness.models import PointCoordinates
from pas_npn_lab.harness.results import emit_results, load_results, summarize
from pas_npn_lab.harness.runner import kernel_memory, kernel_table, run_point, run_sweep
from pas_npn_lab.metrics.kernel import KernelCache
from pas_npn_lab.shaping.models import DmKind

logger = logging.getLogger(__name__)


def signal_handler(signum, frame):
    """Handle shutdown gracefully"""
    logging.getLogger(__name__).info("Shutdown signal received, terminating...")
    sys.exit(130)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pas-npn-lab", description="PAS shaping and nonlinear phase noise lab")
    parser.add_argument("--seed", type=int, help="Master seed overriding the config")
    parser.add_argument("--workers", type=int, help="Points evaluated concurrently")
    parser.add_argument("--out-dir", help="Directory receiving result tables")
    parser.add_argument("--cache-dir", help="Directory of cached kernel coefficients")
    parser.add_argument("--log-level", help="Logging level")
    verbs = parser.add_subparsers(dest="verb", required=True)

    run = verbs.add_parser("run", help="Evaluate one point (the first value of every sweep list unless overridden)")
    run.add_argument("config", help=f"YAML file or preset ({', '.join(list_presets())})")
    run.add_argument("--dm-kind")
    run.add_argument("--block-length", type=int)
    run.add_argument("--cpr-half-window", type=int)
    run.add_argument("--launch-power-dbm", type=float)

    sweep = verbs.add_parser("sweep", help="Run the full sweep of a config and write result tables")
    sweep.add_argument("config")

    kernel = verbs.add_parser("kernel", help="Precompute kernel coefficients for the link and grid of a config")
    kernel.add_argument("config")

    report = verbs.add_parser("report", help="Summarize a results table")
    report.add_argument("results", help="results.csv or the directory holding it")
    return parser


def apply_runtime_flags(args: argparse.Namespace) -> None:
    if args.out_dir:
        runtime_config.out_dir = args.out_dir
    if args.cache_dir:
        runtime_config.cache_dir = args.cache_dir
    if args.log_level:
        runtime_config.log_level = args.log_level.upper()
    if args.workers:
        harness_config.workers = args.workers


def _load(args: argparse.Namespace) -> ExperimentConfig:
    config = load_config(args.config)
    if args.seed is not None:
        config = config.with_overrides(seed=args.seed)
    return config


def first_coordinates(config: ExperimentConfig, args: argparse.Namespace) -> PointCoordinates:
    return PointCoordinates(
        config.dm_kinds[0] if args.dm_kind is None else DmKind(args.dm_kind),
        config.block_lengths[0] if args.block_length is None else args.block_length,
        config.cpr_half_windows[0] if args.cpr_half_window is None else args.cpr_half_window,
        config.launch_powers_dbm[0] if args.launch_power_dbm is None else args.launch_power_dbm,
    )


def run_cli(args: argparse.Namespace) -> int:
    match args.verb:
        case "run":
            config = _load(args)
            coordinates = first_coordinates(config, args)
            point = run_point(config, coordinates)
            emit_results([point], config)
            print(point.to_record())
        case "sweep":
            config = _load(args)
            points = run_sweep(config, harness_config.workers)
            paths = emit_results(points, config)
            print(f"Results written to {paths['results'].parent}")
            return 1 if all(not p.ok for p in points) else 0
        case "kernel":
            config = _load(args)
            cache = KernelCache()
            table = kernel_table(config, cache)
            print(f"N_c={kernel_memory(config)}, {len(table.rows)} offsets cached in {cache.directory}")
        case "report":
            print(summarize(load_results(args.results)).format())
    return 0


def main(argv: list[str] | None = None) -> int:
    """Entry point for the CLI command"""
    args = build_parser().parse_args(argv)
    apply_runtime_flags(args)
    setup_logging()
    logger.info(f"=== pas-npn-lab {args.verb} (pid {os.getpid()}) ===")

    signal.signal(signal.SIGINT, signal_handler)
    signal.signal(signal.SIGTERM, signal_handler)

    try:
        return run_cli(args)
    except (LabError, FileNotFoundError, ValueError) as e:
        logger.error(f"{args.verb} failed: {type(e).__name__}: {e}", exc_info=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
