import argparse
import logging
from pathlib import Path

from pydantic import ValidationError

from src.experiment.calibration import CalibrationError, run_calibration
from src.experiment.config import ExperimentConfig, load_experiment_config
from src.experiment.runs import run_global_sweep, run_local, run_oscillating_sweep
from src.experiment.verify import run_verify
from src.noise.model import AuditError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_SUITE_FAILED = 3

COMMANDS = {
    "calibrate": "calibrate",
    "verify": "verify",
    "local": "local",
    "global-sweep": "global_sweep",
    "oscillating-sweep": "oscillating_sweep",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sns", description="Stochastic Navier-Stokes experiments in critical Besov spaces"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", type=Path, help="experiment JSON file")
        cmd.add_argument("--seed", type=int, help="master seed (64-bit)")
        cmd.add_argument("--paths", type=int, help="number of Monte Carlo paths")
        cmd.add_argument("--out", type=str, help="output directory")
        cmd.add_argument("--workers", type=int, help="concurrent paths")
        cmd.add_argument("--manifest", type=str, help="reuse a calibration manifest")
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    base = load_experiment_config(args.config) if args.config else ExperimentConfig()
    return base.with_overrides(
        experiment=COMMANDS[args.command],
        master_seed=args.seed,
        n_paths=args.paths,
        output_dir=args.out,
        workers=args.workers,
        manifest_path=args.manifest,
    )


def dispatch(config: ExperimentConfig) -> int:
    if config.experiment == "calibrate":
        manifest = run_calibration(config)
        logger.info(f"Manifest {manifest.hash} written to {config.output_path}")
        return EXIT_OK
    if config.experiment == "verify":
        verdict = run_verify(config)
        failed = [suite["name"] for suite in verdict["suites"] if not suite["passed"]]
        if failed:
            logger.error(f"Property suites failed: {failed}")
            return EXIT_SUITE_FAILED
        return EXIT_OK
    runners = {
        "local": run_local,
        "global_sweep": run_global_sweep,
        "oscillating_sweep": run_oscillating_sweep,
    }
    runners[config.experiment](config)
    logger.info(f"Outputs in {config.output_path}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = resolve_config(args)
        return dispatch(config)
    except (ValidationError, AuditError, CalibrationError, ValueError, FileNotFoundError) as e:
        logger.error(f"{args.command}: {e}")
        return EXIT_INVALID
