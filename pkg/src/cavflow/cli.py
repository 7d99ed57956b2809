import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

import structlog
from pydantic import ValidationError

from cavflow.core.game import alpha_bound
from cavflow.core.solver import ScenarioRunner, export_checkpoint, verify_checkpoint
from cavflow.exceptions import CheckpointError, DivergenceError, SpecValidationError
from cavflow.export.checkpoint import load_checkpoint
from cavflow.models.game import DynamicsKind
from cavflow.models.scenario import ObstacleSize, ScenarioPreset
from cavflow.models.training import PolicyArch, TrainConfig
from cavflow.scenarios.sources import BuiltinScenarios, FileScenarios, load_preset
from cavflow.verification.best_response import default_best_response_config
from cavflow.verification.engine import VerificationEngine

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_DIVERGENCE = 3
EXIT_IO = 4


def setup_logging(log_level: str = "INFO") -> None:
    """Configure structured logging."""
    logging.basicConfig(
        format="%(message)s",
        stream=sys.stdout,
        level=log_level,
    )

    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.UnicodeDecoder(),
            structlog.processors.JSONRenderer()
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )


def load_config(config_path: str) -> dict[str, Any]:
    """Load solver settings from a JSON file."""
    with open(config_path, 'r') as f:
        return json.load(f)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cavflow", description="cavflow - equilibrium policies for connected vehicle games"
    )
    parser.add_argument("--log-level", type=str, default="INFO", help="Logging level")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Train, certify and export one preset")
    run.add_argument("preset", help="Preset name, or path to a preset / game JSON file")
    run.add_argument("--beta", type=float, choices=[0.0, 1.0], help="Interaction regime")
    run.add_argument("--obstacle", type=ObstacleSize, choices=list(ObstacleSize))
    run.add_argument("--model", type=DynamicsKind, choices=list(DynamicsKind))
    run.add_argument("--seed", type=int)
    run.add_argument("--iters", type=int, help="Training iterations")
    run.add_argument("--steps", type=int, help="Time steps P")
    run.add_argument("--samples", type=int, help="Monte Carlo samples M")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--config", type=str, help="Solver settings JSON (train, arch, verification)")
    run.add_argument("--presets-dir", type=str, default="config/presets")
    run.add_argument("--out", type=str, default="runs")
    run.add_argument("--br-iters", type=int, help="Best-response iterations per player")
    run.add_argument("--no-certify", action="store_true", help="Skip the equilibrium certificate")

    verify = sub.add_parser("verify", help="Certify the policies stored in a checkpoint")
    verify.add_argument("checkpoint")
    verify.add_argument("--config", type=str)
    verify.add_argument("--br-iters", type=int)
    verify.add_argument("--workers", type=int, default=1)
    verify.add_argument("--out", type=str)

    alpha = sub.add_parser("alpha", help="Print the alpha bound of a game or preset file")
    alpha.add_argument("config")

    export = sub.add_parser("export", help="Write a checkpoint's trajectories")
    export.add_argument("checkpoint")
    export.add_argument("--format", choices=["csv", "json"], default="csv")
    export.add_argument("--out", type=str)
    export.add_argument("--workers", type=int, default=1)
    return parser


def _resolve(args: argparse.Namespace) -> ScenarioPreset:
    builtin = BuiltinScenarios()
    if args.preset in builtin.names():
        return builtin.get(args.preset, args.beta, args.obstacle, args.model)
    files = FileScenarios(Path(args.presets_dir))
    return files.get(args.preset, args.beta, args.obstacle, args.model)


def _apply_settings(
        preset: ScenarioPreset, settings: dict[str, Any], args: argparse.Namespace
) -> ScenarioPreset:
    train_updates = dict(settings.get("train", {}))
    flags = {
        "seed": args.seed, "iterations": args.iters, "steps": args.steps, "samples": args.samples
    }
    train_updates.update({k: v for k, v in flags.items() if v is not None})
    train_updates["workers"] = args.workers
    if preset.spec.dynamics.is_deterministic:
        train_updates["samples"] = 1
    preset = preset.with_train(**train_updates)
    if "arch" in settings:
        preset = preset.model_copy(update={"arch": PolicyArch.model_validate(settings["arch"])})
    return preset


def _engine(
        settings: dict[str, Any], train_cfg: TrainConfig, br_iters: Optional[int], workers: int
) -> VerificationEngine:
    verification = settings.get("verification", {})
    br_cfg = default_best_response_config(train_cfg)
    iterations = br_iters or verification.get("best_response_iterations")
    if iterations:
        br_cfg = br_cfg.model_copy(update={"iterations": int(iterations)})
    return VerificationEngine.default(
        br_cfg=br_cfg,
        rel_tol=verification.get("rel_tol", 0.05),
        trials=verification.get("trials", 100),
        seed=train_cfg.seed,
        workers=workers,
    )


def _cmd_run(args: argparse.Namespace, logger: Any) -> int:
    settings = load_config(args.config) if args.config else {}
    preset = _apply_settings(_resolve(args), settings, args)
    logger.info("preset_resolved", preset=preset.label, seed=preset.train.seed)
    engine = None
    if not args.no_certify:
        engine = _engine(settings, preset.train, args.br_iters, args.workers)
    result = ScenarioRunner(preset, Path(args.out) / preset.label, engine, args.workers).run()
    if result.certificate is not None and not result.certificate.passed:
        logger.warning("certificate_failed", preset=preset.label)
    return EXIT_OK


def _cmd_verify(args: argparse.Namespace, logger: Any) -> int:
    settings = load_config(args.config) if args.config else {}
    checkpoint = load_checkpoint(Path(args.checkpoint))
    engine = _engine(settings, checkpoint.train, args.br_iters, args.workers)
    out = Path(args.out) if args.out else None
    certificate = verify_checkpoint(Path(args.checkpoint), engine, out)
    print(certificate.model_dump_json())
    return EXIT_OK if certificate.passed else EXIT_FAILURE


def _cmd_alpha(args: argparse.Namespace, logger: Any) -> int:
    preset = load_preset(Path(args.config))
    print(json.dumps({"alpha_bound": alpha_bound(preset.spec)}))
    return EXIT_OK


def _cmd_export(args: argparse.Namespace, logger: Any) -> int:
    out = Path(args.out) if args.out else None
    path = export_checkpoint(Path(args.checkpoint), args.format, out, args.workers)
    logger.info("export_finished", path=str(path))
    return EXIT_OK


COMMANDS = {
    "run": _cmd_run,
    "verify": _cmd_verify,
    "alpha": _cmd_alpha,
    "export": _cmd_export,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    setup_logging(args.log_level)
    logger = structlog.get_logger()

    try:
        return COMMANDS[args.command](args, logger)
    except (SpecValidationError, ValidationError, ValueError) as e:
        logger.error("configuration_error", error=str(e))
        return EXIT_USAGE
    except DivergenceError as e:
        logger.error("fatal_error", error=str(e), phase=e.phase, iteration=e.iteration)
        return EXIT_DIVERGENCE
    except (OSError, CheckpointError) as e:
        logger.error("io_error", error=str(e))
        return EXIT_IO
    except Exception as e:
        logger.error("fatal_error", error=str(e), exc_info=True)
        return EXIT_FAILURE


def run_cli() -> None:
    sys.exit(main())
