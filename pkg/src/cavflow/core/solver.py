from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import structlog

from cavflow.core.game import alpha_bound
from cavflow.export import artifacts
from cavflow.export.checkpoint import Checkpoint, load_checkpoint
from cavflow.export.plots import plot_potential_history, plot_trajectories
from cavflow.models.results import NECertificate, TrainReport, TrajectorySummary
from cavflow.models.scenario import ScenarioPreset
from cavflow.policy.network import PolicyParams
from cavflow.rollout.grid import TimeGrid
from cavflow.rollout.io import write_trajectories_csv
from cavflow.rollout.simulate import RolloutBatch, simulate
from cavflow.scenarios.analysis import summarize
from cavflow.scenarios.sources import save_preset, wrap_game
from cavflow.training.trainer import EVAL_STREAM, final_params, train
from cavflow.verification.engine import VerificationEngine

_log = structlog.get_logger(__name__)


@dataclass
class RunResult:
    report: TrainReport
    params: PolicyParams
    batch: RolloutBatch
    summary: TrajectorySummary
    certificate: Optional[NECertificate]
    out_dir: Path


class ScenarioRunner:
    """Coordinates training, certification and artifact export for one preset."""

    def __init__(
            self,
            preset: ScenarioPreset,
            out_dir: Path,
            engine: Optional[VerificationEngine] = None,
            workers: int = 1,
    ):
        self.preset = preset
        self.out_dir = Path(out_dir)
        self.engine = engine
        self.workers = workers

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid.uniform(self.preset.spec.horizon, self.preset.train.steps)

    def simulate(self, params: PolicyParams) -> RolloutBatch:
        cfg = self.preset.train
        return simulate(
            self.preset.spec, params, self.grid, cfg.samples, cfg.seed, EVAL_STREAM, self.workers
        )

    def run(self) -> RunResult:
        """Train, certify (when an engine is set) and write every artifact to out_dir."""
        preset, out = self.preset, self.out_dir
        out.mkdir(parents=True, exist_ok=True)
        save_preset(preset, out / artifacts.CONFIG_FILE)
        _log.info(
            "run_started",
            preset=preset.label,
            players=preset.spec.n_players,
            alpha_bound=alpha_bound(preset.spec),
            out_dir=str(out),
        )

        report = train(
            preset.spec,
            preset.arch,
            preset.train,
            checkpoint_path=out / artifacts.CHECKPOINT_FILE,
            preset=preset.label,
        )
        params = final_params(preset.spec, preset.arch, report)

        certificate = None
        if self.engine is not None:
            certificate = self.engine.certify(preset.spec, params, preset.train)
            report = report.model_copy(update={"verification": certificate})
            artifacts.write_json(out / artifacts.CERTIFICATE_FILE, certificate)

        batch = self.simulate(params)
        summary = summarize(preset, batch)
        artifacts.write_json(out / artifacts.TRAIN_REPORT_FILE, report.to_artifact())
        artifacts.write_potential_history(
            out / artifacts.HISTORY_FILE, report.potential_history, report.grad_norm_history
        )
        write_trajectories_csv(batch, out / artifacts.TRAJECTORIES_FILE)
        artifacts.write_json(
            out / artifacts.SUMMARY_FILE, self._summary_payload(report, summary, certificate)
        )
        plot_trajectories(preset, batch, out / artifacts.TRAJECTORY_FIGURE)
        plot_potential_history(report.potential_history, out / artifacts.HISTORY_FIGURE)

        _log.info(
            "run_finished",
            preset=preset.label,
            final_potential=report.final_potential,
            certified=certificate.passed if certificate else None,
        )
        return RunResult(
            report=report,
            params=params,
            batch=batch,
            summary=summary,
            certificate=certificate,
            out_dir=out,
        )

    def _summary_payload(
            self,
            report: TrainReport,
            summary: TrajectorySummary,
            certificate: Optional[NECertificate],
    ) -> dict:
        payload = {
            "preset": self.preset.label,
            "alpha_bound": alpha_bound(self.preset.spec),
            "initial_potential": report.initial_potential,
            "final_potential": report.final_potential,
            "iterations": report.iterations_completed,
            "trajectories": summary.model_dump(mode="json"),
        }
        if certificate is not None:
            payload["max_exploitability"] = max(certificate.exploitability, default=0.0)
            payload["certified"] = certificate.passed
        return payload


def runner_from_checkpoint(
        path: Path,
        out_dir: Optional[Path] = None,
        engine: Optional[VerificationEngine] = None,
        workers: int = 1,
) -> tuple[ScenarioRunner, Checkpoint]:
    checkpoint = load_checkpoint(path)
    preset = wrap_game(checkpoint.spec).model_copy(
        update={"arch": checkpoint.arch, "train": checkpoint.train}
    )
    runner = ScenarioRunner(preset, out_dir or Path(path).parent, engine, workers)
    return runner, checkpoint


def verify_checkpoint(
        path: Path, engine: VerificationEngine, out_dir: Optional[Path] = None
) -> NECertificate:
    runner, checkpoint = runner_from_checkpoint(path, out_dir, engine, engine.workers)
    certificate = engine.certify(checkpoint.spec, checkpoint.to_params(), checkpoint.train)
    artifacts.write_json(runner.out_dir / artifacts.CERTIFICATE_FILE, certificate)
    return certificate


def export_checkpoint(
        path: Path, fmt: str, out_dir: Optional[Path] = None, workers: int = 1
) -> Path:
    """Re-simulate a checkpoint's policies on the evaluation noise and write trajectories."""
    runner, checkpoint = runner_from_checkpoint(path, out_dir, workers=workers)
    batch = runner.simulate(checkpoint.to_params())
    if fmt == "csv":
        return write_trajectories_csv(batch, runner.out_dir / artifacts.TRAJECTORIES_FILE)
    if fmt == "json":
        return artifacts.write_json(runner.out_dir / "trajectories.json", {
            "preset": checkpoint.preset,
            "times": batch.times.tolist(),
            "states": batch.states.tolist(),
            "actions": batch.actions.tolist(),
            "seed": batch.seed,
            "stream": batch.stream,
            "final_state_mean": np.mean(batch.states[:, :, -1], axis=0).tolist(),
        })
    raise ValueError(f"Unknown export format '{fmt}'")
