from pathlib import Path
from typing import Any, Optional

import numpy as np
import structlog
from pydantic import BaseModel, Field, ValidationError

from cavflow.exceptions import CheckpointError
from cavflow.models.game import GameSpec
from cavflow.models.training import PolicyArch, TrainConfig
from cavflow.policy.network import PolicyNet, PolicyParams

_log = structlog.get_logger(__name__)

CHECKPOINT_VERSION = 1


class Checkpoint(BaseModel):
    """Joint policy parameters with the architecture header and optimizer state."""

    version: int = CHECKPOINT_VERSION
    preset: Optional[str] = None
    spec: GameSpec
    arch: PolicyArch
    train: TrainConfig
    iteration: int = 0
    theta: list[float]
    optimizer: Optional[dict[str, Any]] = None
    metadata: dict[str, Any] = Field(default_factory=dict)

    def to_params(self) -> PolicyParams:
        net = PolicyNet.from_arch(self.spec, self.arch)
        return PolicyParams(
            net=net, n_players=self.spec.n_players, flat=np.asarray(self.theta, dtype=float)
        )


def save_checkpoint(path: Path, checkpoint: Checkpoint) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(checkpoint.model_dump_json(by_alias=True, indent=2))
    _log.info("checkpoint_written", path=str(path), iteration=checkpoint.iteration)
    return path


def load_checkpoint(path: Path) -> Checkpoint:
    try:
        checkpoint = Checkpoint.model_validate_json(Path(path).read_text())
    except (OSError, ValidationError) as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    if checkpoint.version != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"checkpoint {path} has version {checkpoint.version}, expected {CHECKPOINT_VERSION}"
        )
    net = PolicyNet.from_arch(checkpoint.spec, checkpoint.arch)
    expected = checkpoint.spec.n_players * net.n_params
    if len(checkpoint.theta) != expected:
        raise CheckpointError(
            f"checkpoint {path} holds {len(checkpoint.theta)} parameters, expected {expected}"
        )
    return checkpoint
