from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from cavflow.models.game import DynamicsKind, GameSpec
from cavflow.models.training import PolicyArch, TrainConfig


class ScenarioName(str, Enum):
    INTERACTION_1D_VELOCITY = "interaction_1d_velocity"
    INTERACTION_1D_ACCELERATION = "interaction_1d_acceleration"
    OBSTACLE_2D = "obstacle_2d"
    HETEROGENEOUS_1D = "heterogeneous_1d"
    CUSTOM = "custom"  # a game file without a built-in scenario

    @property
    def is_interaction(self) -> bool:
        return self in (
            ScenarioName.INTERACTION_1D_VELOCITY,
            ScenarioName.INTERACTION_1D_ACCELERATION,
        )

    @property
    def default_model(self) -> DynamicsKind:
        if self in (ScenarioName.INTERACTION_1D_ACCELERATION, ScenarioName.OBSTACLE_2D):
            return DynamicsKind.ACCELERATION
        return DynamicsKind.VELOCITY


class ObstacleSize(str, Enum):
    NONE = "none"
    SMALL = "small"  # radius 0.1
    LARGE = "large"  # radius 0.5

    @property
    def curvature(self) -> Optional[float]:
        return {"none": None, "small": 100.0, "large": 4.0}[self.value]


class VehicleType(str, Enum):
    LARGE = "large"
    MEDIUM = "medium"
    SMALL = "small"


class ScenarioPreset(BaseModel):
    """A fully resolved experiment: the game, the policy architecture and the training setup."""

    model_config = ConfigDict(frozen=True)

    name: ScenarioName
    beta: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    obstacle: Optional[ObstacleSize] = None
    model: DynamicsKind
    spec: GameSpec
    arch: PolicyArch = Field(default_factory=PolicyArch)
    train: TrainConfig = Field(default_factory=TrainConfig)
    groups: Optional[list[VehicleType]] = None

    @model_validator(mode="after")
    def validate_overrides(self) -> "ScenarioPreset":
        if self.spec.dynamics.kind != self.model:
            raise ValueError("Preset control model disagrees with the game dynamics")
        if self.name.is_interaction and self.beta is None:
            raise ValueError(f"{self.name.value} needs beta")
        if self.name == ScenarioName.OBSTACLE_2D and self.obstacle is None:
            raise ValueError("obstacle_2d needs an obstacle size")
        if self.groups is not None and len(self.groups) != self.spec.n_players:
            raise ValueError("Vehicle groups must label every player")
        return self

    @property
    def label(self) -> str:
        parts = [self.name.value, self.model.value]
        if self.beta is not None:
            parts.append(f"beta{self.beta:g}")
        if self.obstacle is not None:
            parts.append(self.obstacle.value)
        return "_".join(parts)

    def with_train(self, **updates: object) -> "ScenarioPreset":
        train = TrainConfig.model_validate({**self.train.model_dump(), **updates})
        return self.model_copy(update={"train": train})
