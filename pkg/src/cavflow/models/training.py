from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, field_validator


class Activation(str, Enum):
    TANH = "tanh"


class PotentialKind(str, Enum):
    SYMMETRIC = "symmetric"  # F with (lambda_ij + lambda_ji) / 2 pair weights
    RESCALED = "rescaled"  # separable weights, costs scaled by tau_i / gamma_i


class PolicyArch(BaseModel):
    """Architecture shared by every player's policy network."""

    model_config = ConfigDict(frozen=True)

    hidden: list[int] = Field(default_factory=lambda: [32, 32])
    activation: Activation = Activation.TANH
    output_scale: float = Field(default=0.1, gt=0.0)

    @field_validator("hidden")
    @classmethod
    def validate_hidden(cls, v: list[int]) -> list[int]:
        if any(w < 1 for w in v):
            raise ValueError("Hidden layer widths must be positive")
        return v


class TrainConfig(BaseModel):
    """Optimizer and Monte Carlo settings for minimizing the potential."""

    model_config = ConfigDict(frozen=True)

    iterations: int = Field(default=2000, gt=0)
    learning_rate: float = Field(default=1e-2, gt=0.0)
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    eps_adam: float = Field(default=1e-8, gt=0.0)
    samples: int = Field(default=64, ge=1)
    steps: int = Field(default=50, ge=1)
    seed: int = Field(default=0, ge=0)
    resample_noise: bool = True
    checkpoint_every: int = Field(default=0, ge=0)
    grad_tol: float = Field(default=0.0, ge=0.0)
    log_every: int = Field(default=100, ge=1)
    workers: int = Field(default=1, ge=1)
    potential: PotentialKind = PotentialKind.SYMMETRIC
