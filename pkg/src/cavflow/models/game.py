from enum import Enum
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class DynamicsKind(str, Enum):
    VELOCITY = "velocity"  # state = position, action = velocity
    ACCELERATION = "acceleration"  # state = (position, velocity), action = acceleration


class KernelVariant(str, Enum):
    SCALED_RADIAL = "scaled_radial"
    INVERSE_QUADRATIC = "inverse_quadratic"


class RadialProfile(str, Enum):
    INVERSE_QUADRATIC = "inverse_quadratic"  # rho(r) = 1 / (r^2 + 1)


class Dynamics(BaseModel):
    """Controlled dynamics shared by all players."""

    model_config = ConfigDict(frozen=True)

    kind: DynamicsKind
    dim: int = Field(ge=1)
    sigma: list[float] = Field(default_factory=list)

    @field_validator("sigma")
    @classmethod
    def validate_sigma(cls, v: list[float]) -> list[float]:
        if any(s < 0 for s in v):
            raise ValueError("Noise scales must be nonnegative")
        return v

    @model_validator(mode="after")
    def validate_noise_kind(self) -> "Dynamics":
        if self.kind == DynamicsKind.VELOCITY and any(s != 0 for s in self.sigma):
            raise ValueError("Velocity control has no diffusion term; sigma must be 0")
        return self

    @property
    def state_dim(self) -> int:
        return self.dim if self.kind == DynamicsKind.VELOCITY else 2 * self.dim

    @property
    def action_dim(self) -> int:
        return self.dim

    def noise_scales(self, n_players: int) -> np.ndarray:
        if not self.sigma:
            return np.zeros(n_players)
        return np.asarray(self.sigma, dtype=float)

    @property
    def is_deterministic(self) -> bool:
        return all(s == 0 for s in self.sigma)


class InteractionWeights(BaseModel):
    """Pairwise weights lambda_ij, optionally built from separable tags gamma_i * tau_j."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    lam: list[list[float]] = Field(alias="lambda")
    gamma: Optional[list[float]] = None
    tau: Optional[list[float]] = None

    @model_validator(mode="before")
    @classmethod
    def build_from_tags(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        has_lam = data.get("lambda") is not None or data.get("lam") is not None
        if not has_lam and data.get("gamma") is not None and data.get("tau") is not None:
            gamma, tau = data["gamma"], data["tau"]
            data = {**data, "lambda": [[g * t for t in tau] for g in gamma]}
        return data

    @model_validator(mode="after")
    def validate_weights(self) -> "InteractionWeights":
        n = len(self.lam)
        if any(len(row) != n for row in self.lam):
            raise ValueError("Interaction weights must form a square matrix")
        for i in range(n):
            for j in range(n):
                if i != j and self.lam[i][j] < 0:
                    raise ValueError(f"Weight lambda[{i}][{j}] must be nonnegative")

        if (self.gamma is None) != (self.tau is None):
            raise ValueError("Separable tags need both gamma and tau")
        if self.gamma is not None and self.tau is not None:
            if len(self.gamma) != n or len(self.tau) != n:
                raise ValueError("Separable tags must have one entry per player")
            if any(g <= 0 for g in self.gamma) or any(t <= 0 for t in self.tau):
                raise ValueError("Separable tags must be positive")
            for i in range(n):
                for j in range(n):
                    if i != j and self.lam[i][j] != self.gamma[i] * self.tau[j]:
                        raise ValueError(
                            f"lambda[{i}][{j}] does not equal gamma[{i}] * tau[{j}]"
                        )
        return self

    @classmethod
    def separable(cls, gamma: list[float], tau: list[float]) -> "InteractionWeights":
        return cls(gamma=gamma, tau=tau)

    @classmethod
    def uniform(cls, n_players: int, value: float) -> "InteractionWeights":
        return cls(lam=[[value] * n_players for _ in range(n_players)])

    @property
    def is_separable(self) -> bool:
        return self.gamma is not None and self.tau is not None

    def matrix(self) -> np.ndarray:
        """Weights as an array with the (ignored) diagonal zeroed."""
        lam = np.array(self.lam, dtype=float)
        np.fill_diagonal(lam, 0.0)
        return lam


class Kernel(BaseModel):
    """Bounded radial interaction kernel K(z) = rho((scale * |z|)^2 form)."""

    model_config = ConfigDict(frozen=True)

    variant: KernelVariant
    beta: float = Field(default=0.0, ge=0.0, le=1.0)
    n_players: Optional[int] = Field(default=None, ge=1)
    dim: Optional[int] = Field(default=None, ge=1)
    profile: RadialProfile = RadialProfile.INVERSE_QUADRATIC
    scale: Optional[float] = Field(default=None, gt=0.0)

    @model_validator(mode="after")
    def validate_variant_fields(self) -> "Kernel":
        if self.variant == KernelVariant.SCALED_RADIAL:
            if self.n_players is None or self.dim is None:
                raise ValueError("Scaled radial kernel needs n_players and dim")
        elif self.scale is None:
            raise ValueError("Inverse quadratic kernel needs a scale")
        return self

    @classmethod
    def scaled_radial(cls, beta: float, n_players: int, dim: int) -> "Kernel":
        return cls(
            variant=KernelVariant.SCALED_RADIAL, beta=beta, n_players=n_players, dim=dim
        )

    @classmethod
    def inverse_quadratic(cls, scale: float) -> "Kernel":
        return cls(variant=KernelVariant.INVERSE_QUADRATIC, scale=scale)

    @property
    def radial_scale(self) -> float:
        """Multiplier c in K(z) = rho(c |z|)."""
        if self.variant == KernelVariant.SCALED_RADIAL:
            assert self.n_players is not None and self.dim is not None
            return float(self.n_players) ** (self.beta / self.dim)
        assert self.scale is not None
        return float(self.scale)

    @property
    def sup_norm(self) -> float:
        # both variants attain their supremum rho(0) = 1 at z = 0
        return 1.0


class ObstacleCost(BaseModel):
    """Smoothed circular no-go region h(x) = A * (1 - 1 / (1 + exp[s (1 - M |x - c|^2)]))."""

    model_config = ConfigDict(frozen=True)

    amplitude: float = Field(default=1000.0, gt=0.0)
    sharpness: float = Field(default=10.0, gt=0.0)
    curvature: float = Field(gt=0.0)
    center: list[float] = Field(default_factory=list)

    @property
    def radius(self) -> float:
        """Radius of the level set M |x - c|^2 = 1, where h = A / 2."""
        return float(1.0 / np.sqrt(self.curvature))

    def center_array(self, dim: int) -> np.ndarray:
        if not self.center:
            return np.zeros(dim)
        return np.asarray(self.center, dtype=float)


class CostSpec(BaseModel):
    """One player's running and terminal cost."""

    model_config = ConfigDict(frozen=True)

    action_coeff: float = Field(ge=0.0)
    terminal_coeff: float = Field(ge=0.0)
    target: list[float]
    obstacle: Optional[ObstacleCost] = None


class GameSpec(BaseModel):
    """Full description of an N-player decentralized stochastic differential game."""

    model_config = ConfigDict(frozen=True)

    n_players: int = Field(ge=1)
    dynamics: Dynamics
    weights: InteractionWeights
    kernel: Kernel
    costs: list[CostSpec]
    horizon: float = Field(gt=0.0)
    initial_states: list[list[float]]

    @model_validator(mode="after")
    def validate_dimensions(self) -> "GameSpec":
        n, d = self.n_players, self.dynamics.dim
        if self.dynamics.sigma and len(self.dynamics.sigma) != n:
            raise ValueError(f"Expected {n} noise scales, got {len(self.dynamics.sigma)}")
        if len(self.weights.lam) != n:
            raise ValueError(f"Expected {n}x{n} interaction weights")
        if len(self.costs) != n:
            raise ValueError(f"Expected {n} player costs, got {len(self.costs)}")
        if len(self.initial_states) != n:
            raise ValueError(f"Expected {n} initial states, got {len(self.initial_states)}")
        for i, cost in enumerate(self.costs):
            if len(cost.target) != d:
                raise ValueError(f"Target of player {i} must have dimension {d}")
            centre = cost.obstacle.center if cost.obstacle is not None else None
            if centre and len(centre) != d:
                raise ValueError(f"Obstacle centre of player {i} must have dimension {d}")
        for i, xi in enumerate(self.initial_states):
            if len(xi) not in (d, self.dynamics.state_dim):
                raise ValueError(
                    f"Initial state of player {i} must have dimension {d} "
                    f"or {self.dynamics.state_dim}"
                )
        if self.kernel.variant == KernelVariant.SCALED_RADIAL:
            if self.kernel.n_players != n or self.kernel.dim != d:
                raise ValueError("Scaled radial kernel dimensions must match the game")
        return self

    @property
    def state_dim(self) -> int:
        return self.dynamics.state_dim

    @property
    def action_dim(self) -> int:
        return self.dynamics.action_dim

    @property
    def position_dim(self) -> int:
        return self.dynamics.dim

    def initial_state_array(self) -> np.ndarray:
        """Initial states as an (N, state_dim) array; missing velocities start at rest."""
        xi = np.zeros((self.n_players, self.state_dim))
        for i, state in enumerate(self.initial_states):
            xi[i, : len(state)] = state
        return xi

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True, indent=2)

    @classmethod
    def from_json(cls, payload: str) -> "GameSpec":
        return cls.model_validate_json(payload)
