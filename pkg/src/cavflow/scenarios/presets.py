"""The highway experiments as resolved presets.

All presets start every vehicle at -1 (or (-1, -1)) at rest, run over the unit horizon and
share the default architecture and training schedule.
"""
from typing import Optional

from cavflow.models.game import (
    CostSpec,
    Dynamics,
    DynamicsKind,
    GameSpec,
    InteractionWeights,
    Kernel,
    ObstacleCost,
)
from cavflow.models.scenario import ObstacleSize, ScenarioName, ScenarioPreset, VehicleType
from cavflow.models.training import PolicyArch, PotentialKind, TrainConfig

HORIZON = 1.0

INTERACTION_PLAYERS = 10
INTERACTION_NOISE = 0.1

HETEROGENEOUS_GAMMA = [0.115, 0.117, 0.095, 0.395, 0.319, 0.347, 1.805, 2.235, 2.353]
HETEROGENEOUS_TAU = [10.0, 10.0, 10.0, 3.0, 3.0, 3.0, 0.5, 0.5, 0.5]
HETEROGENEOUS_GROUPS = [VehicleType.LARGE] * 3 + [VehicleType.MEDIUM] * 3 + [VehicleType.SMALL] * 3


def default_train_config(spec: GameSpec, **updates: object) -> TrainConfig:
    samples = 1 if spec.dynamics.is_deterministic else TrainConfig.model_fields["samples"].default
    return TrainConfig.model_validate({"samples": samples, **updates})


def _dynamics(model: DynamicsKind, dim: int, n_players: int, sigma: float) -> Dynamics:
    if model == DynamicsKind.VELOCITY or sigma == 0:
        return Dynamics(kind=model, dim=dim)
    return Dynamics(kind=model, dim=dim, sigma=[sigma] * n_players)


def preset_interaction(model: DynamicsKind, beta: float) -> ScenarioPreset:
    """Ten vehicles on a line, lambda_ij = N^(beta - 1) and K(z) = 1 / (N^(2 beta) z^2 + 1)."""
    if beta not in (0.0, 1.0):
        raise ValueError(f"beta must be 0 or 1, got {beta}")
    n = INTERACTION_PLAYERS
    spec = GameSpec(
        n_players=n,
        dynamics=_dynamics(model, 1, n, INTERACTION_NOISE),
        weights=InteractionWeights.uniform(n, float(n) ** (beta - 1.0)),
        kernel=Kernel.scaled_radial(beta, n, 1),
        costs=[CostSpec(action_coeff=0.1, terminal_coeff=10.0, target=[1.0]) for _ in range(n)],
        horizon=HORIZON,
        initial_states=[[-1.0] for _ in range(n)],
    )
    name = (
        ScenarioName.INTERACTION_1D_VELOCITY
        if model == DynamicsKind.VELOCITY
        else ScenarioName.INTERACTION_1D_ACCELERATION
    )
    return ScenarioPreset(
        name=name,
        beta=beta,
        model=model,
        spec=spec,
        arch=PolicyArch(),
        train=default_train_config(spec),
    )


def preset_obstacle(size: ObstacleSize) -> ScenarioPreset:
    """Ten planar double integrators crossing from (-1, -1) to (1, 1) past an optional obstacle."""
    n, d = 10, 2
    curvature = size.curvature
    obstacle = ObstacleCost(curvature=curvature, center=[0.0, 0.0]) if curvature else None
    spec = GameSpec(
        n_players=n,
        dynamics=_dynamics(DynamicsKind.ACCELERATION, d, n, 0.0),
        weights=InteractionWeights.uniform(n, 1.0),
        kernel=Kernel.scaled_radial(1.0, n, d),
        costs=[
            CostSpec(action_coeff=0.02, terminal_coeff=2.0, target=[1.0, 1.0], obstacle=obstacle)
            for _ in range(n)
        ],
        horizon=HORIZON,
        initial_states=[[-1.0, -1.0] for _ in range(n)],
    )
    return ScenarioPreset(
        name=ScenarioName.OBSTACLE_2D,
        beta=1.0,
        obstacle=size,
        model=DynamicsKind.ACCELERATION,
        spec=spec,
        train=default_train_config(spec),
    )


def preset_heterogeneous(model: DynamicsKind) -> ScenarioPreset:
    """Nine vehicles of three sizes with lambda_ij = gamma_i tau_j (rescaled potential)."""
    n = len(HETEROGENEOUS_GAMMA)
    spec = GameSpec(
        n_players=n,
        dynamics=_dynamics(model, 1, n, 0.0),
        weights=InteractionWeights.separable(HETEROGENEOUS_GAMMA, HETEROGENEOUS_TAU),
        kernel=Kernel.inverse_quadratic(float(n)),
        costs=[CostSpec(action_coeff=0.02, terminal_coeff=2.0, target=[1.0]) for _ in range(n)],
        horizon=HORIZON,
        initial_states=[[-1.0] for _ in range(n)],
    )
    return ScenarioPreset(
        name=ScenarioName.HETEROGENEOUS_1D,
        model=model,
        spec=spec,
        train=default_train_config(spec, potential=PotentialKind.RESCALED),
        groups=HETEROGENEOUS_GROUPS,
    )


def resolve_preset(
        name: ScenarioName,
        beta: Optional[float] = None,
        obstacle: Optional[ObstacleSize] = None,
        model: Optional[DynamicsKind] = None,
) -> ScenarioPreset:
    """Build a preset by name; overrides that do not apply to the scenario are rejected."""
    if name == ScenarioName.CUSTOM:
        raise ValueError("custom games are loaded from files, not resolved by name")
    if name.is_interaction:
        if obstacle is not None:
            raise ValueError(f"{name.value} takes no obstacle")
        return preset_interaction(model or name.default_model, 0.0 if beta is None else beta)
    if name == ScenarioName.OBSTACLE_2D:
        if model not in (None, DynamicsKind.ACCELERATION):
            raise ValueError("obstacle_2d uses acceleration control")
        if beta not in (None, 1.0):
            raise ValueError("obstacle_2d uses the strong-interaction kernel (beta = 1)")
        return preset_obstacle(obstacle or ObstacleSize.LARGE)
    if beta is not None or obstacle is not None:
        raise ValueError("heterogeneous_1d takes only a control model")
    return preset_heterogeneous(model or name.default_model)
