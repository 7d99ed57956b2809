from typing import Optional

import numpy as np
import pytest

from cavflow.models.game import (
    CostSpec,
    Dynamics,
    DynamicsKind,
    GameSpec,
    InteractionWeights,
    Kernel,
    ObstacleCost,
)
from cavflow.models.training import PolicyArch, TrainConfig


def make_game(
        n_players: int = 2,
        kind: DynamicsKind = DynamicsKind.VELOCITY,
        dim: int = 1,
        lam: Optional[list[list[float]]] = None,
        sigma: float = 0.0,
        action_coeff: float = 0.1,
        terminal_coeff: float = 1.0,
        target: Optional[list[float]] = None,
        horizon: float = 1.0,
        initial: Optional[list[list[float]]] = None,
        kernel_scale: float = 1.0,
        obstacle: Optional[ObstacleCost] = None,
) -> GameSpec:
    """A small game with an inverse-quadratic kernel; defaults give a deterministic 1D game."""
    if lam is None:
        lam = [[1.0] * n_players for _ in range(n_players)]
    if target is None:
        target = [1.0] * dim
    if initial is None:
        initial = [[-1.0 + 0.25 * i] * dim for i in range(n_players)]
    dynamics = (
        Dynamics(kind=kind, dim=dim, sigma=[sigma] * n_players)
        if sigma > 0
        else Dynamics(kind=kind, dim=dim)
    )
    return GameSpec(
        n_players=n_players,
        dynamics=dynamics,
        weights=InteractionWeights(lam=lam),
        kernel=Kernel.inverse_quadratic(kernel_scale),
        costs=[
            CostSpec(
                action_coeff=action_coeff,
                terminal_coeff=terminal_coeff,
                target=target,
                obstacle=obstacle,
            )
            for _ in range(n_players)
        ],
        horizon=horizon,
        initial_states=initial,
    )


def zero_cost_game(n_players: int = 2) -> GameSpec:
    return make_game(
        n_players=n_players,
        lam=[[0.0] * n_players for _ in range(n_players)],
        action_coeff=0.0,
        terminal_coeff=0.0,
    )


@pytest.fixture
def small_arch() -> PolicyArch:
    return PolicyArch(hidden=[8])


@pytest.fixture
def fast_train() -> TrainConfig:
    return TrainConfig(iterations=20, steps=10, samples=1, log_every=10)


@pytest.fixture
def three_player_symmetric() -> GameSpec:
    return make_game(n_players=3, lam=[[0.0, 2.0, 0.5], [2.0, 0.0, 1.0], [0.5, 1.0, 0.0]])


@pytest.fixture
def two_player_asymmetric() -> GameSpec:
    return make_game(n_players=2, lam=[[0.0, 1.0], [0.0, 0.0]])


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
