"""Closed-form game constructions: kernels, costs, symmetrized and rescaled potentials.

Every function here is pure; the vectorized helpers (``kernel_profile``,
``obstacle_values``) are shared with the autodiff primitives so the rollout and the
pointwise evaluators compute the same numbers.
"""
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import expit

from cavflow.exceptions import MissingSeparableTagsError
from cavflow.models.game import (
    DynamicsKind,
    GameSpec,
    InteractionWeights,
    Kernel,
    ObstacleCost,
)
from cavflow.models.training import PotentialKind

RunningIntegrand = Callable[[np.ndarray, np.ndarray], float]
TerminalIntegrand = Callable[[np.ndarray], float]


@dataclass(frozen=True)
class GameArrays:
    """Array view of a GameSpec, one row per player."""

    n_players: int
    dim: int
    state_dim: int
    kind: DynamicsKind
    horizon: float
    sigma: np.ndarray  # (N,)
    action_coeff: np.ndarray  # (N,)
    terminal_coeff: np.ndarray  # (N,)
    targets: np.ndarray  # (N, d)
    initial_states: np.ndarray  # (N, S)
    lam: np.ndarray  # (N, N), zero diagonal
    kernel_scale: float
    obstacle_amplitude: np.ndarray  # (N,), 0 where the player has no obstacle
    obstacle_sharpness: np.ndarray  # (N,)
    obstacle_curvature: np.ndarray  # (N,)
    obstacle_centers: np.ndarray  # (N, d)

    @property
    def has_obstacles(self) -> bool:
        return bool(np.any(self.obstacle_amplitude > 0))


@dataclass(frozen=True)
class PotentialWeights:
    """Per-player cost scale s_i and symmetric pair weights W_ij of a potential."""

    player_scale: np.ndarray  # (N,)
    pair: np.ndarray  # (N, N), symmetric, zero diagonal


def compile_game(spec: GameSpec) -> GameArrays:
    n, d = spec.n_players, spec.position_dim
    amplitude = np.zeros(n)
    sharpness = np.ones(n)
    curvature = np.ones(n)
    centers = np.zeros((n, d))
    for i, cost in enumerate(spec.costs):
        if cost.obstacle is not None:
            amplitude[i] = cost.obstacle.amplitude
            sharpness[i] = cost.obstacle.sharpness
            curvature[i] = cost.obstacle.curvature
            centers[i] = cost.obstacle.center_array(d)

    return GameArrays(
        n_players=n,
        dim=d,
        state_dim=spec.state_dim,
        kind=spec.dynamics.kind,
        horizon=spec.horizon,
        sigma=spec.dynamics.noise_scales(n),
        action_coeff=np.array([c.action_coeff for c in spec.costs], dtype=float),
        terminal_coeff=np.array([c.terminal_coeff for c in spec.costs], dtype=float),
        targets=np.array([c.target for c in spec.costs], dtype=float),
        initial_states=spec.initial_state_array(),
        lam=spec.weights.matrix(),
        kernel_scale=spec.kernel.radial_scale,
        obstacle_amplitude=amplitude,
        obstacle_sharpness=sharpness,
        obstacle_curvature=curvature,
        obstacle_centers=centers,
    )


def kernel_profile(q: np.ndarray) -> np.ndarray:
    """rho as a function of the squared scaled distance q = (c |z|)^2."""
    return 1.0 / (q + 1.0)


def kernel_profile_slope(q: np.ndarray) -> np.ndarray:
    """d rho / d q."""
    rho = 1.0 / (q + 1.0)
    return -rho * rho


def obstacle_values(
        positions: np.ndarray,
        amplitude: np.ndarray,
        sharpness: np.ndarray,
        curvature: np.ndarray,
        centers: np.ndarray,
) -> np.ndarray:
    """Obstacle cost for positions (..., N, d) with per-player parameters."""
    offset = positions - centers
    q = np.sum(offset * offset, axis=-1)
    return amplitude * expit(sharpness * (1.0 - curvature * q))


def symmetrize_weights(w: InteractionWeights) -> InteractionWeights:
    lam = np.array(w.lam, dtype=float)
    sym = (lam + lam.T) / 2.0
    if np.array_equal(sym, lam):
        return w
    return InteractionWeights(lam=sym.tolist())


def alpha_bound(g: GameSpec) -> float:
    """T * ||K||_inf * max_i sum_{j != i} |lambda_ij - lambda_ji|."""
    lam = g.weights.matrix()
    row_asymmetry = np.abs(lam - lam.T).sum(axis=1)
    return float(g.horizon * g.kernel.sup_norm * row_asymmetry.max())


def eval_kernel(k: Kernel, z: np.ndarray) -> float:
    z = np.asarray(z, dtype=float)
    c = k.radial_scale
    q = c * c * float(np.sum(z * z))
    return float(kernel_profile(np.asarray(q)))


def eval_obstacle(o: ObstacleCost, x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    value = obstacle_values(
        x[None, :],
        np.array([o.amplitude]),
        np.array([o.sharpness]),
        np.array([o.curvature]),
        o.center_array(x.shape[-1])[None, :],
    )
    return float(value[0])


def _position(g: GameSpec, x_i: np.ndarray) -> np.ndarray:
    return np.asarray(x_i, dtype=float)[: g.position_dim]


def eval_running_cost(g: GameSpec, i: int, x_i: np.ndarray, a_i: np.ndarray) -> float:
    cost = g.costs[i]
    a_i = np.asarray(a_i, dtype=float)
    value = cost.action_coeff * float(np.sum(a_i * a_i))
    if cost.obstacle is not None:
        value += eval_obstacle(cost.obstacle, _position(g, x_i))
    return value


def eval_terminal_cost(g: GameSpec, i: int, x_i: np.ndarray) -> float:
    cost = g.costs[i]
    offset = _position(g, x_i) - np.asarray(cost.target, dtype=float)
    return cost.terminal_coeff * float(np.sum(offset * offset))


def potential_weights(
    g: GameSpec, kind: PotentialKind = PotentialKind.SYMMETRIC
) -> PotentialWeights:
    n = g.n_players
    if kind == PotentialKind.SYMMETRIC:
        lam = g.weights.matrix()
        return PotentialWeights(player_scale=np.ones(n), pair=(lam + lam.T) / 2.0)

    if not g.weights.is_separable:
        raise MissingSeparableTagsError("Rescaled potential needs separable weights (gamma, tau)")
    gamma = np.asarray(g.weights.gamma, dtype=float)
    tau = np.asarray(g.weights.tau, dtype=float)
    pair = np.outer(tau, tau)
    np.fill_diagonal(pair, 0.0)
    return PotentialWeights(player_scale=tau / gamma, pair=pair)


def _integrands(
    g: GameSpec, weights: PotentialWeights
) -> tuple[RunningIntegrand, TerminalIntegrand]:
    n = g.n_players

    def running(x: np.ndarray, a: np.ndarray) -> float:
        total = 0.0
        for i in range(n):
            total += weights.player_scale[i] * eval_running_cost(g, i, x[i], a[i])
        for i in range(n):
            for j in range(i + 1, n):
                if weights.pair[i, j] != 0.0:
                    diff = _position(g, x[i]) - _position(g, x[j])
                    total += weights.pair[i, j] * eval_kernel(g.kernel, diff)
        return total

    def terminal(x: np.ndarray) -> float:
        return sum(
            weights.player_scale[i] * eval_terminal_cost(g, i, x[i]) for i in range(n)
        )

    return running, terminal


def potential_integrands(g: GameSpec) -> tuple[RunningIntegrand, TerminalIntegrand]:
    """F(x, a) and G(x) of the symmetrized alpha-potential."""
    return _integrands(g, potential_weights(g, PotentialKind.SYMMETRIC))


def rescaled_integrands(g: GameSpec) -> tuple[RunningIntegrand, TerminalIntegrand]:
    """F~(x, a) and G~(x) of the exact potential for separable weights."""
    return _integrands(g, potential_weights(g, PotentialKind.RESCALED))
