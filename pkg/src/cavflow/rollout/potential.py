"""Monte Carlo estimates of the alpha-potential Phi_M and of the players' objectives J_i.

Both are left-endpoint Riemann sums of the running integrand plus the terminal cost,
averaged over samples. They are assembled from tape operations so that training,
gradient checks and plain evaluation share one forward path.
"""
from typing import Optional

import numpy as np

from cavflow.autodiff import ops
from cavflow.autodiff.engine import RolloutFn
from cavflow.autodiff.tape import Tape, Var
from cavflow.core.game import GameArrays, PotentialWeights, compile_game, potential_weights
from cavflow.models.game import GameSpec
from cavflow.models.results import PotentialEstimate
from cavflow.models.training import PotentialKind
from cavflow.policy.network import PolicyNet, PolicyParams
from cavflow.rollout.grid import TimeGrid
from cavflow.rollout.simulate import NoiseSet, RolloutBatch, unroll


def accumulate_costs(
        game: GameArrays,
        grid: TimeGrid,
        states: list[Var],
        actions: list[Var],
        player_scale: np.ndarray,
        pair: np.ndarray,
        pair_factor: float,
) -> Var:
    """Per-sample, per-player cost (M, N) of sum_l r_l dt_l + s_i g_i(X_P).

    r_l = s_i (c_i |a_i|^2 + h_i(x_i)) + pair_factor * sum_j pair_ij K(x_i - x_j).
    """
    interacting = bool(np.any(pair != 0.0))
    total: Optional[Var] = None
    for x, a, dt in zip(states[:-1], actions, grid.deltas):
        own = ops.scale(ops.reduce_sum(ops.square(a), axis=-1), game.action_coeff)
        pos = ops.position(x, game.dim)
        if game.has_obstacles:
            own = ops.add(own, ops.obstacle(
                pos,
                game.obstacle_amplitude,
                game.obstacle_sharpness,
                game.obstacle_curvature,
                game.obstacle_centers,
            ))
        running = ops.scale(own, player_scale)
        if interacting:
            field = ops.kernel_field(pos, pair, game.kernel_scale)
            running = ops.add(running, ops.scale(field, pair_factor))
        step_cost = ops.scale(running, float(dt))
        total = step_cost if total is None else ops.add(total, step_cost)

    offset = ops.shift(ops.position(states[-1], game.dim), -game.targets)
    terminal = ops.scale(
        ops.reduce_sum(ops.square(offset), axis=-1), game.terminal_coeff * player_scale
    )
    return terminal if total is None else ops.add(total, terminal)


def potential_value(
        game: GameArrays,
        grid: TimeGrid,
        weights: PotentialWeights,
        states: list[Var],
        actions: list[Var],
) -> Var:
    per_player = accumulate_costs(
        game, grid, states, actions, weights.player_scale, weights.pair, 0.5
    )
    return ops.mean(ops.reduce_sum(per_player, axis=1), axis=0)


def player_objectives(
        game: GameArrays, grid: TimeGrid, states: list[Var], actions: list[Var]
) -> Var:
    """Discretized J_i for every player with the raw (possibly asymmetric) weights."""
    per_player = accumulate_costs(
        game, grid, states, actions, np.ones(game.n_players), game.lam, 1.0
    )
    return ops.mean(per_player, axis=0)


def potential_fn(
        spec: GameSpec,
        net: PolicyNet,
        grid: TimeGrid,
        noise: NoiseSet,
        kind: PotentialKind = PotentialKind.SYMMETRIC,
) -> RolloutFn:
    """Phi_M as a function of the joint parameter leaf, for a fixed noise realization."""
    game = compile_game(spec)
    weights = potential_weights(spec, kind)

    def objective(tape: Tape, theta: Var) -> Var:
        layers = net.unpack(theta, game.n_players)
        states, actions = unroll(tape, net, game, grid, layers, noise.terms)
        return potential_value(game, grid, weights, states, actions)

    return objective


def player_objective_fn(
        spec: GameSpec, net: PolicyNet, grid: TimeGrid, noise: NoiseSet, player: int
) -> RolloutFn:
    """J_i as a function of the joint parameter leaf, for a fixed noise realization."""
    game = compile_game(spec)
    selector = np.zeros(game.n_players)
    selector[player] = 1.0

    def objective(tape: Tape, theta: Var) -> Var:
        layers = net.unpack(theta, game.n_players)
        states, actions = unroll(tape, net, game, grid, layers, noise.terms)
        objectives = player_objectives(game, grid, states, actions)
        return ops.reduce_sum(ops.scale(objectives, selector))

    return objective


def _batch_vars(batch: RolloutBatch) -> tuple[list[Var], list[Var]]:
    tape = Tape(record=False)
    states = [tape.variable(batch.states[:, :, step]) for step in range(batch.steps + 1)]
    actions = [tape.variable(batch.actions[:, :, step]) for step in range(batch.steps)]
    return states, actions


def _pair_distances(
    game: GameArrays, batch: RolloutBatch
) -> tuple[Optional[float], Optional[float]]:
    if game.n_players < 2:
        return None, None
    pos = batch.states[..., : game.dim]
    diff = pos[:, :, None] - pos[:, None, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))  # (M, N, N, P + 1)
    upper = np.triu_indices(game.n_players, k=1)
    pairs = dist[:, upper[0], upper[1]]
    return float(pairs.min()), float(pairs.max())


def _obstacle_occupancy(game: GameArrays, batch: RolloutBatch) -> float:
    """Fraction of (sample, player, node) states inside an obstacle's half-amplitude region."""
    players = np.flatnonzero(game.obstacle_amplitude > 0)
    if players.size == 0:
        return 0.0
    pos = batch.states[:, players, :, : game.dim]
    offset = pos - game.obstacle_centers[players][None, :, None, :]
    q = np.sum(offset * offset, axis=-1)
    inside = game.obstacle_curvature[players][None, :, None] * q < 1.0
    return float(inside.mean())


def estimate_potential(
        spec: GameSpec,
        batch: RolloutBatch,
        params: Optional[PolicyParams] = None,
        kind: PotentialKind = PotentialKind.SYMMETRIC,
) -> PotentialEstimate:
    """Phi_M, the per-player J_i and batch diagnostics from stored trajectories."""
    if params is not None and params.n_players != batch.n_players:
        raise ValueError("Parameters and rollout disagree on the number of players")
    game = compile_game(spec)
    grid = batch.grid
    states, actions = _batch_vars(batch)
    phi = potential_value(game, grid, potential_weights(spec, kind), states, actions)
    objectives = player_objectives(game, grid, states, actions)
    min_dist, max_dist = _pair_distances(game, batch)
    return PotentialEstimate(
        phi=float(phi.value),
        per_player_j=[float(v) for v in objectives.value],
        min_pair_distance=min_dist,
        max_pair_distance=max_dist,
        obstacle_occupancy=_obstacle_occupancy(game, batch),
        samples=batch.samples,
    )


def estimate_player_objective(
        spec: GameSpec, batch: RolloutBatch, params: Optional[PolicyParams], player: int
) -> float:
    if not 0 <= player < spec.n_players:
        raise ValueError(f"Player index {player} out of range")
    return estimate_potential(spec, batch, params).per_player_j[player]
