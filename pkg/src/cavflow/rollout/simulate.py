"""Euler-Maruyama simulation of the joint decentralized dynamics."""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import structlog

from cavflow.autodiff import ops
from cavflow.autodiff.tape import Tape, Var
from cavflow.core.game import GameArrays, compile_game
from cavflow.exceptions import NonFiniteStateError
from cavflow.models.game import DynamicsKind, GameSpec
from cavflow.policy.network import Layer, PolicyNet, PolicyParams
from cavflow.rollout.grid import TimeGrid

_log = structlog.get_logger(__name__)


@dataclass(frozen=True, eq=False)
class NoiseSet:
    """Brownian increments for M samples, one independent stream per player."""

    increments: np.ndarray  # (M, N, P, d), dW ~ Normal(0, dt I)
    terms: np.ndarray  # (M, N, P, S), sigma_i dW placed on the driven state block
    seed: int
    stream: int

    @property
    def samples(self) -> int:
        return self.increments.shape[0]


@dataclass(frozen=True, eq=False)
class RolloutBatch:
    states: np.ndarray  # (M, N, P + 1, S)
    actions: np.ndarray  # (M, N, P, d)
    noise: np.ndarray  # (M, N, P, d)
    times: np.ndarray  # (P + 1,)
    seed: int
    stream: int

    @property
    def samples(self) -> int:
        return self.states.shape[0]

    @property
    def n_players(self) -> int:
        return self.states.shape[1]

    @property
    def steps(self) -> int:
        return self.actions.shape[2]

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(nodes=self.times)


def effective_samples(spec: GameSpec, samples: int) -> int:
    """Deterministic games need a single sample."""
    return 1 if spec.dynamics.is_deterministic else samples


def sample_noise(
        spec: GameSpec, grid: TimeGrid, samples: int, seed: int, stream: int = 0
) -> NoiseSet:
    """Per-player streams keyed by (seed, stream, player); adding players leaves others alone."""
    m = effective_samples(spec, samples)
    n, d, steps = spec.n_players, spec.position_dim, grid.steps
    increments = np.zeros((m, n, steps, d))
    if not spec.dynamics.is_deterministic:
        root = np.sqrt(grid.deltas)[None, :, None]
        for i in range(n):
            rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, i)))
            increments[:, i] = rng.standard_normal((m, steps, d)) * root

    sigma = spec.dynamics.noise_scales(n)
    terms = np.zeros((m, n, steps, spec.state_dim))
    driven = slice(0, d) if spec.dynamics.kind == DynamicsKind.VELOCITY else slice(d, 2 * d)
    terms[..., driven] = sigma[None, :, None, None] * increments
    return NoiseSet(increments=increments, terms=terms, seed=seed, stream=stream)


def initial_state(tape: Tape, game: GameArrays, samples: int) -> Var:
    xi = np.broadcast_to(game.initial_states, (samples,) + game.initial_states.shape)
    return tape.variable(xi)


def unroll(
        tape: Tape,
        net: PolicyNet,
        game: GameArrays,
        grid: TimeGrid,
        layers: list[Layer],
        noise_terms: np.ndarray,
) -> tuple[list[Var], list[Var]]:
    """States X_0..X_P and actions a_0..a_{P-1}, each (M, N, .)."""
    x = initial_state(tape, game, noise_terms.shape[0])
    states, actions = [x], []
    for step, (t, dt) in enumerate(zip(grid.nodes[:-1], grid.deltas)):
        a = net.apply(layers, float(t), x)
        x = ops.euler_step(x, a, game.kind, float(dt), noise_terms[:, :, step])
        if not np.all(np.isfinite(x.value)):
            bad = np.argwhere(~np.isfinite(x.value))[0]
            raise NonFiniteStateError(step=step + 1, player=int(bad[1]))
        actions.append(a)
        states.append(x)
    return states, actions


def _simulate_chunk(
        params: PolicyParams, game: GameArrays, grid: TimeGrid, noise_terms: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    tape = Tape(record=False)
    layers = params.net.unpack(tape.variable(params.flat), params.n_players)
    states, actions = unroll(tape, params.net, game, grid, layers, noise_terms)
    return (
        np.stack([s.value for s in states], axis=2),
        np.stack([a.value for a in actions], axis=2),
    )


def simulate(
        spec: GameSpec,
        params: PolicyParams,
        grid: TimeGrid,
        samples: int,
        seed: int,
        stream: int = 0,
        workers: int = 1,
) -> RolloutBatch:
    """Simulate M joint trajectories; chunks run in parallel and merge by sample index."""
    if samples < 1:
        raise ValueError("At least one sample is required")
    game = compile_game(spec)
    noise = sample_noise(spec, grid, samples, seed, stream)
    chunks = [c for c in np.array_split(np.arange(noise.samples), workers) if c.size]

    if len(chunks) == 1:
        results = [_simulate_chunk(params, game, grid, noise.terms)]
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            results = list(pool.map(
                lambda idx: _simulate_chunk(params, game, grid, noise.terms[idx]), chunks
            ))

    _log.debug("rollout_simulated", samples=noise.samples, steps=grid.steps, workers=len(chunks))
    return RolloutBatch(
        states=np.concatenate([r[0] for r in results], axis=0),
        actions=np.concatenate([r[1] for r in results], axis=0),
        noise=noise.increments,
        times=grid.nodes.copy(),
        seed=seed,
        stream=stream,
    )
