"""Decentralized feed-forward policies phi_i(t, x_i), one parameter vector per player."""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from cavflow.autodiff import ops
from cavflow.autodiff.tape import Tape, Var
from cavflow.models.game import GameSpec
from cavflow.models.training import PolicyArch

Layer = tuple[Var, Var]


@dataclass(frozen=True)
class ParamSlice:
    start: int
    stop: int
    shape: tuple[int, ...]


@dataclass(frozen=True)
class PolicyNet:
    """Architecture of one player's policy: input (t/T, x_i), tanh hidden layers, linear output."""

    state_dim: int
    action_dim: int
    hidden: tuple[int, ...]
    horizon: float
    output_scale: float = 0.1

    @classmethod
    def from_arch(cls, spec: GameSpec, arch: PolicyArch) -> "PolicyNet":
        return cls(
            state_dim=spec.state_dim,
            action_dim=spec.action_dim,
            hidden=tuple(arch.hidden),
            horizon=spec.horizon,
            output_scale=arch.output_scale,
        )

    @property
    def widths(self) -> tuple[int, ...]:
        return (1 + self.state_dim, *self.hidden, self.action_dim)

    @cached_property
    def slices(self) -> list[tuple[ParamSlice, ParamSlice]]:
        """(weight, bias) slices of each layer within a player's flat vector."""
        out = []
        offset = 0
        for n_in, n_out in zip(self.widths[:-1], self.widths[1:]):
            w = ParamSlice(offset, offset + n_in * n_out, (n_in, n_out))
            offset = w.stop
            b = ParamSlice(offset, offset + n_out, (n_out,))
            offset = b.stop
            out.append((w, b))
        return out

    @property
    def n_params(self) -> int:
        return self.slices[-1][1].stop

    def unpack(self, theta: Var, n_players: int) -> list[Layer]:
        """Split the joint flat leaf into stacked per-player layers (N, in, out), (N, out)."""
        layers = []
        for w, b in self.slices:
            layers.append((
                ops.param_block(theta, n_players, w.start, w.stop, w.shape),
                ops.param_block(theta, n_players, b.start, b.stop, b.shape),
            ))
        return layers

    def apply(self, layers: list[Layer], t: float, state: Var) -> Var:
        """Actions (M, N, action_dim) for states (M, N, state_dim) at time t."""
        h = ops.time_feature(state, t / self.horizon)
        for k, (w, b) in enumerate(layers):
            h = ops.affine(h, w, b)
            if k < len(layers) - 1:
                h = ops.tanh(h)
        return h


@dataclass(frozen=True, eq=False)
class PolicyParams:
    """Joint parameters theta = (theta_1, ..., theta_N) stored as one flat vector."""

    net: PolicyNet
    n_players: int
    flat: np.ndarray

    def __post_init__(self) -> None:
        if self.flat.shape != (self.n_players * self.net.n_params,):
            raise ValueError(
                f"Expected {self.n_players * self.net.n_params} parameters, got {self.flat.shape}"
            )

    @property
    def offsets(self) -> list[int]:
        return [i * self.net.n_params for i in range(self.n_players)]

    def player(self, i: int) -> np.ndarray:
        start = self.offsets[i]
        return self.flat[start: start + self.net.n_params].copy()

    def players(self) -> list[np.ndarray]:
        return [self.player(i) for i in range(self.n_players)]

    def with_flat(self, flat: np.ndarray) -> "PolicyParams":
        flat = np.array(flat, dtype=float)
        return PolicyParams(net=self.net, n_players=self.n_players, flat=flat)

    def with_player(self, i: int, theta_i: np.ndarray) -> "PolicyParams":
        flat = self.flat.copy()
        start = self.offsets[i]
        flat[start: start + self.net.n_params] = theta_i
        return self.with_flat(flat)

    def player_mask(self, i: int) -> np.ndarray:
        mask = np.zeros_like(self.flat, dtype=bool)
        start = self.offsets[i]
        mask[start: start + self.net.n_params] = True
        return mask

    @classmethod
    def from_players(cls, net: PolicyNet, thetas: list[np.ndarray]) -> "PolicyParams":
        return cls(net=net, n_players=len(thetas), flat=np.concatenate(thetas).astype(float))


def init_params(spec: GameSpec, arch: PolicyArch, seed: int) -> PolicyParams:
    """Fan-in scaled uniform initialization; output bias is zero so initial actions are small."""
    net = PolicyNet.from_arch(spec, arch)
    thetas = []
    for i in range(spec.n_players):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))
        theta_i = np.zeros(net.n_params)
        n_layers = len(net.slices)
        for k, (w, b) in enumerate(net.slices):
            bound = 1.0 / np.sqrt(w.shape[0])
            last = k == n_layers - 1
            weight = rng.uniform(-bound, bound, size=w.shape)
            theta_i[w.start: w.stop] = (weight * net.output_scale if last else weight).ravel()
            if not last:
                theta_i[b.start: b.stop] = rng.uniform(-bound, bound, size=b.shape)
        thetas.append(theta_i)
    return PolicyParams.from_players(net, thetas)


def eval_policy(net: PolicyNet, theta_i: np.ndarray, t: float, x_i: np.ndarray) -> np.ndarray:
    tape = Tape(record=False)
    layers = net.unpack(tape.variable(theta_i), 1)
    state = tape.variable(np.asarray(x_i, dtype=float).reshape(1, 1, net.state_dim))
    return net.apply(layers, t, state).value.reshape(net.action_dim)


def lipschitz_bound(net: PolicyNet, theta_i: np.ndarray) -> float:
    """Upper bound on the state-Lipschitz constant in the infinity norm.

    Product over layers of max_out sum_in |W|, with the time row of the first layer
    dropped; tanh is 1-Lipschitz.
    """
    bound = 1.0
    for k, (w, _) in enumerate(net.slices):
        weight = theta_i[w.start: w.stop].reshape(w.shape)
        if k == 0:
            weight = weight[1:]
        bound *= float(np.abs(weight).sum(axis=0).max())
    return bound
