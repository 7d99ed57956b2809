from typing import Optional

import numpy as np

import cavflow.autodiff.primitives  # noqa: F401  (registers the primitive set)
from cavflow.autodiff.tape import Var
from cavflow.models.game import DynamicsKind


def add(a: Var, b: Var) -> Var:
    return a.tape.apply("add", a, b)


def scale(x: Var, factor: np.ndarray | float) -> Var:
    return x.tape.apply("scale", x, factor=factor)


def shift(x: Var, offset: np.ndarray | float) -> Var:
    return x.tape.apply("shift", x, offset=offset)


def square(x: Var) -> Var:
    return x.tape.apply("square", x)


def reduce_sum(x: Var, axis: Optional[int] = None) -> Var:
    return x.tape.apply("sum", x, axis=axis)


def mean(x: Var, axis: int = 0) -> Var:
    return scale(reduce_sum(x, axis=axis), 1.0 / x.shape[axis])


def tanh(x: Var) -> Var:
    return x.tape.apply("tanh", x)


def affine(h: Var, w: Var, b: Var) -> Var:
    return h.tape.apply("affine", h, w, b)


def param_block(
        theta: Var, n_players: int, start: int, stop: int, shape: tuple[int, ...]
) -> Var:
    return theta.tape.apply(
        "param_block", theta, n_players=n_players, start=start, stop=stop, shape=shape
    )


def time_feature(state: Var, t: float) -> Var:
    return state.tape.apply("time_feature", state, t=t)


def position(state: Var, dim: int) -> Var:
    return state.tape.apply("position", state, dim=dim)


def kernel_field(pos: Var, weights: np.ndarray, scale: float) -> Var:
    return pos.tape.apply("kernel_field", pos, weights=weights, scale=scale)


def obstacle(
        pos: Var,
        amplitude: np.ndarray,
        sharpness: np.ndarray,
        curvature: np.ndarray,
        centers: np.ndarray,
) -> Var:
    return pos.tape.apply(
        "obstacle",
        pos,
        amplitude=amplitude,
        sharpness=sharpness,
        curvature=curvature,
        centers=centers,
    )


def euler_step(state: Var, action: Var, kind: DynamicsKind, dt: float, noise: np.ndarray) -> Var:
    return state.tape.apply("euler_step", state, action, kind=kind, dt=dt, noise=noise)
