"""Forward and adjoint rules for every primitive the rollout uses."""
from typing import Optional

import numpy as np
from scipy.special import expit

from cavflow.autodiff.tape import register_primitive
from cavflow.core.game import kernel_profile, kernel_profile_slope, obstacle_values
from cavflow.models.game import DynamicsKind

Grads = tuple[Optional[np.ndarray], ...]


def unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``g`` down to ``shape`` after numpy broadcasting."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


# elementwise algebra

def _add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a + b


def _add_vjp(g: np.ndarray, out: np.ndarray, a: np.ndarray, b: np.ndarray) -> Grads:
    return unbroadcast(g, a.shape), unbroadcast(g, b.shape)


def _scale(x: np.ndarray, *, factor: np.ndarray | float) -> np.ndarray:
    return x * factor


def _scale_vjp(
    g: np.ndarray, out: np.ndarray, x: np.ndarray, *, factor: np.ndarray | float
) -> Grads:
    return (unbroadcast(g * factor, x.shape),)


def _shift(x: np.ndarray, *, offset: np.ndarray | float) -> np.ndarray:
    return x + offset


def _shift_vjp(
    g: np.ndarray, out: np.ndarray, x: np.ndarray, *, offset: np.ndarray | float
) -> Grads:
    return (unbroadcast(g, x.shape),)


def _square(x: np.ndarray) -> np.ndarray:
    return x * x


def _square_vjp(g: np.ndarray, out: np.ndarray, x: np.ndarray) -> Grads:
    return (2.0 * x * g,)


def _sum(x: np.ndarray, *, axis: Optional[int] = None) -> np.ndarray:
    return np.asarray(np.sum(x, axis=axis))


def _sum_vjp(g: np.ndarray, out: np.ndarray, x: np.ndarray, *, axis: Optional[int] = None) -> Grads:
    if axis is None:
        return (np.broadcast_to(g, x.shape).copy(),)
    return (np.broadcast_to(np.expand_dims(g, axis), x.shape).copy(),)


def _tanh(x: np.ndarray) -> np.ndarray:
    return np.tanh(x)


def _tanh_vjp(g: np.ndarray, out: np.ndarray, x: np.ndarray) -> Grads:
    return (g * (1.0 - out * out),)


# policy network plumbing

def _affine(h: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-player dense layer: h (M, N, in), w (N, in, out), b (N, out)."""
    return np.einsum("mni,nio->mno", h, w) + b


def _affine_vjp(
    g: np.ndarray, out: np.ndarray, h: np.ndarray, w: np.ndarray, b: np.ndarray
) -> Grads:
    return (
        np.einsum("mno,nio->mni", g, w),
        np.einsum("mni,mno->nio", h, g),
        g.sum(axis=0),
    )


def _param_block(
        theta: np.ndarray, *, n_players: int, start: int, stop: int, shape: tuple[int, ...]
) -> np.ndarray:
    return theta.reshape(n_players, -1)[:, start:stop].reshape((n_players,) + shape)


def _param_block_vjp(
        g: np.ndarray,
        out: np.ndarray,
        theta: np.ndarray,
        *,
        n_players: int,
        start: int,
        stop: int,
        shape: tuple[int, ...],
) -> Grads:
    full = np.zeros((n_players, theta.size // n_players))
    full[:, start:stop] = g.reshape(n_players, -1)
    return (full.reshape(theta.shape),)


def _time_feature(state: np.ndarray, *, t: float) -> np.ndarray:
    clock = np.full(state.shape[:-1] + (1,), t)
    return np.concatenate([clock, state], axis=-1)


def _time_feature_vjp(g: np.ndarray, out: np.ndarray, state: np.ndarray, *, t: float) -> Grads:
    return (g[..., 1:],)


def _position(state: np.ndarray, *, dim: int) -> np.ndarray:
    return state[..., :dim]


def _position_vjp(g: np.ndarray, out: np.ndarray, state: np.ndarray, *, dim: int) -> Grads:
    full = np.zeros_like(state)
    full[..., :dim] = g
    return (full,)


# game terms

def _pair_geometry(pos: np.ndarray, scale: float) -> tuple[np.ndarray, np.ndarray]:
    diff = pos[:, :, None, :] - pos[:, None, :, :]  # (M, N, N, d)
    q = scale * scale * np.sum(diff * diff, axis=-1)
    return diff, q


def _kernel_field(pos: np.ndarray, *, weights: np.ndarray, scale: float) -> np.ndarray:
    """Per-player interaction sum_j W_ij K(x_i - x_j) for positions (M, N, d)."""
    _, q = _pair_geometry(pos, scale)
    return np.sum(weights * kernel_profile(q), axis=-1)


def _kernel_field_vjp(
        g: np.ndarray, out: np.ndarray, pos: np.ndarray, *, weights: np.ndarray, scale: float
) -> Grads:
    diff, q = _pair_geometry(pos, scale)
    # grad K(x_k - x_j), antisymmetric in (k, j)
    dk = (2.0 * scale * scale * kernel_profile_slope(q))[..., None] * diff
    coupling = g[:, :, None] * weights + g[:, None, :] * weights.T
    return (np.einsum("mkj,mkjd->mkd", coupling, dk),)


def _obstacle(
        pos: np.ndarray,
        *,
        amplitude: np.ndarray,
        sharpness: np.ndarray,
        curvature: np.ndarray,
        centers: np.ndarray,
) -> np.ndarray:
    return obstacle_values(pos, amplitude, sharpness, curvature, centers)


def _obstacle_vjp(
        g: np.ndarray,
        out: np.ndarray,
        pos: np.ndarray,
        *,
        amplitude: np.ndarray,
        sharpness: np.ndarray,
        curvature: np.ndarray,
        centers: np.ndarray,
) -> Grads:
    offset = pos - centers
    q = np.sum(offset * offset, axis=-1)
    s = expit(sharpness * (1.0 - curvature * q))
    dh_dq = -amplitude * s * (1.0 - s) * sharpness * curvature
    return ((2.0 * g * dh_dq)[..., None] * offset,)


def _euler_step(
        state: np.ndarray, action: np.ndarray, *, kind: DynamicsKind, dt: float, noise: np.ndarray
) -> np.ndarray:
    if kind == DynamicsKind.VELOCITY:
        return state + action * dt + noise
    d = action.shape[-1]
    x, v = state[..., :d], state[..., d:]
    return np.concatenate([x + v * dt, v + action * dt], axis=-1) + noise


def _euler_step_vjp(
        g: np.ndarray,
        out: np.ndarray,
        state: np.ndarray,
        action: np.ndarray,
        *,
        kind: DynamicsKind,
        dt: float,
        noise: np.ndarray,
) -> Grads:
    if kind == DynamicsKind.VELOCITY:
        return g, g * dt
    d = action.shape[-1]
    gx, gv = g[..., :d], g[..., d:]
    return np.concatenate([gx, gv + gx * dt], axis=-1), gv * dt


register_primitive("add", _add, _add_vjp)
register_primitive("scale", _scale, _scale_vjp)
register_primitive("shift", _shift, _shift_vjp)
register_primitive("square", _square, _square_vjp)
register_primitive("sum", _sum, _sum_vjp)
register_primitive("tanh", _tanh, _tanh_vjp)
register_primitive("affine", _affine, _affine_vjp)
register_primitive("param_block", _param_block, _param_block_vjp)
register_primitive("time_feature", _time_feature, _time_feature_vjp)
register_primitive("position", _position, _position_vjp)
register_primitive("kernel_field", _kernel_field, _kernel_field_vjp)
register_primitive("obstacle", _obstacle, _obstacle_vjp)
register_primitive("euler_step", _euler_step, _euler_step_vjp)
