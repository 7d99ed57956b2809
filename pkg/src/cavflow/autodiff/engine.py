"""Pathwise gradients of rollout objectives and a finite-difference oracle."""
from typing import Callable, Iterable

import numpy as np

from cavflow.autodiff.tape import Tape, Var

# Builds a scalar objective on ``tape`` from the flat parameter leaf.
RolloutFn = Callable[[Tape, Var], Var]


def evaluate(theta: np.ndarray, rollout_fn: RolloutFn) -> float:
    """Objective value without recording; the forward code is the one ``grad`` uses."""
    tape = Tape(record=False)
    out = rollout_fn(tape, tape.variable(theta))
    return float(out.value)


def grad(theta: np.ndarray, rollout_fn: RolloutFn) -> tuple[float, np.ndarray]:
    """Value and reverse-mode gradient of the fixed-noise, discrete-time objective."""
    tape = Tape()
    leaf = tape.variable(theta)
    out = rollout_fn(tape, leaf)
    (gradient,) = tape.backward(out, [leaf])
    value = float(out.value)
    tape.release()
    return value, gradient.reshape(np.shape(theta))


def finite_diff(
        theta: np.ndarray, rollout_fn: RolloutFn, coords: Iterable[int], step: float
) -> np.ndarray:
    """Central differences on the requested flat coordinates."""
    if step <= 0:
        raise ValueError("Finite-difference step must be positive")
    base = np.array(theta, dtype=float)
    coords = list(coords)
    out = np.zeros(len(coords))
    for k, idx in enumerate(coords):
        plus = base.copy()
        minus = base.copy()
        plus.flat[idx] += step
        minus.flat[idx] -= step
        out[k] = (evaluate(plus, rollout_fn) - evaluate(minus, rollout_fn)) / (2.0 * step)
    return out
