from typing import Optional

import numpy as np


class CavflowError(Exception):
    """Base class for all solver errors."""


class SpecValidationError(CavflowError, ValueError):
    """A game or solver configuration is inconsistent."""


class UnregisteredPrimitiveError(CavflowError):
    """A computation asked the tape for a primitive with no adjoint rule."""

    def __init__(self, name: str):
        super().__init__(f"primitive '{name}' has no registered adjoint rule")
        self.name = name


class NonFiniteStateError(CavflowError):
    """The Euler recursion produced a NaN or infinite state."""

    def __init__(self, step: int, player: int):
        super().__init__(f"non-finite state at step {step} for player {player}")
        self.step = step
        self.player = player


class DivergenceError(CavflowError):
    """An optimization produced a non-finite objective.

    ``last_finite_theta`` is the last iterate whose value and gradient were finite, or None when
    the starting point already diverged.
    """

    def __init__(
            self,
            phase: str,
            iteration: int,
            last_finite_theta: Optional[np.ndarray] = None,
    ):
        super().__init__(f"{phase} diverged at iteration {iteration}")
        self.phase = phase
        self.iteration = iteration
        self.last_finite_theta = last_finite_theta


class MissingSeparableTagsError(CavflowError, ValueError):
    """The rescaled potential needs separable interaction weights (gamma, tau)."""


class CheckpointError(CavflowError):
    """A checkpoint file could not be read."""
