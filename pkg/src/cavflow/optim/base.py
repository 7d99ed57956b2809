from abc import ABC, abstractmethod
from typing import Any, Optional

import numpy as np


class Optimizer(ABC):
    """Abstract base class for first-order parameter updates."""

    def __init__(self, mask: Optional[np.ndarray] = None):
        # coordinates outside the mask are never updated
        self.mask = mask

    def _masked(self, update: np.ndarray) -> np.ndarray:
        if self.mask is None:
            return update
        return np.where(self.mask, update, 0.0)

    @abstractmethod
    def step(self, theta: np.ndarray, gradient: np.ndarray) -> np.ndarray:
        """Return updated parameters; ``theta`` is not modified."""
        pass

    @abstractmethod
    def state_dict(self) -> dict[str, Any]:
        """Serializable optimizer state for checkpoints."""
        pass

    @abstractmethod
    def load_state_dict(self, state: dict[str, Any]) -> None:
        """Restore state produced by ``state_dict``."""
        pass
