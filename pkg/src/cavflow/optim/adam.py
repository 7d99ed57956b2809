from typing import Any, Optional

import numpy as np

from cavflow.optim.base import Optimizer


class Adam(Optimizer):
    """Adam with bias-corrected first and second moments."""

    def __init__(
            self,
            size: int,
            learning_rate: float = 1e-2,
            beta1: float = 0.9,
            beta2: float = 0.999,
            eps: float = 1e-8,
            mask: Optional[np.ndarray] = None,
    ):
        super().__init__(mask)
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = np.zeros(size)
        self.v = np.zeros(size)

    def step(self, theta: np.ndarray, gradient: np.ndarray) -> np.ndarray:
        gradient = self._masked(gradient)
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * gradient
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * gradient * gradient
        m_hat = self.m / (1.0 - self.beta1 ** self.t)
        v_hat = self.v / (1.0 - self.beta2 ** self.t)
        update = self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)
        return theta - self._masked(update)

    def state_dict(self) -> dict[str, Any]:
        return {
            "t": self.t,
            "m": self.m.tolist(),
            "v": self.v.tolist(),
            "learning_rate": self.learning_rate,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
        }

    def load_state_dict(self, state: dict[str, Any]) -> None:
        self.t = int(state["t"])
        self.m = np.asarray(state["m"], dtype=float)
        self.v = np.asarray(state["v"], dtype=float)
        self.learning_rate = float(state["learning_rate"])
        self.beta1 = float(state["beta1"])
        self.beta2 = float(state["beta2"])
        self.eps = float(state["eps"])
