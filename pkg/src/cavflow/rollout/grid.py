from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Nodes 0 = t_0 < ... < t_P = T of the Euler-Maruyama scheme."""

    nodes: np.ndarray

    def __post_init__(self) -> None:
        if self.nodes.ndim != 1 or self.nodes.size < 2:
            raise ValueError("A time grid needs at least two nodes")
        if self.nodes[0] != 0.0 or np.any(np.diff(self.nodes) <= 0):
            raise ValueError("Grid nodes must start at 0 and increase strictly")

    @classmethod
    def uniform(cls, horizon: float, steps: int) -> "TimeGrid":
        nodes = np.linspace(0.0, horizon, steps + 1)
        nodes[-1] = horizon
        return cls(nodes=nodes)

    @property
    def steps(self) -> int:
        return self.nodes.size - 1

    @property
    def horizon(self) -> float:
        return float(self.nodes[-1])

    @property
    def deltas(self) -> np.ndarray:
        return np.diff(self.nodes)
