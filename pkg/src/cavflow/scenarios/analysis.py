"""Trajectory statistics used to judge the experiments."""
from typing import Optional

import numpy as np

from cavflow.models.game import GameSpec
from cavflow.models.results import TrajectorySummary
from cavflow.models.scenario import ScenarioPreset, VehicleType
from cavflow.rollout.simulate import RolloutBatch


def positions(spec: GameSpec, batch: RolloutBatch) -> np.ndarray:
    """(M, N, P + 1, d) position block of the stored states."""
    return batch.states[..., : spec.position_dim]


def max_spread(spec: GameSpec, batch: RolloutBatch) -> float:
    """Largest pairwise distance between vehicles over samples and nodes; max - min in 1D."""
    pos = positions(spec, batch)
    diff = pos[:, :, None] - pos[:, None, :]
    return float(np.sqrt(np.sum(diff * diff, axis=-1)).max())


def terminal_error(spec: GameSpec, batch: RolloutBatch) -> float:
    targets = np.array([c.target for c in spec.costs])
    offset = positions(spec, batch)[:, :, -1] - targets[None]
    return float(np.sqrt(np.sum(offset * offset, axis=-1)).max())


def min_obstacle_distance(spec: GameSpec, batch: RolloutBatch) -> Optional[float]:
    """Closest approach to any obstacle centre; None when no player has an obstacle."""
    pos = positions(spec, batch)
    distances = []
    for i, cost in enumerate(spec.costs):
        if cost.obstacle is None:
            continue
        offset = pos[:, i] - cost.obstacle.center_array(spec.position_dim)
        distances.append(np.sqrt(np.sum(offset * offset, axis=-1)).min())
    return float(min(distances)) if distances else None


def group_deviation(
        spec: GameSpec, batch: RolloutBatch, groups: list[VehicleType]
) -> dict[str, float]:
    """Mean absolute deviation from the all-vehicle mean path, averaged within each group."""
    pos = positions(spec, batch)
    mean_path = pos.mean(axis=1, keepdims=True)
    deviation = np.sqrt(np.sum((pos - mean_path) ** 2, axis=-1)).mean(axis=(0, 2))  # (N,)
    labels = np.array([g.value for g in groups])
    return {
        group.value: float(deviation[labels == group.value].mean())
        for group in VehicleType
        if np.any(labels == group.value)
    }


def summarize(preset: ScenarioPreset, batch: RolloutBatch) -> TrajectorySummary:
    spec = preset.spec
    return TrajectorySummary(
        max_spread=max_spread(spec, batch),
        terminal_error=terminal_error(spec, batch),
        min_obstacle_distance=min_obstacle_distance(spec, batch),
        group_deviation=group_deviation(spec, batch, preset.groups) if preset.groups else None,
    )
