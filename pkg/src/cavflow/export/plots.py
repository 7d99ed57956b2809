"""SVG trajectory figures: per-vehicle position over time in 1D, planar paths in 2D."""
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import numpy as np  # noqa: E402
import structlog  # noqa: E402
from matplotlib import pyplot as plt  # noqa: E402
from matplotlib.colors import to_hex  # noqa: E402
from matplotlib.patches import Circle  # noqa: E402

from cavflow.models.scenario import ScenarioPreset, VehicleType  # noqa: E402
from cavflow.rollout.simulate import RolloutBatch  # noqa: E402

_log = structlog.get_logger(__name__)

GROUP_COLORS = {
    VehicleType.LARGE: "tab:red",
    VehicleType.MEDIUM: "tab:blue",
    VehicleType.SMALL: "tab:green",
}

# Fixed hash salt and no date keep repeated runs byte-identical.
_SVG_RC = {"svg.hashsalt": "cavflow", "svg.fonttype": "none"}


def _colors(preset: ScenarioPreset) -> list[str]:
    if preset.groups:
        return [GROUP_COLORS[g] for g in preset.groups]
    cmap = plt.get_cmap("tab10")
    return [to_hex(cmap(i % 10)) for i in range(preset.spec.n_players)]


def _save(fig: plt.Figure, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    _log.info("figure_written", path=str(path))
    return path


def plot_positions_1d(
        preset: ScenarioPreset, batch: RolloutBatch, path: Path, sample: int = 0
) -> Path:
    colors = _colors(preset)
    with matplotlib.rc_context(_SVG_RC):
        fig, ax = plt.subplots(figsize=(6, 4))
        labelled: set[str] = set()
        for i in range(batch.n_players):
            label = None
            if preset.groups and preset.groups[i].value not in labelled:
                label = preset.groups[i].value
                labelled.add(label)
            ax.plot(
                batch.times, batch.states[sample, i, :, 0], color=colors[i], lw=1.2, label=label
            )
        targets = sorted({c.target[0] for c in preset.spec.costs})
        for z in targets:
            ax.axhline(z, color="grey", ls=":", lw=0.8)
        ax.set_xlabel("t")
        ax.set_ylabel("x")
        ax.set_title(preset.label)
        if labelled:
            ax.legend(loc="lower right")
        fig.tight_layout()
        return _save(fig, path)


def plot_paths_2d(
        preset: ScenarioPreset, batch: RolloutBatch, path: Path, sample: int = 0
) -> Path:
    colors = _colors(preset)
    with matplotlib.rc_context(_SVG_RC):
        fig, ax = plt.subplots(figsize=(5, 5))
        drawn: set[tuple[float, ...]] = set()
        for cost in preset.spec.costs:
            obstacle = cost.obstacle
            if obstacle is None:
                continue
            centre = tuple(obstacle.center_array(2).tolist())
            if centre in drawn:
                continue
            drawn.add(centre)
            ax.add_patch(Circle(centre, obstacle.radius, color="black", alpha=0.25, lw=0))
        for i in range(batch.n_players):
            xy = batch.states[sample, i, :, :2]
            ax.plot(xy[:, 0], xy[:, 1], color=colors[i], lw=1.2)
            ax.plot(*xy[0], "o", color=colors[i], ms=3)
            ax.plot(*xy[-1], "s", color=colors[i], ms=3)
        lim = max(1.2, float(np.abs(batch.states[sample, :, :, :2]).max()) * 1.05)
        ax.set_xlim(-lim, lim)
        ax.set_ylim(-lim, lim)
        ax.set_aspect("equal")
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
        ax.set_title(preset.label)
        fig.tight_layout()
        return _save(fig, path)


def plot_potential_history(history: list[float], path: Path) -> Path:
    with matplotlib.rc_context(_SVG_RC):
        fig, ax = plt.subplots(figsize=(6, 3.5))
        ax.plot(np.arange(1, len(history) + 1), history, lw=1.0)
        ax.set_xlabel("iteration")
        ax.set_ylabel("potential")
        if history and min(history) > 0:
            ax.set_yscale("log")
        fig.tight_layout()
        return _save(fig, path)


def plot_trajectories(preset: ScenarioPreset, batch: RolloutBatch, path: Path) -> Path:
    if preset.spec.position_dim == 1:
        return plot_positions_1d(preset, batch, path)
    return plot_paths_2d(preset, batch, path)
