"""Trajectory export: CSV rows per (sample, player, step) and a compact npz replay format."""
import csv
from pathlib import Path

import numpy as np

from cavflow.autodiff import ops
from cavflow.autodiff.tape import Tape
from cavflow.models.game import GameSpec
from cavflow.rollout.simulate import RolloutBatch, sample_noise


def _fmt(value: float) -> str:
    return repr(float(value))


def write_trajectories_csv(batch: RolloutBatch, path: Path) -> Path:
    m, n, nodes, s = batch.states.shape
    d = batch.actions.shape[-1]
    header = (
        ["sample", "player", "step", "t"]
        + [f"x{k}" for k in range(s)]
        + [f"a{k}" for k in range(d)]
    )
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for sample in range(m):
            for player in range(n):
                for step in range(nodes):
                    action = (
                        [_fmt(a) for a in batch.actions[sample, player, step]]
                        if step < nodes - 1
                        else [""] * d
                    )
                    writer.writerow(
                        [sample, player, step, _fmt(batch.times[step])]
                        + [_fmt(x) for x in batch.states[sample, player, step]]
                        + action
                    )
    return path


def read_trajectories_csv(path: Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """States (M, N, P + 1, S), actions (M, N, P, d) and node times from a trajectory CSV."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = list(reader)
    s = sum(1 for h in header if h.startswith("x"))
    d = sum(1 for h in header if h.startswith("a"))
    m = 1 + max(int(r[0]) for r in rows)
    n = 1 + max(int(r[1]) for r in rows)
    nodes = 1 + max(int(r[2]) for r in rows)

    states = np.zeros((m, n, nodes, s))
    actions = np.zeros((m, n, nodes - 1, d))
    times = np.zeros(nodes)
    for r in rows:
        sample, player, step = int(r[0]), int(r[1]), int(r[2])
        times[step] = float(r[3])
        states[sample, player, step] = [float(v) for v in r[4: 4 + s]]
        if step < nodes - 1:
            actions[sample, player, step] = [float(v) for v in r[4 + s: 4 + s + d]]
    return states, actions, times


def save_batch(batch: RolloutBatch, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        np.savez_compressed(
            f,
            states=batch.states,
            actions=batch.actions,
            noise=batch.noise,
            times=batch.times,
            seed=np.array(batch.seed),
            stream=np.array(batch.stream),
        )
    return path


def load_batch(path: Path) -> RolloutBatch:
    with np.load(path) as data:
        return RolloutBatch(
            states=data["states"],
            actions=data["actions"],
            noise=data["noise"],
            times=data["times"],
            seed=int(data["seed"]),
            stream=int(data["stream"]),
        )


def replay(spec: GameSpec, batch: RolloutBatch) -> np.ndarray:
    """Re-run the Euler recursion from the stored actions and noise; returns states."""
    grid = batch.grid
    noise = sample_noise(spec, grid, batch.samples, batch.seed, batch.stream)
    if not np.array_equal(noise.increments, batch.noise):
        raise ValueError("Stored noise does not match the batch seed and stream")
    tape = Tape(record=False)
    x = tape.variable(batch.states[:, :, 0])
    states = [x.value]
    for step, dt in enumerate(grid.deltas):
        a = tape.variable(batch.actions[:, :, step])
        x = ops.euler_step(x, a, spec.dynamics.kind, float(dt), noise.terms[:, :, step])
        states.append(x.value)
    return np.stack(states, axis=2)
