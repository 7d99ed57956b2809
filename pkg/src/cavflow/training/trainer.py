"""Adam minimization of the Monte Carlo potential over all players' parameters jointly."""
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import structlog

from cavflow.autodiff.engine import RolloutFn, evaluate, grad
from cavflow.exceptions import DivergenceError, NonFiniteStateError
from cavflow.export.checkpoint import Checkpoint, save_checkpoint
from cavflow.models.game import GameSpec
from cavflow.models.results import StopReason, TrainReport
from cavflow.models.training import PolicyArch, TrainConfig
from cavflow.monitoring.metrics import TrainingMonitor
from cavflow.optim.adam import Adam
from cavflow.optim.base import Optimizer
from cavflow.policy.network import PolicyNet, PolicyParams, init_params
from cavflow.rollout.grid import TimeGrid
from cavflow.rollout.potential import estimate_potential, potential_fn
from cavflow.rollout.simulate import NoiseSet, sample_noise, simulate

_log = structlog.get_logger(__name__)

# Noise stream 0 is held out for evaluation; iteration k trains on stream k + 1.
EVAL_STREAM = 0

ObjectiveBuilder = Callable[[NoiseSet], RolloutFn]
CheckpointHook = Callable[[np.ndarray, Optimizer, int], None]


@dataclass
class OptimizationResult:
    theta: np.ndarray
    monitor: TrainingMonitor
    stop_reason: StopReason
    final_grad_norm: float
    optimizer: Optimizer


def train_stream(iteration: int) -> int:
    return iteration + 1


def minimize(
        spec: GameSpec,
        theta0: np.ndarray,
        cfg: TrainConfig,
        build: ObjectiveBuilder,
        mask: Optional[np.ndarray] = None,
        phase: str = "train",
        on_checkpoint: Optional[CheckpointHook] = None,
) -> OptimizationResult:
    """Adam loop over a fixed-noise objective, optionally resampling noise every iteration."""
    grid = TimeGrid.uniform(spec.horizon, cfg.steps)
    optimizer = Adam(theta0.size, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps_adam, mask)
    monitor = TrainingMonitor(phase=phase, log_every=cfg.log_every)
    resample = cfg.resample_noise and not spec.dynamics.is_deterministic

    theta = np.array(theta0, dtype=float)
    objective = build(sample_noise(spec, grid, cfg.samples, cfg.seed, train_stream(0)))
    stop_reason = StopReason.ITERATIONS
    grad_norm = float("nan")
    last_finite: Optional[np.ndarray] = None

    monitor.start()
    for it in range(cfg.iterations):
        if resample and it > 0:
            objective = build(sample_noise(spec, grid, cfg.samples, cfg.seed, train_stream(it)))
        try:
            value, gradient = grad(theta, objective)
        except NonFiniteStateError as e:
            _log.warning("rollout_non_finite", phase=phase, step=e.step, player=e.player)
            value, gradient = float("nan"), np.full_like(theta, np.nan)
        if mask is not None:
            gradient = np.where(mask, gradient, 0.0)
        if not np.isfinite(value) or not np.all(np.isfinite(gradient)):
            monitor.diverged(it)
            raise DivergenceError(phase=phase, iteration=it, last_finite_theta=last_finite)
        last_finite = theta.copy()

        grad_norm = float(np.linalg.norm(gradient))
        monitor.record(value, grad_norm)
        if grad_norm <= cfg.grad_tol:
            stop_reason = StopReason.TOLERANCE
            break
        theta = optimizer.step(theta, gradient)

        every = cfg.checkpoint_every
        if on_checkpoint is not None and every and (it + 1) % every == 0:
            on_checkpoint(theta, optimizer, it + 1)

    _log.info(
        "optimization_finished",
        phase=phase,
        iterations=monitor.iterations,
        stop_reason=stop_reason.value,
        grad_norm=grad_norm,
    )
    return OptimizationResult(
        theta=theta,
        monitor=monitor,
        stop_reason=stop_reason,
        final_grad_norm=grad_norm,
        optimizer=optimizer,
    )


def final_params(spec: GameSpec, arch: PolicyArch, report: TrainReport) -> PolicyParams:
    net = PolicyNet.from_arch(spec, arch)
    return PolicyParams(net=net, n_players=spec.n_players, flat=np.asarray(report.final_theta))


def train(
        spec: GameSpec,
        arch: PolicyArch,
        cfg: TrainConfig,
        init: Optional[PolicyParams] = None,
        checkpoint_path: Optional[Path] = None,
        preset: Optional[str] = None,
) -> TrainReport:
    """Minimize Phi_M over theta; the result is never worse than the initialization."""
    params0 = init if init is not None else init_params(spec, arch, cfg.seed)
    net = params0.net
    grid = TimeGrid.uniform(spec.horizon, cfg.steps)

    def build(noise: NoiseSet) -> RolloutFn:
        return potential_fn(spec, net, grid, noise, cfg.potential)

    def write_checkpoint(theta: np.ndarray, optimizer: Optional[Optimizer], iteration: int) -> None:
        if checkpoint_path is None:
            return
        save_checkpoint(checkpoint_path, Checkpoint(
            preset=preset,
            spec=spec,
            arch=arch,
            train=cfg,
            iteration=iteration,
            theta=theta.tolist(),
            optimizer=optimizer.state_dict() if optimizer is not None else None,
        ))

    _log.info(
        "training_started",
        players=spec.n_players,
        parameters=params0.flat.size,
        iterations=cfg.iterations,
        samples=cfg.samples,
        steps=cfg.steps,
        potential=cfg.potential.value,
    )
    try:
        result = minimize(spec, params0.flat, cfg, build, on_checkpoint=write_checkpoint)
    except DivergenceError as e:
        if e.last_finite_theta is not None:
            write_checkpoint(e.last_finite_theta, None, e.iteration - 1)
        raise

    eval_objective = build(sample_noise(spec, grid, cfg.samples, cfg.seed, EVAL_STREAM))
    phi_init = evaluate(params0.flat, eval_objective)
    phi_final = evaluate(result.theta, eval_objective)
    theta = result.theta
    reverted = bool(phi_final > phi_init)
    if reverted:
        _log.warning("training_no_descent", initial=phi_init, final=phi_final)
        theta, phi_final = params0.flat.copy(), phi_init

    params = params0.with_flat(theta)
    batch = simulate(spec, params, grid, cfg.samples, cfg.seed, EVAL_STREAM, cfg.workers)
    estimate = estimate_potential(spec, batch, params, cfg.potential)
    write_checkpoint(theta, result.optimizer, result.monitor.iterations)

    return TrainReport(
        potential_history=result.monitor.potential_history,
        grad_norm_history=result.monitor.grad_norm_history,
        wall_clock=result.monitor.wall_clock,
        iterations_completed=result.monitor.iterations,
        stop_reason=result.stop_reason,
        final_grad_norm=result.final_grad_norm,
        initial_potential=phi_init,
        final_potential=phi_final,
        reverted_to_initial=reverted,
        final_theta=theta.tolist(),
        final_estimate=estimate,
    )
