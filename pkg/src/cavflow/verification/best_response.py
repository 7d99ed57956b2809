"""Best-response retraining of one player against frozen opponents."""
from dataclasses import dataclass
from typing import Callable

import numpy as np
import structlog
from tenacity import RetryCallState, Retrying, retry_if_exception_type, stop_after_attempt

from cavflow.autodiff.engine import RolloutFn, evaluate
from cavflow.exceptions import DivergenceError
from cavflow.models.game import GameSpec
from cavflow.models.results import BestResponseInfo
from cavflow.models.training import TrainConfig
from cavflow.policy.network import PolicyParams
from cavflow.rollout.grid import TimeGrid
from cavflow.rollout.potential import player_objective_fn
from cavflow.rollout.simulate import NoiseSet, sample_noise
from cavflow.training.trainer import minimize

_log = structlog.get_logger(__name__)

# Held-out evaluation noise, disjoint from training streams.
HELD_OUT_STREAM = 2**31 - 1
HELD_OUT_FACTOR = 10
MAX_ATTEMPTS = 3


@dataclass(frozen=True)
class BestResponseOutcome:
    player: int
    incumbent_j: float
    best_response_j: float
    exploitability: float
    theta: np.ndarray
    info: BestResponseInfo


def default_best_response_config(train_cfg: TrainConfig) -> TrainConfig:
    """Same Monte Carlo setup as training, 1000 iterations, fresh seed."""
    return train_cfg.model_copy(update={
        "iterations": 1000,
        "seed": train_cfg.seed + 1,
        "checkpoint_every": 0,
        "grad_tol": 0.0,
    })


def _log_retry(player: int) -> Callable[[RetryCallState], None]:
    def hook(state: RetryCallState) -> None:
        _log.warning(
            "best_response_diverged",
            player=player,
            attempt=state.attempt_number,
            next_learning_rate_factor=0.5 ** state.attempt_number,
        )
    return hook


def held_out_noise(spec: GameSpec, cfg: TrainConfig) -> NoiseSet:
    grid = TimeGrid.uniform(spec.horizon, cfg.steps)
    return sample_noise(spec, grid, HELD_OUT_FACTOR * cfg.samples, cfg.seed, HELD_OUT_STREAM)


def best_response(
        spec: GameSpec, params: PolicyParams, player: int, br_cfg: TrainConfig
) -> tuple[np.ndarray, BestResponseInfo]:
    """Minimize J_player over theta_player only, warm-started at the incumbent.

    A diverging attempt is retried with half the learning rate; the last failure propagates.
    """
    grid = TimeGrid.uniform(spec.horizon, br_cfg.steps)

    def build(noise: NoiseSet) -> RolloutFn:
        return player_objective_fn(spec, params.net, grid, noise, player)

    mask = params.player_mask(player)
    for attempt in Retrying(
            stop=stop_after_attempt(MAX_ATTEMPTS),
            retry=retry_if_exception_type(DivergenceError),
            before_sleep=_log_retry(player),
            reraise=True,
    ):
        with attempt:
            n = attempt.retry_state.attempt_number
            cfg = br_cfg.model_copy(update={"learning_rate": br_cfg.learning_rate * 0.5 ** (n - 1)})
            result = minimize(spec, params.flat, cfg, build, mask=mask, phase="best_response")

    info = BestResponseInfo(
        player=player,
        iterations=result.monitor.iterations,
        learning_rate=cfg.learning_rate,
        seed=cfg.seed,
        attempts=n,
        stop_reason=result.stop_reason,
    )
    return result.theta, info


def evaluate_deviation(
        spec: GameSpec, params: PolicyParams, player: int, br_cfg: TrainConfig
) -> BestResponseOutcome:
    """Incumbent versus best-response objective on shared held-out noise."""
    grid = TimeGrid.uniform(spec.horizon, br_cfg.steps)
    objective = player_objective_fn(spec, params.net, grid, held_out_noise(spec, br_cfg), player)

    theta_br, info = best_response(spec, params, player, br_cfg)
    incumbent = evaluate(params.flat, objective)
    responded = evaluate(theta_br, objective)
    gain = max(0.0, incumbent - responded)
    _log.info(
        "best_response_evaluated",
        player=player,
        incumbent=incumbent,
        best_response=responded,
        exploitability=gain,
    )
    return BestResponseOutcome(
        player=player,
        incumbent_j=incumbent,
        best_response_j=responded,
        exploitability=gain,
        theta=theta_br,
        info=info,
    )


def exploitability(spec: GameSpec, params: PolicyParams, player: int, br_cfg: TrainConfig) -> float:
    return evaluate_deviation(spec, params, player, br_cfg).exploitability
