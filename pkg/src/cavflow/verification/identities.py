"""Sampled unilateral deviations checked against the potential identities."""
from typing import Optional

import numpy as np
import structlog

from cavflow.core.game import alpha_bound
from cavflow.exceptions import MissingSeparableTagsError
from cavflow.models.game import GameSpec
from cavflow.models.results import (
    PotentialEstimate,
    PotentialInequalityReport,
    RescaledIdentityReport,
)
from cavflow.models.training import PotentialKind
from cavflow.policy.network import PolicyParams
from cavflow.rollout.grid import TimeGrid
from cavflow.rollout.potential import estimate_potential
from cavflow.rollout.simulate import simulate
from cavflow.training.trainer import EVAL_STREAM

_log = structlog.get_logger(__name__)

IDENTITY_TOLERANCE = 1e-8
SIGN_THRESHOLD = 1e-10
# Smallest |(tau_i / gamma_i) dJ_i| an identity error is measured relative to.
RELATIVE_FLOOR = 1e-6


def _estimate(
        spec: GameSpec,
        params: PolicyParams,
        grid: TimeGrid,
        samples: int,
        seed: int,
        kind: PotentialKind,
) -> PotentialEstimate:
    # Same seed and stream for every call: deviations are compared on common noise.
    batch = simulate(spec, params, grid, samples, seed, EVAL_STREAM)
    return estimate_potential(spec, batch, params, kind)


def _deviate(
        params: PolicyParams,
        rng: np.random.Generator,
        scale: float,
        player: Optional[int] = None,
) -> tuple[int, PolicyParams]:
    if player is None:
        player = int(rng.integers(params.n_players))
    theta_i = params.player(player) + scale * rng.standard_normal(params.net.n_params)
    return player, params.with_player(player, theta_i)


def check_potential_inequality(
        spec: GameSpec,
        params: PolicyParams,
        trials: int,
        seed: int,
        steps: int = 50,
        samples: int = 64,
        deviation_scale: float = 0.5,
) -> PotentialInequalityReport:
    """Largest |dJ_i - dPhi_M| over random unilateral deviations, against the alpha bound."""
    grid = TimeGrid.uniform(spec.horizon, steps)
    bound = alpha_bound(spec)
    rng = np.random.default_rng(seed)
    base = _estimate(spec, params, grid, samples, seed, PotentialKind.SYMMETRIC)

    worst, worst_player = 0.0, None
    for _ in range(trials):
        player, deviated = _deviate(params, rng, deviation_scale)
        moved = _estimate(spec, deviated, grid, samples, seed, PotentialKind.SYMMETRIC)
        d_j = moved.per_player_j[player] - base.per_player_j[player]
        d_phi = moved.phi - base.phi
        gap = abs(d_j - d_phi)
        if gap > worst or worst_player is None:
            worst, worst_player = gap, player

    report = PotentialInequalityReport(
        trials=trials,
        max_deviation=worst,
        alpha_bound=bound,
        holds=worst <= bound + IDENTITY_TOLERANCE,
        worst_player=worst_player,
    )
    _log.info(
        "potential_inequality_checked",
        trials=trials,
        max_deviation=worst,
        alpha_bound=bound,
        holds=report.holds,
    )
    return report


def check_rescaled_identity(
        spec: GameSpec,
        params: PolicyParams,
        trials: int,
        seed: int,
        steps: int = 50,
        samples: int = 1,
        deviation_scale: float = 0.5,
        player: Optional[int] = None,
) -> RescaledIdentityReport:
    """dPhi~ against (tau_i / gamma_i) dJ_i over random deviations of one player at a time.

    Errors are relative to |(tau_i / gamma_i) dJ_i|, floored at RELATIVE_FLOOR.
    """
    weights = spec.weights
    if not weights.is_separable:
        raise MissingSeparableTagsError("Rescaled identity needs separable (gamma, tau) tags")
    assert weights.gamma is not None and weights.tau is not None
    ratio = np.asarray(weights.tau, dtype=float) / np.asarray(weights.gamma, dtype=float)

    grid = TimeGrid.uniform(spec.horizon, steps)
    rng = np.random.default_rng(seed)

    def both(p: PolicyParams) -> tuple[float, list[float]]:
        rescaled = _estimate(spec, p, grid, samples, seed, PotentialKind.RESCALED)
        return rescaled.phi, rescaled.per_player_j

    base_phi, base_j = both(params)
    max_err, agreements, checked = 0.0, 0, 0
    for _ in range(trials):
        i, deviated = _deviate(params, rng, deviation_scale, player)
        phi, j = both(deviated)
        d_phi = phi - base_phi
        d_j = j[i] - base_j[i]
        expected = ratio[i] * d_j
        max_err = max(max_err, abs(d_phi - expected) / max(abs(expected), RELATIVE_FLOOR))
        if abs(d_j) > SIGN_THRESHOLD:
            checked += 1
            agreements += int(np.sign(d_phi) == np.sign(d_j))

    report = RescaledIdentityReport(
        trials=trials,
        max_relative_error=max_err,
        sign_agreements=agreements,
        sign_checked=checked,
        holds=max_err <= IDENTITY_TOLERANCE and agreements == checked,
    )
    _log.info(
        "rescaled_identity_checked",
        trials=trials,
        max_relative_error=max_err,
        sign_agreements=agreements,
        sign_checked=checked,
    )
    return report
