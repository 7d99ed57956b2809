from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import structlog

from cavflow.core.game import alpha_bound
from cavflow.models.game import GameSpec
from cavflow.models.results import CheckResult, NECertificate
from cavflow.models.training import TrainConfig
from cavflow.policy.network import PolicyParams
from cavflow.verification.best_response import (
    BestResponseOutcome,
    default_best_response_config,
    evaluate_deviation,
)
from cavflow.verification.identities import check_potential_inequality, check_rescaled_identity

_log = structlog.get_logger(__name__)


@dataclass
class CertificationContext:
    """Inputs shared by all checks; checks may leave their per-player outcomes here."""

    spec: GameSpec
    params: PolicyParams
    train_cfg: TrainConfig
    workers: int = 1
    outcomes: list[BestResponseOutcome] = field(default_factory=list)


class CertificateCheck(ABC):
    """Abstract base class for equilibrium certificate checks."""

    name: str = "check"

    @abstractmethod
    def check(self, context: CertificationContext) -> CheckResult:
        """Run this check against the trained profile."""


class ExploitabilityCheck(CertificateCheck):
    """Best-responds for every player and compares the gain with a relative tolerance."""

    name = "exploitability"

    def __init__(
            self,
            br_cfg: Optional[TrainConfig] = None,
            rel_tol: float = 0.05,
            abs_tol: float = 1e-8,
    ):
        self.br_cfg = br_cfg
        self.rel_tol = rel_tol
        self.abs_tol = abs_tol

    def tolerance(self, incumbent_j: float) -> float:
        return self.rel_tol * abs(incumbent_j) + self.abs_tol

    def check(self, context: CertificationContext) -> CheckResult:
        br_cfg = self.br_cfg or default_best_response_config(context.train_cfg)
        players = range(context.spec.n_players)

        def respond(player: int) -> BestResponseOutcome:
            return evaluate_deviation(context.spec, context.params, player, br_cfg)

        if context.workers > 1:
            with ThreadPoolExecutor(max_workers=context.workers) as pool:
                outcomes = list(pool.map(respond, players))
        else:
            outcomes = [respond(p) for p in players]
        context.outcomes = outcomes

        errors = [
            f"Player {o.player} improves by {o.exploitability:.6g} "
            f"(tolerance {self.tolerance(o.incumbent_j):.6g})"
            for o in outcomes
            if o.exploitability > self.tolerance(o.incumbent_j)
        ]
        return CheckResult(
            name=self.name,
            passed=not errors,
            errors=errors,
            warnings=["Exploitability is a lower bound from trained best responses"],
            metrics={"max_exploitability": max((o.exploitability for o in outcomes), default=0.0)},
        )


class PotentialInequalityCheck(CertificateCheck):
    name = "potential_inequality"

    def __init__(self, trials: int = 100, seed: int = 0, deviation_scale: float = 0.5):
        self.trials = trials
        self.seed = seed
        self.deviation_scale = deviation_scale

    def check(self, context: CertificationContext) -> CheckResult:
        report = check_potential_inequality(
            context.spec,
            context.params,
            self.trials,
            self.seed,
            steps=context.train_cfg.steps,
            samples=context.train_cfg.samples,
            deviation_scale=self.deviation_scale,
        )
        errors = [] if report.holds else [
            f"Observed deviation {report.max_deviation:.6g} exceeds "
            f"alpha bound {report.alpha_bound:.6g}"
        ]
        return CheckResult(
            name=self.name, passed=report.holds, errors=errors, metrics=report.model_dump()
        )


class RescaledIdentityCheck(CertificateCheck):
    """Skipped with a warning when the weights carry no separable tags."""

    name = "rescaled_identity"

    def __init__(self, trials: int = 100, seed: int = 0, deviation_scale: float = 0.5):
        self.trials = trials
        self.seed = seed
        self.deviation_scale = deviation_scale

    def check(self, context: CertificationContext) -> CheckResult:
        if not context.spec.weights.is_separable:
            return CheckResult(
                name=self.name,
                passed=True,
                warnings=["Interaction weights are not separable; check skipped"],
            )
        report = check_rescaled_identity(
            context.spec,
            context.params,
            self.trials,
            self.seed,
            steps=context.train_cfg.steps,
            samples=context.train_cfg.samples,
            deviation_scale=self.deviation_scale,
        )
        errors = [] if report.holds else [
            f"Rescaled identity off by {report.max_relative_error:.3g} "
            f"with {report.sign_agreements}/{report.sign_checked} sign agreements"
        ]
        return CheckResult(
            name=self.name, passed=report.holds, errors=errors, metrics=report.model_dump()
        )


class VerificationEngine:
    """Applies the registered checks and assembles the equilibrium certificate."""

    def __init__(self, workers: int = 1):
        self.workers = workers
        self.checks: list[CertificateCheck] = []

    def add_check(self, check: CertificateCheck) -> None:
        self.checks.append(check)

    @classmethod
    def default(
            cls,
            br_cfg: Optional[TrainConfig] = None,
            rel_tol: float = 0.05,
            trials: int = 100,
            seed: int = 0,
            workers: int = 1,
    ) -> "VerificationEngine":
        engine = cls(workers=workers)
        engine.add_check(ExploitabilityCheck(br_cfg, rel_tol))
        engine.add_check(PotentialInequalityCheck(trials, seed))
        engine.add_check(RescaledIdentityCheck(trials, seed))
        return engine

    def certify(
            self, spec: GameSpec, params: PolicyParams, train_cfg: TrainConfig
    ) -> NECertificate:
        context = CertificationContext(
            spec=spec, params=params, train_cfg=train_cfg, workers=self.workers
        )
        results = []
        for check in self.checks:
            result = check.check(context)
            _log.info("certificate_check", check=result.name, passed=result.passed)
            results.append(result)

        outcomes = sorted(context.outcomes, key=lambda o: o.player)
        exploit = next((c for c in self.checks if isinstance(c, ExploitabilityCheck)), None)
        certificate = NECertificate(
            incumbent_j=[o.incumbent_j for o in outcomes],
            best_response_j=[o.best_response_j for o in outcomes],
            exploitability=[o.exploitability for o in outcomes],
            tolerance=[exploit.tolerance(o.incumbent_j) for o in outcomes] if exploit else [],
            alpha_bound=alpha_bound(spec),
            passed=all(r.passed for r in results),
            best_responses=[o.info for o in outcomes],
            checks=results,
        )
        _log.info(
            "certificate_issued",
            passed=certificate.passed,
            max_exploitability=max(certificate.exploitability, default=0.0),
            alpha_bound=certificate.alpha_bound,
        )
        return certificate
