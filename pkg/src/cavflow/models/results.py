from enum import Enum
from typing import Any, Optional

from pydantic import BaseModel, Field


class StopReason(str, Enum):
    TOLERANCE = "tolerance"  # gradient norm fell to the configured tolerance
    ITERATIONS = "iterations"  # iteration cap reached


class PotentialEstimate(BaseModel):
    """Monte Carlo potential and per-player objectives of one rollout batch."""

    phi: float
    per_player_j: list[float]
    min_pair_distance: Optional[float] = None
    max_pair_distance: Optional[float] = None
    obstacle_occupancy: float = 0.0
    samples: int = 1


class TrainReport(BaseModel):
    """Iteration history and outcome of a potential minimization."""

    potential_history: list[float] = Field(default_factory=list)
    grad_norm_history: list[float] = Field(default_factory=list)
    wall_clock: list[float] = Field(default_factory=list)
    iterations_completed: int = 0
    stop_reason: StopReason = StopReason.ITERATIONS
    final_grad_norm: float = 0.0
    initial_potential: float = 0.0
    final_potential: float = 0.0
    reverted_to_initial: bool = False
    final_theta: list[float] = Field(default_factory=list)
    final_estimate: Optional[PotentialEstimate] = None
    verification: Optional["NECertificate"] = None

    def to_artifact(self) -> dict[str, Any]:
        """JSON-ready payload without wall-clock timings."""
        return self.model_dump(mode="json", exclude={"wall_clock", "final_theta"})


class CheckResult(BaseModel):
    """Outcome of one certificate check."""

    name: str
    passed: bool
    errors: list[str] = Field(default_factory=list)
    warnings: list[str] = Field(default_factory=list)
    metrics: dict[str, Any] = Field(default_factory=dict)


class PotentialInequalityReport(BaseModel):
    trials: int
    max_deviation: float
    alpha_bound: float
    holds: bool
    worst_player: Optional[int] = None


class RescaledIdentityReport(BaseModel):
    trials: int
    max_relative_error: float
    sign_agreements: int
    sign_checked: int
    holds: bool


class BestResponseInfo(BaseModel):
    player: int
    iterations: int
    learning_rate: float
    seed: int
    attempts: int
    stop_reason: StopReason


class NECertificate(BaseModel):
    """Empirical equilibrium certificate.

    Exploitability values are lower bounds: a stronger deviator than the trained best
    response may exist.
    """

    incumbent_j: list[float] = Field(default_factory=list)
    best_response_j: list[float] = Field(default_factory=list)
    exploitability: list[float] = Field(default_factory=list)
    tolerance: list[float] = Field(default_factory=list)
    alpha_bound: float = 0.0
    passed: bool = True
    best_responses: list[BestResponseInfo] = Field(default_factory=list)
    checks: list[CheckResult] = Field(default_factory=list)


class TrajectorySummary(BaseModel):
    """Scenario-level statistics of a simulated batch, in position space."""

    max_spread: float
    terminal_error: float
    min_obstacle_distance: Optional[float] = None
    group_deviation: Optional[dict[str, float]] = None


TrainReport.model_rebuild()
