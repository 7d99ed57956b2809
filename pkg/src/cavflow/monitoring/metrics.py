import time
from typing import Optional

import structlog
from prometheus_client import Counter, Gauge, Histogram

_log = structlog.get_logger(__name__)

# Prometheus metrics
POTENTIAL_VALUE = Gauge(
    "cavflow_potential_value",
    "Latest objective value of the running optimization",
    ["phase"]
)
GRADIENT_NORM = Gauge(
    "cavflow_gradient_norm",
    "Latest gradient norm of the running optimization",
    ["phase"]
)
ITERATION_TIME = Histogram(
    "cavflow_iteration_seconds",
    "Wall time of one optimizer iteration",
    ["phase"]
)
ITERATIONS = Counter(
    "cavflow_iterations_total",
    "Completed optimizer iterations",
    ["phase"]
)
DIVERGENCES = Counter(
    "cavflow_divergence_total",
    "Optimizations aborted on a non-finite objective",
    ["phase"]
)


class TrainingMonitor:
    """Tracks the iteration history of one optimization and mirrors it to metrics."""

    def __init__(self, phase: str = "train", log_every: int = 100):
        self.phase = phase
        self.log_every = log_every
        self.potential_history: list[float] = []
        self.grad_norm_history: list[float] = []
        self.wall_clock: list[float] = []
        self._started: Optional[float] = None
        self._last: Optional[float] = None

    def start(self) -> None:
        self._started = self._last = time.perf_counter()

    @property
    def iterations(self) -> int:
        return len(self.potential_history)

    def record(self, value: float, grad_norm: float) -> None:
        now = time.perf_counter()
        if self._started is None or self._last is None:
            self._started = self._last = now
        elapsed = now - self._last
        self._last = now

        self.potential_history.append(value)
        self.grad_norm_history.append(grad_norm)
        self.wall_clock.append(now - self._started)

        POTENTIAL_VALUE.labels(phase=self.phase).set(value)
        GRADIENT_NORM.labels(phase=self.phase).set(grad_norm)
        ITERATION_TIME.labels(phase=self.phase).observe(elapsed)
        ITERATIONS.labels(phase=self.phase).inc()

        if self.iterations % self.log_every == 0:
            _log.info(
                "iteration_completed",
                phase=self.phase,
                iteration=self.iterations,
                value=value,
                grad_norm=grad_norm,
            )

    def diverged(self, iteration: int) -> None:
        DIVERGENCES.labels(phase=self.phase).inc()
        _log.error("optimization_diverged", phase=self.phase, iteration=iteration)
