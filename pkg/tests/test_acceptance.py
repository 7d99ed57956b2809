"""Experiment-scale reproductions of the highway scenarios; run with ``pytest -m slow``."""
import pytest

from cavflow.core.solver import ScenarioRunner
from cavflow.models.game import DynamicsKind
from cavflow.models.scenario import ObstacleSize, ScenarioName
from cavflow.scenarios.presets import resolve_preset
from cavflow.training.trainer import final_params, train
from cavflow.verification.best_response import default_best_response_config
from cavflow.verification.engine import ExploitabilityCheck, VerificationEngine

pytestmark = pytest.mark.slow


def trained(tmp_path_factory, name, **overrides):
    preset = resolve_preset(name, **overrides)
    out = tmp_path_factory.mktemp(preset.label)
    return ScenarioRunner(preset, out).run()


@pytest.fixture(scope="module")
def weak_velocity(tmp_path_factory):
    return trained(tmp_path_factory, ScenarioName.INTERACTION_1D_VELOCITY, beta=0.0)


@pytest.fixture(scope="module")
def strong_velocity(tmp_path_factory):
    return trained(tmp_path_factory, ScenarioName.INTERACTION_1D_VELOCITY, beta=1.0)


def test_weak_interaction_keeps_vehicles_together(weak_velocity):
    assert weak_velocity.summary.max_spread <= 0.1


def test_strong_interaction_separates_vehicles(weak_velocity, strong_velocity):
    assert strong_velocity.summary.max_spread >= 3.0 * weak_velocity.summary.max_spread


def test_velocity_control_reaches_target(weak_velocity, strong_velocity):
    assert weak_velocity.summary.terminal_error <= 0.15
    assert strong_velocity.summary.terminal_error <= 0.15


def test_large_obstacle_is_avoided(tmp_path_factory):
    result = trained(tmp_path_factory, ScenarioName.OBSTACLE_2D, obstacle=ObstacleSize.LARGE)
    assert result.summary.min_obstacle_distance >= 0.4


def test_without_obstacle_vehicles_cross_the_centre(tmp_path_factory):
    preset = resolve_preset(ScenarioName.OBSTACLE_2D, obstacle=ObstacleSize.NONE)
    result = ScenarioRunner(preset, tmp_path_factory.mktemp("open")).run()
    positions = result.batch.states[..., :2]
    assert (positions ** 2).sum(axis=-1).min() < 0.4 ** 2


@pytest.mark.parametrize("model", [DynamicsKind.VELOCITY, DynamicsKind.ACCELERATION])
def test_larger_vehicles_deviate_less(tmp_path_factory, model):
    result = trained(tmp_path_factory, ScenarioName.HETEROGENEOUS_1D, model=model)
    deviation = result.summary.group_deviation
    assert deviation["large"] < deviation["medium"] < deviation["small"]


def test_strong_interaction_profile_is_an_approximate_equilibrium():
    preset = resolve_preset(ScenarioName.INTERACTION_1D_VELOCITY, beta=1.0)
    report = train(preset.spec, preset.arch, preset.train)
    params = final_params(preset.spec, preset.arch, report)
    engine = VerificationEngine(workers=4)
    engine.add_check(ExploitabilityCheck(default_best_response_config(preset.train), rel_tol=0.05))
    certificate = engine.certify(preset.spec, params, preset.train)
    assert certificate.alpha_bound == 0.0
    assert certificate.passed, certificate.checks[0].errors
