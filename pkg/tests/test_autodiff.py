import numpy as np
import pytest

from cavflow.autodiff import ops
from cavflow.autodiff.engine import evaluate, finite_diff, grad
from cavflow.autodiff.tape import Tape, registered_primitives
from cavflow.exceptions import UnregisteredPrimitiveError
from cavflow.models.game import DynamicsKind
from cavflow.models.scenario import ObstacleSize
from cavflow.models.training import PolicyArch, PotentialKind
from cavflow.policy.network import PolicyNet, PolicyParams, init_params
from cavflow.rollout.grid import TimeGrid
from cavflow.rollout.potential import potential_fn
from cavflow.rollout.simulate import sample_noise
from cavflow.scenarios.presets import preset_heterogeneous, preset_interaction, preset_obstacle

from conftest import make_game


def quadratic(tape, theta):
    return ops.reduce_sum(ops.square(theta))


def test_registry_lists_rollout_primitives():
    names = registered_primitives()
    for name in ("affine", "tanh", "euler_step", "kernel_field", "obstacle"):
        assert name in names


def test_unregistered_primitive():
    tape = Tape()
    x = tape.variable(1.0)
    with pytest.raises(UnregisteredPrimitiveError) as excinfo:
        tape.apply("softplus", x)
    assert excinfo.value.name == "softplus"


def test_inputs_from_another_tape_rejected():
    a, b = Tape(), Tape()
    with pytest.raises(ValueError):
        ops.add(a.variable(1.0), b.variable(2.0))


def test_non_recording_tape_cannot_differentiate():
    tape = Tape(record=False)
    x = tape.variable(2.0)
    with pytest.raises(RuntimeError):
        tape.backward(ops.square(x), [x])


def test_replay_reproduces_recorded_values(three_player_symmetric, small_arch):
    params = init_params(three_player_symmetric, small_arch, seed=0)
    grid = TimeGrid.uniform(1.0, 5)
    noise = sample_noise(three_player_symmetric, grid, 1, seed=0)
    fn = potential_fn(three_player_symmetric, params.net, grid, noise)
    tape = Tape()
    fn(tape, tape.variable(params.flat))
    assert len(tape) > 0
    assert tape.replay()


def test_quadratic_finite_difference():
    fd = finite_diff(np.array([3.0]), quadratic, [0], 1e-3)
    assert fd[0] == pytest.approx(6.0, abs=1e-9)


def test_zero_objective():
    def zero(tape, theta):
        return ops.scale(ops.reduce_sum(theta), 0.0)

    theta = np.array([1.0, -2.0, 0.5])
    value, gradient = grad(theta, zero)
    assert value == 0.0
    np.testing.assert_array_equal(gradient, 0.0)
    np.testing.assert_array_equal(finite_diff(theta, zero, range(3), 1e-4), 0.0)


def test_non_positive_step_rejected():
    with pytest.raises(ValueError):
        finite_diff(np.array([1.0]), quadratic, [0], 0.0)


def test_grad_and_evaluate_agree_bit_for_bit(three_player_symmetric, small_arch):
    params = init_params(three_player_symmetric, small_arch, seed=2)
    grid = TimeGrid.uniform(1.0, 8)
    noise = sample_noise(three_player_symmetric, grid, 1, seed=0)
    fn = potential_fn(three_player_symmetric, params.net, grid, noise)
    value, _ = grad(params.flat, fn)
    assert value == evaluate(params.flat, fn)


@pytest.mark.parametrize("factor", [3.7, -0.5])
def test_gradient_is_linear_in_the_objective(three_player_symmetric, small_arch, factor):
    params = init_params(three_player_symmetric, small_arch, seed=2)
    grid = TimeGrid.uniform(1.0, 8)
    noise = sample_noise(three_player_symmetric, grid, 1, seed=0)
    fn = potential_fn(three_player_symmetric, params.net, grid, noise)

    def scaled(tape, theta):
        return ops.scale(fn(tape, theta), factor)

    value, gradient = grad(params.flat, fn)
    scaled_value, scaled_gradient = grad(params.flat, scaled)
    assert scaled_value == pytest.approx(factor * value, rel=1e-12)
    np.testing.assert_allclose(
        scaled_gradient, factor * gradient, rtol=1e-12, atol=1e-12 * np.abs(gradient).max()
    )


class TestOneStepAffine:
    """One velocity-controlled player, one step, f = 0 and g = |x - z|^2 with a = b."""

    xi, z, theta_b = -1.0, 1.0, 0.7

    def setup_method(self):
        self.game = make_game(
            n_players=1,
            lam=[[0.0]],
            action_coeff=0.0,
            terminal_coeff=1.0,
            initial=[[self.xi]],
            target=[self.z],
        )
        self.net = PolicyNet.from_arch(self.game, PolicyArch(hidden=[]))
        self.grid = TimeGrid.uniform(1.0, 1)
        noise = sample_noise(self.game, self.grid, 1, seed=0)
        self.fn = potential_fn(self.game, self.net, self.grid, noise)
        # weights on (t, x) are zero so the action is the bias
        self.theta = np.array([0.0, 0.0, self.theta_b])

    def test_value_and_gradient(self):
        dt = 1.0
        value, gradient = grad(self.theta, self.fn)
        residual = self.xi + self.theta_b * dt - self.z
        assert value == pytest.approx(residual ** 2)
        assert gradient[2] == pytest.approx(2 * dt * residual)
        assert gradient[1] == pytest.approx(2 * dt * residual * self.xi)
        assert gradient[0] == pytest.approx(0.0)

    def test_finite_differences_match(self):
        _, gradient = grad(self.theta, self.fn)
        fd = finite_diff(self.theta, self.fn, range(3), 1e-5)
        np.testing.assert_allclose(fd, gradient, atol=1e-6)


def _check_gradient(spec, arch, steps, samples, kind=PotentialKind.SYMMETRIC, rtol=1e-4):
    params = init_params(spec, arch, seed=11)
    # move away from the small-output initialization
    rng = np.random.default_rng(5)
    flat = params.flat + 0.3 * rng.standard_normal(params.flat.size)
    params = PolicyParams(net=params.net, n_players=params.n_players, flat=flat)
    grid = TimeGrid.uniform(spec.horizon, steps)
    noise = sample_noise(spec, grid, samples, seed=3, stream=1)
    fn = potential_fn(spec, params.net, grid, noise, kind)
    _, gradient = grad(params.flat, fn)
    coords = rng.choice(params.flat.size, size=50, replace=False)
    fd = finite_diff(params.flat, fn, coords, 1e-5)
    scale = max(np.abs(gradient).max(), 1e-8)
    np.testing.assert_allclose(fd, gradient[coords], rtol=rtol, atol=rtol * scale)


ARCH = PolicyArch(hidden=[8, 8])


@pytest.mark.parametrize("model", [DynamicsKind.VELOCITY, DynamicsKind.ACCELERATION])
@pytest.mark.parametrize("beta", [0.0, 1.0])
def test_gradient_matches_finite_differences_interaction(model, beta):
    preset = preset_interaction(model, beta)
    samples = 1 if preset.spec.dynamics.is_deterministic else 4
    rtol = 1e-4 if samples == 1 else 1e-3
    _check_gradient(preset.spec, ARCH, steps=10, samples=samples, rtol=rtol)


@pytest.mark.parametrize("size", list(ObstacleSize))
def test_gradient_matches_finite_differences_obstacle(size):
    _check_gradient(preset_obstacle(size).spec, ARCH, steps=10, samples=1)


@pytest.mark.parametrize("model", [DynamicsKind.VELOCITY, DynamicsKind.ACCELERATION])
def test_gradient_matches_finite_differences_heterogeneous(model):
    spec = preset_heterogeneous(model).spec
    _check_gradient(spec, ARCH, steps=10, samples=1)
    _check_gradient(spec, ARCH, steps=10, samples=1, kind=PotentialKind.RESCALED)
