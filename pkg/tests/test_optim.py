import numpy as np
import pytest

from cavflow.optim.adam import Adam


def test_first_step_moves_by_learning_rate():
    adam = Adam(3, learning_rate=0.01)
    theta = np.array([1.0, 1.0, 1.0])
    updated = adam.step(theta, np.array([2.0, -0.5, 1e-3]))
    np.testing.assert_allclose(updated, theta - 0.01 * np.array([1.0, -1.0, 1.0]), rtol=1e-4)


def test_step_does_not_modify_input():
    adam = Adam(2)
    theta = np.array([1.0, 2.0])
    adam.step(theta, np.array([1.0, 1.0]))
    np.testing.assert_array_equal(theta, [1.0, 2.0])


def test_zero_gradient_leaves_parameters():
    adam = Adam(2)
    theta = np.array([0.3, -0.7])
    np.testing.assert_array_equal(adam.step(theta, np.zeros(2)), theta)


def test_mask_freezes_coordinates():
    mask = np.array([True, False, True])
    adam = Adam(3, learning_rate=0.1, mask=mask)
    theta = np.zeros(3)
    for _ in range(5):
        theta = adam.step(theta, np.array([1.0, 1.0, -1.0]))
    assert theta[1] == 0.0
    assert theta[0] < 0.0 < theta[2]
    assert adam.m[1] == 0.0 and adam.v[1] == 0.0


def test_minimizes_quadratic():
    adam = Adam(2, learning_rate=0.05)
    theta = np.array([2.0, -3.0])
    for _ in range(2000):
        theta = adam.step(theta, 2.0 * theta)
    np.testing.assert_allclose(theta, 0.0, atol=1e-2)


def test_state_dict_resumes_identically():
    rng = np.random.default_rng(0)
    grads = rng.normal(size=(6, 4))
    reference = Adam(4, learning_rate=0.02)
    theta_ref = np.zeros(4)
    for g in grads:
        theta_ref = reference.step(theta_ref, g)

    first = Adam(4, learning_rate=0.02)
    theta = np.zeros(4)
    for g in grads[:3]:
        theta = first.step(theta, g)
    resumed = Adam(4)
    resumed.load_state_dict(first.state_dict())
    assert resumed.t == 3
    assert resumed.learning_rate == pytest.approx(0.02)
    for g in grads[3:]:
        theta = resumed.step(theta, g)
    np.testing.assert_array_equal(theta, theta_ref)
