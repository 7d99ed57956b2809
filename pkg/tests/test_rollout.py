import numpy as np
import pytest

from cavflow.exceptions import NonFiniteStateError
from cavflow.models.game import DynamicsKind
from cavflow.models.training import PolicyArch
from cavflow.policy.network import PolicyNet, PolicyParams, init_params
from cavflow.rollout.grid import TimeGrid
from cavflow.rollout.io import (
    load_batch,
    read_trajectories_csv,
    replay,
    save_batch,
    write_trajectories_csv,
)
from cavflow.rollout.potential import estimate_player_objective, estimate_potential
from cavflow.rollout.simulate import effective_samples, sample_noise, simulate
from cavflow.scenarios.presets import preset_interaction

from conftest import make_game, zero_cost_game


def constant_policy(spec, action: float) -> PolicyParams:
    """Affine policies whose bias is the action and whose weights are zero."""
    net = PolicyNet.from_arch(spec, PolicyArch(hidden=[]))
    theta = np.zeros(net.n_params)
    theta[-spec.action_dim:] = action
    return PolicyParams.from_players(net, [theta] * spec.n_players)


def zero_policy(spec, arch) -> PolicyParams:
    net = PolicyNet.from_arch(spec, arch)
    return PolicyParams.from_players(net, [np.zeros(net.n_params)] * spec.n_players)


class TestTimeGrid:
    def test_uniform(self):
        grid = TimeGrid.uniform(2.0, 4)
        np.testing.assert_allclose(grid.nodes, [0.0, 0.5, 1.0, 1.5, 2.0])
        assert grid.steps == 4
        assert grid.horizon == 2.0

    def test_rejects_non_increasing_nodes(self):
        with pytest.raises(ValueError):
            TimeGrid(nodes=np.array([0.0, 0.5, 0.5, 1.0]))

    def test_rejects_single_node(self):
        with pytest.raises(ValueError):
            TimeGrid(nodes=np.array([0.0]))


class TestNoise:
    def test_deterministic_game_has_one_zero_sample(self):
        game = make_game(n_players=2)
        noise = sample_noise(game, TimeGrid.uniform(1.0, 4), 16, seed=0)
        assert noise.samples == 1
        np.testing.assert_array_equal(noise.increments, 0.0)
        assert effective_samples(game, 16) == 1

    def test_increment_variance_matches_step(self):
        game = make_game(n_players=1, lam=[[0.0]], kind=DynamicsKind.ACCELERATION, sigma=0.1)
        grid = TimeGrid.uniform(1.0, 4)
        noise = sample_noise(game, grid, 100_000, seed=3)
        var = noise.increments.var(axis=0)
        np.testing.assert_allclose(var, 0.25, rtol=0.02)

    def test_noise_drives_velocity_block_only(self):
        game = make_game(n_players=2, kind=DynamicsKind.ACCELERATION, sigma=0.1)
        noise = sample_noise(game, TimeGrid.uniform(1.0, 4), 8, seed=3)
        np.testing.assert_array_equal(noise.terms[..., 0], 0.0)
        np.testing.assert_allclose(noise.terms[..., 1], 0.1 * noise.increments[..., 0])

    def test_player_streams_are_stable_when_players_are_added(self):
        grid = TimeGrid.uniform(1.0, 5)
        two = sample_noise(make_game(n_players=2, kind=DynamicsKind.ACCELERATION, sigma=0.1),
                           grid, 4, seed=9, stream=2)
        three = sample_noise(make_game(n_players=3, kind=DynamicsKind.ACCELERATION, sigma=0.1),
                             grid, 4, seed=9, stream=2)
        np.testing.assert_array_equal(two.increments, three.increments[:, :2])

    def test_streams_differ(self):
        game = make_game(n_players=1, lam=[[0.0]], kind=DynamicsKind.ACCELERATION, sigma=0.1)
        grid = TimeGrid.uniform(1.0, 5)
        a = sample_noise(game, grid, 4, seed=9, stream=1)
        b = sample_noise(game, grid, 4, seed=9, stream=2)
        assert np.any(a.increments != b.increments)


class TestSimulate:
    def test_zero_policy_keeps_states_constant(self, small_arch):
        game = make_game(n_players=3)
        batch = simulate(game, zero_policy(game, small_arch), TimeGrid.uniform(1.0, 6), 1, seed=0)
        initial = batch.states[:, :, :1]
        np.testing.assert_array_equal(batch.states, np.broadcast_to(initial, batch.states.shape))

    def test_constant_velocity(self):
        game = make_game(n_players=1, lam=[[0.0]])
        batch = simulate(game, constant_policy(game, 1.0), TimeGrid.uniform(1.0, 4), 1, seed=0)
        np.testing.assert_allclose(batch.states[0, 0, :, 0], [-1.0, -0.75, -0.5, -0.25, 0.0])

    def test_constant_acceleration(self):
        game = make_game(n_players=1, lam=[[0.0]], kind=DynamicsKind.ACCELERATION)
        batch = simulate(game, constant_policy(game, 1.0), TimeGrid.uniform(1.0, 2), 1, seed=0)
        # explicit Euler: x advances with the previous velocity
        np.testing.assert_allclose(batch.states[0, 0, :, 0], [-1.0, -1.0, -0.75])
        np.testing.assert_allclose(batch.states[0, 0, :, 1], [0.0, 0.5, 1.0])

    def test_deterministic_game_forces_one_sample(self, small_arch):
        game = make_game(n_players=2)
        params = init_params(game, small_arch, seed=0)
        batch = simulate(game, params, TimeGrid.uniform(1.0, 4), 32, seed=0)
        assert batch.samples == 1

    def test_same_seed_same_trajectories(self, small_arch):
        game = make_game(n_players=3, kind=DynamicsKind.ACCELERATION, sigma=0.1)
        params = init_params(game, small_arch, seed=1)
        grid = TimeGrid.uniform(1.0, 8)
        a = simulate(game, params, grid, 16, seed=4, stream=1)
        b = simulate(game, params, grid, 16, seed=4, stream=1)
        np.testing.assert_array_equal(a.states, b.states)
        np.testing.assert_array_equal(a.actions, b.actions)

    def test_worker_count_does_not_change_results(self, small_arch):
        game = make_game(n_players=3, kind=DynamicsKind.ACCELERATION, sigma=0.1)
        params = init_params(game, small_arch, seed=1)
        grid = TimeGrid.uniform(1.0, 8)
        serial = simulate(game, params, grid, 16, seed=4, workers=1)
        parallel = simulate(game, params, grid, 16, seed=4, workers=3)
        np.testing.assert_allclose(parallel.states, serial.states, rtol=0, atol=1e-12)
        np.testing.assert_array_equal(parallel.noise, serial.noise)

    def test_rejects_zero_samples(self, small_arch):
        game = make_game(n_players=1, lam=[[0.0]])
        with pytest.raises(ValueError):
            simulate(game, init_params(game, small_arch, 0), TimeGrid.uniform(1.0, 2), 0, seed=0)

    def test_non_finite_state_is_reported(self):
        game = make_game(n_players=2)
        params = constant_policy(game, np.inf)
        with pytest.raises(NonFiniteStateError) as excinfo:
            simulate(game, params, TimeGrid.uniform(1.0, 3), 1, seed=0)
        assert excinfo.value.step == 1


class TestPotentialEstimates:
    def test_zero_cost_game(self, small_arch):
        game = zero_cost_game(3)
        params = init_params(game, small_arch, seed=0)
        batch = simulate(game, params, TimeGrid.uniform(1.0, 5), 1, seed=0)
        estimate = estimate_potential(game, batch, params)
        assert estimate.phi == 0.0
        assert estimate.per_player_j == [0.0, 0.0, 0.0]

    def test_coincident_stationary_players(self, small_arch):
        game = make_game(
            n_players=2,
            lam=[[0.0, 1.0], [1.0, 0.0]],
            action_coeff=0.0,
            terminal_coeff=0.0,
            initial=[[0.0], [0.0]],
        )
        batch = simulate(game, zero_policy(game, small_arch), TimeGrid.uniform(1.0, 10), 1, 0)
        estimate = estimate_potential(game, batch)
        # K(0) = 1 over the whole horizon
        assert estimate.per_player_j == pytest.approx([1.0, 1.0])
        assert estimate.phi == pytest.approx(1.0)
        assert estimate.min_pair_distance == 0.0

    def test_single_player_one_step_by_hand(self):
        game = make_game(n_players=1, lam=[[0.0]], action_coeff=0.1, terminal_coeff=1.0)
        batch = simulate(game, constant_policy(game, 0.5), TimeGrid.uniform(1.0, 1), 1, seed=0)
        # 0.1 * 0.5^2 * 1 + (-1 + 0.5 - 1)^2
        assert estimate_potential(game, batch).phi == pytest.approx(2.275)
        assert estimate_player_objective(game, batch, None, 0) == pytest.approx(2.275)

    def test_non_interacting_potential_is_sum_of_objectives(self, small_arch):
        game = make_game(n_players=3, lam=[[0.0] * 3 for _ in range(3)], terminal_coeff=10.0)
        params = init_params(game, small_arch, seed=5)
        batch = simulate(game, params, TimeGrid.uniform(1.0, 10), 1, seed=0)
        estimate = estimate_potential(game, batch, params)
        assert estimate.phi == pytest.approx(sum(estimate.per_player_j))

    def test_symmetric_pair_terms_are_counted_once(self, three_player_symmetric, small_arch):
        params = init_params(three_player_symmetric, small_arch, seed=5)
        batch = simulate(three_player_symmetric, params, TimeGrid.uniform(1.0, 10), 1, seed=0)
        with_pairs = estimate_potential(three_player_symmetric, batch, params)
        isolated_game = three_player_symmetric.model_copy(
            update={"weights": make_game(n_players=3, lam=[[0.0] * 3] * 3).weights}
        )
        isolated = estimate_potential(isolated_game, batch, params)
        pair_total = sum(with_pairs.per_player_j) - sum(isolated.per_player_j)
        assert with_pairs.phi - isolated.phi == pytest.approx(0.5 * pair_total)

    def test_grid_refinement_is_first_order(self):
        spec = preset_interaction(DynamicsKind.VELOCITY, 1.0).spec
        params = init_params(spec, PolicyArch(hidden=[8]), seed=0)

        def phi(steps):
            batch = simulate(spec, params, TimeGrid.uniform(spec.horizon, steps), 1, seed=0)
            return estimate_potential(spec, batch, params).phi

        reference = phi(4096)
        errors = [abs(phi(steps) - reference) for steps in (32, 64, 128, 256)]
        ratios = [coarse / fine for coarse, fine in zip(errors, errors[1:])]
        assert all(1.7 < r < 2.4 for r in ratios), ratios

    def test_player_count_mismatch(self, small_arch):
        game = make_game(n_players=2)
        batch = simulate(game, init_params(game, small_arch, 0), TimeGrid.uniform(1.0, 2), 1, 0)
        other = init_params(make_game(n_players=3), small_arch, 0)
        with pytest.raises(ValueError):
            estimate_potential(game, batch, other)

    def test_player_index_out_of_range(self, small_arch):
        game = make_game(n_players=2)
        batch = simulate(game, init_params(game, small_arch, 0), TimeGrid.uniform(1.0, 2), 1, 0)
        with pytest.raises(ValueError):
            estimate_player_objective(game, batch, None, 2)


class TestTrajectoryFiles:
    @pytest.fixture
    def batch(self, small_arch):
        game = make_game(n_players=2, kind=DynamicsKind.ACCELERATION, sigma=0.1)
        params = init_params(game, small_arch, seed=3)
        return game, simulate(game, params, TimeGrid.uniform(1.0, 5), 3, seed=2, stream=1)

    def test_csv_layout(self, batch, tmp_path):
        _, rollout = batch
        path = write_trajectories_csv(rollout, tmp_path / "trajectories.csv")
        lines = path.read_text().splitlines()
        assert lines[0] == "sample,player,step,t,x0,x1,a0"
        # one row per (sample, player, node); the terminal node has no action
        assert len(lines) == 1 + 3 * 2 * 6
        assert lines[6].endswith(",")

    def test_csv_values_are_exact(self, batch, tmp_path):
        _, rollout = batch
        states, actions, times = read_trajectories_csv(
            write_trajectories_csv(rollout, tmp_path / "trajectories.csv")
        )
        np.testing.assert_array_equal(states, rollout.states)
        np.testing.assert_array_equal(actions, rollout.actions)
        np.testing.assert_array_equal(times, rollout.times)

    def test_replay_reproduces_states(self, batch, tmp_path):
        game, rollout = batch
        restored = load_batch(save_batch(rollout, tmp_path / "batch.npz"))
        assert restored.seed == 2 and restored.stream == 1
        np.testing.assert_array_equal(replay(game, restored), rollout.states)

    def test_replay_rejects_foreign_noise(self, batch):
        game, rollout = batch
        tampered = type(rollout)(
            states=rollout.states,
            actions=rollout.actions,
            noise=rollout.noise + 1.0,
            times=rollout.times,
            seed=rollout.seed,
            stream=rollout.stream,
        )
        with pytest.raises(ValueError):
            replay(game, tampered)
