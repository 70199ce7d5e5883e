import numpy as np
import pytest
from scipy.stats import chisquare

from src.config.settings import TD3Config
from src.models.interactions import Side
from src.rl.random_walk import (
    neighbor_set,
    random_walk,
    random_walk_batch,
    select_action,
    select_actions,
    start_node,
    step_distribution,
)
from src.rl.td3 import SideAgent


class FixedCritic:
    """Stands in for a SideAgent whose first critic scores f(d)"""

    def __init__(self, score):
        self.score = score

    def q1(self, states, actions):
        return self.score(np.asarray(actions, dtype=np.float64))


class TestNeighbors:
    def test_interior(self):
        np.testing.assert_array_equal(neighbor_set(10, 2, 128), [8, 9, 11, 12])

    def test_lower_boundary(self):
        np.testing.assert_array_equal(neighbor_set(1, 5, 128), [2, 3, 4, 5, 6])

    def test_upper_boundary(self):
        np.testing.assert_array_equal(neighbor_set(128, 5, 128), [123, 124, 125, 126, 127])

    def test_single_size_has_no_neighbors(self):
        with pytest.raises(ValueError):
            neighbor_set(1, 5, 1)

    def test_neighborhood_is_symmetric(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            d_max = int(rng.integers(2, 129))
            t = int(rng.integers(1, 9))
            d = int(rng.integers(1, d_max + 1))
            for other in neighbor_set(d, t, d_max):
                assert d in neighbor_set(int(other), t, d_max)
            expected = [x for x in range(1, d_max + 1) if 0 < abs(x - d) <= t]
            np.testing.assert_array_equal(neighbor_set(d, t, d_max), expected)


class TestStepDistribution:
    def test_farther_is_likelier(self):
        neighbors, probs = step_distribution(10, 2, 128)
        np.testing.assert_array_equal(neighbors, [8, 9, 11, 12])
        np.testing.assert_allclose(probs, [2 / 6, 1 / 6, 1 / 6, 2 / 6])

    def test_boundary(self):
        neighbors, probs = step_distribution(1, 5, 128)
        assert probs[neighbors == 6][0] == pytest.approx(1 / 3)
        assert probs[neighbors == 2][0] == pytest.approx(1 / 15)
        assert probs.sum() == pytest.approx(1.0)

    def test_pmf_over_random_triples(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            d_max = int(rng.integers(2, 129))
            t = int(rng.integers(1, 9))
            d = int(rng.integers(1, d_max + 1))
            neighbors, probs = step_distribution(d, t, d_max)
            assert probs.sum() == pytest.approx(1.0, abs=1e-12)
            assert np.all(probs > 0)
            distances = np.abs(neighbors - d)
            np.testing.assert_allclose(probs, distances / distances.sum())

    @pytest.mark.parametrize("d,t,d_max", [(10, 3, 128), (1, 5, 128), (30, 4, 32)])
    def test_sampled_steps_follow_distribution(self, d, t, d_max):
        neighbors, probs = step_distribution(d, t, d_max)
        n = 60_000
        walks = random_walk_batch(np.full(n, float(d)), t, 1, d_max, np.random.default_rng(0))
        assert np.all(walks[:, 0] == d)
        counts = np.array([(walks[:, 1] == x).sum() for x in neighbors])
        assert counts.sum() == n
        _, p_value = chisquare(counts, probs * n)
        assert p_value > 0.001


class TestWalk:
    def test_start_node_rounding(self):
        np.testing.assert_array_equal(start_node(np.array([64.5, 0.2, 300.0, 2.49]), 128),
                                      [65, 1, 128, 2])

    def test_single_step_walk(self):
        z = random_walk(40.2, 5, 1, 128, np.random.default_rng(1))
        assert len(z) == 2
        assert z[0] == 40
        assert 0 < abs(z[1] - 40) <= 5

    def test_walk_stays_in_range(self):
        walks = random_walk_batch(np.array([1.0, 128.0, 64.0]), 5, 50, 128, np.random.default_rng(2))
        assert walks.shape == (3, 51)
        assert walks.min() >= 1 and walks.max() <= 128
        steps = np.abs(np.diff(walks, axis=1))
        assert steps.min() >= 1 and steps.max() <= 5

    def test_seeded_walks_repeat(self):
        a = random_walk_batch(np.array([10.0, 20.0]), 3, 5, 64, np.random.default_rng(3))
        b = random_walk_batch(np.array([10.0, 20.0]), 3, 5, 64, np.random.default_rng(3))
        np.testing.assert_array_equal(a, b)


class TestSelectAction:
    def test_single_candidate(self):
        assert select_action(FixedCritic(np.sin), np.zeros(3), np.array([7])) == 7

    def test_monotone_critic_picks_smallest(self):
        assert select_action(FixedCritic(lambda d: -d), np.zeros(3), np.array([9, 4, 12, 6])) == 4

    def test_ties_favor_compression(self):
        flat = FixedCritic(lambda d: np.zeros_like(d))
        assert select_action(flat, np.zeros(3), np.array([9, 4, 12])) == 4

    def test_matches_exhaustive_argmax(self):
        agent = SideAgent(Side.USER, 64, TD3Config(hidden_width=16), np.random.default_rng(4))
        rng = np.random.default_rng(5)
        states = rng.random((20, 3))
        candidates = rng.integers(1, 65, size=(20, 5))
        chosen = select_actions(agent, states, candidates)
        for state, row, pick in zip(states, candidates, chosen):
            values = [agent.q1(state[None, :], np.array([d]))[0] for d in row]
            best = max(values)
            assert pick == min(d for d, v in zip(row, values) if v == best)

    def test_empty_candidates(self):
        with pytest.raises(ValueError):
            select_action(FixedCritic(np.sin), np.zeros(3), np.array([], dtype=np.int64))
