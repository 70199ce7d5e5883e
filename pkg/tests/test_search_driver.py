import numpy as np
import pytest

from src.core.errors import NonFiniteError
from src.core.event_bus import (
    CANDIDATE_ADMITTED,
    EPISODE_COMPLETED,
    ITERATION_ABORTED,
    ITERATION_COMPLETED,
    EventBus,
)
from src.models.interactions import Side
from src.strategies.search_driver import SearchDriver, run_search

TRACE_KEYS = {
    "episode", "iter", "mean_action_users", "mean_action_items", "mean_reward", "critic_loss",
    "actor_loss", "buffer_len", "q_mean", "sparsity", "train_loss",
}


def with_search(config, **updates):
    return config.model_copy(update={"search": config.search.model_copy(update=updates)})


class TestSearchDriver:
    def test_single_iteration_smoke(self, dataset, fast_config, flat_baseline):
        config = with_search(fast_config, iterations_per_episode=1)
        result = run_search(dataset, config, flat_baseline)
        assert len(result.log.iterations) == 1
        record = result.log.iterations[0]
        assert set(record) == TRACE_KEYS
        assert record["buffer_len"] == {"user": dataset.num_users, "item": dataset.num_items}
        assert 1.0 <= record["mean_action_users"] <= 8.0
        assert 0.0 <= record["q_mean"] <= 1.0

    def test_events_follow_iterations(self, dataset, fast_config, flat_baseline):
        bus = EventBus()
        seen = []
        for event_type in (ITERATION_COMPLETED, EPISODE_COMPLETED, CANDIDATE_ADMITTED):
            bus.subscribe(event_type, lambda e: seen.append(e.type))
        run_search(dataset, fast_config, flat_baseline, bus)
        iterations = [t for t in seen if t == ITERATION_COMPLETED]
        assert len(iterations) == 2
        assert seen[-1] == EPISODE_COMPLETED

    def test_zero_penalty_rewards_equal_quality(self, dataset, fast_config, flat_baseline):
        config = with_search(fast_config, lambda_=0.0)
        result = run_search(dataset, config, flat_baseline)
        for record in result.log.iterations:
            assert record["mean_reward"] == pytest.approx(record["q_mean"])

    def test_candidates_meet_their_target(self, dataset, fast_config, flat_baseline):
        config = with_search(fast_config, iterations_per_episode=3, target_sparsities=[0.1, 0.4])
        driver = SearchDriver(dataset, config, flat_baseline)
        result = driver.run()
        capacity = dataset.num_entities * config.recommender.d_max
        for c, candidates in result.tracker.global_sets.items():
            assert len(candidates) <= config.search.top_l
            for record in candidates:
                assert record.sparsity >= c
                assert record.sparsity == pytest.approx(1.0 - record.dims.sum() / capacity)
                assert record.dims.min() >= 1 and record.dims.max() <= 8

    def test_same_seed_same_trace(self, dataset, fast_config, flat_baseline):
        first = run_search(dataset, fast_config, flat_baseline).log.iterations
        second = run_search(dataset, fast_config, flat_baseline).log.iterations
        assert first == second

    def test_different_seed_different_actions(self, dataset, fast_config, flat_baseline):
        other = fast_config.model_copy(update={"seed": fast_config.seed + 1})
        first = run_search(dataset, fast_config, flat_baseline).log.iterations
        second = run_search(dataset, other, flat_baseline).log.iterations
        assert first != second

    def test_buffers_are_filled_per_side(self, dataset, fast_config, flat_baseline):
        driver = SearchDriver(dataset, fast_config, flat_baseline)
        driver.run()
        assert len(driver.buffers[Side.USER]) == 2 * dataset.num_users
        assert len(driver.buffers[Side.ITEM]) == 2 * dataset.num_items

    def test_actions_without_random_walk(self, dataset, fast_config, flat_baseline):
        config = with_search(fast_config, walk=fast_config.search.walk.model_copy(update={"enabled": False}))
        driver = SearchDriver(dataset, config, flat_baseline)
        states = np.full((dataset.num_entities, 3), 0.5)
        dims = driver.choose_actions(states, 0, 0)
        assert dims.dtype == np.int64
        assert dims.min() >= 1 and dims.max() <= 8

    def test_numeric_failure_aborts_iteration(self, dataset, fast_config, flat_baseline, monkeypatch):
        bus = EventBus()
        aborted = []
        bus.subscribe(ITERATION_ABORTED, lambda e: aborted.append(e.data))
        driver = SearchDriver(dataset, fast_config, flat_baseline, bus)

        def explode(*args, **kwargs):
            raise NonFiniteError("loss is nan")

        monkeypatch.setattr(driver.recommender, "train_epochs", explode)
        summary = driver.run_episode(0)
        assert summary["iterations"] == 0
        assert summary["mean_reward"] is None
        assert len(aborted) == 2
        assert len(driver.buffers[Side.USER]) == 0
        assert np.all(driver.table.dims == 8)

    def test_warm_start_recovers_after_abort(self, dataset, fast_config, flat_baseline,
                                             monkeypatch):
        config = with_search(fast_config, warm_start=True, iterations_per_episode=3)
        driver = SearchDriver(dataset, config, flat_baseline)
        original = driver.recommender.train_epochs
        calls = []

        def poison_once(*args, **kwargs):
            calls.append(1)
            if len(calls) == 1:
                driver.table.values[:] = np.nan
                raise NonFiniteError("loss is nan")
            return original(*args, **kwargs)

        monkeypatch.setattr(driver.recommender, "train_epochs", poison_once)
        summary = driver.run_episode(0)
        assert len(driver.log.aborted) == 1
        assert summary["iterations"] == 2
        assert np.all(np.isfinite(driver.table.values))

    def test_size_component_is_one_at_episode_start(self, dataset, fast_config, flat_baseline,
                                                    monkeypatch):
        config = with_search(fast_config, episodes=2)
        driver = SearchDriver(dataset, config, flat_baseline)
        original = driver.choose_actions
        seen = {}

        def recording(states, episode, iteration):
            seen[(episode, iteration)] = states.copy()
            return original(states, episode, iteration)

        monkeypatch.setattr(driver, "choose_actions", recording)
        driver.run()
        for episode in range(2):
            first = seen[(episode, 0)]
            np.testing.assert_array_equal(first[:, 1], 1.0)
            np.testing.assert_array_equal(first[:, 2], 1.0)

    def test_updates_per_iteration_capped(self, dataset, fast_config, flat_baseline):
        driver = SearchDriver(dataset, fast_config, flat_baseline)
        assert driver.updates_per_iteration == 3
