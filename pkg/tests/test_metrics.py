import math

import numpy as np
import pytest

from src.config.settings import RecommenderConfig
from src.evaluation.metrics import ensemble_score, evaluate_users, ndcg_at_k, recall_at_k
from src.evaluation.quality import (
    FullEvalBaseline,
    compute_quality,
    eval_item,
    eval_user,
    item_scores,
    quality_q,
)
from src.models.embedding import MaskedEmbeddingTable
from src.models.interactions import InteractionDataset, Split
from src.recommenders import create_recommender


def recall_oracle(ranked, relevant, k):
    return len(set(ranked[:k]) & set(relevant)) / len(set(relevant))


def ndcg_oracle(ranked, relevant, k):
    dcg = sum(1.0 / math.log2(i + 2) for i, item in enumerate(ranked[:k]) if item in relevant)
    idcg = sum(1.0 / math.log2(i + 2) for i in range(min(len(relevant), k)))
    return dcg / idcg


class FixedScores:
    """Recommender stand-in returning a fixed user x item score matrix"""

    def __init__(self, scores):
        self.scores = np.asarray(scores, dtype=np.float64)

    def user_scores(self, users):
        return self.scores[np.asarray(users)].copy()


def random_instance(rng, num_users=6):
    """Random splits over a catalogue of 3..20 items; integer scores make ties common"""
    num_items = int(rng.integers(3, 21))
    owner = rng.integers(0, 5, size=(num_users, num_items))
    pairs = {s: np.argwhere(owner == code) for code, s in enumerate(("train", "val", "test"))}
    dataset = InteractionDataset(num_users, num_items, pairs["train"], pairs["val"], pairs["test"])
    scores = rng.integers(0, 4, size=(num_users, num_items))
    return dataset, scores


def oracle_ranking(scores, excluded):
    masked = np.where(excluded, -np.inf, scores)
    return [int(i) for i in np.argsort(-masked, kind="stable")]


class TestRecall:
    def test_single_hit_at_top(self):
        assert recall_at_k([7, 1, 2, 3, 4], {7}, 5) == 1.0

    def test_half_found(self):
        assert recall_at_k([1, 2, 3, 4, 5, 6], {1, 6}, 5) == 0.5

    def test_empty_relevant_is_undefined(self):
        with pytest.raises(ValueError):
            recall_at_k([1, 2], set(), 5)

    def test_matches_set_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            ranked = list(rng.permutation(20))
            relevant = set(rng.choice(20, size=rng.integers(1, 8), replace=False).tolist())
            for k in (1, 5, 10, 20):
                assert recall_at_k(ranked, relevant, k) == recall_oracle(ranked, relevant, k)


class TestNDCG:
    def test_top_hit(self):
        assert ndcg_at_k([3, 1, 2], {3}, 5) == 1.0

    def test_second_position(self):
        assert ndcg_at_k([1, 3], {3}, 2) == pytest.approx(1.0 / math.log2(3), abs=1e-12)
        assert ndcg_at_k([1, 3], {3}, 2) == pytest.approx(0.6309, abs=1e-4)

    def test_matches_textbook_formula(self):
        rng = np.random.default_rng(1)
        for _ in range(1000):
            ranked = list(rng.permutation(20))
            relevant = set(rng.choice(20, size=rng.integers(1, 8), replace=False).tolist())
            for k in (5, 10, 20):
                assert ndcg_at_k(ranked, relevant, k) == pytest.approx(
                    ndcg_oracle(ranked, relevant, k), abs=1e-12
                )


def test_relabelling_items_changes_nothing():
    rng = np.random.default_rng(2)
    for _ in range(200):
        ranked = list(rng.permutation(20))
        relevant = set(rng.choice(20, size=rng.integers(1, 8), replace=False).tolist())
        relabel = rng.permutation(20)
        ranked2 = [int(relabel[i]) for i in ranked]
        relevant2 = {int(relabel[i]) for i in relevant}
        for k in (5, 10, 20):
            assert recall_at_k(ranked2, relevant2, k) == recall_at_k(ranked, relevant, k)
            assert ndcg_at_k(ranked2, relevant2, k) == ndcg_at_k(ranked, relevant, k)


class TestEnsemble:
    def test_all_ones(self):
        assert ensemble_score([1, 1, 1], [1, 1, 1]) == 1.0

    def test_all_zeros(self):
        assert ensemble_score([0, 0, 0], [0, 0, 0]) == 0.0

    def test_mixed_components(self):
        assert ensemble_score([0.2, 0.4, 0.6], [0.1, 0.3, 0.5]) == pytest.approx(0.35)

    def test_mismatched_lengths(self):
        with pytest.raises(ValueError):
            ensemble_score([0.1], [0.1, 0.2])


def trained(dataset, seed=0):
    config = RecommenderConfig(d_max=6, batch_size=32)
    table = MaskedEmbeddingTable(dataset.num_users, dataset.num_items, 6)
    recommender = create_recommender(config, table, dataset)
    recommender.reinit(seed)
    recommender.train_epochs(dataset, 2, np.random.default_rng(seed))
    return recommender


class TestEvaluateUsers:
    @pytest.mark.parametrize("split", [Split.VAL, Split.TEST])
    def test_batched_matches_single_list(self, dataset, split):
        recommender = trained(dataset)
        report = evaluate_users(recommender, dataset, split, ks=(5, 10, 20), chunk=7)
        for row, u in enumerate(report.users):
            exclude = dataset.items_of(u, Split.VAL) if split is Split.TEST else None
            ranked = list(recommender.rank_items(int(u), 20, exclude=exclude))
            relevant = set(dataset.items_of(u, split).tolist())
            for j, k in enumerate(report.ks):
                assert report.recall[row, j] == pytest.approx(recall_at_k(ranked, relevant, k))
                assert report.ndcg[row, j] == pytest.approx(ndcg_at_k(ranked, relevant, k))

    @pytest.mark.parametrize("split", [Split.VAL, Split.TEST])
    def test_random_instances_match_single_list(self, split):
        rng = np.random.default_rng(3)
        for _ in range(200):
            dataset, scores = random_instance(rng)
            report = evaluate_users(FixedScores(scores), dataset, split, ks=(1, 5, 10, 20))
            excluded = dataset.matrix(Split.TRAIN).toarray() > 0
            if split is Split.TEST:
                excluded |= dataset.matrix(Split.VAL).toarray() > 0
            for u in range(dataset.num_users):
                relevant = set(dataset.items_of(u, split).tolist())
                if not relevant:
                    assert not report.valid[u]
                    assert np.all(report.recall[u] == 0.0)
                    continue
                ranked = oracle_ranking(scores[u], excluded[u])
                for j, k in enumerate(report.ks):
                    assert report.recall[u, j] == pytest.approx(
                        recall_at_k(ranked, relevant, k), abs=1e-12
                    )
                    assert report.ndcg[u, j] == pytest.approx(
                        ndcg_at_k(ranked, relevant, k), abs=1e-12
                    )

    def test_raising_a_relevant_item_never_lowers_eval_user(self):
        rng = np.random.default_rng(4)
        checked = 0
        for _ in range(300):
            dataset, scores = random_instance(rng, num_users=1)
            relevant = dataset.items_of(0, Split.VAL)
            if len(relevant) == 0:
                continue
            before = eval_user(0, FixedScores(scores), dataset)
            raised = scores.astype(np.float64)
            v = int(rng.choice(relevant))
            raised[0, v] += float(rng.integers(1, 4))
            assert eval_user(0, FixedScores(raised), dataset) >= before - 1e-12
            checked += 1
        assert checked > 100

    def test_summary_keys(self, dataset):
        summary = evaluate_users(trained(dataset), dataset).summary()
        assert set(summary) == {"R@5", "N@5", "R@10", "N@10", "R@20", "N@20"}
        assert all(0.0 <= v <= 1.0 for v in summary.values())

    def test_eval_user_is_ensemble(self, dataset):
        recommender = trained(dataset)
        report = evaluate_users(recommender, dataset)
        assert eval_user(3, recommender, dataset) == pytest.approx(report.ensemble()[3])


class TestItemEval:
    def test_group_mean(self, tiny_dataset):
        scores = np.array([0.2, 0.4, 0.9])
        # item 1 was trained by users 0 and 1
        assert eval_item(1, tiny_dataset, scores) == pytest.approx(0.3)

    def test_single_interactor(self, tiny_dataset):
        scores = np.array([0.2, 0.4, 0.9])
        # item 3 was trained by user 2 only
        assert eval_item(3, tiny_dataset, scores) == pytest.approx(0.9)

    def test_vectorized_matches_group_mean(self, dataset):
        scores = np.random.default_rng(0).random(dataset.num_users)
        vectorized = item_scores(scores, dataset)
        for v in range(dataset.num_items):
            assert vectorized[v] == pytest.approx(eval_item(v, dataset, scores))


class TestQuality:
    def test_equal_is_one(self):
        assert quality_q(0.4, 0.4) == 1.0

    def test_clipped(self):
        assert quality_q(1.2 * 0.5, 0.5) == 1.0

    def test_ratio(self):
        assert quality_q(0.6, 0.8) == pytest.approx(0.75)

    def test_zero_baseline_is_floored(self):
        assert quality_q(0.0, 0.0) == 0.0
        assert quality_q(1e-7, 0.0) == pytest.approx(0.1)

    def test_compute_quality_bounds(self, dataset, flat_baseline):
        snapshot = compute_quality(trained(dataset), dataset, flat_baseline)
        assert snapshot.q.shape == (dataset.num_entities,)
        assert np.all((snapshot.q >= 0.0) & (snapshot.q <= 1.0))
        np.testing.assert_allclose(snapshot.q[:dataset.num_users], snapshot.user_eval)
        assert set(snapshot.metrics()) == {"R@5", "R@20", "N@5", "N@20", "q_mean"}

    def test_baseline_cache(self, dataset, tmp_path):
        baseline = FullEvalBaseline(np.zeros(dataset.num_users), np.full(dataset.num_items, 0.5),
                                    {"backbone": "mf-dot", "d_max": 6})
        path = baseline.save(tmp_path)
        restored = FullEvalBaseline.load(path)
        assert np.all(restored.user_eval == 1e-6)
        np.testing.assert_allclose(restored.item_eval, 0.5)
        assert restored.metadata["d_max"] == 6
