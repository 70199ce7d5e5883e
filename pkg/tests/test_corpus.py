import json

import numpy as np
import pytest
from scipy.stats import chisquare

from src.core.errors import DataParseError, SamplingError
from src.data.corpus import (
    dataset_stats,
    load_interactions,
    sample_bpr_batch,
    sample_bpr_triple,
    split,
)
from src.data.snapshot import load_snapshot, save_snapshot, snapshot_digest
from src.models.interactions import InteractionDataset, Split

from .conftest import planted_pairs, write_interactions


def random_pairs(rng, num_users=30, num_items=20, density=0.45):
    present = rng.random((num_users, num_items)) < density
    return [(f"u{u:02d}", f"i{v:02d}") for u, v in zip(*np.nonzero(present))]


class TestLoadInteractions:
    def test_csv_with_header(self, tmp_path):
        path = write_interactions(tmp_path / "ratings.csv", [("a", "x"), ("b", "y")])
        assert load_interactions(path, "csv") == [("a", "x"), ("b", "y")]

    def test_dat_layout(self, tmp_path):
        path = tmp_path / "ratings.dat"
        path.write_text("1::10::5::978300760\n1::11::3::978302109\n2::10::4::978301968\n")
        assert load_interactions(path, "dat") == [("1", "10"), ("1", "11"), ("2", "10")]

    def test_tsv_without_header_keeps_duplicates(self, tmp_path):
        path = write_interactions(tmp_path / "r.tsv", [("1", "2"), ("1", "2")], sep="\t", header=False)
        assert load_interactions(path, "tsv") == [("1", "2"), ("1", "2")]

    def test_short_row_reports_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,2\n3\n")
        with pytest.raises(DataParseError, match="row 2"):
            load_interactions(path, "csv")

    def test_invalid_utf8_reports_row(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_bytes(b"user_id,item_id\nu1,i1\nu\xff1,i1\n")
        with pytest.raises(DataParseError, match="row 3"):
            load_interactions(path, "csv")

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_interactions(tmp_path / "nope.csv")

    def test_unknown_format(self, tmp_path):
        path = write_interactions(tmp_path / "r.csv", [("a", "b")])
        with pytest.raises(DataParseError):
            load_interactions(path, "parquet")


class TestSplit:
    def test_every_user_in_every_split(self, dataset):
        for which in Split:
            users = np.unique(dataset.split(which)[:, 0])
            assert len(users) == dataset.num_users

    def test_every_item_in_train_and_val(self, dataset):
        assert np.all(dataset.item_popularity > 0)
        assert len(np.unique(dataset.val[:, 1])) == dataset.num_items

    def test_split_sizes_follow_ratios(self, dataset):
        # each user has 8 interactions: 4 train, 2 val, 2 test before item repair,
        # and each repair pass moves at most one interaction per item
        total = len(dataset.train) + len(dataset.val) + len(dataset.test)
        assert total == 8 * dataset.num_users
        moves = 2 * dataset.num_items
        assert abs(len(dataset.train) - 4 * dataset.num_users) <= moves
        assert abs(len(dataset.val) - 2 * dataset.num_users) <= moves
        assert abs(len(dataset.test) - 2 * dataset.num_users) <= moves

    def test_splits_disjoint(self, dataset):
        keys = [set(map(tuple, dataset.split(which).tolist())) for which in Split]
        assert not keys[0] & keys[1]
        assert not keys[0] & keys[2]
        assert not keys[1] & keys[2]

    def test_same_seed_same_split(self):
        a = split(planted_pairs(), seed=3)
        b = split(planted_pairs(), seed=3)
        np.testing.assert_array_equal(a.train, b.train)
        np.testing.assert_array_equal(a.test, b.test)

    def test_duplicates_collapse(self):
        pairs = planted_pairs() + planted_pairs()[:10]
        dataset = split(pairs, seed=1)
        total = len(dataset.train) + len(dataset.val) + len(dataset.test)
        assert total == len(planted_pairs())

    def test_sparse_entities_filtered(self):
        pairs = planted_pairs() + [("lonely", "i000"), ("lonely", "i001")]
        dataset = split(pairs, seed=1)
        assert "lonely" not in dataset.user_tokens

    def test_random_corpora_keep_split_guarantees(self):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            pairs = random_pairs(rng)
            dataset = split(pairs, seed=seed)

            for which in Split:
                assert len(np.unique(dataset.split(which)[:, 0])) == dataset.num_users
            assert np.all(dataset.item_popularity > 0)
            assert len(np.unique(dataset.val[:, 1])) == dataset.num_items
            keys = [set(map(tuple, dataset.split(which).tolist())) for which in Split]
            assert not keys[0] & keys[1] and not keys[0] & keys[2] and not keys[1] & keys[2]

    def test_tokens_map_one_to_one(self):
        rng = np.random.default_rng(11)
        pairs = random_pairs(rng)
        dataset = split(pairs, seed=4)
        assert len(set(dataset.user_tokens)) == dataset.num_users
        assert len(set(dataset.item_tokens)) == dataset.num_items
        assert dataset.user_tokens == sorted(dataset.user_tokens)

        rebuilt = {
            (dataset.user_tokens[u], dataset.item_tokens[v])
            for which in Split
            for u, v in dataset.split(which)
        }
        users, items = set(dataset.user_tokens), set(dataset.item_tokens)
        surviving = {(u, v) for u, v in pairs if u in users and v in items}
        assert rebuilt == surviving

    def test_popularity_counts_train_pairs(self):
        dataset = split(random_pairs(np.random.default_rng(5)), seed=2)
        expected = np.zeros(dataset.num_entities, dtype=np.int64)
        for u, v in dataset.train.tolist():
            expected[u] += 1
            expected[dataset.num_users + v] += 1
        np.testing.assert_array_equal(dataset.popularity, expected)

    def test_nothing_survives(self):
        with pytest.raises(DataParseError):
            split([("a", "b"), ("c", "d")], min_interactions=4)

    def test_bad_ratios(self):
        with pytest.raises(ValueError):
            split(planted_pairs(), ratios=(0.5, 0.5, 0.5))


class TestBPRSampling:
    def test_negative_is_never_a_train_item(self, dataset):
        rng = np.random.default_rng(0)
        users, positives, negatives = sample_bpr_batch(dataset, 500, rng)
        assert dataset.is_train_pair(users, positives).all()
        assert not dataset.is_train_pair(users, negatives).any()

    def test_single_triple(self, tiny_dataset):
        rng = np.random.default_rng(1)
        for _ in range(50):
            u, pos, neg = sample_bpr_triple(tiny_dataset, rng)
            assert pos in tiny_dataset.items_of(u)
            assert neg not in tiny_dataset.items_of(u)

    def test_negatives_uniform_over_non_train_items(self, dataset):
        users, _, negatives = sample_bpr_batch(dataset, 100_000, np.random.default_rng(2))
        allowed = np.setdiff1d(np.arange(dataset.num_items), dataset.items_of(0))
        picked = negatives[users == 0]
        counts = np.array([(picked == v).sum() for v in allowed])
        assert counts.sum() == len(picked)
        _, p_value = chisquare(counts)
        assert p_value > 0.001

    def test_single_triple_negatives_uniform(self, dataset):
        rng = np.random.default_rng(3)
        allowed = np.setdiff1d(np.arange(dataset.num_items), dataset.items_of(0))
        picked = []
        while len(picked) < 1200:
            u, _, neg = sample_bpr_triple(dataset, rng)
            if u == 0:
                picked.append(neg)
        counts = np.array([picked.count(v) for v in allowed])
        assert counts.sum() == len(picked)
        _, p_value = chisquare(counts)
        assert p_value > 0.001

    def test_saturated_users_raise(self):
        full = InteractionDataset(
            num_users=1, num_items=2, train=np.array([[0, 0], [0, 1]]),
            val=np.zeros((0, 2)), test=np.zeros((0, 2)),
        )
        with pytest.raises(SamplingError):
            sample_bpr_batch(full, 4, np.random.default_rng(0))


class TestSnapshot:
    def test_snapshot_restores_dataset(self, dataset, tmp_path):
        path = save_snapshot(dataset, tmp_path / "dataset.snapshot")
        restored = load_snapshot(path)
        assert restored.num_users == dataset.num_users
        assert restored.user_tokens == dataset.user_tokens
        np.testing.assert_array_equal(restored.val, dataset.val)

    def test_snapshot_bytes_are_stable(self, dataset, tmp_path):
        a = save_snapshot(dataset, tmp_path / "a.snapshot")
        b = save_snapshot(split(planted_pairs(), seed=7), tmp_path / "b.snapshot")
        assert snapshot_digest(a) == snapshot_digest(b)

    def test_foreign_file_rejected(self, tmp_path):
        path = tmp_path / "x.snapshot"
        path.write_text(json.dumps({"format": "other"}))
        with pytest.raises(DataParseError):
            load_snapshot(path)


def test_dataset_stats(dataset):
    stats = dataset_stats(dataset)
    assert stats["num_users"] == 24
    assert stats["num_items"] == 16
    assert stats["split_sizes"]["train"] == len(dataset.train)
    assert sum(stats["popularity_histogram"]["users"].values()) == dataset.num_users
