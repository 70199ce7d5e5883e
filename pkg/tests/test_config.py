import json

import pytest
import yaml

from src.config.settings import (
    SAMPLE_CONFIG,
    RunConfig,
    create_sample_config,
    get_default_config,
    load_config,
    merge_configs,
    parse_config,
    read_config_file,
    save_config,
    validate_config,
)
from src.core.errors import ConfigValidationError


class TestDefaults:
    def test_defaults(self):
        config = RunConfig()
        assert config.seed == 2023
        assert config.recommender.d_max == 128
        assert config.search.lambda_ == 0.4
        assert config.search.target_sparsities == [0.8, 0.9, 0.95]
        assert config.search.noise.sigma == 6.0
        assert config.search.walk.threshold == 5
        assert config.td3.gamma == 0.9

    @pytest.mark.parametrize("backbone,lr", [("mf-dot", 1e-2), ("lightgcn-lite", 5e-3)])
    def test_learning_rate_per_backbone(self, backbone, lr):
        config = parse_config({"recommender": {"backbone": backbone}})
        assert config.recommender.resolved_learning_rate() == lr

    def test_explicit_learning_rate(self):
        config = parse_config({"recommender": {"learning_rate": 0.05}})
        assert config.recommender.resolved_learning_rate() == 0.05

    def test_default_dict_uses_lambda_key(self):
        search = get_default_config()["search"]
        assert "lambda" in search and "lambda_" not in search

    def test_sample_config_is_valid(self):
        is_valid, errors = validate_config(yaml.safe_load(SAMPLE_CONFIG))
        assert is_valid, errors


class TestValidation:
    def test_every_error_is_reported(self):
        is_valid, errors = validate_config({
            "recommender": {"d_max": 1, "backbone": "svd"},
            "search": {"top_l": 0},
            "bogus": True,
        })
        assert not is_valid
        joined = "\n".join(errors)
        assert "recommender.d_max" in joined
        assert "recommender.backbone" in joined
        assert "search.top_l" in joined
        assert "bogus" in joined

    def test_lambda_alias(self):
        assert parse_config({"search": {"lambda": 0.2}}).search.lambda_ == 0.2

    def test_sparsities_sorted_and_unique(self):
        config = parse_config({"search": {"target_sparsities": [0.9, 0.8, 0.9]}})
        assert config.search.target_sparsities == [0.8, 0.9]

    @pytest.mark.parametrize("values", [[1.0], [0.0], []])
    def test_bad_sparsities(self, values):
        with pytest.raises(ConfigValidationError):
            parse_config({"search": {"target_sparsities": values}})

    def test_ratios_must_sum_to_one(self):
        with pytest.raises(ConfigValidationError) as excinfo:
            parse_config({"data": {"ratios": [0.5, 0.3, 0.3]}})
        assert any("data.ratios" in e for e in excinfo.value.errors)

    def test_non_mapping(self):
        assert validate_config(["a"])[0] is False

    def test_schema_version(self):
        with pytest.raises(ConfigValidationError):
            parse_config({"schema_version": 2})


class TestLoading:
    def test_yaml_file_with_overrides(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("seed: 3\nrecommender:\n  d_max: 16\n")
        config = load_config(path, {"recommender": {"batch_size": 8}})
        assert config.seed == 3
        assert config.recommender.d_max == 16
        assert config.recommender.batch_size == 8

    def test_default_location(self, tmp_path):
        (tmp_path / "ciess.yaml").write_text("seed: 99\n")
        assert load_config().seed == 99

    def test_no_file_gives_defaults(self):
        assert load_config().seed == 2023

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_config(tmp_path / "absent.yaml")

    def test_unparseable_file(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("seed: [1, 2\n")
        with pytest.raises(ConfigValidationError):
            read_config_file(path)

    def test_environment_wins_over_overrides(self, monkeypatch):
        monkeypatch.setenv("CIESS_THREADS", "3")
        monkeypatch.setenv("CIESS_LOG_LEVEL", "debug")
        config = load_config(overrides={"runtime": {"threads": 8}})
        assert config.runtime.threads == 3
        assert config.runtime.log_level == "DEBUG"

    def test_invalid_environment(self, monkeypatch):
        monkeypatch.setenv("CIESS_THREADS", "many")
        with pytest.raises(ConfigValidationError):
            load_config()

    def test_saved_config_reloads(self, tmp_path):
        config = parse_config({"seed": 5, "search": {"lambda": 0.25}})
        path = save_config(config, tmp_path / "config.json")
        assert json.loads(path.read_text())["search"]["lambda"] == 0.25
        assert load_config(path) == config

    def test_create_sample_config(self, tmp_path):
        path = create_sample_config(tmp_path / "sample.yaml")
        assert load_config(path) == RunConfig()


def test_merge_is_deep():
    merged = merge_configs({"a": {"b": 1, "c": 2}, "d": 1}, {"a": {"b": 5}})
    assert merged == {"a": {"b": 5, "c": 2}, "d": 1}
