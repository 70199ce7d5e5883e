"""
Configuration management system.

A run is described by one `RunConfig`. Files are YAML or JSON (JSON is valid
YAML), every section rejects unknown keys, and validation reports all errors at
once rather than stopping at the first.
"""

import json
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from src.core.errors import ConfigValidationError
from src.utils.logging_utils import get_logger

SCHEMA_VERSION = 1

DEFAULT_LOCATIONS = (
    "ciess.yaml",
    "ciess.json",
    "config/ciess.yaml",
    "config/config.yaml",
)

logger = get_logger("config")


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


# ========== Sections ==========

class DataConfig(StrictModel):
    """Corpus parsing and split"""
    format: Literal["csv", "tsv", "dat"] = "csv"
    ratios: Tuple[float, float, float] = (0.5, 0.25, 0.25)
    min_interactions: int = Field(4, ge=1)

    @field_validator("ratios")
    @classmethod
    def _ratios_sum_to_one(cls, value: Tuple[float, float, float]) -> Tuple[float, float, float]:
        if any(r <= 0 for r in value):
            raise ValueError("every ratio must be positive")
        if abs(sum(value) - 1.0) > 1e-9:
            raise ValueError(f"ratios must sum to 1, got {sum(value)}")
        return value


class RecommenderConfig(StrictModel):
    """Base recommender and its BPR training"""
    backbone: Literal["mf-dot", "lightgcn-lite"] = "mf-dot"
    d_max: int = Field(128, ge=2)
    learning_rate: Optional[float] = Field(None, gt=0)
    l2_weight: float = Field(1e-4, ge=0)
    num_layers: int = Field(2, ge=1, le=3)
    batch_size: int = Field(1024, ge=1)
    init_scale: float = Field(0.1, ge=0)
    max_epochs: int = Field(200, ge=1)
    patience: int = Field(10, ge=1)

    def resolved_learning_rate(self) -> float:
        if self.learning_rate is not None:
            return self.learning_rate
        return 1e-2 if self.backbone == "mf-dot" else 5e-3


class NoiseConfig(StrictModel):
    """Exploration noise added to the actor's raw action"""
    kind: Literal["gaussian", "ou", "uniform"] = "gaussian"
    sigma: float = Field(6.0, ge=0)
    ou_theta: float = Field(0.15, ge=0)
    ou_mu: float = 0.0
    ou_dt: float = Field(1.0, gt=0)


class WalkConfig(StrictModel):
    """Random-walk action exploration"""
    enabled: bool = True
    threshold: int = Field(5, ge=1)
    length: int = Field(5, ge=1)


class TD3Config(StrictModel):
    """Actor-critic optimization constants"""
    gamma: float = Field(0.9, ge=0, le=1)
    tau: float = Field(0.005, ge=0, le=1)
    policy_delay: int = Field(2, ge=1)
    target_noise_std: float = Field(2.0, ge=0)
    target_noise_clip: float = Field(5.0, ge=0)
    batch_size: int = Field(64, ge=1)
    buffer_capacity: int = Field(200_000, ge=1)
    max_updates_per_iteration: int = Field(200, ge=1)
    actor_lr: float = Field(1e-3, gt=0)
    critic_lr: float = Field(1e-3, gt=0)
    hidden_width: int = Field(64, ge=1)


class SearchConfig(StrictModel):
    """Episodes, reward and candidate collection"""
    episodes: int = Field(30, ge=1)
    iterations_per_episode: int = Field(10, ge=1)
    lambda_: float = Field(0.4, ge=0, alias="lambda")
    noise: NoiseConfig = Field(default_factory=NoiseConfig)
    walk: WalkConfig = Field(default_factory=WalkConfig)
    epochs_per_iter: int = Field(5, ge=1)
    top_l: int = Field(5, ge=1)
    target_sparsities: List[float] = Field(default_factory=lambda: [0.80, 0.90, 0.95])
    warm_start: bool = False
    candidate_window: int = Field(0, ge=0)

    @field_validator("target_sparsities")
    @classmethod
    def _sparsities_in_range(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("at least one target sparsity is required")
        bad = [c for c in value if not 0.0 < c < 1.0]
        if bad:
            raise ValueError(f"target sparsities must lie in (0, 1), got {bad}")
        return sorted(set(value))


class RuntimeConfig(StrictModel):
    """Process-level settings"""
    threads: Optional[int] = Field(None, ge=1)
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"
    json_logs: bool = False


class RunConfig(StrictModel):
    """Complete resolved configuration of a run"""
    schema_version: Literal[1] = SCHEMA_VERSION
    seed: int = Field(2023, ge=0)
    data: DataConfig = Field(default_factory=DataConfig)
    recommender: RecommenderConfig = Field(default_factory=RecommenderConfig)
    search: SearchConfig = Field(default_factory=SearchConfig)
    td3: TD3Config = Field(default_factory=TD3Config)
    runtime: RuntimeConfig = Field(default_factory=RuntimeConfig)

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump(by_alias=True, mode="json")


# ========== Loading ==========

def get_default_config() -> Dict[str, Any]:
    """Get default configuration"""
    return RunConfig().to_dict()


def _format_errors(error: ValidationError) -> List[str]:
    messages = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "<root>"
        messages.append(f"{location}: {item['msg']}")
    return messages


def validate_config(config: Dict[str, Any]) -> Tuple[bool, List[str]]:
    """
    Validate configuration and return validation result.

    Returns:
        Tuple of (is_valid, list_of_errors)
    """
    if not isinstance(config, dict):
        return False, ["<root>: configuration must be a mapping"]
    try:
        RunConfig.model_validate(config)
    except ValidationError as e:
        return False, _format_errors(e)
    return True, []


def parse_config(config: Dict[str, Any]) -> RunConfig:
    """Validate a raw mapping into a RunConfig, raising with every error"""
    is_valid, errors = validate_config(config)
    if not is_valid:
        raise ConfigValidationError(errors)
    return RunConfig.model_validate(config)


def read_config_file(config_file: Union[str, Path]) -> Dict[str, Any]:
    path = Path(config_file)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as e:
        raise ConfigValidationError([f"<file>: cannot parse {path}: {e}"])
    return raw if raw is not None else {}


def load_config(config_file: Optional[Union[str, Path]] = None,
                overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Load configuration from a YAML/JSON file.

    Args:
        config_file: Path to config file. If None, uses default locations and
            falls back to built-in defaults.
        overrides: mapping deep-merged over the file before validation

    Returns:
        Validated RunConfig with environment overrides applied
    """
    raw: Dict[str, Any] = {}
    if config_file is not None:
        raw = read_config_file(config_file)
        logger.info("configuration loaded", path=str(config_file))
    else:
        for location in DEFAULT_LOCATIONS:
            if os.path.exists(location):
                raw = read_config_file(location)
                logger.info("configuration loaded", path=location)
                break
        else:
            logger.debug("no config file found, using defaults")

    if overrides:
        raw = merge_configs(raw, overrides)
    raw = load_config_from_env(raw)
    return parse_config(raw)


def save_config(config: Union[RunConfig, Dict[str, Any]], config_file: Union[str, Path]) -> Path:
    """Save configuration as JSON with sorted keys"""
    data = config.to_dict() if isinstance(config, RunConfig) else config
    path = Path(config_file)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.debug("configuration saved", path=str(path))
    return path


def merge_configs(base_config: Dict[str, Any], override_config: Dict[str, Any]) -> Dict[str, Any]:
    """Merge two configuration dictionaries"""
    result = dict(base_config)
    for key, value in override_config.items():
        if key in result and isinstance(result[key], dict) and isinstance(value, dict):
            result[key] = merge_configs(result[key], value)
        else:
            result[key] = value
    return result


# ========== Environment Variable Support ==========

def load_config_from_env(config: Dict[str, Any]) -> Dict[str, Any]:
    """Overlay CIESS_* environment variables (a .env file is honored)"""
    load_dotenv(override=False)
    overrides: Dict[str, Any] = {}

    threads = os.getenv("CIESS_THREADS")
    if threads:
        try:
            overrides.setdefault("runtime", {})["threads"] = int(threads)
        except ValueError:
            raise ConfigValidationError([f"CIESS_THREADS: expected an integer, got {threads!r}"])

    log_level = os.getenv("CIESS_LOG_LEVEL")
    if log_level:
        overrides.setdefault("runtime", {})["log_level"] = log_level.upper()

    return merge_configs(config, overrides) if overrides else config


# ========== Sample ==========

SAMPLE_CONFIG = """# Embedding size search configuration
# JSON files with the same keys are accepted as well.
schema_version: 1
seed: 2023                      # root seed; every random stream derives from it

data:
  format: csv                   # csv, tsv or dat (MovieLens '::' files)
  ratios: [0.5, 0.25, 0.25]     # train / validation / test, per user
  min_interactions: 4           # users and items below this are dropped

recommender:
  backbone: mf-dot              # mf-dot or lightgcn-lite
  d_max: 128                    # full embedding size
  learning_rate: null           # null -> 0.01 (mf-dot) / 0.005 (lightgcn-lite)
  l2_weight: 0.0001
  num_layers: 2                 # lightgcn-lite propagation layers, 1..3
  batch_size: 1024
  init_scale: 0.1
  max_epochs: 200               # cap for training to convergence
  patience: 10                  # early stopping on validation NDCG@20

search:
  episodes: 30
  iterations_per_episode: 10
  lambda: 0.4                   # memory penalty weight; ~0.2 for Yelp-scale data
  epochs_per_iter: 5
  top_l: 5                      # candidates kept per target sparsity
  target_sparsities: [0.80, 0.90, 0.95]
  warm_start: false             # keep recommender weights across iterations
  candidate_window: 0           # >0 also tracks candidates per block of episodes
  noise:
    kind: gaussian              # gaussian, ou or uniform
    sigma: 6.0
  walk:
    enabled: true
    threshold: 5
    length: 5

td3:
  gamma: 0.9
  tau: 0.005
  policy_delay: 2
  target_noise_std: 2.0
  target_noise_clip: 5.0
  batch_size: 64
  buffer_capacity: 200000
  max_updates_per_iteration: 200
  actor_lr: 0.001
  critic_lr: 0.001
  hidden_width: 64

runtime:
  threads: null                 # null -> machine parallelism; CIESS_THREADS overrides
  log_level: INFO
  json_logs: false
"""


def create_sample_config(filename: Union[str, Path] = "ciess.yaml") -> Path:
    """Create a sample configuration file"""
    path = Path(filename)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(SAMPLE_CONFIG, encoding="utf-8")
    return path
