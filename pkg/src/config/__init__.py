from .settings import (
    DataConfig,
    NoiseConfig,
    RecommenderConfig,
    RunConfig,
    RuntimeConfig,
    SearchConfig,
    TD3Config,
    WalkConfig,
    create_sample_config,
    get_default_config,
    load_config,
    merge_configs,
    parse_config,
    save_config,
    validate_config,
)

__all__ = [
    "DataConfig", "NoiseConfig", "RecommenderConfig", "RunConfig", "RuntimeConfig",
    "SearchConfig", "TD3Config", "WalkConfig",
    "create_sample_config", "get_default_config", "load_config", "merge_configs",
    "parse_config", "save_config", "validate_config",
]
