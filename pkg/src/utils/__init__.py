from .logging_utils import configure_logging, get_logger
from .random_utils import RandomStreams

__all__ = ["configure_logging", "get_logger", "RandomStreams"]
