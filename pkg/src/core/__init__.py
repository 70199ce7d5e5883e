"""
Core system components: errors and the event bus.
"""

from .errors import (
    ArtifactExistsError,
    CIESSError,
    ConfigValidationError,
    DataParseError,
    InputError,
    MaskValidationError,
    NoCandidatesError,
    NonFiniteError,
    SamplingError,
    ShapeError,
    StateError,
)
from .event_bus import Event, EventBus

__all__ = [
    "ArtifactExistsError", "CIESSError", "ConfigValidationError", "DataParseError", "InputError",
    "MaskValidationError", "NoCandidatesError", "NonFiniteError", "SamplingError", "ShapeError",
    "StateError", "Event", "EventBus",
]
