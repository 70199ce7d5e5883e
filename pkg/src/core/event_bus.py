"""
Event bus for search progress notifications.

The search driver publishes what happened; trace writers, the candidate log and
the console table subscribe. Dispatch is synchronous so that subscribers see
events in exactly the order the driver produced them.
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List

from src.utils.logging_utils import get_logger
from src.utils.time_utils import get_utc_timestamp

ITERATION_COMPLETED = "iteration_completed"
ITERATION_ABORTED = "iteration_aborted"
EPISODE_COMPLETED = "episode_completed"
CANDIDATE_ADMITTED = "candidate_admitted"


@dataclass
class Event:
    """Event data structure"""
    type: str
    data: Any
    source: str
    timestamp: float = field(default_factory=get_utc_timestamp)


class EventBus:
    """
    Central event bus for component communication.
    """

    def __init__(self):
        self.logger = get_logger(self.__class__.__name__)
        self._handlers: Dict[str, List[Callable[[Event], None]]] = {}

    def subscribe(self, event_type: str, handler: Callable[[Event], None]) -> None:
        """Subscribe to an event type"""
        self._handlers.setdefault(event_type, []).append(handler)
        self.logger.debug("handler subscribed", event_type=event_type)

    def unsubscribe(self, event_type: str, handler: Callable[[Event], None]) -> None:
        """Unsubscribe from an event type"""
        handlers = self._handlers.get(event_type, [])
        if handler in handlers:
            handlers.remove(handler)
            self.logger.debug("handler unsubscribed", event_type=event_type)

    def publish(self, event_type: str, data: Any, source: str = "unknown") -> None:
        """
        Deliver an event to every handler of its type.

        Handler failures are logged and do not stop delivery to the others.
        """
        event = Event(type=event_type, data=data, source=source)
        for handler in list(self._handlers.get(event_type, [])):
            try:
                handler(event)
            except Exception as e:
                self.logger.error("event handler failed", event_type=event_type, error=str(e))
