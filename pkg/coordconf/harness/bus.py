"""In-process event bus with a bounded queue.

In deterministic mode the runner drains the bus itself; in threaded mode
a dispatcher thread delivers each event to every subscriber in order.
Subscribers must not block.
"""

import logging
import queue
import threading
from typing import Callable, Optional

from coordconf.events import Event

logger = logging.getLogger(__name__)

Subscriber = Callable[[Event], None]


class EventBus:
    """Bounded FIFO of events plus a subscriber list."""

    def __init__(self, capacity: int = 64, publish_timeout: float = 1.0):
        """Initialize the bus.

        Args:
            capacity: Maximum number of undelivered events
            publish_timeout: How long publish waits for room before dropping
        """
        self._queue: queue.Queue[Event] = queue.Queue(maxsize=capacity)
        self._subscribers: list[Subscriber] = []
        self._publish_timeout = publish_timeout
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None
        self.dropped = 0

    def subscribe(self, subscriber: Subscriber) -> None:
        self._subscribers.append(subscriber)

    def publish(self, event: Event) -> bool:
        """Queue an event for delivery.

        A subscriber publishing from the dispatcher thread never waits.

        Returns:
            False if the bus stayed full and the event was dropped
        """
        try:
            if threading.current_thread() is self._thread:
                self._queue.put_nowait(event)
            else:
                self._queue.put(event, timeout=self._publish_timeout)
            return True
        except queue.Full:
            self.dropped += 1
            logger.error(f"Event bus full, dropped {event}")
            return False

    def drain(self) -> list[Event]:
        """Take every queued event without delivering it."""
        events = []
        while True:
            try:
                events.append(self._queue.get_nowait())
            except queue.Empty:
                return events

    @property
    def pending(self) -> int:
        return self._queue.qsize()

    def deliver(self, event: Event) -> None:
        for subscriber in self._subscribers:
            try:
                subscriber(event)
            except Exception as e:
                logger.error(f"Subscriber failed on {event}: {e}")

    def start(self) -> None:
        """Deliver events from a dispatcher thread."""
        self._stop.clear()
        self._thread = threading.Thread(target=self._run, name="event-bus", daemon=True)
        self._thread.start()

    def stop(self, timeout: float = 1.0) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout)
            self._thread = None

    def _run(self) -> None:
        while not self._stop.is_set():
            try:
                event = self._queue.get(timeout=0.05)
            except queue.Empty:
                continue
            self.deliver(event)
