"""
Discrete-event engine: integer millisecond clock, FIFO tie-break on equal
due times, and labelled deterministic random streams.
"""
import hashlib
import heapq
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

logger = logging.getLogger(__name__)

# Simulation time in integer milliseconds since start.
SimTime = int


class CausalityError(ValueError):
    """Raised when an event is scheduled before the current clock."""


@dataclass(order=True)
class Event:
    due: SimTime
    seq: int
    kind: str = field(compare=False)
    callback: Callable[["Event"], None] = field(compare=False, repr=False)
    payload: Any = field(default=None, compare=False)
    cancelled: bool = field(default=False, compare=False)


class EventLoop:
    def __init__(self):
        self._queue: list[Event] = []
        self._pending: dict[int, Event] = {}
        self._seq = 0
        self.now: SimTime = 0
        self.scheduled = 0
        self.dispatched = 0
        self.cancelled = 0
        # called after every dispatched event (transport pumping)
        self.after_dispatch: Optional[Callable[[], None]] = None

    def schedule(self, due: SimTime, kind: str, callback: Callable[[Event], None], payload: Any = None) -> int:
        if due < self.now:
            raise CausalityError(f"event '{kind}' due at {due} ms is before clock {self.now} ms")
        event = Event(due=int(due), seq=self._seq, kind=kind, callback=callback, payload=payload)
        self._seq += 1
        heapq.heappush(self._queue, event)
        self._pending[event.seq] = event
        self.scheduled += 1
        return event.seq

    def schedule_in(self, delay: SimTime, kind: str, callback: Callable[[Event], None], payload: Any = None) -> int:
        return self.schedule(self.now + delay, kind, callback, payload)

    def cancel(self, event_id: int) -> bool:
        event = self._pending.pop(event_id, None)
        if event is None:
            return False
        event.cancelled = True
        self.cancelled += 1
        return True

    @property
    def pending(self) -> int:
        return len(self._pending)

    def run_until(self, end: SimTime) -> None:
        """Dispatch every event with due <= end, in (due, seq) order."""
        while self._queue and self._queue[0].due <= end:
            event = heapq.heappop(self._queue)
            if event.cancelled:
                continue
            del self._pending[event.seq]
            self.now = event.due
            self.dispatched += 1
            event.callback(event)
            if self.after_dispatch is not None:
                self.after_dispatch()
        if end > self.now:
            self.now = end


def rng_stream(label: str, seed: int) -> np.random.Generator:
    """
    Independent generator for a (label, seed) pair.

    The label is hashed into the Philox key together with the seed, so
    different labels select disjoint counter-based streams.
    """
    if not label:
        raise ValueError("rng stream label must be non-empty")
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i:i + 4], "big") for i in range(0, 16, 4)]
    sequence = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *words])
    return np.random.Generator(np.random.Philox(sequence))
