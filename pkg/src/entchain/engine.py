"""Deterministic discrete-event core.

A virtual clock, a time-ordered event queue with stable FIFO tie-breaking by
insertion sequence, and named random substreams derived from a master seed.
One engine per run; strictly single-threaded within a run.
"""

from __future__ import annotations

import hashlib
import heapq
import math
import random
from typing import Callable, Optional


class CausalityError(Exception):
    """An event was scheduled before the current virtual time."""


class EventHandle:
    """Handle returned by :meth:`EventEngine.schedule`; supports cancel()."""

    __slots__ = ("time", "sequence", "kind", "fn", "cancelled")

    def __init__(self, time: float, sequence: int, kind: str, fn: Callable[[], None]):
        self.time = time
        self.sequence = sequence
        self.kind = kind
        self.fn = fn
        self.cancelled = False

    def cancel(self) -> None:
        self.cancelled = True

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        flag = " cancelled" if self.cancelled else ""
        return f"<event {self.kind} t={self.time:.9g} seq={self.sequence}{flag}>"


class EventEngine:
    """Virtual clock plus priority queue of (time, sequence)-ordered events."""

    def __init__(self):
        self.now = 0.0
        self._queue: list[tuple[float, int, EventHandle]] = []
        self._sequence = 0
        self.dispatched = 0

    def schedule(self, t: float, kind: str, fn: Callable[[], None]) -> EventHandle:
        """Enqueue ``fn`` to run at virtual time ``t`` (>= now)."""
        if t < self.now:
            raise CausalityError(f"cannot schedule {kind} at {t} < now {self.now}")
        handle = EventHandle(t, self._sequence, kind, fn)
        self._sequence += 1
        heapq.heappush(self._queue, (t, handle.sequence, handle))
        return handle

    def schedule_after(self, delay: float, kind: str, fn: Callable[[], None]) -> EventHandle:
        return self.schedule(self.now + delay, kind, fn)

    def peek_time(self) -> Optional[float]:
        while self._queue and self._queue[0][2].cancelled:
            heapq.heappop(self._queue)
        return self._queue[0][0] if self._queue else None

    def run_until(self, stop: Callable[[], bool],
                  horizon: Optional[float] = None) -> float:
        """Dispatch events in (time, sequence) order until ``stop`` holds.

        Also stops when the queue drains or when the next event lies beyond
        ``horizon`` (the clock is then advanced to the horizon). Returns the
        final virtual time; callers inspect their own state to distinguish a
        satisfied stop condition from starvation.
        """
        while not stop():
            t = self.peek_time()
            if t is None:
                break
            if horizon is not None and t > horizon:
                self.now = horizon
                break
            _, _, handle = heapq.heappop(self._queue)
            self.now = t
            self.dispatched += 1
            handle.fn()
        return self.now


def derive_seed(master_seed: int, label: str) -> int:
    """Stable 63-bit seed for a named substream of ``master_seed``."""
    digest = hashlib.sha256(f"{master_seed}/{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


class RandomStreams:
    """Named, independently seeded random substreams.

    Identical (seed, label) pairs produce identical draw sequences, and
    streams are independent by label, so toggling one mechanism (link
    generation, swap outcomes, purification outcomes) does not perturb the
    draws of the others.
    """

    def __init__(self, master_seed: int):
        self.master_seed = master_seed
        self._streams: dict[str, random.Random] = {}

    def get(self, label: str) -> random.Random:
        stream = self._streams.get(label)
        if stream is None:
            stream = random.Random(derive_seed(self.master_seed, label))
            self._streams[label] = stream
        return stream


def geometric_failures(rng: random.Random, p: float) -> int:
    """Number of Bernoulli(p) failures before the first success."""
    if p >= 1.0:
        return 0
    u = 1.0 - rng.random()  # in (0, 1]
    return int(math.log(u) / math.log(1.0 - p))
