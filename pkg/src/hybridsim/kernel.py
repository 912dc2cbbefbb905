"""Deterministic discrete-event engine with an integer-nanosecond clock.

All timing in the simulator is kept in integer nanoseconds so that the
durations used throughout (45 ms connection intervals, 152.5 ms advertising
intervals, 68 ms optical chunks, 25 s poll slots) are exactly representable
and long runs accumulate no floating-point drift.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass
from enum import Enum

NS_PER_US = 1_000
NS_PER_MS = 1_000_000
NS_PER_SEC = 1_000_000_000

# SimTime is an integer count of nanoseconds since the start of the run.
SimTime = int


def seconds(t: float) -> SimTime:
    """Convert seconds to integer nanoseconds (rounded to nearest)."""
    return round(t * NS_PER_SEC)


def millis(t: float) -> SimTime:
    return round(t * NS_PER_MS)


def to_seconds(t: SimTime) -> float:
    return t / NS_PER_SEC


class EventKind(Enum):
    TRANSMIT_START = "TransmitStart"
    TRANSMIT_END = "TransmitEnd"
    RECEIVE_START = "ReceiveStart"
    RECEIVE_END = "ReceiveEnd"
    SLEEP_SIGNAL = "SleepSignal"
    WAKE_SIGNAL = "WakeSignal"
    BATTERY_LOW = "BatteryLow"
    BATTERY_CHARGED = "BatteryCharged"
    POLL_TICK = "PollTick"
    OPTIMIZER_TICK = "OptimizerTick"
    HARVEST_TICK = "HarvestTick"
    APP_PACKET_READY = "AppPacketReady"
    PERIPHERAL_TICK = "PeripheralTick"
    SAMPLE_TICK = "SampleTick"


@dataclass(frozen=True)
class SimEvent:
    fire_at: SimTime
    target: str
    kind: EventKind
    payload: object = None


class ScheduleInPastError(RuntimeError):
    """An event was scheduled before the current clock; always a logic bug."""


@dataclass
class EventHandle:
    event: SimEvent
    sequence: int
    cancelled: bool = False
    fired: bool = False


@dataclass
class RunSummary:
    events_executed: int
    final_clock: SimTime


class RngStream:
    """Seeded per-node random stream, reproducible across runs and platforms.

    Same (seed, stream_id) always yields the same draw sequence; the stdlib
    Mersenne Twister is stable across CPython versions and platforms.
    """

    def __init__(self, seed: int, stream_id: int):
        self.seed = seed
        self.stream_id = stream_id
        self._rng = random.Random((seed << 20) ^ (stream_id * 0x9E3779B1))

    def uniform(self) -> float:
        return self._rng.random()

    def normal(self, mu: float = 0.0, sigma: float = 1.0) -> float:
        return self._rng.gauss(mu, sigma)


class Engine:
    """Single-threaded event queue with FIFO tie-breaking at equal times.

    Handlers are registered per target id; periodic behaviours reschedule
    themselves. A run owns all of its state, so independent runs (seed or
    parameter sweeps) can execute concurrently without sharing anything.
    """

    def __init__(self, seed: int = 0):
        self.now: SimTime = 0
        self.seed = seed
        self._heap: list[tuple[SimTime, int, EventHandle]] = []
        self._seq = 0
        self._handlers: dict[str, object] = {}
        self._streams: dict[int, RngStream] = {}
        self.events_executed = 0

    def rng_stream(self, stream_id: int) -> RngStream:
        if stream_id not in self._streams:
            self._streams[stream_id] = RngStream(self.seed, stream_id)
        return self._streams[stream_id]

    def register(self, target: str, handler) -> None:
        """handler is a callable (engine, event) -> None."""
        self._handlers[target] = handler

    def schedule(self, event: SimEvent) -> EventHandle:
        if event.fire_at < self.now:
            raise ScheduleInPastError(
                f"event {event.kind.value} at t={event.fire_at} ns scheduled "
                f"while clock is {self.now} ns"
            )
        handle = EventHandle(event=event, sequence=self._seq)
        self._seq += 1
        heapq.heappush(self._heap, (event.fire_at, handle.sequence, handle))
        return handle

    def schedule_at(self, fire_at: SimTime, target: str, kind: EventKind,
                    payload: object = None) -> EventHandle:
        return self.schedule(SimEvent(fire_at, target, kind, payload))

    def cancel(self, handle: EventHandle) -> bool:
        if handle.cancelled or handle.fired:
            return False
        handle.cancelled = True
        return True

    def run_until(self, end: SimTime) -> RunSummary:
        while self._heap and self._heap[0][0] <= end:
            fire_at, _, handle = heapq.heappop(self._heap)
            if handle.cancelled:
                continue
            handle.fired = True
            self.now = fire_at
            self.events_executed += 1
            handler = self._handlers.get(handle.event.target)
            if handler is not None:
                handler(self, handle.event)
        self.now = max(self.now, end)
        return RunSummary(events_executed=self.events_executed,
                          final_clock=self.now)
