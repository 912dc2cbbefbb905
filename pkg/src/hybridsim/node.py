"""Runtime behaviour of one simulated end node.

A node owns its interface state machines, its energy buffer, and its traffic
pacing. Consumption is integrated piecewise-constant: the node is always in
exactly one draw phase (sleep, idle, wake-up, a peripheral operation, or a
transmission burst) whose current comes from the scenario's calibration
values, and every phase change settles the elapsed energy first.
"""

from __future__ import annotations

from dataclasses import dataclass

from .actions import Action, Mode, Modality
from .energy import EnergyBuffer
from .kernel import Engine, EventKind, SimTime, NS_PER_SEC
from .linklayer import BleState, OwcState, fsm_dispatch
from .metrics import NodeMetrics


class ProtocolViolation(RuntimeError):
    """A transmission was attempted from a powered-down interface."""


@dataclass(frozen=True)
class LinkPlan:
    """Precomputed per-modality transmission shape for this scenario."""

    airtime_ns: int
    interval_ns: dict[Mode, int]
    tx_current_ma: float
    success_prob: float
    snr_db: float
    rate_kbps: dict[Mode, float]


@dataclass(frozen=True)
class PhaseStep:
    name: str
    current_ma: float
    duration_ns: int


@dataclass(frozen=True)
class NodeRuntimeConfig:
    supply_voltage: float
    idle_current_ma: float
    sleep_current_ma: float
    wake_current_ma: float
    wake_duration_ns: int
    advertising_current_ma: float
    packet_bytes: int
    links: dict[Modality, LinkPlan]
    peripheral_steps: tuple[PhaseStep, ...]
    peripheral_period_ns: int
    inter_transmission_sleep: bool
    critical_fraction: float
    poll_command_energy_j: float = 0.0  # downlink command reception per poll


class SimNode:
    def __init__(self, name: str, cfg: NodeRuntimeConfig, buffer: EnergyBuffer,
                 engine: Engine, metrics: NodeMetrics, rng_stream,
                 initial_modality: Modality):
        self.name = name
        self.cfg = cfg
        self.buffer = buffer
        self.engine = engine
        self.metrics = metrics
        self.rng = rng_stream
        self.mode = Mode.PERFORMANCE
        self.modality = initial_modality
        self.owc_state = OwcState.IDLE
        self.ble_state = BleState.IDLE
        self.awake = True
        self.in_slot = False
        self.slot_end_ns: SimTime = 0
        self.tx_in_flight = False
        self._restream_after_tx = False
        self._tx_started_ns: SimTime = 0
        self._phase_ma = cfg.idle_current_ma
        self._phase_since: SimTime = 0
        self._eligible_since: SimTime | None = None
        self._stream_id = 0
        self._chain_id = 0
        self._pending_packet = None
        self.evaluate_cb = None  # set by the runner; called on battery edges
        self.ewma_baseline_db: float | None = None
        metrics.initial_j = buffer.initial_j
        metrics.remaining_j = buffer.remaining_j

    # -- energy phase integration ------------------------------------------

    def sync(self, now: SimTime) -> None:
        """Settle consumption of the current phase up to `now`."""
        elapsed = now - self._phase_since
        if elapsed <= 0:
            return
        self._phase_since = now
        joules = self._phase_ma * 1e-3 * self.cfg.supply_voltage * elapsed / NS_PER_SEC
        edge = self.buffer.consume(joules)
        if edge is EventKind.BATTERY_LOW:
            self._on_battery_low(now)

    def set_phase(self, current_ma: float, now: SimTime) -> None:
        self.sync(now)
        self._phase_ma = current_ma

    # -- battery edges ------------------------------------------------------

    def _on_battery_low(self, now: SimTime) -> None:
        self.owc_state = fsm_dispatch(self.owc_state, EventKind.BATTERY_LOW)
        self.ble_state = fsm_dispatch(self.ble_state, EventKind.BATTERY_LOW)
        if self.tx_in_flight:
            self.tx_in_flight = False
            self._restream_after_tx = False
            self.metrics.packets_lost += 1
            self.metrics.tx_intervals.append((self._tx_started_ns, now))
        if self.mode is not Mode.SLEEP:
            self.metrics.sleep_entries += 1
        self.mode = Mode.SLEEP
        self.awake = False
        self._stream_id += 1
        self._chain_id += 1
        self._close_eligible(now)
        self._phase_ma = self.cfg.sleep_current_ma
        if self.evaluate_cb is not None:
            self.evaluate_cb(self, now)

    def on_battery_charged(self, now: SimTime) -> None:
        self.owc_state = fsm_dispatch(self.owc_state, EventKind.BATTERY_CHARGED)
        self.ble_state = fsm_dispatch(self.ble_state, EventKind.BATTERY_CHARGED)
        if self.evaluate_cb is not None:
            self.evaluate_cb(self, now)

    # -- transmit-eligible accounting ----------------------------------------

    def _open_eligible(self, now: SimTime) -> None:
        if self._eligible_since is None and self.in_slot and self.mode is not Mode.SLEEP:
            self._eligible_since = now

    def _close_eligible(self, now: SimTime) -> None:
        if self._eligible_since is not None:
            self.metrics.eligible_s += (now - self._eligible_since) / NS_PER_SEC
            self._eligible_since = None

    # -- MAC-level sleep/wake -------------------------------------------------

    def mac_sleep(self, now: SimTime) -> None:
        if self.awake:
            self.owc_state = fsm_dispatch(self.owc_state, EventKind.SLEEP_SIGNAL)
            self.ble_state = fsm_dispatch(self.ble_state, EventKind.SLEEP_SIGNAL)
            self.awake = False
        self.set_phase(self.cfg.sleep_current_ma, now)

    def mac_wake(self, now: SimTime) -> None:
        if not self.awake:
            self.owc_state = fsm_dispatch(self.owc_state, EventKind.WAKE_SIGNAL)
            self.ble_state = fsm_dispatch(self.ble_state, EventKind.WAKE_SIGNAL)
            self.awake = True

    # -- polling slots ---------------------------------------------------------

    def enter_slot(self, now: SimTime, slot_end: SimTime) -> None:
        self.sync(now)
        self.in_slot = True
        self.slot_end_ns = slot_end
        self._chain_id += 1
        if self.mode is Mode.SLEEP:
            return  # stays parked; battery-charged may still revive it mid-slot
        # Receiving the poll command costs one downlink reception burst.
        edge = self.buffer.consume(self.cfg.poll_command_energy_j)
        if edge is EventKind.BATTERY_LOW:
            self._on_battery_low(now)
            return
        self._open_eligible(now)
        if not self.awake:
            self.mac_wake(now)
            self._start_slot_chain(now)
        else:
            self._start_streaming(now)

    def exit_slot(self, now: SimTime) -> None:
        self.sync(now)
        self.in_slot = False
        self._close_eligible(now)
        self._stream_id += 1
        self._chain_id += 1
        if self._pending_packet is not None:
            self.engine.cancel(self._pending_packet)
            self._pending_packet = None
        if self.tx_in_flight:
            return  # let the burst finish; the end handler settles the phase
        if self.mode is Mode.SLEEP:
            self.set_phase(self.cfg.sleep_current_ma, now)
        elif self.cfg.inter_transmission_sleep:
            self.mac_sleep(now)
        else:
            self.set_phase(self.cfg.idle_current_ma, now)

    def _start_slot_chain(self, now: SimTime) -> None:
        """Wake-up burst, then the peripheral cycle (performance mode only),
        then streaming: the operation sequence of one duty cycle."""
        steps = [PhaseStep("wake", self.cfg.wake_current_ma, self.cfg.wake_duration_ns)]
        if self.mode is Mode.PERFORMANCE:
            steps.extend(self.cfg.peripheral_steps)
        self._run_chain(now, steps, terminal="stream")

    def _run_chain(self, now: SimTime, steps: list[PhaseStep], terminal: str) -> None:
        self._chain_id += 1
        self._advance_chain(now, list(steps), terminal, self._chain_id)

    def _advance_chain(self, now: SimTime, steps: list[PhaseStep], terminal: str,
                       chain_id: int) -> None:
        if chain_id != self._chain_id:
            return  # superseded by a reconfiguration
        if steps:
            step = steps[0]
            self.set_phase(step.current_ma, now)
            if self.mode is Mode.SLEEP:  # battery died settling the phase
                return
            self.engine.schedule_at(
                now + step.duration_ns, self.name, EventKind.PERIPHERAL_TICK,
                payload=(steps[1:], terminal, chain_id))
            return
        if terminal == "stream" and self.in_slot and self.mode is not Mode.SLEEP:
            self._start_streaming(now)
        else:
            self.set_phase(self.cfg.idle_current_ma, now)

    def on_chain_step(self, now: SimTime, payload) -> None:
        steps, terminal, chain_id = payload
        self.sync(now)
        if chain_id != self._chain_id:
            return
        # A mode change mid-chain skips the remaining peripheral operations.
        if self.mode is not Mode.PERFORMANCE:
            steps = [s for s in steps if s.name == "wake"]
        self._advance_chain(now, steps, terminal, chain_id)

    def on_peripheral_cycle(self, now: SimTime) -> None:
        """Periodic sensing/display/localization while idling between slots
        (only meaningful without inter-transmission sleep)."""
        self.sync(now)
        if (not self.awake or self.in_slot or self.tx_in_flight
                or self.mode is not Mode.PERFORMANCE):
            return
        self._run_chain(now, list(self.cfg.peripheral_steps), terminal="idle")

    # -- traffic ----------------------------------------------------------------

    def _start_streaming(self, now: SimTime) -> None:
        self._stream_id += 1
        if self.tx_in_flight:
            self._restream_after_tx = True
            return
        self.set_phase(self.cfg.idle_current_ma, now)
        if self.mode is Mode.SLEEP:
            return
        # The first packet is ready once a full generation period has
        # accumulated; sending at the stream start would overshoot the rate.
        ready_at = now + self.cfg.links[self.modality].interval_ns[self.mode]
        self._pending_packet = self.engine.schedule_at(
            ready_at, self.name, EventKind.APP_PACKET_READY, payload=self._stream_id)

    def on_packet_ready(self, now: SimTime, stream_id: int) -> None:
        self.sync(now)
        if stream_id != self._stream_id:
            return
        if not (self.in_slot and self.awake and self.mode is not Mode.SLEEP):
            return
        link = self.cfg.links[self.modality]
        if now + link.airtime_ns > self.slot_end_ns:
            return  # not enough slot left for a whole burst
        self.transmit_packet(now)
        self._pending_packet = self.engine.schedule_at(
            now + link.interval_ns[self.mode], self.name,
            EventKind.APP_PACKET_READY, payload=self._stream_id)

    def transmit_packet(self, now: SimTime) -> None:
        """Drive one burst through the interface FSM; success is drawn against
        the link's packet success probability at TRANSMIT_END."""
        if self.modality is Modality.OWC:
            if self.owc_state in (OwcState.OFF, OwcState.SLEEP):
                raise ProtocolViolation(
                    f"{self.name}: optical TX from {self.owc_state.value}")
            self.owc_state = fsm_dispatch(self.owc_state, EventKind.TRANSMIT_START)
        else:
            if self.ble_state is BleState.OFF:
                raise ProtocolViolation(
                    f"{self.name}: radio TX from {self.ble_state.value}")
            self.ble_state = fsm_dispatch(self.ble_state, EventKind.TRANSMIT_START)
        link = self.cfg.links[self.modality]
        self.tx_in_flight = True
        self._tx_started_ns = now
        self.set_phase(link.tx_current_ma, now)
        if not self.tx_in_flight:
            return  # battery collapsed as the burst started
        self.engine.schedule_at(now + link.airtime_ns, self.name,
                                EventKind.TRANSMIT_END, payload=self.modality)

    def on_transmit_end(self, now: SimTime, modality: Modality) -> None:
        self.sync(now)
        if not self.tx_in_flight:
            return
        self.tx_in_flight = False
        self.metrics.tx_intervals.append((self._tx_started_ns, now))
        if modality is Modality.OWC:
            self.owc_state = fsm_dispatch(self.owc_state, EventKind.TRANSMIT_END)
        else:
            self.ble_state = fsm_dispatch(self.ble_state, EventKind.TRANSMIT_END)
        link = self.cfg.links[modality]
        if self.rng.uniform() < link.success_prob:
            self.metrics.bytes_delivered += self.cfg.packet_bytes
        else:
            self.metrics.packets_lost += 1
        # Settle into whatever the node should be doing now.
        if self.mode is Mode.SLEEP:
            self._restream_after_tx = False
            self.mac_sleep(now)
        elif self._restream_after_tx and self.in_slot:
            self._restream_after_tx = False
            self._start_streaming(now)
        elif self.in_slot:
            self._restream_after_tx = False
            self.set_phase(self.cfg.idle_current_ma, now)
        elif self.cfg.inter_transmission_sleep:
            self._restream_after_tx = False
            self.mac_sleep(now)
        else:
            self._restream_after_tx = False
            self.set_phase(self.cfg.idle_current_ma, now)

    # -- reconfiguration -----------------------------------------------------

    def apply_action(self, action: Action, now: SimTime) -> None:
        self.sync(now)
        mode_changed = action.mode is not self.mode
        modality_changed = (action.modality is not self.modality
                            and action.mode is not Mode.SLEEP)
        if not mode_changed and not modality_changed:
            return
        if action.mode is Mode.SLEEP and self.mode is not Mode.SLEEP:
            self.metrics.sleep_entries += 1
        if modality_changed:
            self.metrics.modality_switches += 1
            self.modality = action.modality
        self.mode = action.mode
        self._reconcile(now)

    def _reconcile(self, now: SimTime) -> None:
        self._stream_id += 1
        self._chain_id += 1
        if self.mode is Mode.SLEEP:
            self._close_eligible(now)
            if not self.tx_in_flight:
                self.mac_sleep(now)
            return
        if self.in_slot:
            self._open_eligible(now)
            if not self.awake:
                self.mac_wake(now)
                self._start_slot_chain(now)
            else:
                self._start_streaming(now)
        elif self.cfg.inter_transmission_sleep:
            self.mac_sleep(now)
        else:
            self.mac_wake(now)
            if not self.tx_in_flight:
                self.set_phase(self.cfg.idle_current_ma, now)

    # -- event dispatch ---------------------------------------------------------

    def finalize_accounting(self, end: SimTime) -> None:
        """Settle energy and close any open transmit-eligible segment."""
        self.sync(end)
        self._close_eligible(end)

    def handle(self, engine: Engine, event) -> None:
        kind = event.kind
        if kind is EventKind.APP_PACKET_READY:
            self.on_packet_ready(engine.now, event.payload)
        elif kind is EventKind.TRANSMIT_END:
            self.on_transmit_end(engine.now, event.payload)
        elif kind is EventKind.PERIPHERAL_TICK:
            self.on_chain_step(engine.now, event.payload)
        else:  # pragma: no cover - no other kinds are addressed to nodes
            raise RuntimeError(f"unexpected event {kind} for {self.name}")

    def fsm_label(self) -> str:
        return f"{self.owc_state.value}|{self.ble_state.value}"
