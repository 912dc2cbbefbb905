"""Scenario wiring and the run/sweep entry points.

A run builds the star topology, derives per-modality link plans from the
channel models, and drives the polling MAC, the per-node reconfiguration
policy, harvesting, and 1 Hz trace sampling through the event kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from . import channel
from .actions import Mode, Modality, enumerate_actions
from .energy import (EnergyBuffer, HarvestProfile, ModalityPowerModel,
                     NodeEnergyConfig, PeripheralKind, PeripheralOp,
                     predict_action_energy)
from .kernel import Engine, EventKind, NS_PER_SEC, millis, seconds
from .linklayer import BleTimingConfig, PollSchedule, ble_airtime
from .metrics import MetricsRecord, NodeMetrics, TraceRow
from .node import LinkPlan, NodeRuntimeConfig, PhaseStep, SimNode
from .optimizer import (NodeObservation, etno_select, euno_select, ewma_update)
from .scenario import Scenario

GATEWAY_IDLE_W = 1.28  # mains-powered access point draw, reported only


def _poses(scenario: Scenario) -> tuple[channel.Pose, list[channel.Pose]]:
    """Star geometry: gateway on the ceiling facing down, nodes facing up at
    the configured distance and incidence angle, spread in azimuth."""
    h = scenario.gateway_height_m
    gateway = channel.Pose(position=(0.0, 0.0, h), facing=(0.0, 0.0, -1.0))
    theta = math.radians(scenario.incidence_angle_deg)
    d = scenario.distance_m
    nodes = []
    for i in range(scenario.node_count):
        phi = 2.0 * math.pi * i / max(1, scenario.node_count)
        x = d * math.sin(theta) * math.cos(phi)
        y = d * math.sin(theta) * math.sin(phi)
        nodes.append(channel.Pose(position=(x, y, h - d * math.cos(theta)),
                                  facing=(0.0, 0.0, 1.0)))
    return gateway, nodes


@dataclass(frozen=True)
class LinkBudget:
    snr_db: dict[Modality, float]
    ber: dict[Modality, float]


def link_budget(scenario: Scenario) -> LinkBudget:
    """Static per-modality SNR and BER for the scenario geometry."""
    gateway, nodes = _poses(scenario)
    node = nodes[0]
    radio = channel.RadioLinkConfig(
        tx_power_dbm=scenario.ble_tx_power_dbm,
        noise_figure_db=scenario.noise_figure_db,
        bandwidth_hz=scenario.bandwidth_hz,
        phy_rate=scenario.ble_phy_rate,
    )
    rx_dbm = channel.friis_rx_power(radio, gateway, node)
    ble_snr = channel.snr_db(rx_dbm, radio.noise_figure_db, radio.bandwidth_hz)
    # Per-bit SNR at the PHY rate drives the modem error rate.
    ble_eb = ble_snr + 10.0 * math.log10(radio.bandwidth_hz / radio.bit_rate)
    optical = channel.OpticalLinkConfig(
        tx_optical_power_w=scenario.tx_optical_power_w,
        led_semi_angle_deg=scenario.led_semi_angle_deg,
        pd_fov_deg=scenario.pd_fov_deg,
        pd_area_m2=scenario.pd_area_m2,
        responsivity_a_w=scenario.responsivity_a_w,
        concentrator_gain=scenario.concentrator_gain,
        bit_rate=scenario.owc_phy_rate_kbps * 1e3,
    )
    gain = channel.owc_channel_gain(optical, gateway, node)
    owc_snr = channel.owc_snr_db(optical, gain)
    return LinkBudget(
        snr_db={Modality.OWC: owc_snr, Modality.BLE: ble_snr},
        ber={Modality.OWC: channel.ook_ber(owc_snr),
             Modality.BLE: channel.gfsk_ber(ble_eb, radio.phy_rate)},
    )


def build_link_plans(scenario: Scenario) -> dict[Modality, LinkPlan]:
    budget = link_budget(scenario)
    bits = scenario.packet_bytes * 8
    ble_cfg = BleTimingConfig(conn_interval_ms=scenario.conn_interval_ms,
                              mtu_bytes=scenario.mtu_bytes)
    ble_airtime_ms = ble_airtime(ble_cfg, scenario.packet_bytes, scenario.ble_phy_rate)
    owc_airtime_ms = bits / scenario.owc_phy_rate_kbps

    def intervals(min_spacing_ms: float) -> dict[Mode, int]:
        out = {}
        for mode, rate in ((Mode.PERFORMANCE, scenario.target_rate_kbps),
                           (Mode.CONSERVATION, scenario.conservation_rate_kbps)):
            gen_ms = bits / rate
            out[mode] = millis(max(gen_ms, min_spacing_ms))
        return out

    def rates(interval_ns: dict[Mode, int]) -> dict[Mode, float]:
        return {mode: bits / (ns / 1e6) for mode, ns in interval_ns.items()}

    owc_intervals = intervals(owc_airtime_ms)
    # The radio moves one application packet per connection event, so packet
    # spacing can never drop below the connection interval.
    ble_intervals = intervals(max(scenario.conn_interval_ms, ble_airtime_ms))
    return {
        Modality.OWC: LinkPlan(
            airtime_ns=millis(owc_airtime_ms),
            interval_ns=owc_intervals,
            tx_current_ma=scenario.owc_tx_current_ma,
            success_prob=channel.packet_success(min(0.5, budget.ber[Modality.OWC]), bits),
            snr_db=budget.snr_db[Modality.OWC],
            rate_kbps=rates(owc_intervals),
        ),
        Modality.BLE: LinkPlan(
            airtime_ns=millis(ble_airtime_ms),
            interval_ns=ble_intervals,
            tx_current_ma=scenario.ble_tx_current_ma,
            success_prob=channel.packet_success(min(0.5, budget.ber[Modality.BLE]), bits),
            snr_db=budget.snr_db[Modality.BLE],
            rate_kbps=rates(ble_intervals),
        ),
    }


def _peripheral_steps(scenario: Scenario) -> tuple[PhaseStep, ...]:
    return (
        PhaseStep("sense", scenario.sense_current_ma, millis(scenario.sense_duration_ms)),
        PhaseStep("eink", scenario.eink_current_ma, millis(scenario.eink_duration_ms)),
        PhaseStep("localize", scenario.localize_current_ma, millis(scenario.localize_duration_ms)),
    )


def build_energy_config(scenario: Scenario,
                        links: dict[Modality, LinkPlan]) -> NodeEnergyConfig:
    ops = (
        PeripheralOp(PeripheralKind.SENSE, scenario.sense_duration_ms,
                     scenario.sense_current_ma),
        PeripheralOp(PeripheralKind.EINK_REFRESH, scenario.eink_duration_ms,
                     scenario.eink_current_ma),
        PeripheralOp(PeripheralKind.LOCALIZE, scenario.localize_duration_ms,
                     scenario.localize_current_ma),
    )
    power = {}
    for modality, plan in links.items():
        power[modality] = ModalityPowerModel(
            tx_current_ma=plan.tx_current_ma,
            packet_airtime_s=plan.airtime_ns / NS_PER_SEC,
            packet_interval_s={mode: ns / NS_PER_SEC
                               for mode, ns in plan.interval_ns.items()},
        )
    return NodeEnergyConfig(
        supply_voltage=scenario.supply_voltage,
        idle_current_ma=scenario.idle_current_ma,
        sleep_current_ma=scenario.sleep_current_ma,
        modality_power=power,
        peripheral_ops=ops,
        peripheral_period_s=scenario.peripheral_period_s,
    )


class _Controller:
    """Owns the polling gateway, the policy evaluations, harvesting, and the
    1 Hz sampling loop for one run."""

    def __init__(self, scenario: Scenario, engine: Engine):
        self.scenario = scenario
        self.engine = engine
        self.links = build_link_plans(scenario)
        self.energy_cfg = build_energy_config(scenario, self.links)
        self.weights = scenario.weights
        self.capacity = scenario.battery_capacity_j
        best = max(self.links, key=lambda m: (self.links[m].snr_db,
                                              m is Modality.OWC))
        self.initial_modality = best
        self.harvest = HarvestProfile(segments=scenario.harvest_segments())
        self.total_ns = seconds(scenario.total_duration_s)
        runtime = NodeRuntimeConfig(
            supply_voltage=scenario.supply_voltage,
            idle_current_ma=scenario.idle_current_ma,
            sleep_current_ma=scenario.sleep_current_ma,
            wake_current_ma=scenario.wake_current_ma,
            wake_duration_ns=millis(scenario.wake_duration_ms),
            advertising_current_ma=scenario.advertising_current_ma,
            packet_bytes=scenario.packet_bytes,
            links=self.links,
            peripheral_steps=_peripheral_steps(scenario),
            peripheral_period_ns=seconds(scenario.peripheral_period_s),
            inter_transmission_sleep=scenario.inter_transmission_sleep,
            critical_fraction=self.weights.f_c,
            poll_command_energy_j=scenario.poll_command_current_ma * 1e-3
            * scenario.supply_voltage * scenario.poll_command_duration_ms * 1e-3,
        )
        self.nodes: list[SimNode] = []
        for i in range(scenario.node_count):
            name = f"node{i + 1}"
            buffer = EnergyBuffer(
                capacity_j=scenario.battery_capacity_j,
                initial_j=scenario.battery_capacity_j * scenario.initial_fraction,
                critical_fraction=self.weights.f_c,
                supply_voltage=scenario.supply_voltage,
            )
            node = SimNode(name, runtime, buffer, engine, NodeMetrics(name=name),
                           engine.rng_stream(i + 1), self.initial_modality)
            node.evaluate_cb = self.evaluate
            if scenario.init_advertising and scenario.init_delay_s > 0:
                node.set_phase(scenario.advertising_current_ma, 0)
            engine.register(name, node.handle)
            self.nodes.append(node)
        self.schedule = PollSchedule(order=[n.name for n in self.nodes],
                                     slot_length_s=scenario.poll_slot_s)
        self._started = False
        engine.register("gateway", self._on_gateway_event)
        engine.register("world", self._on_world_event)

    # -- policy ---------------------------------------------------------------

    def evaluate(self, node: SimNode, now: int) -> None:
        scenario = self.scenario
        node.sync(now)
        jitter = scenario.snr_jitter_db
        snr = {}
        for modality in (Modality.OWC, Modality.BLE):
            value = self.links[modality].snr_db
            if jitter > 0:
                value += node.rng.normal(0.0, jitter)
            snr[modality] = value
        sample = snr[node.modality]
        if node.ewma_baseline_db is None:
            node.ewma_baseline_db = sample
        else:
            node.ewma_baseline_db = ewma_update(node.ewma_baseline_db, sample,
                                                self.weights.ewma_lambda)
        if scenario.optimizer == "euno":
            actions = enumerate_actions(node.modality)
            predicted = {a: predict_action_energy(self.energy_cfg, a,
                                                  self.weights.period_s)
                         for a in actions}
            rates = {a: 0.0 if a.mode is Mode.SLEEP
                     else self.links[a.modality].rate_kbps[a.mode]
                     for a in actions}
            obs = NodeObservation(
                f_r=node.buffer.fraction,
                current_modality=node.modality,
                snr_db=snr,
                predicted_energy_j=predicted,
                deliverable_rate_kbps=rates,
                p_int=scenario.interaction_probability,
                snr_sample_db=sample,
                ewma_baseline_db=node.ewma_baseline_db,
            )
            action = euno_select(obs, self.weights, self.capacity, actions)
        else:
            best_snr = max(snr, key=lambda m: (snr[m], m is Modality.OWC))
            action = etno_select(
                node.buffer.fraction,
                scenario.etno_sleep_threshold,
                scenario.etno_conservation_threshold,
                node.modality,
                best_snr,
                owc_only=(scenario.optimizer == "etno-owc"),
            )
        node.apply_action(action, now)

    # -- event handlers ---------------------------------------------------------

    def _on_gateway_event(self, engine: Engine, event) -> None:
        if event.kind is not EventKind.POLL_TICK:
            return
        now = engine.now
        if not self._started:
            self._started = True
            if self.scenario.inter_transmission_sleep:
                for node in self.nodes:
                    node.sync(now)
                    node.mac_sleep(now)
            else:
                for node in self.nodes:
                    node.set_phase(self.scenario.idle_current_ma, now)
        previous = self.schedule.current_holder
        polled, _signals = self.schedule.poll_tick(
            inter_transmission_sleep=self.scenario.inter_transmission_sleep)
        if previous is not None:
            self._node_by_name(previous).exit_slot(now)
        slot_ns = seconds(self.scenario.poll_slot_s)
        slot_end = min(now + slot_ns, self.total_ns)
        self._node_by_name(polled).enter_slot(now, slot_end)
        if now + slot_ns < self.total_ns:
            engine.schedule_at(now + slot_ns, "gateway", EventKind.POLL_TICK)

    def _on_world_event(self, engine: Engine, event) -> None:
        now = engine.now
        if event.kind is EventKind.OPTIMIZER_TICK:
            for node in self.nodes:
                self.evaluate(node, now)
            nxt = now + seconds(self.weights.period_s)
            if nxt <= self.total_ns:
                engine.schedule_at(nxt, "world", EventKind.OPTIMIZER_TICK)
        elif event.kind is EventKind.HARVEST_TICK:
            dt = seconds(self.harvest.tick_period_s)
            t_s = now / NS_PER_SEC
            for node in self.nodes:
                node.sync(now)
                _, edge = node.buffer.harvest(
                    self.harvest.energy_between(t_s - self.harvest.tick_period_s, t_s))
                if edge is EventKind.BATTERY_CHARGED:
                    node.on_battery_charged(now)
            self._sample(now)
            if now + dt <= self.total_ns:
                engine.schedule_at(now + dt, "world", EventKind.HARVEST_TICK)
        elif event.kind is EventKind.PERIPHERAL_TICK:
            if not self.scenario.inter_transmission_sleep:
                for node in self.nodes:
                    node.on_peripheral_cycle(now)
            nxt = now + seconds(self.scenario.peripheral_period_s)
            if nxt <= self.total_ns:
                engine.schedule_at(nxt, "world", EventKind.PERIPHERAL_TICK)

    def _node_by_name(self, name: str) -> SimNode:
        return self.nodes[int(name.removeprefix("node")) - 1]

    def _sample(self, now: int) -> None:
        t_s = now / NS_PER_SEC
        for node in self.nodes:
            node.sync(now)
            node.metrics.rows.append(TraceRow(
                t_s=t_s,
                remaining_j=node.buffer.remaining_j,
                consumed_j=node.buffer.consumed_j,
                harvested_j=node.buffer.harvested_j,
                mode=node.mode.value,
                modality=node.modality.value,
                fsm_state=node.fsm_label(),
            ))

    # -- run -----------------------------------------------------------------

    def start(self) -> None:
        init = seconds(self.scenario.init_delay_s)
        self._sample(0)
        self.engine.schedule_at(init, "gateway", EventKind.POLL_TICK)
        self.engine.schedule_at(init, "world", EventKind.OPTIMIZER_TICK)
        tick = seconds(self.harvest.tick_period_s)
        self.engine.schedule_at(tick, "world", EventKind.HARVEST_TICK)
        if not self.scenario.inter_transmission_sleep:
            self.engine.schedule_at(init + seconds(self.scenario.peripheral_period_s),
                                    "world", EventKind.PERIPHERAL_TICK)

    def finalize(self) -> MetricsRecord:
        end = self.total_ns
        nodes = {}
        for node in self.nodes:
            node.finalize_accounting(end)
            node.metrics.consumed_j = node.buffer.consumed_j
            node.metrics.harvested_j = node.buffer.harvested_j
            node.metrics.remaining_j = node.buffer.remaining_j
            nodes[node.name] = node.metrics
        return MetricsRecord(
            config=self.scenario.to_dict(),
            seed=self.scenario.seed,
            nodes=nodes,
            gateway_consumed_j=GATEWAY_IDLE_W * self.scenario.total_duration_s,
            events_executed=self.engine.events_executed,
        )


def run(scenario: Scenario) -> MetricsRecord:
    """Execute one deterministic run of the scenario."""
    engine = Engine(seed=scenario.seed)
    controller = _Controller(scenario, engine)
    controller.start()
    engine.run_until(controller.total_ns)
    return controller.finalize()


@dataclass(frozen=True)
class SweepRow:
    target_rate_kbps: float
    optimizer: str
    achieved_rate_kbps: float


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]

    def achieved(self, rate: float, optimizer: str) -> float:
        for row in self.rows:
            if row.target_rate_kbps == rate and row.optimizer == optimizer:
                return row.achieved_rate_kbps
        raise KeyError((rate, optimizer))

    def to_csv(self) -> str:
        lines = ["target_rate_kbps,optimizer,achieved_rate_kbps"]
        lines += [f"{r.target_rate_kbps:.9g},{r.optimizer},{r.achieved_rate_kbps:.9g}"
                  for r in self.rows]
        return "\n".join(lines) + "\n"


def sweep(base: Scenario, rates: list[float],
          optimizers: tuple[str, ...] = ("euno", "etno", "etno-owc")) -> SweepResult:
    """One run per (target rate, optimizer) with the base scenario's seed;
    reports the achieved rate averaged over all nodes."""
    if not rates:
        raise ValueError("sweep needs at least one target rate")
    rows = []
    for rate in rates:
        for optimizer in optimizers:
            scenario = replace(
                base, target_rate_kbps=rate, optimizer=optimizer,
                conservation_rate_kbps=min(base.conservation_rate_kbps, rate))
            metrics = run(scenario)
            achieved = [nm.achieved_rate_kbps for nm in metrics.nodes.values()]
            rows.append(SweepRow(rate, optimizer, sum(achieved) / len(achieved)))
    return SweepResult(rows=tuple(rows))
