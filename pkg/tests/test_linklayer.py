"""Interface state machines, radio event timing, and the polling schedule."""

import pytest

from hybridsim.kernel import EventKind
from hybridsim.linklayer import (BleState, BleTimingConfig, EmptyScheduleError,
                                 OwcState, PollSchedule, ble_airtime,
                                 fsm_dispatch)

E = EventKind


class TestOwcFsm:
    @pytest.mark.parametrize("state,event,expected", [
        (OwcState.IDLE, E.TRANSMIT_START, OwcState.TX),
        (OwcState.IDLE, E.RECEIVE_START, OwcState.RX),
        (OwcState.TX, E.RECEIVE_START, OwcState.TX_RX),
        (OwcState.RX, E.TRANSMIT_START, OwcState.TX_RX),
        (OwcState.TX_RX, E.TRANSMIT_END, OwcState.RX),
        (OwcState.TX_RX, E.RECEIVE_END, OwcState.TX),
        (OwcState.TX, E.TRANSMIT_END, OwcState.IDLE),
        (OwcState.IDLE, E.SLEEP_SIGNAL, OwcState.SLEEP),
        (OwcState.SLEEP, E.WAKE_SIGNAL, OwcState.IDLE),
        (OwcState.OFF, E.BATTERY_CHARGED, OwcState.IDLE),
    ])
    def test_transitions(self, state, event, expected):
        assert fsm_dispatch(state, event) is expected

    @pytest.mark.parametrize("state", list(OwcState))
    def test_battery_low_dominates_every_state(self, state):
        assert fsm_dispatch(state, E.BATTERY_LOW) is OwcState.OFF

    def test_duplex_only_reachable_from_tx_or_rx(self):
        assert fsm_dispatch(OwcState.IDLE, E.TRANSMIT_END) is OwcState.IDLE  # no-op
        assert fsm_dispatch(OwcState.SLEEP, E.TRANSMIT_START) is OwcState.SLEEP

    def test_undefined_pair_is_noop_with_warning(self):
        warnings = []
        out = fsm_dispatch(OwcState.OFF, E.TRANSMIT_START, warn=warnings.append)
        assert out is OwcState.OFF
        assert len(warnings) == 1 and "no transition" in warnings[0]


class TestBleFsm:
    @pytest.mark.parametrize("state,event,expected", [
        (BleState.IDLE, E.TRANSMIT_START, BleState.TX_BUSY),
        (BleState.IDLE, E.RECEIVE_START, BleState.RX_BUSY),
        (BleState.TX_BUSY, E.TRANSMIT_END, BleState.IDLE),
        (BleState.RX_BUSY, E.RECEIVE_END, BleState.IDLE),
        (BleState.IDLE, E.SLEEP_SIGNAL, BleState.OFF),
        (BleState.OFF, E.WAKE_SIGNAL, BleState.IDLE),
    ])
    def test_transitions(self, state, event, expected):
        assert fsm_dispatch(state, event) is expected

    @pytest.mark.parametrize("state", list(BleState))
    def test_battery_low_dominates_every_state(self, state):
        assert fsm_dispatch(state, E.BATTERY_LOW) is BleState.OFF

    def test_busy_states_entered_only_from_idle(self):
        assert fsm_dispatch(BleState.OFF, E.TRANSMIT_START) is BleState.OFF
        assert fsm_dispatch(BleState.RX_BUSY, E.TRANSMIT_START) is BleState.RX_BUSY

    def test_rejects_foreign_state_type(self):
        with pytest.raises(TypeError):
            fsm_dispatch("IDLE", E.TRANSMIT_START)


class TestBleTiming:
    def test_reference_payload_airtime(self):
        cfg = BleTimingConfig()
        assert ble_airtime(cfg, 116, "2M") == pytest.approx(3.13, abs=1e-9)

    def test_empty_payload_keeps_event_overhead(self):
        cfg = BleTimingConfig()
        overhead = ble_airtime(cfg, 0, "2M")
        assert 0.0 < overhead < 3.13
        assert overhead == pytest.approx(3.13 - 116 * 8 / 2e3, abs=1e-9)

    def test_double_payload_scales_linearly(self):
        cfg = BleTimingConfig()
        payload_portion = 116 * 8 / 2e3
        expected = 2 * payload_portion + ble_airtime(cfg, 0, "2M")
        assert ble_airtime(cfg, 232, "2M") == pytest.approx(expected, abs=1e-9)

    def test_beyond_mtu_segments_into_events(self):
        cfg = BleTimingConfig(mtu_bytes=247)
        one_event_overhead = ble_airtime(cfg, 0, "2M")
        total = ble_airtime(cfg, 512, "2M")
        assert total == pytest.approx(3 * one_event_overhead + 512 * 8 / 2e3, abs=1e-9)

    def test_one_mbit_phy_doubles_payload_time(self):
        cfg = BleTimingConfig()
        slow = ble_airtime(cfg, 116, "1M")
        assert slow > ble_airtime(cfg, 116, "2M")

    def test_interval_invariants(self):
        with pytest.raises(ValueError):
            BleTimingConfig(conn_event_len_ms=50.0, conn_interval_ms=45.0)
        with pytest.raises(ValueError):
            BleTimingConfig(adv_event_len_ms=200.0, adv_interval_ms=152.5)

    def test_connection_duty_cycle_at_defaults(self):
        cfg = BleTimingConfig()
        duty = cfg.conn_event_len_ms / cfg.conn_interval_ms
        assert duty == pytest.approx(0.0476, abs=5e-4)

    def test_negative_payload_rejected(self):
        with pytest.raises(ValueError):
            ble_airtime(BleTimingConfig(), -1)


class TestPollSchedule:
    def test_round_robin_order(self):
        sched = PollSchedule(order=["node1", "node2", "node3"])
        polled = [sched.poll_tick()[0] for _ in range(7)]
        assert polled == ["node1", "node2", "node3", "node1", "node2", "node3",
                          "node1"]

    def test_wake_and_sleep_signals(self):
        sched = PollSchedule(order=["node1", "node2"])
        _, first = sched.poll_tick()
        assert first == [("node1", E.WAKE_SIGNAL)]
        _, second = sched.poll_tick()
        assert ("node2", E.WAKE_SIGNAL) in second
        assert ("node1", E.SLEEP_SIGNAL) in second

    def test_no_sleep_signal_when_disabled(self):
        sched = PollSchedule(order=["node1", "node2"])
        sched.poll_tick(inter_transmission_sleep=False)
        _, signals = sched.poll_tick(inter_transmission_sleep=False)
        assert signals == [("node2", E.WAKE_SIGNAL)]

    def test_single_node_polled_every_slot(self):
        sched = PollSchedule(order=["only"])
        for _ in range(3):
            polled, signals = sched.poll_tick()
            assert polled == "only"
            assert signals == [("only", E.WAKE_SIGNAL)]

    def test_empty_schedule_rejected(self):
        with pytest.raises(EmptyScheduleError):
            PollSchedule(order=[])
