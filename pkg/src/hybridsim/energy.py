"""Energy storage, harvesting, and consumption models.

The consumption side is calibrated from bench measurements of the target node
(see data/calibration.csv): every device state or operation phase maps to a
measured average current, and energy is integrated piecewise-constant between
phase transitions. A linear model is also provided for states whose draw
scales with transmit power, baud rate, or packet size.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .actions import Action, Mode, Modality
from .kernel import EventKind

DEFAULT_SUPPLY_VOLTAGE = 3.3

VLC_CHUNKS_PER_FRAME = 6
VLC_CHUNK_AIRTIME_MS = 68.0
VLC_INTER_CHUNK_MS = 100.0


class CalibrationError(ValueError):
    pass


class UnknownStateError(KeyError):
    pass


def phase_energy(current_ma: float, duration_ms: float, voltage: float) -> float:
    """Energy in joules of one constant-current phase: E = I * V * t."""
    if current_ma < 0 or duration_ms < 0 or voltage < 0:
        raise ValueError("phase parameters must be nonnegative")
    return current_ma * 1e-3 * voltage * duration_ms * 1e-3


# ---------------------------------------------------------------------------
# Storage and harvesting

class EnergyBuffer:
    """Joule-denominated store with a single critical-fraction threshold.

    Crossing the threshold downward emits BatteryLow, upward BatteryCharged;
    both are edge-triggered with no extra hysteresis band. The remaining
    charge is clamped to [0, capacity] and the consumed/harvested totals count
    only energy actually drawn or stored, so the ledger
    remaining == initial + harvested - consumed holds exactly.
    """

    def __init__(self, capacity_j: float, initial_j: float | None = None,
                 critical_fraction: float = 0.2,
                 supply_voltage: float = DEFAULT_SUPPLY_VOLTAGE):
        if capacity_j <= 0:
            raise ValueError("capacity must be positive")
        if not 0.0 <= critical_fraction < 1.0:
            raise ValueError("critical fraction must be in [0, 1)")
        self.capacity_j = capacity_j
        self.remaining_j = capacity_j if initial_j is None else min(initial_j, capacity_j)
        self.initial_j = self.remaining_j
        self.critical_fraction = critical_fraction
        self.supply_voltage = supply_voltage
        self.consumed_j = 0.0
        self.harvested_j = 0.0

    @property
    def fraction(self) -> float:
        return self.remaining_j / self.capacity_j

    @property
    def _threshold_j(self) -> float:
        return self.critical_fraction * self.capacity_j

    def consume(self, joules: float) -> EventKind | None:
        if joules < 0:
            raise ValueError("cannot consume negative energy")
        before = self.remaining_j
        drawn = min(joules, before)
        self.remaining_j = before - drawn
        self.consumed_j += drawn
        if before >= self._threshold_j > self.remaining_j:
            return EventKind.BATTERY_LOW
        if drawn < joules and before > 0.0:  # ran dry mid-draw
            return EventKind.BATTERY_LOW
        return None

    def harvest(self, joules: float) -> tuple[float, EventKind | None]:
        if joules < 0:
            raise ValueError("cannot harvest negative energy")
        before = self.remaining_j
        added = min(joules, self.capacity_j - before)
        self.remaining_j = before + added
        self.harvested_j += added
        if before < self._threshold_j <= self.remaining_j:
            return added, EventKind.BATTERY_CHARGED
        return added, None


@dataclass(frozen=True)
class HarvestProfile:
    """Piecewise-constant input power: segments of (start time s, watts)."""

    segments: tuple[tuple[float, float], ...] = ((0.0, 0.0),)
    tick_period_s: float = 1.0

    def __post_init__(self):
        starts = [s for s, _ in self.segments]
        if starts != sorted(starts):
            raise ValueError("profile segments must be sorted by start time")
        if any(p < 0 for _, p in self.segments):
            raise ValueError("harvest power cannot be negative")

    def power_at(self, t_s: float) -> float:
        power = 0.0
        for start, p in self.segments:
            if t_s >= start:
                power = p
            else:
                break
        return power

    def energy_between(self, t0_s: float, t1_s: float) -> float:
        """Integral of the profile over [t0, t1] in joules."""
        if t1_s <= t0_s:
            return 0.0
        edges = [t0_s] + [s for s, _ in self.segments if t0_s < s < t1_s] + [t1_s]
        return sum(self.power_at(a) * (b - a) for a, b in zip(edges, edges[1:]))


def harvest_tick(buffer: EnergyBuffer, profile: HarvestProfile,
                 dt_s: float, now_s: float = 0.0) -> tuple[float, EventKind | None]:
    """Deposit one tick of harvested energy; returns (joules added, edge event)."""
    if dt_s <= 0:
        raise ValueError("tick duration must be positive")
    return buffer.harvest(profile.energy_between(now_s, now_s + dt_s))


# ---------------------------------------------------------------------------
# Calibration table (constant-current model)

def _norm(token: str) -> str:
    return token.strip().lower().replace("-", "_")


@dataclass(frozen=True)
class CurrentEntry:
    current_ma: float
    duration_ms: float | None  # None for residency states


class StateCurrentTable:
    """(device, state, profile) -> measured current, optionally phase-shaped."""

    def __init__(self):
        self._entries: dict[tuple[str, str, str], CurrentEntry] = {}

    def add(self, device: str, state: str, profile: str,
            current_ma: float, duration_ms: float | None) -> None:
        if current_ma < 0:
            raise CalibrationError(f"negative current for {device}/{state}/{profile}")
        self._entries[(_norm(device), _norm(state), _norm(profile))] = \
            CurrentEntry(current_ma, duration_ms)

    def lookup(self, device: str, state: str, profile: str = "normal") -> CurrentEntry:
        key = (_norm(device), _norm(state), _norm(profile))
        if key not in self._entries:
            raise UnknownStateError(f"no calibration entry for {key}")
        return self._entries[key]

    def current_ma(self, device: str, state: str, profile: str = "normal", **_) -> float:
        return self.lookup(device, state, profile).current_ma

    def has(self, device: str, state: str, profile: str = "normal") -> bool:
        return (_norm(device), _norm(state), _norm(profile)) in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def rows(self):
        return sorted(self._entries.items())


# States the energy operations and the calibration checker depend on.
REQUIRED_STATES = (
    ("ble", "uplink_tx", "normal"),
    ("ble", "uplink_tx", "low_power"),
    ("ble", "conn_idle_0dbm", "normal"),
    ("ble", "conn_idle_0dbm", "low_power"),
    ("node", "vlc_tx_chunk", "normal"),
    ("node", "vlc_tx_chunk", "low_power"),
    ("node", "vlc_chunk_gap", "normal"),
    ("node", "vlc_chunk_gap", "low_power"),
    ("eink", "refresh_original", "normal"),
    ("eink", "refresh_optimized", "normal"),
    ("node", "deep_sleep", "very_low_power"),
    ("node", "deep_sleep_no_vlc_rx", "very_low_power"),
)


def load_calibration(path: str | Path) -> StateCurrentTable:
    """Parse a calibration CSV (device,state,profile,current_mA,duration_ms).

    Durations are blank for residency states. Raises CalibrationError with a
    line number on malformed rows and lists every missing required state."""
    table = StateCurrentTable()
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        expected = ["device", "state", "profile", "current_mA", "duration_ms"]
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != expected:
            raise CalibrationError(
                f"{path}: header must be {','.join(expected)}, got {reader.fieldnames}")
        for lineno, row in enumerate(reader, start=2):
            try:
                current = float(row["current_mA"])
                dur_raw = (row["duration_ms"] or "").strip()
                duration = float(dur_raw) if dur_raw else None
                table.add(row["device"], row["state"], row["profile"], current, duration)
            except (TypeError, ValueError, CalibrationError) as exc:
                raise CalibrationError(f"{path}:{lineno}: bad row {row}: {exc}") from exc
    missing = [key for key in REQUIRED_STATES if not table.has(*key)]
    if missing:
        raise CalibrationError(
            f"{path}: missing required calibration states: "
            + ", ".join("/".join(k) for k in missing))
    return table


def default_calibration_path() -> Path:
    return Path(__file__).parent / "data" / "calibration.csv"


# ---------------------------------------------------------------------------
# Linear model

@dataclass(frozen=True)
class LinearCurrentModel:
    """Current draw linear in TX power, baud rate, and packet size."""

    base_current_ma: float
    slope_ma_per_dbm: float = 0.0
    slope_ma_per_kbps: float = 0.0
    slope_ma_per_byte: float = 0.0

    def current_ma(self, tx_power_dbm: float = 0.0, baud_kbps: float = 0.0,
                   packet_bytes: float = 0.0, **_) -> float:
        value = (self.base_current_ma
                 + self.slope_ma_per_dbm * tx_power_dbm
                 + self.slope_ma_per_kbps * baud_kbps
                 + self.slope_ma_per_byte * packet_bytes)
        return max(0.0, value)

    @classmethod
    def fit_tx_power(cls, samples: list[tuple[float, float]]) -> "LinearCurrentModel":
        """Least-squares fit of current vs TX power from (dBm, mA) samples."""
        if len(samples) < 2:
            raise ValueError("need at least two samples to fit a slope")
        n = len(samples)
        sx = sum(x for x, _ in samples)
        sy = sum(y for _, y in samples)
        sxx = sum(x * x for x, _ in samples)
        sxy = sum(x * y for x, y in samples)
        denom = n * sxx - sx * sx
        if denom == 0:
            raise ValueError("degenerate tx power samples")
        slope = (n * sxy - sx * sy) / denom
        base = (sy - slope * sx) / n
        return cls(base_current_ma=base, slope_ma_per_dbm=slope)


def fit_conn_event_model(table: StateCurrentTable,
                         profile: str = "normal") -> LinearCurrentModel:
    """Default linear TX-power model: least-squares over the measured
    connection-event currents at 0/4/8 dBm from the shipped table."""
    samples = [(float(dbm),
                table.lookup("ble", f"conn_event_{dbm}dbm", profile).current_ma)
               for dbm in (0, 4, 8)]
    return LinearCurrentModel.fit_tx_power(samples)


def device_current(model, state: str, *, device: str = "node",
                   tx_power_dbm: float = 0.0, baud_kbps: float = 0.0,
                   packet_bytes: float = 0.0, profile: str = "normal") -> float:
    """Instantaneous current for a device state under either model."""
    if isinstance(model, StateCurrentTable):
        return model.current_ma(device, state, profile)
    if isinstance(model, LinearCurrentModel):
        return model.current_ma(tx_power_dbm=tx_power_dbm, baud_kbps=baud_kbps,
                                packet_bytes=packet_bytes)
    raise TypeError(f"unsupported current model: {model!r}")


def vlc_uplink_energy(table: StateCurrentTable, profile: str = "normal",
                      chunks: int = VLC_CHUNKS_PER_FRAME,
                      voltage: float = DEFAULT_SUPPLY_VOLTAGE) -> float:
    """Energy in joules to push one optical frame up the link.

    Integrates the measured chunk bursts plus the inter-chunk decode gaps; in
    the low-power profile the optical module is gated off between chunks and
    the gap current falls to the low-power idle level.
    """
    if chunks == 0:
        return 0.0
    chunk = table.lookup("node", "vlc_tx_chunk", profile)
    gap = table.lookup("node", "vlc_chunk_gap", profile)
    chunk_ms = chunk.duration_ms if chunk.duration_ms else VLC_CHUNK_AIRTIME_MS
    gap_ms = gap.duration_ms if gap.duration_ms else VLC_INTER_CHUNK_MS
    return (chunks * phase_energy(chunk.current_ma, chunk_ms, voltage)
            + (chunks - 1) * phase_energy(gap.current_ma, gap_ms, voltage))


# ---------------------------------------------------------------------------
# Peripherals and per-action energy prediction

class PeripheralKind(Enum):
    SENSOR_INIT = "sensor_init"
    SENSE = "sense"
    EINK_REFRESH = "eink_refresh"
    LOCALIZE = "localize"


@dataclass(frozen=True)
class PeripheralOp:
    kind: PeripheralKind
    duration_ms: float
    current_ma: float

    def energy_j(self, voltage: float) -> float:
        return phase_energy(self.current_ma, self.duration_ms, voltage)


@dataclass(frozen=True)
class ModalityPowerModel:
    """Streaming shape of one modality: burst current plus packet pacing."""

    tx_current_ma: float
    packet_airtime_s: float
    packet_interval_s: dict[Mode, float]  # mean spacing between packet starts

    def duty(self, mode: Mode) -> float:
        interval = self.packet_interval_s[mode]
        if interval <= 0:
            return 0.0
        return min(1.0, self.packet_airtime_s / interval)


@dataclass(frozen=True)
class NodeEnergyConfig:
    """Everything needed to predict what an action costs over a horizon."""

    supply_voltage: float
    idle_current_ma: float
    sleep_current_ma: float
    modality_power: dict[Modality, ModalityPowerModel]
    peripheral_ops: tuple[PeripheralOp, ...] = ()
    peripheral_period_s: float = 10.0


def predict_action_energy(cfg: NodeEnergyConfig, action: Action,
                          horizon_s: float) -> float:
    """Predicted energy in joules of executing `action` for `horizon_s`.

    The estimate assumes the node streams for the whole horizon at the
    action's deliverable rate: interface residency plus transmission bursts,
    plus the peripheral duty (sensing, display, localization) that only the
    performance mode keeps enabled. Used for ranking actions against each
    other, so a common basis matters more than schedule-exact accounting.
    """
    if horizon_s <= 0:
        raise ValueError("horizon must be positive")
    v = cfg.supply_voltage
    if action.mode is Mode.SLEEP:
        return phase_energy(cfg.sleep_current_ma, horizon_s * 1e3, v)
    power = cfg.modality_power[action.modality]
    duty = power.duty(action.mode)
    stream_ma = duty * power.tx_current_ma + (1.0 - duty) * cfg.idle_current_ma
    energy = phase_energy(stream_ma, horizon_s * 1e3, v)
    if action.mode is Mode.PERFORMANCE and cfg.peripheral_ops:
        per_cycle = sum(op.energy_j(v) - phase_energy(cfg.idle_current_ma, op.duration_ms, v)
                        for op in cfg.peripheral_ops)
        energy += max(0.0, per_cycle) * (horizon_s / cfg.peripheral_period_s)
    return energy
