"""Scenario configuration: INI-style files, strict validation, presets.

Every tunable of the evaluation scenario is a named key; unknown sections or
keys are rejected so a typo cannot silently fall back to a default.
"""

from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .optimizer import UtilityWeights

OPTIMIZERS = ("euno", "etno", "etno-owc")


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    # [scenario]
    duration_s: float = 1025.0
    init_delay_s: float = 5.0
    node_count: int = 3
    seed: int = 1
    optimizer: str = "euno"
    inter_transmission_sleep: bool = True

    # [topology]
    distance_m: float = 1.0
    incidence_angle_deg: float = 30.0
    gateway_height_m: float = 2.0

    # [traffic]
    packet_bytes: int = 512
    target_rate_kbps: float = 300.0
    conservation_rate_kbps: float = 60.0
    poll_slot_s: float = 25.0

    # [energy]
    battery_capacity_j: float = 8.0
    initial_fraction: float = 1.0
    harvest_mw: float = 10.0
    harvest_profile: tuple[tuple[float, float], ...] = ()
    supply_voltage: float = 3.3
    idle_current_ma: float = 3.3
    sleep_current_ma: float = 0.344
    owc_tx_current_ma: float = 36.0
    ble_tx_current_ma: float = 9.10
    wake_current_ma: float = 14.2
    wake_duration_ms: float = 909.0
    advertising_current_ma: float = 5.58
    init_advertising: bool = True
    poll_command_current_ma: float = 7.36
    poll_command_duration_ms: float = 2.33

    # [peripherals]
    sense_current_ma: float = 12.26
    sense_duration_ms: float = 516.0
    eink_current_ma: float = 7.24
    eink_duration_ms: float = 435.0
    localize_current_ma: float = 10.0
    localize_duration_ms: float = 100.0
    peripheral_period_s: float = 10.0

    # [radio]
    ble_phy_rate: str = "2M"
    ble_tx_power_dbm: float = 0.0
    conn_interval_ms: float = 45.0
    mtu_bytes: int = 247
    noise_figure_db: float = 7.0
    bandwidth_hz: float = 1e6

    # [optical]
    owc_phy_rate_kbps: float = 1000.0
    tx_optical_power_w: float = 0.5
    led_semi_angle_deg: float = 60.0
    pd_fov_deg: float = 60.0
    pd_area_m2: float = 1e-4
    responsivity_a_w: float = 0.54
    concentrator_gain: float = 3.0

    # [optimizer]
    etno_sleep_threshold: float = 0.2
    etno_conservation_threshold: float = 0.4
    interaction_probability: float = 0.7
    snr_jitter_db: float = 0.0

    # [weights]
    weights: UtilityWeights = field(default_factory=UtilityWeights)

    def __post_init__(self):
        if self.duration_s <= 0 or self.init_delay_s < 0 or self.poll_slot_s <= 0:
            raise ScenarioError("durations must be positive")
        if self.node_count < 1:
            raise ScenarioError("need at least one node")
        if self.conservation_rate_kbps > self.target_rate_kbps:
            raise ScenarioError("conservation rate must not exceed the target rate")
        if self.optimizer not in OPTIMIZERS:
            raise ScenarioError(f"optimizer must be one of {OPTIMIZERS}")
        if self.battery_capacity_j <= 0 or not 0 < self.initial_fraction <= 1:
            raise ScenarioError("battery capacity and initial fraction must be positive")
        if self.etno_sleep_threshold >= self.etno_conservation_threshold:
            raise ScenarioError("ETNO sleep threshold must be below the conservation threshold")
        if self.packet_bytes <= 0:
            raise ScenarioError("packet size must be positive")

    @property
    def total_duration_s(self) -> float:
        return self.init_delay_s + self.duration_s

    def harvest_segments(self) -> tuple[tuple[float, float], ...]:
        if self.harvest_profile:
            return self.harvest_profile
        return ((0.0, self.harvest_mw * 1e-3),)

    def to_dict(self) -> dict:
        data = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "weights":
                data["weights"] = asdict(value)
            elif f.name == "harvest_profile":
                data[f.name] = [list(seg) for seg in value]
            else:
                data[f.name] = value
        return data


_BOOL = {"true": True, "false": False, "1": True, "0": False,
         "yes": True, "no": False, "on": True, "off": False}


def _parse_bool(raw: str) -> bool:
    if raw.strip().lower() not in _BOOL:
        raise ValueError(f"not a boolean: {raw!r}")
    return _BOOL[raw.strip().lower()]


def _parse_profile(raw: str) -> tuple[tuple[float, float], ...]:
    """Parse 't0:mw0, t1:mw1, ...' into (start_s, watts) segments."""
    segments = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        start, mw = part.split(":")
        segments.append((float(start), float(mw) * 1e-3))
    return tuple(segments)


# section -> key -> (scenario field, converter)
_SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "scenario": {
        "duration_s": ("duration_s", float),
        "init_delay_s": ("init_delay_s", float),
        "node_count": ("node_count", int),
        "seed": ("seed", int),
        "optimizer": ("optimizer", str),
        "inter_transmission_sleep": ("inter_transmission_sleep", _parse_bool),
    },
    "topology": {
        "distance_m": ("distance_m", float),
        "incidence_angle_deg": ("incidence_angle_deg", float),
        "gateway_height_m": ("gateway_height_m", float),
    },
    "traffic": {
        "packet_bytes": ("packet_bytes", int),
        "target_rate_kbps": ("target_rate_kbps", float),
        "conservation_rate_kbps": ("conservation_rate_kbps", float),
        "poll_slot_s": ("poll_slot_s", float),
    },
    "energy": {
        "battery_capacity_j": ("battery_capacity_j", float),
        "initial_fraction": ("initial_fraction", float),
        "harvest_mw": ("harvest_mw", float),
        "harvest_profile": ("harvest_profile", _parse_profile),
        "supply_voltage": ("supply_voltage", float),
        "idle_current_ma": ("idle_current_ma", float),
        "sleep_current_ma": ("sleep_current_ma", float),
        "owc_tx_current_ma": ("owc_tx_current_ma", float),
        "ble_tx_current_ma": ("ble_tx_current_ma", float),
        "wake_current_ma": ("wake_current_ma", float),
        "wake_duration_ms": ("wake_duration_ms", float),
        "advertising_current_ma": ("advertising_current_ma", float),
        "init_advertising": ("init_advertising", _parse_bool),
        "poll_command_current_ma": ("poll_command_current_ma", float),
        "poll_command_duration_ms": ("poll_command_duration_ms", float),
    },
    "peripherals": {
        "sense_current_ma": ("sense_current_ma", float),
        "sense_duration_ms": ("sense_duration_ms", float),
        "eink_current_ma": ("eink_current_ma", float),
        "eink_duration_ms": ("eink_duration_ms", float),
        "localize_current_ma": ("localize_current_ma", float),
        "localize_duration_ms": ("localize_duration_ms", float),
        "period_s": ("peripheral_period_s", float),
    },
    "radio": {
        "phy_rate": ("ble_phy_rate", str),
        "tx_power_dbm": ("ble_tx_power_dbm", float),
        "conn_interval_ms": ("conn_interval_ms", float),
        "mtu_bytes": ("mtu_bytes", int),
        "noise_figure_db": ("noise_figure_db", float),
        "bandwidth_hz": ("bandwidth_hz", float),
    },
    "optical": {
        "phy_rate_kbps": ("owc_phy_rate_kbps", float),
        "tx_optical_power_w": ("tx_optical_power_w", float),
        "led_semi_angle_deg": ("led_semi_angle_deg", float),
        "pd_fov_deg": ("pd_fov_deg", float),
        "pd_area_m2": ("pd_area_m2", float),
        "responsivity_a_w": ("responsivity_a_w", float),
        "concentrator_gain": ("concentrator_gain", float),
    },
    "optimizer": {
        "etno_sleep_threshold": ("etno_sleep_threshold", float),
        "etno_conservation_threshold": ("etno_conservation_threshold", float),
        "interaction_probability": ("interaction_probability", float),
        "snr_jitter_db": ("snr_jitter_db", float),
    },
}

_WEIGHT_KEYS = {
    "p_m": "p_m", "p_s": "p_s", "p_l": "p_l", "p_p": "p_p", "p_t": "p_t",
    "p_c": "p_c", "p_e": "p_e", "p_ch": "p_ch", "alpha": "alpha",
    "beta": "beta", "theta_s": "theta_s", "theta_l": "theta_l", "f_c": "f_c",
    "ewma_lambda": "ewma_lambda", "sigmoid_k": "sigmoid_k",
    "sigmoid_c_db": "sigmoid_c_db", "period_s": "period_s",
}


def load_scenario(path: str | Path) -> Scenario:
    """Load and validate a scenario file; unknown keys are errors."""
    path = Path(path)
    if not path.exists():
        raise ScenarioError(f"scenario file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ScenarioError(f"{path}: {exc}") from exc

    values: dict[str, object] = {}
    weight_values: dict[str, float] = {}
    for section in parser.sections():
        if section == "weights":
            for key, raw in parser.items(section):
                if key not in _WEIGHT_KEYS:
                    raise ScenarioError(f"{path}: unknown key [weights] {key}")
                try:
                    weight_values[_WEIGHT_KEYS[key]] = float(raw)
                except ValueError as exc:
                    raise ScenarioError(f"{path}: [weights] {key}: {exc}") from exc
            continue
        if section not in _SCHEMA:
            raise ScenarioError(f"{path}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ScenarioError(f"{path}: unknown key [{section}] {key}")
            field_name, convert = _SCHEMA[section][key]
            try:
                values[field_name] = convert(raw)
            except ValueError as exc:
                raise ScenarioError(f"{path}: [{section}] {key}: {exc}") from exc

    try:
        weights = UtilityWeights(**weight_values)
        return Scenario(weights=weights, **values)
    except (ValueError, TypeError) as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def scenario_dir() -> Path:
    return Path(__file__).parent / "data" / "scenarios"


def preset_path(name: str) -> Path:
    path = scenario_dir() / f"{name}.cfg"
    if not path.exists():
        raise ScenarioError(f"no such preset scenario: {name}")
    return path
