"""Run metrics, trace rows, and the on-disk trace format.

Each node produces a 1 Hz time series suitable for plotting energy
trajectories, plus counters. Files are written with fixed formatting so two
runs of the same scenario and seed are byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

TRACE_HEADER = "t_s,remaining_J,consumed_J,harvested_J,mode,modality,fsm_state"
SCHEMA_VERSION = 1


def _fmt(value: float) -> str:
    return format(value, ".9g")


@dataclass
class TraceRow:
    t_s: float
    remaining_j: float
    consumed_j: float
    harvested_j: float
    mode: str
    modality: str
    fsm_state: str

    def to_csv(self) -> str:
        return ",".join([
            _fmt(self.t_s), _fmt(self.remaining_j), _fmt(self.consumed_j),
            _fmt(self.harvested_j), self.mode, self.modality, self.fsm_state,
        ])


@dataclass
class NodeMetrics:
    name: str
    rows: list[TraceRow] = field(default_factory=list)
    bytes_delivered: int = 0
    packets_lost: int = 0
    modality_switches: int = 0
    sleep_entries: int = 0
    eligible_s: float = 0.0
    tx_intervals: list[tuple[int, int]] = field(default_factory=list)
    consumed_j: float = 0.0
    harvested_j: float = 0.0
    remaining_j: float = 0.0
    initial_j: float = 0.0

    @property
    def achieved_rate_kbps(self) -> float:
        if self.eligible_s <= 0:
            return 0.0
        return self.bytes_delivered * 8 / self.eligible_s / 1e3

    @property
    def megabytes_delivered(self) -> float:
        return self.bytes_delivered / 1e6

    def counters(self) -> dict:
        return {
            "bytes_delivered": self.bytes_delivered,
            "packets_lost": self.packets_lost,
            "modality_switch_count": self.modality_switches,
            "sleep_entries": self.sleep_entries,
            "transmit_eligible_s": round(self.eligible_s, 9),
            "achieved_rate_kbps": round(self.achieved_rate_kbps, 9),
            "megabytes_delivered": round(self.megabytes_delivered, 9),
            "consumed_j": round(self.consumed_j, 12),
            "harvested_j": round(self.harvested_j, 12),
            "remaining_j": round(self.remaining_j, 12),
            "initial_j": round(self.initial_j, 12),
        }


@dataclass
class MetricsRecord:
    config: dict
    seed: int
    nodes: dict[str, NodeMetrics]
    gateway_consumed_j: float = 0.0
    events_executed: int = 0

    def node(self, index: int) -> NodeMetrics:
        return self.nodes[f"node{index}"]

    def summary(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "seed": self.seed,
            "config": self.config,
            "gateway_consumed_j": round(self.gateway_consumed_j, 9),
            "events_executed": self.events_executed,
            "nodes": {name: nm.counters() for name, nm in sorted(self.nodes.items())},
        }


def write_traces(metrics: MetricsRecord, out_dir: str | Path) -> list[Path]:
    """Write one trace CSV per node plus a run-summary JSON; returns paths."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = []
        for name, nm in sorted(metrics.nodes.items()):
            path = out / f"trace_{name}.csv"
            lines = [TRACE_HEADER] + [row.to_csv() for row in nm.rows]
            path.write_text("\n".join(lines) + "\n")
            paths.append(path)
        summary_path = out / "summary.json"
        summary_path.write_text(
            json.dumps(metrics.summary(), sort_keys=True, indent=2) + "\n")
        paths.append(summary_path)
        return paths
    except OSError as exc:
        raise OSError(f"cannot write traces under {out}: {exc}") from exc
