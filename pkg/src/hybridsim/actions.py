"""Operating modes, communication modalities, and the (mode, modality) action
tuple that reconfiguration decisions are expressed in."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Mode(Enum):
    PERFORMANCE = "performance"
    CONSERVATION = "conservation"
    SLEEP = "sleep"


class Modality(Enum):
    OWC = "owc"
    BLE = "ble"


@dataclass(frozen=True)
class Action:
    mode: Mode
    modality: Modality

    def __str__(self) -> str:
        return f"({self.mode.value}, {self.modality.value})"


def enumerate_actions(current_modality: Modality) -> list[Action]:
    """The fixed action set: both modalities for the two active modes, plus a
    single sleep action carrying the current modality so |A| stays constant."""
    actions = [Action(mode, modality)
               for mode in (Mode.PERFORMANCE, Mode.CONSERVATION)
               for modality in (Modality.OWC, Modality.BLE)]
    actions.append(Action(Mode.SLEEP, current_modality))
    return actions
