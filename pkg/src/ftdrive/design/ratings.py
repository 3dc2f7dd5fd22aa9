"""Normalized fault-tolerance overhead factor for converter topologies.

NOF compares the installed semiconductor effort of a fault-tolerant
topology against a plain six-switch two-level inverter built for the same
drive: sum over device groups of count * blocking_v * peak_a, with diode
groups weighted half a switch, all over 6 * V_bus * I_peak.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

_KINDS = ("switch", "diode")


@dataclass(frozen=True)
class DeviceRating:
    kind: str                  # "switch" or "diode"
    blocking_v: float
    peak_a: float
    count: int

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}")
        if self.blocking_v <= 0.0 or self.peak_a <= 0.0:
            raise ValueError("ratings must be > 0")
        if self.count < 1:
            raise ValueError("count must be >= 1")

    def effort(self) -> float:
        va = self.count * self.blocking_v * self.peak_a
        return 0.5 * va if self.kind == "diode" else va


@dataclass(frozen=True)
class DeviceRatingSheet:
    name: str
    devices: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not self.devices:
            raise ValueError("sheet needs at least one device group")
        object.__setattr__(self, "devices", tuple(self.devices))

    def total_effort(self) -> float:
        return sum(d.effort() for d in self.devices)


def six_switch_baseline(v_bus: float, i_peak: float) -> float:
    """Installed effort of the reference six-switch inverter."""
    if v_bus <= 0.0 or i_peak <= 0.0:
        raise ValueError("v_bus and i_peak must be > 0")
    return 6.0 * v_bus * i_peak


def nof(sheet: DeviceRatingSheet, baseline: float) -> float:
    """Normalized overhead factor of a sheet against a baseline effort."""
    if baseline <= 0.0:
        raise ValueError("baseline must be > 0")
    return sheet.total_effort() / baseline


def read_rating_sheet(path, name: str | None = None) -> DeviceRatingSheet:
    devices = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            devices.append(DeviceRating(
                kind=row["kind"].strip(),
                blocking_v=float(row["blocking_v"]),
                peak_a=float(row["peak_a"]),
                count=int(row["count"])))
    return DeviceRatingSheet(name=name or str(path), devices=tuple(devices))


def write_rating_sheet(path, sheet: DeviceRatingSheet) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "blocking_v", "peak_a", "count"])
        for d in sheet.devices:
            w.writerow([d.kind, repr(d.blocking_v), repr(d.peak_a), d.count])
