"""Unit registry: converts device-native units to the canonical ones.

Canonical units are kWh (energy), m3/h (flow) and degrees C (temperature).
Conversions are affine: canonical = value * scale + offset.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import UnknownUnit

CANONICAL_METRICS = (
    "heat_energy_kwh",
    "flow_m3h",
    "supply_temp_c",
    "return_temp_c",
    "electric_kwh",
)

# value ranges considered plausible after conversion; outside -> quality=suspect
METRIC_RANGES = {
    "heat_energy_kwh": (0.0, 1e7),
    "flow_m3h": (0.0, 1e5),
    "supply_temp_c": (-60.0, 200.0),
    "return_temp_c": (-60.0, 200.0),
    "electric_kwh": (0.0, 1e7),
}


@dataclass(frozen=True)
class Conversion:
    scale: float
    offset: float = 0.0

    def apply(self, value: float) -> float:
        return value * self.scale + self.offset


_ENERGY = {
    "kwh": Conversion(1.0),
    "mwh": Conversion(1000.0),
    "wh": Conversion(0.001),
    "mj": Conversion(1.0 / 3.6),
    "gj": Conversion(1e9 / 3.6e6),   # 1 GJ = 277.77... kWh
    "gcal": Conversion(1163.0),
}

_TEMPERATURE = {
    "c": Conversion(1.0),
    "k": Conversion(1.0, -273.15),
    "f": Conversion(5.0 / 9.0, -32.0 * 5.0 / 9.0),
}

DEFAULT_CONVERSIONS = {
    "heat_energy_kwh": dict(_ENERGY),
    "electric_kwh": {k: _ENERGY[k] for k in ("kwh", "mwh", "wh")},
    "flow_m3h": {
        "m3h": Conversion(1.0),
        "ls": Conversion(3.6),       # litres/second
        "m3s": Conversion(3600.0),
    },
    "supply_temp_c": dict(_TEMPERATURE),
    "return_temp_c": dict(_TEMPERATURE),
}


class UnitRegistry:
    def __init__(self, table: dict = None):
        self._table = {m: dict(c) for m, c in DEFAULT_CONVERSIONS.items()}
        for metric, units in (table or {}).items():
            self._table.setdefault(metric, {})
            for unit, conv in units.items():
                if not isinstance(conv, Conversion):
                    conv = Conversion(*conv) if isinstance(conv, (tuple, list)) else Conversion(**conv)
                self._table[metric][unit.lower()] = conv

    def knows(self, metric: str, unit: str) -> bool:
        return unit.lower() in self._table.get(metric, {})

    def convert(self, metric: str, unit: str, value: float) -> float:
        try:
            conv = self._table[metric][unit.lower()]
        except KeyError:
            raise UnknownUnit(f"no conversion for unit {unit!r} of metric {metric!r}") from None
        return conv.apply(value)
