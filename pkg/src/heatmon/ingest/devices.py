"""Device map: resolves device ids to monitoring objects and coordinates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..errors import UnknownDevice


@dataclass(frozen=True)
class DeviceInfo:
    device_id: str
    object_id: str
    lon: Optional[float] = None
    lat: Optional[float] = None


class DeviceMap:
    def __init__(self, devices):
        self._devices = {d.device_id: d for d in devices}

    @classmethod
    def from_rows(cls, rows) -> "DeviceMap":
        return cls(DeviceInfo(r["device_id"], r["object_id"],
                              r.get("lon"), r.get("lat")) for r in rows)

    def __contains__(self, device_id):
        return device_id in self._devices

    def __len__(self):
        return len(self._devices)

    def resolve(self, device_id: str) -> DeviceInfo:
        info = self._devices.get(device_id)
        if info is None:
            raise UnknownDevice(f"device {device_id!r} not in device map")
        return info

    def object_ids(self):
        return sorted({d.object_id for d in self._devices.values()})

    def object_coords(self) -> dict:
        """First known (lon, lat) per object; objects without coordinates omitted."""
        coords = {}
        for d in sorted(self._devices.values(), key=lambda d: d.device_id):
            if d.lon is not None and d.lat is not None:
                coords.setdefault(d.object_id, (d.lon, d.lat))
        return coords
