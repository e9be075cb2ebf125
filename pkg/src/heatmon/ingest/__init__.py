from .consolidate import Batch, consolidate
from .devices import DeviceInfo, DeviceMap
from .immerse import immerse
from .normalize import (
    NormalizeResult,
    RawReading,
    Reading,
    Reject,
    normalize,
    read_ndjson,
    write_rejects,
)
from .units import CANONICAL_METRICS, Conversion, UnitRegistry

__all__ = [
    "Batch",
    "CANONICAL_METRICS",
    "Conversion",
    "DeviceInfo",
    "DeviceMap",
    "NormalizeResult",
    "RawReading",
    "Reading",
    "Reject",
    "UnitRegistry",
    "consolidate",
    "immerse",
    "normalize",
    "read_ndjson",
    "write_rejects",
]
