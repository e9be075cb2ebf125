from .blocks import DEFAULT_BLOCK_SIZE_LIMIT, pack, unpack
from .core import AuditReport, ClusterState, CubeStore
from .records import (
    AppendReceipt,
    Block,
    Cell,
    FactRecord,
    FORECAST_PREFIX,
    QUALITIES,
    Slice,
    SliceSpec,
)

__all__ = [
    "AppendReceipt",
    "AuditReport",
    "Block",
    "Cell",
    "ClusterState",
    "CubeStore",
    "DEFAULT_BLOCK_SIZE_LIMIT",
    "FactRecord",
    "FORECAST_PREFIX",
    "QUALITIES",
    "Slice",
    "SliceSpec",
    "pack",
    "unpack",
]
