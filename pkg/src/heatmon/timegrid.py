"""Time bucketing helpers. All timestamps are UTC epoch seconds (int)."""

import numpy as np

HOUR = 3600
DAY = 86400

GRAINS = ("raw", "hour", "day", "month")
AGGS = ("sum", "mean", "min", "max")


def bucket_start(ts: int, grain: str) -> int:
    """Start of the bucket containing ``ts`` for the given grain."""
    if grain == "raw":
        return int(ts)
    if grain == "hour":
        return int(ts) - int(ts) % HOUR
    if grain == "day":
        return int(ts) - int(ts) % DAY
    if grain == "month":
        d = np.int64(ts).astype("datetime64[s]").astype("datetime64[M]")
        return int(d.astype("datetime64[s]").astype(np.int64))
    raise ValueError(f"unknown grain: {grain!r}")


def bucket_starts(ts: np.ndarray, grain: str) -> np.ndarray:
    """Vectorized :func:`bucket_start` over an int64 array."""
    if grain == "raw":
        return ts
    if grain == "hour":
        return ts - ts % HOUR
    if grain == "day":
        return ts - ts % DAY
    if grain == "month":
        months = ts.astype("datetime64[s]").astype("datetime64[M]")
        return months.astype("datetime64[s]").astype(np.int64)
    raise ValueError(f"unknown grain: {grain!r}")
