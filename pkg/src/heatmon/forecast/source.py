"""Loading SeriesWindow values out of the fact store."""

from __future__ import annotations

from ..errors import UnknownObject
from ..store import SliceSpec
from .models import SeriesWindow


def load_series(store, object_id: str, metric: str, ts_from: int = None,
                ts_to: int = None, exog_object: str = None,
                exog_metric: str = "supply_temp_c", exog_extend: int = 0) -> SeriesWindow:
    """Series for (object, metric) over [ts_from, ts_to), reindexed onto the
    hourly grid; optionally with an exogenous series extended ``exog_extend``
    seconds past the window end so multi-step prediction has future values."""
    bounds = store.series_bounds(object_id, metric)
    if bounds is None:
        raise UnknownObject(f"no data for object {object_id!r}, metric {metric!r}")
    lo, hi = bounds
    ts_from = lo if ts_from is None else ts_from
    ts_to = hi + 3600 if ts_to is None else ts_to
    cells = store.query_slice(
        SliceSpec.make([object_id], [metric], ts_from, ts_to, "raw", None)).cells
    exog_cells = None
    if exog_object is not None:
        exog_cells = store.query_slice(SliceSpec.make(
            [exog_object], [exog_metric], ts_from, ts_to + exog_extend, "raw", None)).cells
    return SeriesWindow.from_cells(object_id, metric, cells, 3600, exog_cells)
