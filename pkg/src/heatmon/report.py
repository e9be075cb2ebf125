"""Report rendering: delimited outputs plus matplotlib figures.

Figures are rendered headless (Agg) straight to files next to the
text/JSON/CSV artifacts; nothing here requires a display.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)


def agg_result_json(result) -> str:
    return json.dumps(result.to_json(), sort_keys=True, indent=2)


def agg_result_csv(result) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["rank", "key", "value"])
    for i, pair in enumerate(result.pairs, start=1):
        writer.writerow([i, pair.key, repr(pair.value)])
    return buf.getvalue()


def agg_result_table(result) -> str:
    if not result.pairs:
        return "(empty result)\n"
    width = max(len(p.key) for p in result.pairs)
    lines = [f"{'#':>3}  {'key':<{width}}  value"]
    for i, pair in enumerate(result.pairs, start=1):
        lines.append(f"{i:>3}  {pair.key:<{width}}  {pair.value:.3f}")
    return "\n".join(lines) + "\n"


def write_agg_result(result, out_dir, basename: str = "top_consumers") -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"json": out / f"{basename}.json", "csv": out / f"{basename}.csv"}
    paths["json"].write_text(agg_result_json(result), encoding="utf-8")
    paths["csv"].write_text(agg_result_csv(result), encoding="utf-8")
    return {k: str(v) for k, v in paths.items()}


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return str(path)


def fig_ranking(result, path, title: str = "Top consumers", unit: str = "kWh") -> str:
    """Horizontal bar chart of an aggregation ranking."""
    keys = [p.key for p in result.pairs][::-1]
    values = [p.value for p in result.pairs][::-1]
    fig, ax = plt.subplots(figsize=(7, 0.5 * max(len(keys), 4) + 1.2))
    ax.barh(range(len(keys)), values, color="#b4452e")
    ax.set_yticks(range(len(keys)))
    ax.set_yticklabels(keys)
    ax.set_xlabel(unit)
    ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)


def fig_series_vs_forecast(actual_points, forecast_points, path,
                           title: str = "Forecast vs actuals", unit: str = "kWh") -> str:
    """Actual series with the forecast continuation overlaid."""
    fig, ax = plt.subplots(figsize=(9, 4))
    if actual_points:
        ts = [t for t, _ in actual_points]
        vs = [v for _, v in actual_points]
        ax.plot(ts, vs, label="actual", color="#27567d", linewidth=1.0)
    if forecast_points:
        ts = [t for t, _ in forecast_points]
        vs = [v for _, v in forecast_points]
        ax.plot(ts, vs, label="forecast", color="#b4452e", linewidth=1.4, linestyle="--")
    ax.set_xlabel("epoch seconds")
    ax.set_ylabel(unit)
    ax.set_title(title)
    ax.legend(loc="best")
    fig.tight_layout()
    return _save(fig, path)


def fig_district_totals(table, column: str, path, title: str = None) -> str:
    """Stacked view of one hypertable column across the first sublevel."""
    children = table.root.children
    labels = [c.label for c in children]
    values = [c.cells[column].value or 0.0 for c in children]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(labels, values, color="#6b8f3c")
    ax.set_ylabel(column)
    ax.set_title(title or f"{column} by {children[0].level if children else 'group'}")
    fig.tight_layout()
    return _save(fig, path)
