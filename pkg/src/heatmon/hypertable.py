"""Tree-structured aggregation table with a movable time cursor.

The table's shape is a pure function of (hierarchy map, aggregation
mode); the cursor only changes cell values. Leaves are monitoring
objects; every internal node folds its children bottom-up (sum columns
add child values in sorted-label order, mean columns take the
count-weighted mean), so a reported parent can always be re-derived
bit-for-bit from its children. Cells with no underlying data carry an
explicit absent marker (value None), never a zero.

Forecast columns (``forecast.<metric>``) read the reserved forecast
namespace; a scenario cursor redirects them to the what-if namespace
``forecast.<scenario>.<metric>``.
"""

from __future__ import annotations

import csv
import io
import json
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Optional

from .errors import ForecastUnavailable, InvalidThresholds, UnknownColumn
from .ingest.units import CANONICAL_METRICS
from .store import FORECAST_PREFIX, SliceSpec
from .timegrid import GRAINS

CURSOR_MODES = ("archive", "current", "forecast", "scenario")

DEFAULT_LEVELS = ("city", "district", "network", "object")


@dataclass(frozen=True)
class ColorRule:
    column: str
    thresholds: tuple
    classes: tuple

    def __post_init__(self):
        if list(self.thresholds) != sorted(set(self.thresholds)):
            raise InvalidThresholds(f"thresholds for {self.column!r} must be strictly ascending")
        if len(self.classes) != len(self.thresholds) + 1:
            raise InvalidThresholds(
                f"{self.column!r}: need {len(self.thresholds) + 1} color classes, "
                f"got {len(self.classes)}")

    def classify(self, value: float) -> str:
        return self.classes[bisect_right(self.thresholds, value)]


@dataclass(frozen=True)
class AggMode:
    mode_id: str
    visible_columns: tuple
    levels: tuple = DEFAULT_LEVELS
    agg_per_column: tuple = ()       # ((column, "sum"|"mean"), ...)
    color_rules: tuple = ()
    grain: str = "hour"

    def __post_init__(self):
        if not self.levels:
            raise ValueError("levels must be non-empty")
        if not self.visible_columns:
            raise ValueError("visible_columns must be non-empty")
        if self.grain not in GRAINS:
            raise ValueError(f"unknown grain {self.grain!r}")
        for column in self.visible_columns:
            _check_column(column)
        for column, agg in self.agg_per_column:
            if agg not in ("sum", "mean"):
                raise ValueError(f"column {column!r}: agg must be sum or mean")

    def agg_for(self, column: str) -> str:
        return dict(self.agg_per_column).get(column, "sum")

    def rule_for(self, column: str) -> Optional[ColorRule]:
        for rule in self.color_rules:
            if rule.column == column:
                return rule
        return None

    def to_json(self) -> dict:
        return {
            "mode_id": self.mode_id,
            "visible_columns": list(self.visible_columns),
            "levels": list(self.levels),
            "agg_per_column": {c: a for c, a in self.agg_per_column},
            "grain": self.grain,
            "color_rules": [
                {"column": r.column, "thresholds": list(r.thresholds),
                 "classes": list(r.classes)}
                for r in self.color_rules
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AggMode":
        return cls(
            mode_id=obj["mode_id"],
            visible_columns=tuple(obj["visible_columns"]),
            levels=tuple(obj.get("levels", DEFAULT_LEVELS)),
            agg_per_column=tuple(sorted(obj.get("agg_per_column", {}).items())),
            color_rules=tuple(
                ColorRule(r["column"], tuple(r["thresholds"]), tuple(r["classes"]))
                for r in obj.get("color_rules", ())
            ),
            grain=obj.get("grain", "hour"),
        )


def _check_column(column: str):
    if column in CANONICAL_METRICS:
        return
    if column.startswith(FORECAST_PREFIX):
        base = column[len(FORECAST_PREFIX):]
        if base in CANONICAL_METRICS:
            return
    raise UnknownColumn(f"column {column!r} is neither a metric nor forecast.<metric>")


@dataclass(frozen=True)
class TimeCursor:
    ts_from: int
    ts_to: int
    mode: str = "archive"
    scenario: Optional[str] = None

    def __post_init__(self):
        if self.ts_from >= self.ts_to:
            raise ValueError("cursor interval must be non-empty")
        if self.mode not in CURSOR_MODES:
            raise ValueError(f"unknown cursor mode {self.mode!r}")
        if self.scenario is not None and self.mode != "scenario":
            raise ValueError("scenario name requires scenario mode")

    def to_json(self) -> dict:
        return {"ts_from": self.ts_from, "ts_to": self.ts_to,
                "mode": self.mode, "scenario": self.scenario}


def resolve_column(column: str, cursor: TimeCursor) -> str:
    """Store metric a visible column reads under the given cursor."""
    _check_column(column)
    if not column.startswith(FORECAST_PREFIX):
        return column
    base = column[len(FORECAST_PREFIX):]
    if cursor.mode == "scenario" and cursor.scenario:
        return f"{FORECAST_PREFIX}{cursor.scenario}.{base}"
    return f"{FORECAST_PREFIX}{base}"


@dataclass
class HTCell:
    value: Optional[float]
    count: int
    color: Optional[str] = None

    def to_json(self) -> dict:
        return {"value": self.value, "count": self.count, "color": self.color}


@dataclass
class HTNode:
    level: str
    label: str
    children: list = field(default_factory=list)
    cells: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "level": self.level,
            "label": self.label,
            "cells": {c: cell.to_json() for c, cell in self.cells.items()},
            "children": [ch.to_json() for ch in self.children],
        }

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()

    def leaves(self):
        return [n for n in self.walk() if not n.children]


@dataclass
class HyperTable:
    root: HTNode
    mode: AggMode
    cursor: TimeCursor
    built_at_version: int
    unmapped: tuple = ()

    def depth(self) -> int:
        d, node = 1, self.root
        while node.children:
            d += 1
            node = node.children[0]
        return d

    def object_leaves(self):
        leaf_level = self.mode.levels[-1]
        return [n for n in self.root.walk() if n.level == leaf_level]

    def shape(self):
        return [(n.level, n.label, len(n.children)) for n in self.root.walk()]


class HierarchyMap:
    """object_id -> one path through the hierarchy levels."""

    def __init__(self, rows):
        self._rows = {}
        for row in rows:
            self._rows[row["object_id"]] = dict(row)

    @property
    def objects(self):
        return sorted(self._rows)

    def path(self, object_id: str, levels) -> tuple:
        row = self._rows[object_id]
        out = []
        for level in levels:
            if level == "object":
                out.append(object_id)
            else:
                out.append(str(row[level]))
        return tuple(out)


class HyperTableBuilder:
    def __init__(self, store, hierarchy: HierarchyMap):
        self.store = store
        self.hierarchy = hierarchy

    def build(self, mode: AggMode, cursor: TimeCursor) -> HyperTable:
        objects = self.hierarchy.objects
        leaf_values = {}          # (object_id, column) -> (value, count, quality)
        forecast_hits = 0
        forecast_cols = [c for c in mode.visible_columns if c.startswith(FORECAST_PREFIX)]
        for column in mode.visible_columns:
            metric = resolve_column(column, cursor)
            agg = mode.agg_for(column)
            slice_ = self.store.query_slice(SliceSpec.make(
                objects, [metric], cursor.ts_from, cursor.ts_to, mode.grain, agg))
            per_object = {}
            for cell in slice_.cells:
                per_object.setdefault(cell.object_id, []).append(cell)
            for obj, cells in per_object.items():
                if agg == "sum":
                    value = 0.0
                    for c in cells:
                        value += c.value
                    count = sum(c.count for c in cells)
                else:
                    count = sum(c.count for c in cells)
                    value = sum(c.value * c.count for c in cells) / count
                leaf_values[(obj, column)] = (value, count)
                if column in forecast_cols:
                    forecast_hits += 1
        if cursor.mode in ("forecast", "scenario"):
            if not forecast_cols:
                raise ForecastUnavailable("cursor is in forecast mode but no forecast column is visible")
            if forecast_hits == 0:
                raise ForecastUnavailable(
                    f"no persisted forecasts cover [{cursor.ts_from}, {cursor.ts_to})")

        root = self._build_tree(mode, objects)
        self._fill(root, mode, leaf_values)
        unmapped = tuple(o for o in self.store.objects() if o not in set(objects))
        return HyperTable(root, mode, cursor, self.store.version, unmapped)

    def set_cursor(self, table: HyperTable, cursor: TimeCursor) -> HyperTable:
        return self.build(table.mode, cursor)

    def edit_mode(self, table: HyperTable, mode: AggMode) -> HyperTable:
        return self.build(mode, table.cursor)

    def _build_tree(self, mode: AggMode, objects) -> HTNode:
        paths = {obj: self.hierarchy.path(obj, mode.levels) for obj in objects}
        top_labels = sorted({p[0] for p in paths.values()})

        def make(level_idx: int, label: str, members) -> HTNode:
            node = HTNode(mode.levels[level_idx], label)
            if level_idx == len(mode.levels) - 1:
                return node
            groups = {}
            for obj in members:
                groups.setdefault(paths[obj][level_idx + 1], []).append(obj)
            node.children = [make(level_idx + 1, lab, groups[lab]) for lab in sorted(groups)]
            return node

        if len(top_labels) == 1:
            members = sorted(paths)
            return make(0, top_labels[0], members)
        root = HTNode("total", "all")
        for label in top_labels:
            members = sorted(o for o, p in paths.items() if p[0] == label)
            root.children.append(make(0, label, members))
        return root

    def _fill(self, root: HTNode, mode: AggMode, leaf_values):
        object_level = mode.levels[-1]

        def fill(node: HTNode):
            if not node.children and node.level == object_level:
                for column in mode.visible_columns:
                    value_count = leaf_values.get((node.label, column))
                    node.cells[column] = self._cell(mode, column, value_count)
                return
            for child in node.children:
                fill(child)
            for column in mode.visible_columns:
                agg = mode.agg_for(column)
                present = [child.cells[column] for child in node.children
                           if child.cells[column].value is not None]
                if not present:
                    node.cells[column] = self._cell(mode, column, None)
                    continue
                count = sum(c.count for c in present)
                if agg == "sum":
                    value = 0.0
                    for c in present:
                        value += c.value
                else:
                    value = sum(c.value * c.count for c in present) / count
                node.cells[column] = self._cell(mode, column, (value, count))

        fill(root)

    @staticmethod
    def _cell(mode: AggMode, column: str, value_count) -> HTCell:
        if value_count is None:
            return HTCell(None, 0, None)
        value, count = value_count
        rule = mode.rule_for(column)
        return HTCell(value, count, rule.classify(value) if rule else None)


# --- reports -----------------------------------------------------------------

@dataclass
class Report:
    table: HyperTable

    SCHEMA = "hypertable-report/1"

    def to_json_obj(self) -> dict:
        t = self.table
        return {
            "schema": self.SCHEMA,
            "mode": t.mode.to_json(),
            "cursor": t.cursor.to_json(),
            "version": t.built_at_version,
            "unmapped": list(t.unmapped),
            "tree": t.root.to_json(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True, indent=2)

    def to_text(self) -> str:
        lines = []
        columns = self.table.mode.visible_columns

        def fmt(node: HTNode, depth: int):
            cells = []
            for c in columns:
                cell = node.cells.get(c)
                if cell is None or cell.value is None:
                    cells.append(f"{c}=absent")
                else:
                    suffix = f" ({cell.color})" if cell.color else ""
                    cells.append(f"{c}={cell.value:.3f}{suffix}")
            lines.append("  " * depth + f"{node.label} [{node.level}]  " + "  ".join(cells))
            for child in node.children:
                fmt(child, depth + 1)

        fmt(self.table.root, 0)
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        t = self.table
        columns = t.mode.visible_columns
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        header = list(t.mode.levels)
        for c in columns:
            header += [c, f"{c}_count", f"{c}_color"]
        writer.writerow(header)
        for leaf in t.object_leaves():
            path = self._path_to(leaf)
            row = list(path)
            for c in columns:
                cell = leaf.cells[c]
                row += ["" if cell.value is None else repr(cell.value),
                        cell.count, cell.color or ""]
            writer.writerow(row)
        return buf.getvalue()

    def _path_to(self, target: HTNode):
        def walk(node, acc):
            acc = acc + [node.label]
            if node is target:
                return acc
            for child in node.children:
                found = walk(child, acc)
                if found:
                    return found
            return None

        path = walk(self.table.root, [])
        # pad when the table root is the synthetic multi-city node
        want = len(self.table.mode.levels)
        return ([""] * (want - len(path)) + path) if len(path) < want else path[-want:]

    def write(self, out_dir, basename: str = "hypertable") -> dict:
        from pathlib import Path
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "text": out / f"{basename}.txt",
            "json": out / f"{basename}.json",
            "csv": out / f"{basename}.csv",
        }
        paths["text"].write_text(self.to_text(), encoding="utf-8")
        paths["json"].write_text(self.to_json(), encoding="utf-8")
        paths["csv"].write_text(self.to_csv(), encoding="utf-8")
        return {k: str(v) for k, v in paths.items()}


def to_report(table: HyperTable) -> Report:
    return Report(table)
