import json

import pytest

from heatmon.errors import ForecastUnavailable, InvalidThresholds, UnknownColumn
from heatmon.fixtures import build_store_fixture, hierarchy_rows, kuznetsk_small
from heatmon.hypertable import (
    AggMode,
    ColorRule,
    HierarchyMap,
    HyperTableBuilder,
    TimeCursor,
    to_report,
)
from heatmon.store import FactRecord, SliceSpec

from conftest import T0, make_store

FX = kuznetsk_small()
DAY = 86400
WINDOW = TimeCursor(T0, T0 + DAY)


@pytest.fixture(scope="module")
def fixture_store(tmp_path_factory):
    store = make_store(tmp_path_factory.mktemp("ht") / "store", block_size_limit=1 << 20)
    build_store_fixture(store, FX, hours=7 * 24)
    return store


@pytest.fixture
def builder(fixture_store):
    return HyperTableBuilder(fixture_store, HierarchyMap(hierarchy_rows(FX)))


def mode(**kw):
    kw.setdefault("mode_id", "test")
    kw.setdefault("visible_columns", ("heat_energy_kwh",))
    kw.setdefault("levels", ("city", "district", "network", "object"))
    return AggMode(**kw)


def direct_sum(store, obj, metric, cursor):
    cells = store.query_slice(
        SliceSpec.make([obj], [metric], cursor.ts_from, cursor.ts_to, "raw", None)).cells
    return sum(c.value for c in cells), len(cells)


def test_single_object_single_column_identity(tmp_path):
    store = make_store(tmp_path / "s", block_size_limit=1 << 20)
    store.append([FactRecord("obj-01", "heat_energy_kwh", T0 + 3600 * h, 2.0) for h in range(24)])
    builder = HyperTableBuilder(store, HierarchyMap(
        [{"object_id": "obj-01", "city": "kuznetsk", "district": "north", "network": "n1"}]))
    table = builder.build(mode(), WINDOW)
    (leaf,) = table.object_leaves()
    assert table.root.cells["heat_energy_kwh"].value == leaf.cells["heat_energy_kwh"].value == 48.0


def test_district_and_city_sums_match_direct_store_sums(builder, fixture_store):
    table = builder.build(mode(), WINDOW)
    districts = table.root.children
    assert [d.label for d in districts] == ["center", "north", "south"]
    for district in districts:
        leaves = [n for n in district.walk() if n.level == "object"]
        assert len(leaves) == 4
        # per-subtree recomputation oracle straight from the fact store
        expected = 0.0
        for leaf in leaves:
            value, _ = direct_sum(fixture_store, leaf.label, "heat_energy_kwh", WINDOW)
            assert leaf.cells["heat_energy_kwh"].value == pytest.approx(value, rel=1e-12)
            expected += leaf.cells["heat_energy_kwh"].value
        assert district.cells["heat_energy_kwh"].value == expected  # child-order fold, exact
    assert table.root.cells["heat_energy_kwh"].value == sum(
        d.cells["heat_energy_kwh"].value for d in districts)


def test_sum_consistency_holds_on_every_internal_node(builder):
    table = builder.build(mode(visible_columns=("heat_energy_kwh", "electric_kwh")), WINDOW)
    for node in table.root.walk():
        if not node.children:
            continue
        for column in table.mode.visible_columns:
            present = [c.cells[column] for c in node.children if c.cells[column].value is not None]
            folded = 0.0
            for cell in present:
                folded += cell.value
            assert node.cells[column].value == folded
            assert node.cells[column].count == sum(c.count for c in present)


def test_mean_columns_are_count_weighted(builder):
    table = builder.build(
        mode(visible_columns=("supply_temp_c",), agg_per_column=(("supply_temp_c", "mean"),)),
        WINDOW)
    for node in table.root.walk():
        if not node.children:
            continue
        present = [c.cells["supply_temp_c"] for c in node.children
                   if c.cells["supply_temp_c"].value is not None]
        weighted = sum(c.value * c.count for c in present) / sum(c.count for c in present)
        assert node.cells["supply_temp_c"].value == weighted


def test_color_classes_by_interval_membership():
    rule = ColorRule("heat_energy_kwh", (100.0, 200.0), ("low", "mid", "high"))
    assert rule.classify(50.0) == "low"
    assert rule.classify(150.0) == "mid"
    assert rule.classify(100.0) == "mid"   # threshold belongs to the upper class
    assert rule.classify(250.0) == "high"


def test_colors_applied_from_mode_rules(builder):
    m = mode(color_rules=(ColorRule("heat_energy_kwh", (100.0, 200.0), ("low", "mid", "high")),))
    table = builder.build(m, WINDOW)
    for leaf in table.object_leaves():
        cell = leaf.cells["heat_energy_kwh"]
        expected = "low" if cell.value < 100 else ("mid" if cell.value < 200 else "high")
        assert cell.color == expected


def test_set_cursor_idempotent_and_equals_fresh_build(builder):
    m = mode()
    table = builder.build(m, WINDOW)
    same = builder.set_cursor(table, WINDOW)
    assert to_report(same).to_json() == to_report(table).to_json()
    shifted_cursor = TimeCursor(T0 + 3600, T0 + DAY + 3600)
    shifted = builder.set_cursor(table, shifted_cursor)
    fresh = builder.build(m, shifted_cursor)
    assert to_report(shifted).to_json() == to_report(fresh).to_json()
    assert shifted.shape() == table.shape()


def test_empty_window_keeps_structure_with_absent_cells(builder):
    table = builder.build(mode(), WINDOW)
    far_future = TimeCursor(T0 + 400 * DAY, T0 + 401 * DAY)
    empty = builder.set_cursor(table, far_future)
    assert empty.shape() == table.shape()
    for node in empty.root.walk():
        cell = node.cells["heat_energy_kwh"]
        assert cell.value is None and cell.count == 0 and cell.color is None


def test_edit_mode_removing_level_collapses_one_stratum(builder):
    base = mode(levels=("city", "district", "object"))
    table = builder.build(base, WINDOW)
    assert table.depth() == 3
    collapsed = builder.edit_mode(table, mode(levels=("city", "object")))
    assert collapsed.depth() == 2
    assert all(child.level == "object" for child in collapsed.root.children)
    assert collapsed.root.cells["heat_energy_kwh"].value == pytest.approx(
        table.root.cells["heat_energy_kwh"].value, rel=1e-12)


def test_hiding_columns_leaves_one_cell_per_node(builder):
    table = builder.build(mode(visible_columns=("heat_energy_kwh", "flow_m3h")), WINDOW)
    slim = builder.edit_mode(table, mode(visible_columns=("flow_m3h",)))
    for node in slim.root.walk():
        assert list(node.cells) == ["flow_m3h"]


def test_descending_thresholds_rejected():
    with pytest.raises(InvalidThresholds):
        ColorRule("heat_energy_kwh", (200.0, 100.0), ("a", "b", "c"))


def test_unknown_column_rejected():
    with pytest.raises(UnknownColumn):
        mode(visible_columns=("no_such_metric",))
    with pytest.raises(UnknownColumn):
        mode(visible_columns=("forecast.no_such_metric",))


def test_build_edit_cursor_commute(builder):
    m1 = mode()
    m2 = mode(visible_columns=("electric_kwh",), levels=("city", "district", "object"))
    c2 = TimeCursor(T0 + DAY, T0 + 2 * DAY)
    t = builder.build(m1, WINDOW)
    a = builder.edit_mode(builder.set_cursor(t, c2), m2)
    b = builder.set_cursor(builder.edit_mode(t, m2), c2)
    c = builder.build(m2, c2)
    assert to_report(a).to_json() == to_report(b).to_json() == to_report(c).to_json()


def test_unmapped_objects_reported_not_crashed(builder, fixture_store):
    table = builder.build(mode(), WINDOW)
    assert FX.weather_object in table.unmapped  # has data, carries no hierarchy path
    mapped_labels = {leaf.label for leaf in table.object_leaves()}
    assert FX.weather_object not in mapped_labels


def test_forecast_mode_requires_persisted_forecasts(builder, fixture_store):
    m = mode(visible_columns=("heat_energy_kwh", "forecast.heat_energy_kwh"))
    horizon_cursor = TimeCursor(T0 + 7 * DAY, T0 + 8 * DAY, "forecast")
    with pytest.raises(ForecastUnavailable):
        builder.build(m, horizon_cursor)
    fixture_store.append([
        FactRecord("obj-01", "forecast.heat_energy_kwh", T0 + 7 * DAY + 3600 * h, 5.0)
        for h in range(24)
    ])
    table = builder.build(m, horizon_cursor)
    leaf = next(l for l in table.object_leaves() if l.label == "obj-01")
    assert leaf.cells["forecast.heat_energy_kwh"].value == 120.0
    assert leaf.cells["heat_energy_kwh"].value is None  # no actuals that far out


def test_scenario_cursor_reads_alternate_namespace(builder, fixture_store):
    fixture_store.append([
        FactRecord("obj-01", "forecast.plan-b.heat_energy_kwh", T0 + 9 * DAY + 3600 * h, 9.0)
        for h in range(24)
    ])
    m = mode(visible_columns=("forecast.heat_energy_kwh",))
    cursor = TimeCursor(T0 + 9 * DAY, T0 + 10 * DAY, "scenario", scenario="plan-b")
    table = builder.build(m, cursor)
    leaf = next(l for l in table.object_leaves() if l.label == "obj-01")
    assert leaf.cells["forecast.heat_energy_kwh"].value == 216.0


def test_report_three_forms_contain_identical_values(builder):
    table = builder.build(mode(), WINDOW)
    report = to_report(table)
    obj = json.loads(report.to_json())
    assert obj == report.to_json_obj()      # serialization round-trip

    leaves = {leaf.label: leaf.cells["heat_energy_kwh"].value
              for leaf in table.object_leaves()}
    csv_lines = report.to_csv().splitlines()
    assert len(csv_lines) - 1 == len(table.object_leaves())  # leaf-enumeration count
    header = csv_lines[0].split(",")
    oi, vi = header.index("object"), header.index("heat_energy_kwh")
    for line in csv_lines[1:]:
        parts = line.split(",")
        assert float(parts[vi]) == leaves[parts[oi]]
    text = report.to_text()
    for label, value in leaves.items():
        assert f"{label} [object]  heat_energy_kwh={value:.3f}" in text


def test_empty_hierarchy_reports_headers_only(tmp_path):
    store = make_store(tmp_path / "s")
    builder = HyperTableBuilder(store, HierarchyMap([]))
    table = builder.build(mode(), WINDOW)
    report = to_report(table)
    assert report.to_csv().splitlines()[1:] == []
    assert json.loads(report.to_json())["tree"]["children"] == []
