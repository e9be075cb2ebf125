"""GeoJSON export: hyper-table leaf values as color-classed map points."""

from __future__ import annotations

import json
from pathlib import Path


def export_geojson(table, coords: dict, out_path=None):
    """FeatureCollection with one Point per object leaf.

    ``coords`` maps object_id -> (lon, lat). Objects without coordinates
    are skipped and listed in the second return value; the collection is
    still produced (and written, when out_path is given) for the rest.
    """
    features = []
    missing = []
    levels = table.mode.levels
    for leaf in table.object_leaves():
        object_id = leaf.label
        lonlat = coords.get(object_id)
        if lonlat is None:
            missing.append(object_id)
            continue
        props = {"object_id": object_id}
        path = _path_labels(table, leaf)
        for level, label in zip(levels, path):
            if level != "object":
                props[level] = label
        for column, cell in leaf.cells.items():
            props[column] = cell.value
            props[f"{column}_count"] = cell.count
            props[f"{column}_color"] = cell.color
        features.append({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [lonlat[0], lonlat[1]]},
            "properties": props,
        })
    collection = {"type": "FeatureCollection", "features": features}
    if out_path is not None:
        out = Path(out_path)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(json.dumps(collection, sort_keys=True, indent=2), encoding="utf-8")
    return collection, missing


def _path_labels(table, target):
    def walk(node, acc):
        acc = acc + [node.label]
        if node is target:
            return acc
        for child in node.children:
            found = walk(child, acc)
            if found:
                return found
        return None

    path = walk(table.root, [])
    want = len(table.mode.levels)
    return path[-want:] if len(path) >= want else [""] * (want - len(path)) + path
