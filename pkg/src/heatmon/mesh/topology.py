"""Cluster-tree mesh topology: coordinators, routers, duty-cycled end
devices, repeater chains on heat-main terminals.

Topology is a pure function of its config: node ids, parent links and
terminal layout come straight from the config dict, so two builds from
the same config are identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..errors import BadSpacing, ConfigError, CyclicParentage, OrphanNode

ROLES = ("coordinator", "router", "end_device", "repeater")

DEFAULT_SPACING = 300            # metres between heat-main terminals
DEFAULT_WAKE_PERIOD = 900
DEFAULT_AWAKE_WINDOW = 10
DEFAULT_MAX_TREE_DEPTH = 5
DEFAULT_FALLBACK_TIMEOUT = 1800
DEFAULT_CELLULAR_LATENCY = 60

CELLULAR_GATEWAY = "gsm-gateway"


@dataclass(frozen=True)
class DutyCycle:
    wake_period: int = DEFAULT_WAKE_PERIOD
    awake_window: int = DEFAULT_AWAKE_WINDOW
    phase: int = 0

    def awake(self, t: int) -> bool:
        return (t - self.phase) % self.wake_period < self.awake_window


@dataclass
class MeshNode:
    node_id: str
    role: str
    segment: str
    parent: Optional[str] = None
    position: tuple = (0.0, 0.0)
    duty_cycle: Optional[DutyCycle] = None
    battery: float = 1e18
    channel: str = "mesh"


@dataclass(frozen=True)
class Terminal:
    terminal_id: str
    pipeline_id: str
    pipeline_pos: float
    hosts_repeater: bool = False


@dataclass
class Pipeline:
    pipeline_id: str
    length_m: float
    spacing: float
    terminals: list
    instrumented: bool = True


@dataclass
class MeshSettings:
    fallback_enabled: bool = True
    fallback_timeout: int = DEFAULT_FALLBACK_TIMEOUT
    cellular_latency: int = DEFAULT_CELLULAR_LATENCY
    max_tree_depth: int = DEFAULT_MAX_TREE_DEPTH
    tx_cost: float = 1.0
    relay_cost: float = 1.0
    loss_rate: float = 0.0


@dataclass
class Mesh:
    nodes: dict
    segments: dict                 # segment_id -> sorted node ids
    coordinators: dict             # segment_id -> coordinator node id
    pipelines: dict
    settings: MeshSettings = field(default_factory=MeshSettings)
    cellular_gateway: str = CELLULAR_GATEWAY

    def end_devices(self):
        return sorted(n for n, node in self.nodes.items() if node.role == "end_device")

    def children_of(self, node_id):
        return sorted(n for n, node in self.nodes.items() if node.parent == node_id)

    def path_to_coordinator(self, node_id):
        """Parent walk [node, ..., coordinator]; raises on cycles/orphans."""
        path = [node_id]
        seen = {node_id}
        current = self.nodes[node_id]
        while current.role != "coordinator":
            parent = current.parent
            if parent is None or parent not in self.nodes:
                raise OrphanNode(f"{path[-1]} has no reachable coordinator")
            if parent in seen:
                raise CyclicParentage(f"parent cycle through {parent}")
            path.append(parent)
            seen.add(parent)
            current = self.nodes[parent]
        return path

    def tree_depth(self, node_id):
        """Hops to the coordinator, not counting repeater-chain links."""
        path = self.path_to_coordinator(node_id)
        return sum(1 for n in path[1:] if self.nodes[n].role != "repeater")

    def descendants(self, node_id):
        out = set()
        frontier = [node_id]
        while frontier:
            nid = frontier.pop()
            for child in self.children_of(nid):
                if child not in out:
                    out.add(child)
                    frontier.append(child)
        return sorted(out)


def _make_terminals(pipeline_id, length_m, spacing, hosts):
    if length_m <= 0 or spacing <= 0:
        raise BadSpacing(f"pipeline {pipeline_id}: non-positive length/spacing")
    steps = length_m / spacing
    if abs(steps - round(steps)) > 1e-9:
        raise BadSpacing(
            f"pipeline {pipeline_id}: length {length_m} m is not a multiple of {spacing} m")
    terminals = []
    for i in range(int(round(steps)) + 1):
        pos = i * spacing
        terminals.append(Terminal(f"T{int(pos)}", pipeline_id, float(pos),
                                  hosts_repeater=int(pos) in hosts))
    return terminals


def build_topology(config: dict) -> Mesh:
    """Build and validate a Mesh from a config mapping.

    Expected shape (all lists optional except one segment with a coordinator)::

        {"segments": [{"segment_id": ..., "coordinator": ...,
                       "routers": [{"id": ..., "parent": ...}],
                       "repeaters": [{"id": ..., "parent": ...}],
                       "end_devices": [{"id": ..., "parent": ...}]}],
         "pipelines": [{"pipeline_id": ..., "length_m": ..., "spacing": 300}],
         "duty": {"wake_period": 900, "awake_window": 10},
         "fallback": {...}, "battery": ..., "max_tree_depth": 5}
    """
    segments_cfg = config.get("segments", [])
    if not segments_cfg:
        raise ConfigError("mesh config names no segments")
    duty_cfg = config.get("duty", {})
    duty = DutyCycle(
        int(duty_cfg.get("wake_period", DEFAULT_WAKE_PERIOD)),
        int(duty_cfg.get("awake_window", DEFAULT_AWAKE_WINDOW)),
        int(duty_cfg.get("phase", 0)),
    )
    battery = float(config.get("battery", 1e18))
    fb = config.get("fallback", {})
    settings = MeshSettings(
        fallback_enabled=bool(fb.get("enabled", True)),
        fallback_timeout=int(fb.get("timeout", DEFAULT_FALLBACK_TIMEOUT)),
        cellular_latency=int(fb.get("cellular_latency", DEFAULT_CELLULAR_LATENCY)),
        max_tree_depth=int(config.get("max_tree_depth", DEFAULT_MAX_TREE_DEPTH)),
        tx_cost=float(config.get("tx_cost", 1.0)),
        relay_cost=float(config.get("relay_cost", 1.0)),
        loss_rate=float(config.get("loss_rate", 0.0)),
    )

    nodes = {}
    segments = {}
    coordinators = {}
    for si, seg in enumerate(segments_cfg):
        seg_id = seg.get("segment_id", f"seg-{si}")
        coord = seg.get("coordinator")
        if not coord:
            raise ConfigError(f"segment {seg_id}: exactly one coordinator required")
        members = []

        def add(node_id, role, parent=None, dc=None, pos=None):
            if node_id in nodes:
                raise ConfigError(f"duplicate node id {node_id!r}")
            nodes[node_id] = MeshNode(
                node_id, role, seg_id, parent,
                tuple(pos) if pos else (float(si * 1000), float(len(members) * 10)),
                dc, battery)
            members.append(node_id)

        add(coord, "coordinator", None, None, seg.get("position"))
        for row in seg.get("routers", []):
            add(row["id"], "router", row.get("parent", coord), None, row.get("position"))
        for row in seg.get("repeaters", []):
            add(row["id"], "repeater", row.get("parent", coord), None, row.get("position"))
        for row in seg.get("end_devices", []):
            dc = duty
            if "phase" in row or "wake_period" in row:
                dc = DutyCycle(int(row.get("wake_period", duty.wake_period)),
                               int(row.get("awake_window", duty.awake_window)),
                               int(row.get("phase", duty.phase)))
            add(row["id"], "end_device", row.get("parent", coord), dc, row.get("position"))
            nodes[row["id"]].battery = float(row.get("battery", battery))
        segments[seg_id] = sorted(members)
        coordinators[seg_id] = coord

    pipelines = {}
    for row in config.get("pipelines", []):
        pid = row["pipeline_id"]
        spacing = float(row.get("spacing", DEFAULT_SPACING))
        hosts = {int(h) for h in row.get("repeater_terminals", [])}
        pipelines[pid] = Pipeline(
            pid, float(row["length_m"]), spacing,
            _make_terminals(pid, float(row["length_m"]), spacing, hosts),
            instrumented=bool(row.get("instrumented", True)),
        )

    mesh = Mesh(nodes, segments, coordinators, pipelines, settings)
    _validate(mesh)
    return mesh


def _validate(mesh: Mesh):
    for seg_id, members in mesh.segments.items():
        coords = [n for n in members if mesh.nodes[n].role == "coordinator"]
        if len(coords) != 1:
            raise ConfigError(f"segment {seg_id}: expected 1 coordinator, found {len(coords)}")
    for node_id, node in sorted(mesh.nodes.items()):
        if node.role == "coordinator":
            if node.parent is not None:
                raise ConfigError(f"coordinator {node_id} must not have a parent")
            continue
        if node.parent is None:
            raise OrphanNode(f"{node_id} ({node.role}) has no parent")
        path = mesh.path_to_coordinator(node_id)  # raises CyclicParentage/OrphanNode
        if mesh.nodes[path[-1]].segment != node.segment:
            raise OrphanNode(f"{node_id} routes to a foreign segment coordinator")
        depth = mesh.tree_depth(node_id)
        if depth > mesh.settings.max_tree_depth:
            raise ConfigError(
                f"{node_id} sits at tree depth {depth} > max {mesh.settings.max_tree_depth}")
