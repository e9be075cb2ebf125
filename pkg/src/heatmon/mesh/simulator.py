"""Deterministic discrete-event simulation of the collection mesh.

End devices sleep; inside an awake window they transmit one frame with
whatever readings their meters buffered since the last window. Frames
walk parent links (including repeater chains) to the segment coordinator.
A device whose ancestor chain is dead falls back to the cellular channel
after a configurable timeout, at a per-frame cost.

Everything is driven by integer simulation seconds. Identical
(config, seed, reading source) produce byte-identical frame traces.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Optional

from ..errors import FallbackDisabled
from ..ingest.normalize import RawReading
from .leaks import LeakEvent, localize_leak
from .topology import Mesh


@dataclass(frozen=True)
class Frame:
    frame_id: str
    source: str
    payload: tuple             # RawReading tuple
    hop_path: tuple
    created_at: int
    delivered_at: int
    transport: str             # "mesh" | "cellular"

    def to_json(self) -> dict:
        return {
            "frame_id": self.frame_id,
            "source": self.source,
            "payload": [r.to_json() for r in self.payload],
            "hop_path": list(self.hop_path),
            "created_at": self.created_at,
            "delivered_at": self.delivered_at,
            "transport": self.transport,
        }


@dataclass
class LeakAlert:
    pipeline_id: str
    segment: tuple
    est_pos: float
    confidence: float
    onset: int
    detected_at: int

    def to_json(self) -> dict:
        return {"pipeline_id": self.pipeline_id, "segment": list(self.segment),
                "est_pos": self.est_pos, "confidence": self.confidence,
                "onset": self.onset, "detected_at": self.detected_at}


class MeshSimulation:
    def __init__(self, mesh: Mesh, seed: int = 0):
        self.mesh = mesh
        self.seed = seed
        self._rng = random.Random(seed)
        self._frame_seq = 0
        self.buffers = {d: [] for d in mesh.end_devices()}
        self.unreachable_since = {}
        self.readings_generated = 0
        self.readings_lost = 0
        self.cellular_frames = 0
        self.cellular_cost = 0.0
        self.delivered = []
        self.alerts = []
        self._kill_schedule = []    # (t, node_id)
        self._leak_events = []      # LeakEvent, pending localization
        self.now = 0

    # --- inputs ---------------------------------------------------------

    def feed(self, device_id: str, readings):
        """Buffer meter readings at a device (the generation step)."""
        readings = list(readings)
        self.buffers[device_id].extend(readings)
        self.readings_generated += len(readings)

    def schedule_kill(self, t: int, node_id: str):
        self._kill_schedule.append((int(t), node_id))
        self._kill_schedule.sort()

    def inject_leak(self, event: LeakEvent):
        self._leak_events.append(event)

    def kill_node(self, node_id: str):
        self.mesh.nodes[node_id].battery = 0.0

    # --- state probes -----------------------------------------------------

    def node_alive(self, node_id: str) -> bool:
        return self.mesh.nodes[node_id].battery > 0

    def mesh_path(self, device_id: str):
        """Hop path to the coordinator if every hop is alive, else None."""
        path = self.mesh.path_to_coordinator(device_id)
        if all(self.node_alive(n) for n in path):
            return path
        return None

    def buffered_readings(self) -> int:
        return sum(len(b) for b in self.buffers.values())

    # --- the round --------------------------------------------------------

    def run_round(self, t: int):
        """One collection round at simulation second ``t``.

        Every awake, live end device emits one frame; devices cut off
        from their coordinator long enough fall back to cellular.
        Returned frames are ordered by (source node, frame id).
        """
        t = int(t)
        self.now = max(self.now, t)
        frames = []
        for dev in self.mesh.end_devices():
            node = self.mesh.nodes[dev]
            if node.battery <= 0 or not node.duty_cycle.awake(t):
                continue
            path = self.mesh_path(dev)
            if path is not None:
                self.unreachable_since.pop(dev, None)
                frames.append(self._emit_mesh(dev, path, t))
                continue
            since = self.unreachable_since.setdefault(dev, t)
            if (self.mesh.settings.fallback_enabled
                    and t - since >= self.mesh.settings.fallback_timeout
                    and self.buffers[dev]):
                frames.append(self._cellular_frame(dev, t))
        frames.sort(key=lambda f: (f.source, f.frame_id))
        self.delivered.extend(frames)
        return frames

    def _next_frame_id(self) -> str:
        self._frame_seq += 1
        return f"frm-{self._frame_seq:08d}"

    def _emit_mesh(self, dev: str, path, t: int) -> Frame:
        payload = tuple(self.buffers[dev])
        self.buffers[dev].clear()
        settings = self.mesh.settings
        if settings.loss_rate > 0 and self._rng.random() < settings.loss_rate:
            self.readings_lost += len(payload)
            payload = ()
        self.mesh.nodes[dev].battery = max(0.0, self.mesh.nodes[dev].battery - settings.tx_cost)
        for relay in path[1:-1]:
            node = self.mesh.nodes[relay]
            node.battery = max(0.0, node.battery - settings.relay_cost)
        return Frame(self._next_frame_id(), dev, payload, tuple(path), t, t, "mesh")

    def _cellular_frame(self, dev: str, t: int) -> Frame:
        payload = tuple(self.buffers[dev])
        self.buffers[dev].clear()
        self.cellular_frames += 1
        self.cellular_cost += 1.0
        settings = self.mesh.settings
        self.mesh.nodes[dev].battery = max(0.0, self.mesh.nodes[dev].battery - settings.tx_cost)
        return Frame(self._next_frame_id(), dev, payload,
                     (dev, self.mesh.cellular_gateway),
                     t, t + settings.cellular_latency, "cellular")

    def fallback_to_cellular(self, node_id: str, t: int) -> Frame:
        """Deliver a cut-off device's buffer over the cellular channel."""
        if not self.mesh.settings.fallback_enabled:
            raise FallbackDisabled("cellular fallback is switched off; readings stay buffered")
        since = self.unreachable_since.get(node_id)
        if since is None or t - since < self.mesh.settings.fallback_timeout:
            raise ValueError(f"{node_id} has not been unreachable for "
                             f"{self.mesh.settings.fallback_timeout} s at t={t}")
        frame = self._cellular_frame(node_id, t)
        self.delivered.append(frame)
        return frame

    # --- batch driver -------------------------------------------------------

    def run(self, until: int, source=None):
        """Run generation + collection rounds from t=0 through ``until``.

        ``source`` provides meter readings: ``generation_times(until)``
        and ``readings_at(t) -> [(device_id, RawReading), ...]``.
        Generation at a tick happens before transmission at the same tick.
        """
        ticks = set()
        for dev in self.mesh.end_devices():
            dc = self.mesh.nodes[dev].duty_cycle
            ticks.update(range(dc.phase, int(until) + 1, dc.wake_period))
        gen_times = []
        if source is not None:
            gen_times = [t for t in source.generation_times(until) if t <= until]
            ticks.update(gen_times)
        ticks.update(t for t, _ in self._kill_schedule if t <= until)
        ticks.update(e.onset for e in self._leak_events if e.onset <= until)
        gen_set = set(gen_times)
        for t in sorted(ticks):
            while self._kill_schedule and self._kill_schedule[0][0] <= t:
                _, node_id = self._kill_schedule.pop(0)
                self.kill_node(node_id)
            if source is not None and t in gen_set:
                for device_id, reading in source.readings_at(t):
                    self.feed(device_id, [reading])
            still_pending = []
            for event in self._leak_events:
                if event.onset <= t:
                    loc = localize_leak(self.mesh, event)
                    self.alerts.append(LeakAlert(
                        loc.pipeline_id, loc.segment, loc.est_pos,
                        loc.confidence, event.onset, t))
                else:
                    still_pending.append(event)
            self._leak_events = still_pending
            self.run_round(t)
        return self.delivered


def write_trace(frames, path):
    """Frame trace as NDJSON, one frame per line, deterministic bytes."""
    with open(path, "w", encoding="utf-8") as fh:
        for f in frames:
            fh.write(json.dumps(f.to_json(), sort_keys=True, separators=(",", ":")) + "\n")


def write_alerts(alerts, path):
    with open(path, "w", encoding="utf-8") as fh:
        for a in alerts:
            fh.write(json.dumps(a.to_json(), sort_keys=True, separators=(",", ":")) + "\n")


class ListSource:
    """Reading source backed by a precomputed {t: [(device, RawReading)]} map."""

    def __init__(self, schedule: dict):
        self.schedule = {int(t): list(v) for t, v in schedule.items()}

    def generation_times(self, until):
        return sorted(t for t in self.schedule if t <= until)

    def readings_at(self, t):
        return self.schedule.get(t, [])
