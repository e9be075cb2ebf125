"""Leak localization from conductance anomalies at heat-main terminals.

Each terminal measures a scalar anomaly magnitude that decays with
distance to the wetting point: a_i = severity / (1 + d_i). The segment
between the adjacent terminal pair with the largest combined magnitude
contains the leak; inverting the two magnitudes inside that segment
gives the position estimate exactly when the signal is noise-free.

The anomaly model is a stand-in for the physical wire measurement: any
monotone-in-distance signal supports segment containment, and this one
is exactly invertible, which keeps the localization testable. A leak
sitting exactly on a terminal is assigned to the downstream
(higher-position) segment.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import NoLeak, UninstrumentedSegment
from .topology import Mesh, Pipeline


@dataclass(frozen=True)
class LeakEvent:
    pipeline_id: str
    true_pos: float
    onset: int
    severity: float = 1.0

    def __post_init__(self):
        if not (0 < self.severity <= 1):
            raise ValueError("severity must be in (0, 1]")


@dataclass(frozen=True)
class LeakLocation:
    pipeline_id: str
    segment: tuple          # (terminal_id, terminal_id), pipeline-adjacent
    est_pos: float
    confidence: float       # in (0, 1]


def anomaly_magnitudes(pipeline: Pipeline, event: LeakEvent):
    """Noise-free terminal measurements for an active leak."""
    return [(t, event.severity / (1.0 + abs(t.pipeline_pos - event.true_pos)))
            for t in pipeline.terminals]


def localize_leak(mesh: Mesh, event: LeakEvent) -> LeakLocation:
    if event is None:
        raise NoLeak("no active leak event")
    pipeline = mesh.pipelines.get(event.pipeline_id)
    if pipeline is None:
        raise NoLeak(f"unknown pipeline {event.pipeline_id!r}")
    if not pipeline.instrumented or len(pipeline.terminals) < 2:
        raise UninstrumentedSegment(f"pipeline {event.pipeline_id} has no usable terminals")
    if not (0 <= event.true_pos <= pipeline.length_m):
        raise ValueError(f"leak position {event.true_pos} outside pipeline")

    mags = anomaly_magnitudes(pipeline, event)
    best = None
    for i in range(len(mags) - 1):
        (t1, a1), (t2, a2) = mags[i], mags[i + 1]
        score = a1 + a2
        if best is None or score >= best[0]:  # >= : ties go downstream
            best = (score, i)
    _, i = best
    (t1, a1), (t2, a2) = mags[i], mags[i + 1]

    # invert a = s / (1 + d) inside the segment: d1 + d2 = span
    span = t2.pipeline_pos - t1.pipeline_pos
    severity_est = (span + 2.0) / (1.0 / a1 + 1.0 / a2)
    d1 = severity_est / a1 - 1.0
    est = min(max(t1.pipeline_pos + d1, t1.pipeline_pos), t2.pipeline_pos)

    total = sum(a for _, a in mags)
    return LeakLocation(pipeline.pipeline_id, (t1.terminal_id, t2.terminal_id),
                        est, (a1 + a2) / total)
