from .leaks import LeakEvent, LeakLocation, anomaly_magnitudes, localize_leak
from .simulator import Frame, LeakAlert, ListSource, MeshSimulation, write_alerts, write_trace
from .topology import (
    CELLULAR_GATEWAY,
    DEFAULT_SPACING,
    DutyCycle,
    Mesh,
    MeshNode,
    MeshSettings,
    Pipeline,
    Terminal,
    build_topology,
)

__all__ = [
    "CELLULAR_GATEWAY",
    "DEFAULT_SPACING",
    "DutyCycle",
    "Frame",
    "LeakAlert",
    "LeakEvent",
    "LeakLocation",
    "ListSource",
    "Mesh",
    "MeshNode",
    "MeshSettings",
    "MeshSimulation",
    "Pipeline",
    "Terminal",
    "anomaly_magnitudes",
    "build_topology",
    "localize_leak",
    "write_alerts",
    "write_trace",
]
