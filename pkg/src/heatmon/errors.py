"""Exception hierarchy shared by all heatmon subsystems.

Every error carries a stable machine ``code`` (snake_case of the class name)
so the HTTP layer and the CLI can map failures without string matching.
"""

import re


def _snake(name: str) -> str:
    return re.sub(r"(?<!^)(?=[A-Z])", "_", name).lower()


class HeatmonError(Exception):
    """Base class for all domain errors."""

    @property
    def code(self) -> str:
        return _snake(type(self).__name__)


class ConfigError(HeatmonError):
    pass


# --- mesh -------------------------------------------------------------

class TopologyError(HeatmonError):
    pass


class CyclicParentage(TopologyError):
    pass


class OrphanNode(TopologyError):
    pass


class BadSpacing(TopologyError):
    pass


class FallbackDisabled(HeatmonError):
    pass


class NoLeak(HeatmonError):
    pass


class UninstrumentedSegment(HeatmonError):
    pass


# --- ingest -----------------------------------------------------------

class UnknownUnit(HeatmonError):
    pass


class UnknownDevice(HeatmonError):
    pass


class UnknownMetric(HeatmonError):
    pass


class EmptyBatch(HeatmonError):
    pass


class StoreUnavailable(HeatmonError):
    pass


# --- cube store -------------------------------------------------------

class KeyConflict(HeatmonError):
    pass


class QuorumUnavailable(HeatmonError):
    pass


class ChecksumMismatch(HeatmonError):
    pass


class UnknownNode(HeatmonError):
    pass


# --- aggregation ------------------------------------------------------

class DuplicateName(HeatmonError):
    pass


class NonAssociativeReduce(HeatmonError):
    pass


class UnknownFunction(HeatmonError):
    pass


# --- forecast ---------------------------------------------------------

class SeriesTooShort(HeatmonError):
    pass


class DegenerateDesign(HeatmonError):
    pass


class EmptyCandidates(HeatmonError):
    pass


class MissingExogenous(HeatmonError):
    pass


class InsufficientLags(HeatmonError):
    pass


# --- hypertable -------------------------------------------------------

class InvalidThresholds(HeatmonError):
    pass


class UnknownColumn(HeatmonError):
    pass


class UnmappedObject(HeatmonError):
    pass


class UnknownObject(HeatmonError):
    pass


class ForecastUnavailable(HeatmonError):
    pass


class UnknownMode(HeatmonError):
    pass
