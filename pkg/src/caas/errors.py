"""Shared exception hierarchy for the certification engine.

Every domain error carries an ``http_status`` so the gateway can map it to
a response code without per-endpoint boilerplate, and a stable ``code``
(the class name) for machine-readable error payloads.
"""

from __future__ import annotations


class CaasError(Exception):
    """Base class for all engine-domain errors."""

    http_status = 400

    @property
    def code(self) -> str:
        return type(self).__name__


# --- document / input validation ---------------------------------------

class MalformedDocument(CaasError):
    """A catalog, metric or environment document failed structural validation."""


class MalformedEvidence(CaasError):
    """An evidence record failed structural validation."""


class NonSerializable(CaasError):
    """A record cannot be canonically serialized (non-JSON type, NaN, infinity)."""


class BadConfig(CaasError):
    """Engine configuration is invalid."""


class PortInUse(CaasError):
    """The configured listen address is already bound."""

    http_status = 500


# --- catalog store ------------------------------------------------------

class DuplicateControlId(MalformedDocument):
    """A control id appears more than once within a catalog document."""


class VersionConflict(CaasError):
    """Same catalog id and version re-ingested with different content."""

    http_status = 409


class UnknownCatalog(CaasError):
    http_status = 404


class UnknownControl(CaasError):
    http_status = 404


class EmptyMetricSet(CaasError):
    """A mapping confirmation arrived without any metric ids."""


# --- metric registry / rule language ------------------------------------

class DuplicateMetricId(CaasError):
    http_status = 409


class UnknownMetric(CaasError):
    http_status = 404


class InvalidTargetOnScale(CaasError):
    """A target value is not admissible on the metric's scale."""


class RuleSyntaxError(CaasError):
    """Rule text does not match the rule grammar."""

    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class UnknownOperator(RuleSyntaxError):
    """A clause uses an operator outside the supported set."""


class ValueNotOnScale(CaasError):
    """An observed value is absent from the metric's declared ordinal/nominal values."""

    http_status = 422


class IncomparableValues(CaasError):
    """A clause compares values of types that have no defined order."""

    http_status = 422


# --- certification graph ------------------------------------------------

class UnknownTarget(CaasError):
    http_status = 404


# --- extractors ----------------------------------------------------------

class ScoreOutOfRange(CaasError):
    """A declared model score lies outside [0, 1]."""


# --- mapping assistant ---------------------------------------------------

class EmptyCandidateSet(CaasError):
    """No candidate documents were supplied for ranking."""


class EmptyControlText(CaasError):
    """The query control has no usable text."""


# --- orchestrator ---------------------------------------------------------

class UnknownScope(CaasError):
    http_status = 404


class DuplicateScope(CaasError):
    http_status = 409


class ScopeMismatch(CaasError):
    """An evaluation was applied to a certificate of a different audit scope."""


# --- trust log -------------------------------------------------------------

class BadSignature(CaasError):
    """A submitted signature does not verify against the source's key."""


class UnknownSource(CaasError):
    """The signing source is not present in the keyring."""

    http_status = 404
