"""Exception hierarchy shared by all cruisesafe modules.

Every error can render itself as a flat record so the CLI can emit
machine-parsable failures.
"""

from __future__ import annotations


class CruiseSafeError(Exception):
    """Base class for all library errors."""

    def record(self) -> dict:
        return {"error": type(self).__name__, "message": str(self)}


class ParseError(CruiseSafeError):
    """Malformed input document. Carries the offending line and/or field."""

    def __init__(self, message: str, *, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)

    def record(self) -> dict:
        rec = super().record()
        rec["line"] = self.line
        rec["field"] = self.field
        return rec


class DanglingReference(CruiseSafeError):
    def __init__(self, ref: str, where: str = ""):
        self.ref = ref
        super().__init__(f"unresolved reference {ref!r}" + (f" in {where}" if where else ""))


class DuplicateId(CruiseSafeError):
    def __init__(self, ident: str):
        self.ident = ident
        super().__init__(f"duplicate id {ident!r}")


class UnknownId(CruiseSafeError):
    def __init__(self, ident: str):
        self.ident = ident
        super().__init__(f"unknown id {ident!r}")


class ResumeWithoutMemory(CruiseSafeError):
    """DriverResume requested while no set speed is stored."""


class MissingRating(CruiseSafeError):
    def __init__(self, hazard, situation):
        self.pair = (hazard, situation)
        super().__init__(f"no rating for hazard {hazard} in situation {situation}")


class UngroupedHazard(CruiseSafeError):
    def __init__(self, hazard):
        self.hazard = hazard
        super().__init__(f"hazard {hazard} is not assigned to any safety goal")


class InvalidScenario(CruiseSafeError):
    def __init__(self, message: str, *, field: str | None = None, scenario_id: str | None = None):
        self.field = field
        self.scenario_id = scenario_id
        prefix = f"[{scenario_id}] " if scenario_id else ""
        suffix = f" (field {field!r})" if field else ""
        super().__init__(f"{prefix}{message}{suffix}")

    def record(self) -> dict:
        rec = super().record()
        rec["field"] = self.field
        rec["scenario_id"] = self.scenario_id
        return rec


class CalibrationDiverged(CruiseSafeError):
    pass


class OutOfEnvelope(CruiseSafeError):
    pass


class TableMismatch(CruiseSafeError):
    """Monitor table was calibrated for different plant/controller params."""
