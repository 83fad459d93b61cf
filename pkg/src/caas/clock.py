"""Engine clock with a real mode and a test-friendly virtual mode.

All scheduling goes through this clock so certification cycles can be
driven deterministically over a virtual horizon.
"""

from __future__ import annotations

from datetime import datetime, timedelta, timezone

from .errors import BadConfig

DEFAULT_VIRTUAL_EPOCH = datetime(2026, 1, 1, tzinfo=timezone.utc)


def format_ts(ts: datetime) -> str:
    """ISO-8601 UTC with trailing Z, microseconds only when present."""
    ts = ts.astimezone(timezone.utc)
    if ts.microsecond:
        return ts.strftime("%Y-%m-%dT%H:%M:%S.%f") + "Z"
    return ts.strftime("%Y-%m-%dT%H:%M:%S") + "Z"


def parse_ts(text: str) -> datetime:
    ts = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


class EngineClock:
    """Clock abstraction; ``virtual`` mode only moves via :meth:`advance`."""

    def __init__(self, mode: str = "virtual", epoch: datetime | None = None):
        if mode not in ("real", "virtual"):
            raise BadConfig(f"unknown clock mode {mode!r}")
        self.mode = mode
        self._virtual_now = epoch or DEFAULT_VIRTUAL_EPOCH

    def now(self) -> datetime:
        if self.mode == "real":
            return datetime.now(timezone.utc)
        return self._virtual_now

    def advance(self, seconds: float) -> datetime:
        if self.mode != "virtual":
            raise BadConfig("advance() is only available in virtual clock mode")
        if seconds < 0:
            raise BadConfig("clock cannot move backwards")
        self._virtual_now += timedelta(seconds=seconds)
        return self._virtual_now

    def restore(self, ts: datetime) -> None:
        """Reset the virtual clock to a persisted instant (journal replay)."""
        if self.mode == "virtual" and ts > self._virtual_now:
            self._virtual_now = ts
