"""Operator-facing control server: tables, command lifecycle, HTTP API."""

from .core import (AuthError, CommandEnvelope, CommandError, ControlServer,
                   LockedOutError)
from .persist import EventLog, load_snapshot, save_snapshot

__all__ = [
    "AuthError", "CommandEnvelope", "CommandError", "ControlServer",
    "LockedOutError", "EventLog", "load_snapshot", "save_snapshot",
]
