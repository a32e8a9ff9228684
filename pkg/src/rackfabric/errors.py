"""Exceptions shared across modules."""

from __future__ import annotations


class Infeasible(Exception):
    """A decision set violates a hard constraint.

    Distinct from rejection: a rejected application is a legal outcome,
    an infeasible decision set is not.
    """

    def __init__(self, constraint: str, detail: str):
        super().__init__(f"{constraint}: {detail}")
        self.constraint = constraint
        self.detail = detail


class CapacityViolation(Infeasible):
    def __init__(self, detail: str):
        super().__init__("capacity", detail)


class ChannelDeficit(Infeasible):
    """More channels are needed than the rack-wide pool holds."""

    def __init__(self, needed: int, available: int):
        super().__init__("channels", f"needs {needed} channels, pool has {available}")
        self.needed = needed
        self.available = available
        self.deficit = needed - available
