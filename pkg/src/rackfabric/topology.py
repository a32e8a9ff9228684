"""Rack fabric model: nodes of disaggregated components on a shared WDM backplane.

Each node carries one CPU, one memory and one storage component, a node
controller hub (NCH) and two optical interfaces. The rack owns a single pool
of wavelength channels; because every transmitter is broadcast to every
receiver, a channel can have only one transmitter rack-wide. The TOR switch
is addressed as node id ``len(rack.nodes)`` and hosts no components.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Any, Mapping

__all__ = [
    "ResourceKind",
    "ResourceComponent",
    "Node",
    "WavelengthPlan",
    "RackTopology",
    "InvalidPlanError",
    "InvalidArgumentError",
    "RackConfigError",
    "DEFAULTS",
    "build_default_rack",
    "make_plan",
    "with_plan",
    "validate",
    "node_capacity_gbps",
    "load_rack",
    "rack_from_config",
    "rack_to_config",
]


class ResourceKind(str, Enum):
    CPU = "cpu"  # GHz
    MEM = "mem"  # GB
    STO = "sto"  # GB

    @property
    def unit(self) -> str:
        return "GHz" if self is ResourceKind.CPU else "GB"


KINDS: tuple[ResourceKind, ...] = (ResourceKind.CPU, ResourceKind.MEM, ResourceKind.STO)


class InvalidArgumentError(ValueError):
    """A constructor argument is out of its allowed range."""


class InvalidPlanError(InvalidArgumentError):
    """The wavelength plan cannot be split into two equal partitions."""


class RackConfigError(ValueError):
    """A rack configuration file is malformed; ``field`` names the culprit."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


# Standard hardware. Energies are joules per bit.
DEFAULTS: dict[str, float] = {
    "cpu_ghz": 3.6,
    "mem_gb": 32.0,
    "sto_gb": 320.0,
    "cpu_peak_w": 130.0,
    "mem_peak_w": 11.85,
    "sto_peak_w": 6.19,
    "dynamic_range": 0.30,
    "tor_idle_w": 312.0,
    "tor_epb": 0.028e-12,
    # 14 W at 10 Gb/s. Set power.nch_epb to 1.4e-12 for the picojoule reading.
    "nch_epb": 1.4e-9,
    "onboard_epb": 0.1e-12,
}


@dataclass(frozen=True)
class ResourceComponent:
    node_id: int
    kind: ResourceKind
    capacity: float
    peak_power_w: float
    dynamic_range: float

    @property
    def idle_power_w(self) -> float:
        """Draw when active but unloaded."""
        return (1.0 - self.dynamic_range) * self.peak_power_w

    @property
    def dynamic_w_per_unit(self) -> float:
        """Load-proportional watts per unit of capacity (GHz or GB)."""
        return self.dynamic_range * self.peak_power_w / self.capacity


@dataclass(frozen=True)
class Node:
    id: int
    components: tuple[ResourceComponent, ...]
    interface_count: int = 2

    def component(self, kind: ResourceKind) -> ResourceComponent:
        for comp in self.components:
            if comp.kind is kind:
                return comp
        raise KeyError(f"node {self.id} has no {kind.value} component")

    @property
    def profile(self) -> tuple[tuple[float, float, float], ...]:
        """Hardware signature; nodes with equal profiles are interchangeable."""
        return tuple(
            (c.capacity, c.peak_power_w, c.dynamic_range)
            for c in sorted(self.components, key=lambda c: KINDS.index(c.kind))
        )


@dataclass(frozen=True)
class WavelengthPlan:
    num_channels: int
    channel_rate_gbps: float
    partition_a: frozenset[int]
    partition_b: frozenset[int]

    @property
    def channels(self) -> range:
        return range(self.num_channels)


@dataclass(frozen=True)
class RackTopology:
    nodes: tuple[Node, ...]
    plan: WavelengthPlan
    tor_idle_w: float = DEFAULTS["tor_idle_w"]
    tor_epb_j_per_bit: float = DEFAULTS["tor_epb"]
    nch_epb_j_per_bit: float = DEFAULTS["nch_epb"]
    onboard_epb_j_per_bit: float = DEFAULTS["onboard_epb"]

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def tor_id(self) -> int:
        return len(self.nodes)

    def components(self) -> list[ResourceComponent]:
        """All components in (node id, kind) order."""
        return [n.component(k) for n in self.nodes for k in KINDS]


def make_plan(num_channels: int, rate_gbps: float) -> WavelengthPlan:
    """Build a plan with even channel ids on interface A and odd ids on B.

    Raises:
        InvalidPlanError: if ``num_channels`` is odd.
        InvalidArgumentError: if a size is non-positive.
    """
    if isinstance(num_channels, bool) or int(num_channels) != num_channels:
        raise InvalidArgumentError(f"num_channels must be an integer, got {num_channels!r}")
    num_channels = int(num_channels)
    if num_channels < 1:
        raise InvalidArgumentError(f"num_channels must be positive, got {num_channels}")
    if num_channels % 2:
        raise InvalidPlanError(
            f"num_channels must be even to split across two interfaces, got {num_channels}"
        )
    if not rate_gbps > 0:
        raise InvalidArgumentError(f"rate_gbps must be positive, got {rate_gbps}")
    return WavelengthPlan(
        num_channels=num_channels,
        channel_rate_gbps=float(rate_gbps),
        partition_a=frozenset(range(0, num_channels, 2)),
        partition_b=frozenset(range(1, num_channels, 2)),
    )


def _make_node(node_id: int, capacities: Mapping[str, float], power: Mapping[str, float]) -> Node:
    dr = power["dynamic_range"]
    comps = (
        ResourceComponent(node_id, ResourceKind.CPU, capacities["cpu_ghz"], power["cpu_peak_w"], dr),
        ResourceComponent(node_id, ResourceKind.MEM, capacities["mem_gb"], power["mem_peak_w"], dr),
        ResourceComponent(node_id, ResourceKind.STO, capacities["sto_gb"], power["sto_peak_w"], dr),
    )
    return Node(node_id, comps)


def build_default_rack(num_nodes: int, num_channels: int, rate_gbps: float) -> RackTopology:
    """Homogeneous rack with the standard components and energy parameters.

    >>> rack = build_default_rack(9, 2, 50)
    >>> len(rack.components()), sorted(rack.plan.partition_a)
    (27, [0])
    """
    if isinstance(num_nodes, bool) or int(num_nodes) != num_nodes or num_nodes < 1:
        raise InvalidArgumentError(f"num_nodes must be a positive integer, got {num_nodes!r}")
    plan = make_plan(num_channels, rate_gbps)
    nodes = tuple(_make_node(i, DEFAULTS, DEFAULTS) for i in range(int(num_nodes)))
    return RackTopology(nodes=nodes, plan=plan)


def with_plan(rack: RackTopology, num_channels: int, rate_gbps: float) -> RackTopology:
    """Copy of ``rack`` with a different wavelength plan."""
    return replace(rack, plan=make_plan(num_channels, rate_gbps))


def node_capacity_gbps(plan: WavelengthPlan) -> float:
    """Peak egress of one node: it may be handed every channel in the pool."""
    return plan.num_channels * plan.channel_rate_gbps


def validate(rack: RackTopology) -> list[str]:
    """Return a message for every violated structural invariant.

    An empty list means the rack is valid. The input is never modified.
    """
    problems: list[str] = []
    for pos, node in enumerate(rack.nodes):
        if node.id != pos:
            problems.append(f"node at position {pos} has id {node.id}; ids must be 0..N-1")
        if node.interface_count != 2:
            problems.append(f"node {node.id} has {node.interface_count} interfaces, expected 2")
        kinds = [c.kind for c in node.components]
        for kind in KINDS:
            if kinds.count(kind) != 1:
                problems.append(f"node {node.id} has {kinds.count(kind)} {kind.value} components, expected 1")
        for c in node.components:
            label = f"node {node.id} {c.kind.value}"
            if c.node_id != node.id:
                problems.append(f"{label}: component node_id {c.node_id} does not match")
            if not c.capacity > 0:
                problems.append(f"{label}: capacity must be > 0, got {c.capacity}")
            if not c.peak_power_w > 0:
                problems.append(f"{label}: peak_power_w must be > 0, got {c.peak_power_w}")
            if not 0 < c.dynamic_range <= 1:
                problems.append(f"{label}: dynamic_range must be in (0, 1], got {c.dynamic_range}")

    plan = rack.plan
    w = plan.num_channels
    if w < 2 or w % 2:
        problems.append(f"num_channels must be even and >= 2, got {w}")
    if not plan.channel_rate_gbps > 0:
        problems.append(f"channel_rate_gbps must be > 0, got {plan.channel_rate_gbps}")
    shared = sorted(plan.partition_a & plan.partition_b)
    for ch in shared:
        problems.append(f"channel {ch} appears in both partitions")
    union = plan.partition_a | plan.partition_b
    if not shared:
        # an overlap already explains any size or coverage mismatch
        if len(plan.partition_a) != w // 2 or len(plan.partition_b) != w // 2:
            problems.append(
                f"partitions must each hold {w // 2} channels, got "
                f"{len(plan.partition_a)} and {len(plan.partition_b)}"
            )
        for ch in sorted(set(range(w)) - union):
            problems.append(f"channel {ch} is in neither partition")
    for ch in sorted(union - set(range(w))):
        problems.append(f"channel {ch} is outside 0..{w - 1}")

    for name in ("tor_idle_w", "tor_epb_j_per_bit", "nch_epb_j_per_bit", "onboard_epb_j_per_bit"):
        value = getattr(rack, name)
        if not value >= 0:
            problems.append(f"{name} must be >= 0, got {value}")
    return problems


# -- configuration files -----------------------------------------------------

_POWER_KEYS = (
    "cpu_peak_w", "mem_peak_w", "sto_peak_w", "dynamic_range",
    "tor_idle_w", "tor_epb", "nch_epb", "onboard_epb",
)
_CAPACITY_KEYS = ("cpu_ghz", "mem_gb", "sto_gb")


def _number(value: Any, field_name: str) -> float:
    # energies may arrive as strings such as "1.4e-9"
    if isinstance(value, bool):
        raise RackConfigError(field_name, f"expected a number, got {value!r}")
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise RackConfigError(field_name, f"expected a number, got {value!r}") from None
    if out != out or out in (float("inf"), float("-inf")):
        raise RackConfigError(field_name, f"expected a finite number, got {value!r}")
    return out


def rack_from_config(
    config: Mapping[str, Any],
    *,
    num_channels: int | None = None,
    rate_gbps: float | None = None,
) -> RackTopology:
    """Build a rack from a parsed JSON configuration.

    Keyword overrides take precedence over ``wavelengths``/``rate_gbps`` in
    the file. Missing keys fall back to the standard defaults (9 nodes, 2
    channels at 50 Gb/s).
    """
    if not isinstance(config, Mapping):
        raise RackConfigError("<root>", "rack configuration must be a JSON object")
    unknown = set(config) - {"nodes", "wavelengths", "rate_gbps", "power"}
    if unknown:
        raise RackConfigError(sorted(unknown)[0], "unknown key")

    power = dict(DEFAULTS)
    raw_power = config.get("power", {})
    if not isinstance(raw_power, Mapping):
        raise RackConfigError("power", "must be an object")
    for key, value in raw_power.items():
        if key not in _POWER_KEYS:
            raise RackConfigError(f"power.{key}", "unknown key")
        power[key] = _number(value, f"power.{key}")

    nodes_spec = config.get("nodes", 9)
    per_node: list[dict[str, float]] = []
    if isinstance(nodes_spec, bool):
        raise RackConfigError("nodes", "must be an integer or an array")
    if isinstance(nodes_spec, int):
        if nodes_spec < 1:
            raise RackConfigError("nodes", f"must be >= 1, got {nodes_spec}")
        per_node = [dict(DEFAULTS) for _ in range(nodes_spec)]
    elif isinstance(nodes_spec, list) and nodes_spec:
        for i, entry in enumerate(nodes_spec):
            if not isinstance(entry, Mapping):
                raise RackConfigError(f"nodes[{i}]", "must be an object")
            caps = {k: DEFAULTS[k] for k in _CAPACITY_KEYS}
            for key, value in entry.items():
                if key not in _CAPACITY_KEYS:
                    raise RackConfigError(f"nodes[{i}].{key}", "unknown key")
                caps[key] = _number(value, f"nodes[{i}].{key}")
                if caps[key] <= 0:
                    raise RackConfigError(f"nodes[{i}].{key}", "must be > 0")
            per_node.append(caps)
    else:
        raise RackConfigError("nodes", "must be a positive integer or a non-empty array")

    w = num_channels if num_channels is not None else config.get("wavelengths", 2)
    r = rate_gbps if rate_gbps is not None else config.get("rate_gbps", 50)
    try:
        plan = make_plan(w, _number(r, "rate_gbps"))
    except InvalidArgumentError as exc:
        raise RackConfigError("wavelengths" if "channels" in str(exc) else "rate_gbps", str(exc)) from None

    rack = RackTopology(
        nodes=tuple(_make_node(i, caps, power) for i, caps in enumerate(per_node)),
        plan=plan,
        tor_idle_w=power["tor_idle_w"],
        tor_epb_j_per_bit=power["tor_epb"],
        nch_epb_j_per_bit=power["nch_epb"],
        onboard_epb_j_per_bit=power["onboard_epb"],
    )
    problems = validate(rack)
    if problems:
        raise RackConfigError("power", problems[0])
    return rack


def load_rack(path: str | Path, **overrides: Any) -> RackTopology:
    """Read a rack JSON file; see :func:`rack_from_config` for the schema."""
    try:
        config = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise RackConfigError("<root>", f"invalid JSON: {exc}") from None
    return rack_from_config(config, **overrides)


def rack_to_config(rack: RackTopology) -> dict[str, Any]:
    """Inverse of :func:`rack_from_config` for racks sharing one power profile."""
    first = rack.nodes[0]
    cpu, mem, sto = (first.component(k) for k in KINDS)
    return {
        "nodes": [
            {
                "cpu_ghz": n.component(ResourceKind.CPU).capacity,
                "mem_gb": n.component(ResourceKind.MEM).capacity,
                "sto_gb": n.component(ResourceKind.STO).capacity,
            }
            for n in rack.nodes
        ],
        "wavelengths": rack.plan.num_channels,
        "rate_gbps": rack.plan.channel_rate_gbps,
        "power": {
            "cpu_peak_w": cpu.peak_power_w,
            "mem_peak_w": mem.peak_power_w,
            "sto_peak_w": sto.peak_power_w,
            "dynamic_range": cpu.dynamic_range,
            "tor_idle_w": rack.tor_idle_w,
            "tor_epb": rack.tor_epb_j_per_bit,
            "nch_epb": rack.nch_epb_j_per_bit,
            "onboard_epb": rack.onboard_epb_j_per_bit,
        },
    }
