"""Power model and the weighted four-term objective.

Compute components draw nothing when they host no demand; once active they
draw ``(1 - dynamic_range) * peak`` plus a share of ``dynamic_range * peak``
proportional to utilisation. Network elements are charged per bit, and the
TOR switch additionally draws its idle power whether or not it carries
backplane traffic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import CapacityViolation
from .rwa import LogicalNetwork, Placement
from .topology import KINDS, RackTopology, ResourceComponent
from .workload import Application

CAPACITY_TOL = 1e-9


@dataclass(frozen=True)
class SolverWeights:
    """Cost multipliers for network power, compute power, rejections, channels."""

    alpha1: float = 1.0
    alpha2: float = 1.0
    alpha3: float = 1e5
    alpha4: float = 1.0

    def __post_init__(self):
        for name in ("alpha1", "alpha2", "alpha3", "alpha4"):
            value = getattr(self, name)
            if not value >= 0 or math.isinf(value):
                raise ValueError(f"{name} must be finite and >= 0, got {value}")


@dataclass(frozen=True)
class ObjectiveBreakdown:
    tnpc_w: float
    tcpc_w: float
    tra: int
    taw: int
    objective: float
    nch_w: float
    tor_w: float
    onboard_w: float

    @property
    def tnpc_parts(self) -> dict[str, float]:
        return {"nch_w": self.nch_w, "tor_w": self.tor_w, "onboard_w": self.onboard_w}

    def identity_errors(self, weights: SolverWeights, rel: float = 1e-9) -> list[str]:
        """Check the sum and objective identities; empty when both hold."""
        errs = []
        parts = self.nch_w + self.tor_w + self.onboard_w
        if not math.isclose(self.tnpc_w, parts, rel_tol=rel, abs_tol=rel):
            errs.append(f"tnpc_w {self.tnpc_w!r} != nch+tor+onboard {parts!r}")
        obj = weighted_objective(weights, self.tnpc_w, self.tcpc_w, self.tra, self.taw)
        if not math.isclose(self.objective, obj, rel_tol=rel, abs_tol=rel):
            errs.append(f"objective {self.objective!r} != weighted sum {obj!r}")
        return errs


def weighted_objective(w: SolverWeights, tnpc: float, tcpc: float, tra: int, taw: int) -> float:
    return w.alpha1 * tnpc + w.alpha2 * tcpc + w.alpha3 * tra + w.alpha4 * taw


def component_power(comp: ResourceComponent, load: float, hosted: bool | None = None) -> float:
    """Watts drawn by ``comp`` at ``load`` (GHz or GB).

    ``hosted`` marks a component serving at least one demand; it defaults to
    ``load > 0``. An unhosted component is powered off.

    Raises:
        CapacityViolation: if ``load`` exceeds the component's capacity.
    """
    if load < 0:
        raise ValueError(f"load must be >= 0, got {load}")
    if load > comp.capacity + CAPACITY_TOL:
        raise CapacityViolation(
            f"node {comp.node_id} {comp.kind.value} load {load:g} exceeds capacity {comp.capacity:g}"
        )
    if hosted is None:
        hosted = load > 0
    if not hosted:
        return 0.0
    return comp.idle_power_w + comp.dynamic_range * comp.peak_power_w * (load / comp.capacity)


def element_traffic_power(kind: str, traffic_bps: float, rack: RackTopology) -> float:
    """Power of a network element class ("nch", "tor" or "onboard") at ``traffic_bps``."""
    if traffic_bps < 0:
        raise ValueError(f"traffic must be >= 0, got {traffic_bps}")
    if kind == "nch":
        return rack.nch_epb_j_per_bit * traffic_bps
    if kind == "onboard":
        return rack.onboard_epb_j_per_bit * traffic_bps
    if kind == "tor":
        return rack.tor_idle_w + rack.tor_epb_j_per_bit * traffic_bps
    raise ValueError(f"unknown network element {kind!r}")


def component_loads(
    rack: RackTopology, apps: Sequence[Application], placements: Sequence[Placement]
) -> tuple[list[float], list[bool]]:
    """Per-component load and hosted flag, indexed ``node * 3 + kind``.

    Loads are accumulated in application order so that every caller that
    follows the same order reproduces them bit for bit.
    """
    n = rack.num_nodes
    loads = [0.0] * (3 * n)
    hosted = [False] * (3 * n)
    for app, place in zip(apps, placements):
        if place is None:
            continue
        for k, (node, demand) in enumerate(zip(place, app.demands)):
            if not 0 <= node < n:
                raise ValueError(f"application {app.id} placed on unknown node {node}")
            loads[3 * node + k] += demand
            hosted[3 * node + k] = True
    return loads, hosted


def compute_power(rack: RackTopology, loads: Sequence[float], hosted: Sequence[bool]) -> float:
    """TCPC. ``math.fsum`` keeps the total independent of component order."""
    comps = rack.components()
    return math.fsum(component_power(c, loads[i], hosted[i]) for i, c in enumerate(comps))


def breakdown_from_tallies(
    rack: RackTopology,
    weights: SolverWeights,
    loads: Sequence[float],
    hosted: Sequence[bool],
    nch_bps: float,
    tor_bps: float,
    onboard_bps: float,
    tra: int,
    taw: int,
) -> ObjectiveBreakdown:
    tcpc = compute_power(rack, loads, hosted)
    nch_w = element_traffic_power("nch", nch_bps, rack)
    tor_w = element_traffic_power("tor", tor_bps, rack)
    onboard_w = element_traffic_power("onboard", onboard_bps, rack)
    tnpc = nch_w + tor_w + onboard_w
    return ObjectiveBreakdown(
        tnpc_w=tnpc,
        tcpc_w=tcpc,
        tra=tra,
        taw=taw,
        objective=weighted_objective(weights, tnpc, tcpc, tra, taw),
        nch_w=nch_w,
        tor_w=tor_w,
        onboard_w=onboard_w,
    )


def _total(tally: Mapping[int, float]) -> float:
    return math.fsum(tally.values())


def aggregate_power(
    rack: RackTopology,
    apps: Sequence[Application],
    placements: Sequence[Placement],
    network: LogicalNetwork,
    weights: SolverWeights,
) -> ObjectiveBreakdown:
    """Objective terms for a capacity-feasible placement and its logical network."""
    loads, hosted = component_loads(rack, apps, placements)
    return breakdown_from_tallies(
        rack,
        weights,
        loads,
        hosted,
        nch_bps=_total(network.nch_traffic),
        tor_bps=network.tor_traffic,
        onboard_bps=_total(network.onboard_traffic),
        tra=sum(1 for p in placements if p is None),
        taw=network.taw,
    )


def rack_kinds_min_dynamic(rack: RackTopology) -> tuple[float, float, float]:
    """Cheapest load-proportional watts per unit for each resource kind."""
    return tuple(
        min(n.component(k).dynamic_w_per_unit for n in rack.nodes) for k in KINDS
    )
