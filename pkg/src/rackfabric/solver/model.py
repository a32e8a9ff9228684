"""Problem instance, solution record, evaluation and the admissible bound."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

from ..errors import Infeasible
from ..power import (
    ObjectiveBreakdown,
    SolverWeights,
    aggregate_power,
    component_loads,
    component_power,
    rack_kinds_min_dynamic,
)
from ..rwa import GBPS, ChannelAssignment, LogicalNetwork, Placement, aggregate_flows, assign_channels
from ..topology import RackTopology
from ..workload import Application

OBJ_TOL = 1e-9

SCENARIOS: dict[str, SolverWeights] = {
    "I": SolverWeights(alpha1=1.0, alpha2=1.0, alpha3=1e5, alpha4=1.0),
    "II": SolverWeights(alpha1=1e-3, alpha2=1.0, alpha3=1e5, alpha4=1.0),
}


def scenario_weights(name: str) -> SolverWeights:
    try:
        return SCENARIOS[name.upper()]
    except KeyError:
        raise ValueError(f"unknown scenario {name!r}; expected one of {sorted(SCENARIOS)}") from None


class ProblemTooLarge(ValueError):
    """The instance exceeds an exhaustive-search guard."""


@dataclass(frozen=True)
class Instance:
    rack: RackTopology
    apps: tuple[Application, ...]
    weights: SolverWeights = field(default_factory=SolverWeights)

    def __post_init__(self):
        object.__setattr__(self, "apps", tuple(self.apps))
        ids = [a.id for a in self.apps]
        if ids != list(range(len(ids))):
            raise ValueError(f"application ids must be 0..n-1 in order, got {ids}")


def decision_key(place: Placement) -> tuple:
    """Sort key for one decision: triples by node ids, rejection last."""
    return (1,) if place is None else (0, *place)


def vector_key(decisions: Sequence[Placement]) -> tuple:
    return tuple(decision_key(p) for p in decisions)


def better(obj: float, decisions: Sequence[Placement], inc_obj: float, inc_decisions: Sequence[Placement]) -> bool:
    """Strictly preferable: lower objective beyond ``OBJ_TOL``, else smaller vector."""
    if obj < inc_obj - OBJ_TOL:
        return True
    return obj <= inc_obj + OBJ_TOL and vector_key(decisions) < vector_key(inc_decisions)


def is_split(place: Placement) -> bool:
    return place is not None and not (place[0] == place[1] == place[2])


@dataclass(frozen=True)
class Solution:
    decisions: tuple[Placement, ...]
    network: LogicalNetwork
    breakdown: ObjectiveBreakdown
    optimal: bool
    inactive_components: int

    @property
    def objective(self) -> float:
        return self.breakdown.objective

    @property
    def split_count(self) -> int:
        """Applications whose components span more than one node."""
        return sum(1 for p in self.decisions if is_split(p))

    def with_optimal(self, optimal: bool) -> "Solution":
        return Solution(self.decisions, self.network, self.breakdown, optimal, self.inactive_components)


def evaluate(instance: Instance, decisions: Sequence[Placement]) -> Solution:
    """Score a full decision vector.

    Rejected applications add ``alpha3`` each and no load.

    Raises:
        Infeasible: on a component capacity breach or a channel deficit.
    """
    apps = instance.apps
    rack = instance.rack
    if len(decisions) != len(apps):
        raise ValueError(f"expected {len(apps)} decisions, got {len(decisions)}")
    decisions = tuple(None if p is None else tuple(int(x) for x in p) for p in decisions)
    loads, hosted = component_loads(rack, apps, decisions)
    for comp, load, used in zip(rack.components(), loads, hosted):
        component_power(comp, load, used)  # raises on capacity breach
    flows, intra = aggregate_flows(rack, apps, decisions)
    network = assign_channels(flows, rack.plan, intra_node_bps=intra)
    breakdown = aggregate_power(rack, apps, decisions, network, instance.weights)
    return Solution(
        decisions=decisions,
        network=network,
        breakdown=breakdown,
        optimal=False,
        inactive_components=sum(1 for h in hosted if not h),
    )


def remaining_cost_floor(instance: Instance, app: Application) -> float:
    """Least cost an application can add if placed: dynamic compute plus on-board energy."""
    w = instance.weights
    dyn = rack_kinds_min_dynamic(instance.rack)
    compute = sum(u * d for u, d in zip(dyn, app.demands))
    onboard = instance.rack.onboard_epb_j_per_bit * app.total_flow_gbps * GBPS
    return w.alpha2 * compute + w.alpha1 * onboard


def lower_bound(instance: Instance, partial: Sequence[Placement]) -> float:
    """Admissible bound on any completion of the decided prefix ``partial``.

    Prefix cost (the decided applications alone) plus, for every undecided
    application, its dynamic-only compute power and on-board energy. Returns
    ``inf`` when the prefix itself is infeasible.
    """
    k = len(partial)
    if k > len(instance.apps):
        raise ValueError("prefix longer than the application list")
    head = Instance(instance.rack, instance.apps[:k], instance.weights)
    try:
        prefix = evaluate(head, partial).objective
    except Infeasible:
        return math.inf
    return prefix + sum(remaining_cost_floor(instance, a) for a in instance.apps[k:])


# -- JSON encoding -------------------------------------------------------------

def solution_to_dict(sol: Solution) -> dict[str, Any]:
    b = sol.breakdown
    return {
        "decisions": [None if p is None else list(p) for p in sol.decisions],
        "channels": [
            {"channel": a.channel_id, "src": a.src, "dst": a.dst, "carried_gbps": a.carried_gbps}
            for a in sol.network.assignments
        ],
        "breakdown": {
            "tnpc_w": b.tnpc_w,
            "tcpc_w": b.tcpc_w,
            "tra": b.tra,
            "taw": b.taw,
            "objective": b.objective,
            "nch_w": b.nch_w,
            "tor_w": b.tor_w,
            "onboard_w": b.onboard_w,
        },
        "inactive_components": sol.inactive_components,
        "optimal": sol.optimal,
    }


def breakdown_from_dict(data: dict[str, Any]) -> ObjectiveBreakdown:
    return ObjectiveBreakdown(
        tnpc_w=float(data["tnpc_w"]),
        tcpc_w=float(data["tcpc_w"]),
        tra=int(data["tra"]),
        taw=int(data["taw"]),
        objective=float(data["objective"]),
        nch_w=float(data["nch_w"]),
        tor_w=float(data["tor_w"]),
        onboard_w=float(data["onboard_w"]),
    )


def decisions_from_json(raw: Sequence[Any]) -> tuple[Placement, ...]:
    out: list[Optional[tuple[int, int, int]]] = []
    for i, d in enumerate(raw):
        if d is None:
            out.append(None)
        elif isinstance(d, list) and len(d) == 3 and all(isinstance(x, int) for x in d):
            out.append(tuple(d))
        else:
            raise ValueError(f"decisions[{i}] must be null or [cpu, mem, sto], got {d!r}")
    return tuple(out)


def channels_from_json(raw: Sequence[Any]) -> tuple[ChannelAssignment, ...]:
    return tuple(
        ChannelAssignment(int(c["channel"]), int(c["src"]), int(c["dst"]), float(c["carried_gbps"]))
        for c in raw
    )
