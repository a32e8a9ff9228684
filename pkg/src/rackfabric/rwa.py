"""Routing and wavelength assignment over the shared rack channel pool.

The optimiser only emits direct single-hop paths. :func:`route_flows` also
accepts explicit relay paths (through another node's NCH or through the TOR)
so that relay alternatives can be costed and validated.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import networkx as nx

from .errors import ChannelDeficit
from .topology import RackTopology, WavelengthPlan
from .workload import Application

GBPS = 1e9
TOL = 1e-9

Placement = Optional[tuple[int, int, int]]  # (cpu, mem, sto) node ids, None if rejected


@dataclass(frozen=True)
class FlowDemand:
    src_node: int
    dst_node: int
    gbps: int
    app_id: int
    kind: str  # "cpu-mem" or "cpu-sto"

    def __post_init__(self):
        if self.src_node == self.dst_node:
            raise ValueError("intra-node traffic is not a FlowDemand")
        if not self.gbps > 0:
            raise ValueError(f"gbps must be positive, got {self.gbps}")


@dataclass(frozen=True)
class ChannelAssignment:
    channel_id: int
    src: int
    dst: int
    carried_gbps: float


@dataclass(frozen=True)
class LogicalNetwork:
    """Channel bindings plus per-element traffic tallies in bit/s."""

    assignments: tuple[ChannelAssignment, ...] = ()
    nch_traffic: Mapping[int, float] = field(default_factory=dict)
    tor_traffic: float = 0.0
    onboard_traffic: Mapping[int, float] = field(default_factory=dict)

    @property
    def taw(self) -> int:
        return len(self.assignments)


def aggregate_flows(
    rack: RackTopology, apps: Sequence[Application], placements: Sequence[Placement]
) -> tuple[list[FlowDemand], dict[int, float]]:
    """Split each placed application's traffic into inter- and intra-node parts.

    Traffic runs from the CPU's node to the memory (or storage) node. Only
    pairs on different nodes produce a :class:`FlowDemand`; colocated pairs
    add to ``intra_node_bps`` of their node.
    """
    inter: list[FlowDemand] = []
    intra: dict[int, float] = {}
    for app, place in zip(apps, placements):
        if place is None:
            continue
        cpu, mem, sto = place
        for other, gbps, kind in ((mem, app.cm_gbps, "cpu-mem"), (sto, app.cd_gbps, "cpu-sto")):
            if other == cpu:
                intra[cpu] = intra.get(cpu, 0.0) + gbps * GBPS
            else:
                inter.append(FlowDemand(cpu, other, gbps, app.id, kind))
    return inter, intra


def channels_required(gbps: float, rate_gbps: float) -> int:
    """Channels needed to inverse-multiplex ``gbps`` at ``rate_gbps`` each."""
    if not rate_gbps > 0:
        raise ValueError("rate_gbps must be positive")
    if gbps <= 0:
        return 0
    return math.ceil(gbps / rate_gbps)


def pair_demands(flows: Iterable[FlowDemand]) -> dict[tuple[int, int], int]:
    """Total demand per (src, dst), keys in lexicographic order."""
    totals: dict[tuple[int, int], int] = defaultdict(int)
    for f in flows:
        totals[(f.src_node, f.dst_node)] += f.gbps
    return dict(sorted(totals.items()))


def route_flows(
    flows: Sequence[FlowDemand],
    plan: WavelengthPlan,
    paths: Mapping[tuple[int, int], Sequence[int]] | None = None,
    *,
    tor_id: int | None = None,
    intra_node_bps: Mapping[int, float] | None = None,
) -> LogicalNetwork:
    """Route every (src, dst) pair along a path and bind channels hop by hop.

    ``paths`` maps a pair to its node sequence, e.g. ``(0, 2, 1)`` to relay
    0->1 through node 2; pairs not listed go direct. Each hop pair gets
    ``channels_required`` channels, lowest free id first, hops visited in
    lexicographic order. Every NCH on a path (endpoints and relays, never
    the TOR) is charged once per bit; the TOR is charged once per bit it
    forwards; on-board fabric is charged at both endpoints.

    Raises:
        ChannelDeficit: if the hops need more channels than the pool holds.
    """
    paths = paths or {}
    nch: dict[int, float] = defaultdict(float)
    onboard: dict[int, float] = defaultdict(float)
    for node, bps in (intra_node_bps or {}).items():
        onboard[node] += bps
    tor_bps = 0.0
    hop_load: dict[tuple[int, int], int] = defaultdict(int)

    for (src, dst), gbps in pair_demands(flows).items():
        path = tuple(paths.get((src, dst), (src, dst)))
        if path[0] != src or path[-1] != dst or len(path) < 2:
            raise ValueError(f"path {path} does not join {src} to {dst}")
        bps = gbps * GBPS
        for a, b in zip(path, path[1:]):
            hop_load[(a, b)] += gbps
        for node in path:
            if node == tor_id:
                tor_bps += bps
            else:
                nch[node] += bps
        onboard[src] += bps
        onboard[dst] += bps

    rate = plan.channel_rate_gbps
    needed = sum(channels_required(g, rate) for g in hop_load.values())
    if needed > plan.num_channels:
        raise ChannelDeficit(needed, plan.num_channels)

    assignments = []
    next_channel = 0
    for (a, b), gbps in sorted(hop_load.items()):
        remaining = float(gbps)
        for _ in range(channels_required(gbps, rate)):
            carried = min(rate, remaining)
            assignments.append(ChannelAssignment(next_channel, a, b, carried))
            remaining -= carried
            next_channel += 1

    return LogicalNetwork(
        assignments=tuple(assignments),
        nch_traffic=dict(sorted(nch.items())),
        tor_traffic=tor_bps,
        onboard_traffic=dict(sorted(onboard.items())),
    )


def assign_channels(
    flows: Sequence[FlowDemand],
    plan: WavelengthPlan,
    *,
    intra_node_bps: Mapping[int, float] | None = None,
) -> LogicalNetwork:
    """Direct single-hop assignment; the optimiser's routing policy.

    >>> from .topology import make_plan
    >>> ln = assign_channels([FlowDemand(0, 1, 60, 0, "cpu-mem")], make_plan(2, 50))
    >>> [(a.channel_id, a.carried_gbps) for a in ln.assignments]
    [(0, 50.0), (1, 10.0)]
    """
    return route_flows(flows, plan, intra_node_bps=intra_node_bps)


def validate_logical_network(
    ln: LogicalNetwork, plan: WavelengthPlan, flows: Sequence[FlowDemand]
) -> list[str]:
    """List every broken rule; an empty list means the network is valid.

    Checks channel range and uniqueness, per-channel rate, that each demand
    pair has enough channel capacity between its endpoints (relays allowed),
    and that every node forwards exactly what it does not consume.
    """
    problems: list[str] = []
    rate = plan.channel_rate_gbps
    seen: dict[int, ChannelAssignment] = {}
    capacity: dict[tuple[int, int], float] = defaultdict(float)
    for a in ln.assignments:
        if not 0 <= a.channel_id < plan.num_channels:
            problems.append(f"channel {a.channel_id} is not in the plan (0..{plan.num_channels - 1})")
        if a.channel_id in seen:
            other = seen[a.channel_id]
            problems.append(
                f"channel {a.channel_id} bound twice: {other.src}->{other.dst} and {a.src}->{a.dst}"
            )
        else:
            seen[a.channel_id] = a
        if a.src == a.dst:
            problems.append(f"channel {a.channel_id} loops on node {a.src}")
        if not a.carried_gbps > 0:
            problems.append(f"channel {a.channel_id} carries non-positive traffic {a.carried_gbps}")
        if a.carried_gbps > rate + TOL:
            problems.append(f"channel {a.channel_id} carries {a.carried_gbps} Gbps above rate {rate}")
        capacity[(a.src, a.dst)] += a.carried_gbps

    demands = pair_demands(flows)
    graph = nx.DiGraph()
    for (u, v), cap in capacity.items():
        graph.add_edge(u, v, capacity=cap)
    for (src, dst), gbps in demands.items():
        if (src, dst) in capacity and capacity[(src, dst)] >= gbps - TOL:
            continue
        reach = 0.0
        if src in graph and dst in graph:
            reach = nx.maximum_flow_value(graph, src, dst)
        if reach < gbps - TOL:
            problems.append(f"pair {src}->{dst} needs {gbps} Gbps but channels reach only {reach:g}")

    net = defaultdict(float)  # inflow - outflow on channels
    for (u, v), cap in capacity.items():
        net[u] -= cap
        net[v] += cap
    expected = defaultdict(float)
    for (src, dst), gbps in demands.items():
        expected[src] -= gbps
        expected[dst] += gbps
    for node in sorted(set(net) | set(expected)):
        if abs(net[node] - expected[node]) > TOL * max(1.0, abs(expected[node])):
            problems.append(
                f"node {node} is not conserving traffic: channels give net {net[node]:g} Gbps, "
                f"demands need {expected[node]:g}"
            )
    return problems
