"""Colocate-first heuristic.

Applications are colocated first-fit in decreasing order of total normalised
compute demand. Those that fit nowhere whole are retried as split placements,
lowest inter-resource traffic first, each taking the feasible split with the
smallest resulting objective. Anything left is rejected.
"""

from __future__ import annotations

import itertools

from ..errors import Infeasible
from ..power import CAPACITY_TOL
from ..rwa import Placement
from ..topology import KINDS
from .model import OBJ_TOL, Instance, Solution, evaluate


def _compute_size(instance: Instance):
    scale = [max(n.component(k).capacity for n in instance.rack.nodes) for k in KINDS]
    return lambda app: sum(d / s for d, s in zip(app.demands, scale))


def solve_greedy(instance: Instance) -> Solution:
    rack, apps = instance.rack, instance.apps
    n = rack.num_nodes
    free = [[n_.component(k).capacity for k in KINDS] for n_ in rack.nodes]
    decisions: list[Placement] = [None] * len(apps)

    size = _compute_size(instance)
    leftovers = []
    for app in sorted(apps, key=lambda a: (-size(a), a.id)):
        for node in range(n):
            if all(d <= free[node][k] + CAPACITY_TOL for k, d in enumerate(app.demands)):
                decisions[app.id] = (node, node, node)
                for k, d in enumerate(app.demands):
                    free[node][k] -= d
                break
        else:
            leftovers.append(app)

    for app in sorted(leftovers, key=lambda a: (a.total_flow_gbps, a.id)):
        best = None
        for triple in itertools.product(range(n), repeat=3):
            if triple[0] == triple[1] == triple[2]:
                continue
            if any(app.demands[k] > free[triple[k]][k] + CAPACITY_TOL for k in range(3)):
                continue
            trial = list(decisions)
            trial[app.id] = triple
            try:
                obj = evaluate(instance, trial).objective
            except Infeasible:
                continue
            if best is None or obj < best[0] - OBJ_TOL:
                best = (obj, triple)
        if best is not None:
            decisions[app.id] = best[1]
            for k, node in enumerate(best[1]):
                free[node][k] -= app.demands[k]

    return evaluate(instance, decisions)

