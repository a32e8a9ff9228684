"""Deterministic local search used to seed the exact search with a good incumbent.

Two moves are tried until neither improves the objective:

* relocate one application to its best triple (or reject it);
* evict one placed application so that a rejected one can take its room,
  then re-place the evicted application wherever it fits best.

Applications, triples and evictees are scanned in fixed orders and only
strict improvements are accepted, so the result depends on the inputs alone.
"""

from __future__ import annotations

import itertools
from dataclasses import replace
from typing import Optional, Sequence

from ..errors import Infeasible
from ..power import CAPACITY_TOL
from ..rwa import Placement
from .greedy import solve_greedy
from .model import OBJ_TOL, Instance, Solution, better, evaluate

MAX_ROUNDS = 20


def _free_capacity(instance: Instance, decisions: Sequence[Placement]) -> list[list[float]]:
    free = [[c.capacity for c in node.components] for node in instance.rack.nodes]
    for app, place in zip(instance.apps, decisions):
        if place is not None:
            for k, node in enumerate(place):
                free[node][k] -= app.demands[k]
    return free


def _score(instance: Instance, decisions: Sequence[Placement]) -> Optional[float]:
    try:
        return evaluate(instance, decisions).objective
    except Infeasible:
        return None


def _best_slot(
    instance: Instance, decisions: list[Placement], app_id: int, free: list[list[float]]
) -> tuple[Optional[float], Placement]:
    """Best objective over every capacity-feasible triple for ``app_id`` (rejection included)."""
    demands = instance.apps[app_id].demands
    n = instance.rack.num_nodes
    trial = list(decisions)
    trial[app_id] = None
    best_obj, best_place = _score(instance, trial), None
    for triple in itertools.product(range(n), repeat=3):
        if any(demands[k] > free[triple[k]][k] + CAPACITY_TOL for k in range(3)):
            continue
        trial[app_id] = triple
        obj = _score(instance, trial)
        if obj is not None and (best_obj is None or obj < best_obj - OBJ_TOL):
            best_obj, best_place = obj, triple
    return best_obj, best_place


def _apply(instance: Instance, free, decisions, app_id: int, place: Placement, sign: int) -> None:
    if place is not None:
        for k, node in enumerate(place):
            free[node][k] -= sign * instance.apps[app_id].demands[k]
    decisions[app_id] = place if sign > 0 else None


def improve(instance: Instance, start: Solution, max_rounds: int = MAX_ROUNDS) -> Solution:
    """Locally improved copy of ``start``; never worse."""
    decisions = list(start.decisions)
    current = start.objective
    free = _free_capacity(instance, decisions)
    for _ in range(max_rounds):
        improved = False
        for app_id in range(len(instance.apps)):
            old = decisions[app_id]
            _apply(instance, free, decisions, app_id, old, -1)
            obj, place = _best_slot(instance, decisions, app_id, free)
            if obj is not None and obj < current - OBJ_TOL:
                _apply(instance, free, decisions, app_id, place, +1)
                current, improved = obj, True
            else:
                _apply(instance, free, decisions, app_id, old, +1)

        for app_id in range(len(instance.apps)):
            if decisions[app_id] is not None:
                continue
            for other in range(len(instance.apps)):
                other_place = decisions[other]
                if other_place is None:
                    continue
                _apply(instance, free, decisions, other, other_place, -1)
                _, place = _best_slot(instance, decisions, app_id, free)
                if place is not None:
                    _apply(instance, free, decisions, app_id, place, +1)
                    obj, back = _best_slot(instance, decisions, other, free)
                    if obj is not None and obj < current - OBJ_TOL:
                        _apply(instance, free, decisions, other, back, +1)
                        current, improved = obj, True
                        break
                    _apply(instance, free, decisions, app_id, place, -1)
                _apply(instance, free, decisions, other, other_place, +1)
        if not improved:
            break
    return evaluate(instance, decisions)


# network-power weightings tried besides the instance's own, to escape local optima
ALPHA1_SCALES = (1.0, 1e3, 1e-3)


def seed_solution(instance: Instance) -> Solution:
    """Best of greedy plus local search under several network weightings.

    Each start is improved under a rescaled network weight, then polished
    under the instance's own weights.
    """
    best = solve_greedy(instance)
    for scale in ALPHA1_SCALES:
        weights = replace(instance.weights, alpha1=instance.weights.alpha1 * scale)
        alt = Instance(instance.rack, instance.apps, weights)
        found = improve(alt, solve_greedy(alt))
        found = improve(instance, evaluate(instance, found.decisions))
        if better(found.objective, found.decisions, best.objective, best.decisions):
            best = found
    return best
