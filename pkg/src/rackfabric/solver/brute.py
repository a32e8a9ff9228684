"""Exhaustive reference solver.

Scores every one of ``(N**3 + 1) ** A`` decision vectors with a vectorised
reimplementation of the objective (it shares no code with the scalar
evaluation path), then re-scores the winner through :func:`evaluate`.
Vectors are numbered in tie-break order: application 0 is the most significant
digit, digit ``c < N**3`` is the triple ``(c // N**2, c // N % N, c % N)``
and digit ``N**3`` is rejection.
"""

from __future__ import annotations

import numpy as np

from ..power import CAPACITY_TOL
from ..rwa import GBPS
from ..topology import KINDS
from .model import OBJ_TOL, Instance, ProblemTooLarge, Solution, evaluate

MAX_APPS = 5
MAX_NODES = 3
CHUNK = 1 << 18


def decode(index: int, num_apps: int, num_nodes: int):
    """Decision vector for a lexicographic vector index."""
    base = num_nodes ** 3 + 1
    out = []
    for a in range(num_apps):
        digit = (index // base ** (num_apps - 1 - a)) % base
        if digit == base - 1:
            out.append(None)
        else:
            out.append((digit // num_nodes ** 2, digit // num_nodes % num_nodes, digit % num_nodes))
    return tuple(out)


def score_vectors(instance: Instance, indices: np.ndarray) -> np.ndarray:
    """Objective for each vector index; ``inf`` where a constraint fails."""
    rack, apps, w = instance.rack, instance.apps, instance.weights
    n = rack.num_nodes
    base = n ** 3 + 1
    v = len(indices)
    comps = rack.components()
    cap = np.array([c.capacity for c in comps]).reshape(n, 3)
    idle = np.array([c.idle_power_w for c in comps]).reshape(n, 3)
    drpk = np.array([c.dynamic_range * c.peak_power_w for c in comps]).reshape(n, 3)

    loads = np.zeros((v, n, 3))
    hosted = np.zeros((v, n, 3), dtype=bool)
    pair = np.zeros((v, n, n), dtype=np.int64)
    intra = np.zeros(v, dtype=np.int64)
    rejected = np.zeros(v, dtype=np.int64)
    node_ids = np.arange(n)

    for a, app in enumerate(apps):
        digit = (indices // base ** (len(apps) - 1 - a)) % base
        placed = digit < base - 1
        rejected += ~placed
        where = (digit // n ** 2, digit // n % n, digit % n)
        for k in range(len(KINDS)):
            onehot = (where[k][:, None] == node_ids[None, :]) & placed[:, None]
            loads[:, :, k] += onehot * app.demands[k]
            hosted[:, :, k] |= onehot
        cpu = where[0]
        for other, gbps in ((where[1], app.cm_gbps), (where[2], app.cd_gbps)):
            local = placed & (other == cpu)
            intra += local * gbps
            remote = placed & (other != cpu)
            np.add.at(pair, (np.nonzero(remote)[0], cpu[remote], other[remote]), gbps)

    fits = np.all(loads <= cap[None] + CAPACITY_TOL, axis=(1, 2))
    power = np.where(hosted, idle[None] + drpk[None] * (loads / cap[None]), 0.0)
    tcpc = power.sum(axis=(1, 2))

    rate = rack.plan.channel_rate_gbps
    channels = np.where(pair > 0, np.ceil(pair / rate), 0).sum(axis=(1, 2)).astype(np.int64)
    routable = channels <= rack.plan.num_channels

    inter = pair.sum(axis=(1, 2))
    nch_w = rack.nch_epb_j_per_bit * ((2 * inter).astype(float) * GBPS)
    onboard_w = rack.onboard_epb_j_per_bit * ((intra + 2 * inter).astype(float) * GBPS)
    tor_w = rack.tor_idle_w + rack.tor_epb_j_per_bit * 0.0
    tnpc = nch_w + tor_w + onboard_w
    obj = w.alpha1 * tnpc + w.alpha2 * tcpc + w.alpha3 * rejected + w.alpha4 * channels
    return np.where(fits & routable, obj, np.inf)


def brute_force(instance: Instance, *, max_apps: int = MAX_APPS, max_nodes: int = MAX_NODES) -> Solution:
    """Globally optimal solution by enumeration.

    Among vectors within ``OBJ_TOL`` of the minimum, the lexicographically
    smallest wins.

    Raises:
        ProblemTooLarge: beyond ``max_apps`` applications or ``max_nodes`` nodes.
    """
    num_apps, num_nodes = len(instance.apps), instance.rack.num_nodes
    if num_apps > max_apps or num_nodes > max_nodes:
        raise ProblemTooLarge(
            f"brute force limited to {max_apps} apps and {max_nodes} nodes, "
            f"got {num_apps} apps and {num_nodes} nodes"
        )
    total = (num_nodes ** 3 + 1) ** num_apps
    best = np.inf
    near_best: list[tuple[int, np.ndarray, np.ndarray]] = []
    for start in range(0, total, CHUNK):
        idx = np.arange(start, min(start + CHUNK, total), dtype=np.int64)
        obj = score_vectors(instance, idx)
        low = obj.min()
        if low > best + OBJ_TOL:
            continue
        best = min(best, low)
        keep = obj <= low + OBJ_TOL
        near_best.append((start, idx[keep], obj[keep]))
    winner = None
    for _, idx, obj in near_best:
        hit = np.nonzero(obj <= best + OBJ_TOL)[0]
        if hit.size:
            winner = int(idx[hit[0]])
            break
    assert winner is not None  # the all-rejected vector is always feasible
    return evaluate(instance, decode(winner, num_apps, num_nodes)).with_optimal(True)
