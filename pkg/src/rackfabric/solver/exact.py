"""Depth-first branch-and-bound over per-application decisions.

Applications are decided in id order. Each level tries colocated triples by
node id, then split triples in lexicographic order, then rejection. Three
devices keep the tree small without changing the answer:

* nodes with identical hardware that no decided application touches are
  interchangeable, so a triple may only open the lowest-numbered untouched
  node of each hardware class (this keeps the lexicographically smallest
  member of every symmetric family, which is the tie-break winner);
* greedy placement polished by local search seeds the incumbent;
* the bound adds, on top of the per-application dynamic/on-board floor of
  :func:`lower_bound`, the idle power of the fewest extra components that
  could absorb the undecided demand, ``alpha3`` per application that cannot
  fit at all, and the cheaper of splitting or rejecting for applications
  that pairwise cannot share a node (a packing test over fresh and
  partly used nodes).

Subtrees already searched from an equivalent state are skipped through a
bounded memo of their proven floors.

Leaf objectives are computed by the same routine that :func:`evaluate` uses,
from identically accumulated tallies, so the returned objective matches a
fresh evaluation bit for bit.
"""

from __future__ import annotations

import math
import time

import networkx as nx

from ..power import CAPACITY_TOL, breakdown_from_tallies
from ..rwa import GBPS
from ..topology import KINDS
from .local import seed_solution
from .model import OBJ_TOL, Instance, Solution, better, evaluate, remaining_cost_floor, vector_key

CHECK_EVERY = 256
MEMO_LIMIT = 2_000_000
# stored subtree bounds are shaved so float noise can never make them inadmissible
MEMO_SLACK = 1e-6
# near the leaves plain enumeration is cheaper than the joint-packing bound
PACKING_MIN_REMAINING = 2


class _BudgetExhausted(Exception):
    pass


def _prefix_sums(values) -> list[float]:
    out = [0.0]
    for v in values:
        out.append(out[-1] + v)
    return out


class _Search:
    def __init__(self, instance: Instance, deadline: float, node_limit: int | None):
        self.inst = instance
        self.rack = instance.rack
        rack = instance.rack
        self.w = instance.weights
        self.apps = instance.apps
        self.n = n = rack.num_nodes
        self.num_channels = rack.plan.num_channels
        self.rate = rack.plan.channel_rate_gbps
        comps = rack.components()
        self.cap = [c.capacity for c in comps]
        self.idle = [c.idle_power_w for c in comps]
        self.dyn_unit = [c.dynamic_range * c.peak_power_w / c.capacity for c in comps]
        self.loads = [0.0] * (3 * n)
        self.count = [0] * (3 * n)
        self.pair: dict[tuple[int, int], int] = {}
        self.taw = 0
        self.inter = 0
        self.intra = 0
        self.rejected = 0
        self.idle_sum = 0.0
        self.dyn_sum = 0.0
        self.decisions: list = [None] * len(self.apps)
        self.app_demands = [a.demands for a in self.apps]
        self.memo: dict[tuple, float] = {}

        self.network_base = self.w.alpha1 * rack.tor_idle_w
        self.nch_coef = self.w.alpha1 * rack.nch_epb_j_per_bit * GBPS
        self.onboard_coef = self.w.alpha1 * rack.onboard_epb_j_per_bit * GBPS

        classes: dict = {}
        self.node_class = []
        for node in rack.nodes:
            self.node_class.append(classes.setdefault(node.profile, len(classes)))
        self.num_classes = len(classes)
        self.uniform_nodes = len(classes) == 1

        # per kind: are all components interchangeable for the activation bound?
        self.kind_uniform = []
        for k in range(3):
            sig = {(self.cap[3 * i + k], self.idle[3 * i + k]) for i in range(n)}
            self.kind_uniform.append(len(sig) == 1)

        a = len(self.apps)
        self.floor_suffix = [0.0] * (a + 1)
        floors = [remaining_cost_floor(instance, app) for app in self.apps]
        # sums of the r largest per-application floors and demands among the undecided
        self.floor_top = [_prefix_sums(sorted(floors[d:], reverse=True)) for d in range(a + 1)]
        self.demand_top = [
            [_prefix_sums(sorted((app.demands[k] for app in self.apps[d:]), reverse=True)) for k in range(3)]
            for d in range(a + 1)
        ]
        self.demand_suffix = [[0.0, 0.0, 0.0] for _ in range(a + 1)]
        for i in range(a - 1, -1, -1):
            self.floor_suffix[i] = self.floor_suffix[i + 1] + floors[i]
            for k in range(3):
                self.demand_suffix[i][k] = self.demand_suffix[i + 1][k] + self.apps[i].demands[k]

        self.max_cap = [max(self.cap[3 * i + k] for i in range(n)) for k in range(3)]
        self.big = [self._big_thresholds(d) for d in range(a + 1)]
        self.anchors = [self._anchored_kinds(app) for app in self.apps]
        self.cliques = [self._conflict_clique(d) for d in range(a + 1)]
        self.split_penalty = [self._split_penalty(app) for app in self.apps]
        self.clique_penalties = [sorted(self.split_penalty[i] for i in clique) for clique in self.cliques]

        self.deadline = deadline
        self.node_limit = node_limit
        self.nodes_visited = 0
        self.best_obj = math.inf
        self.best_dec: tuple = ()

    # -- cost and bound ---------------------------------------------------------

    def cost_now(self) -> float:
        w = self.w
        return (
            self.network_base
            + self.nch_coef * (2 * self.inter)
            + self.onboard_coef * (self.intra + 2 * self.inter)
            + w.alpha2 * (self.idle_sum + self.dyn_sum)
            + w.alpha3 * self.rejected
            + w.alpha4 * self.taw
        )

    def _big_thresholds(self, depth: int) -> list[list[tuple[float, int]]]:
        """Per kind: (size, count of undecided demands >= size) for demands over half a component.

        Two such demands can never share a component.
        """
        out = []
        for k in range(3):
            half = self.max_cap[k] / 2
            sizes = sorted((a.demands[k] for a in self.apps[depth:] if a.demands[k] > half + CAPACITY_TOL), reverse=True)
            steps = []
            for i, size in enumerate(sizes):
                if i + 1 == len(sizes) or sizes[i + 1] != size:
                    steps.append((size, i + 1))
            out.append(steps)
        return out

    def _never_split(self, gbps: int) -> bool:
        """True if no channel arrangement could ever carry ``gbps`` between two nodes."""
        rate = self.rate
        # an existing pair flow leaves less than one channel of slack to reuse
        slack = rate - 1 if float(rate).is_integer() else rate
        least = max(1, math.ceil((gbps - slack) / rate - 1e-12))
        return least > self.num_channels

    def _anchored_kinds(self, app) -> tuple[int, ...]:
        """Kinds that must share the CPU's node because their flow can never cross the backplane."""
        kinds = [0]
        if self._never_split(app.cm_gbps):
            kinds.append(1)
        if self._never_split(app.cd_gbps):
            kinds.append(2)
        return tuple(kinds)

    def _split_penalty(self, app) -> float:
        """Least extra cost of keeping an application's CPU and memory on different nodes."""
        if 1 in self.anchors[app.id]:
            return self.w.alpha3
        rack = self.rack
        per_bit = 2 * rack.nch_epb_j_per_bit + rack.onboard_epb_j_per_bit
        return min(self.w.alpha3, self.w.alpha1 * per_bit * app.cm_gbps * GBPS)

    def _conflict_clique(self, depth: int) -> tuple[int, ...]:
        """Largest set of undecided applications no two of which fit whole on one node.

        "Whole" means CPU and memory together, plus storage when its flow can
        never cross the backplane.
        """
        rest = range(depth, len(self.apps))
        graph = nx.Graph()
        graph.add_nodes_from(rest)
        for i in rest:
            for j in rest:
                if i >= j:
                    continue
                kinds = {0, 1} | (set(self.anchors[i]) & set(self.anchors[j]) & {2})
                if any(
                    self.app_demands[i][k] + self.app_demands[j][k] > self.max_cap[k] + CAPACITY_TOL
                    for k in kinds
                ):
                    graph.add_edge(i, j)
        if graph.number_of_edges() == 0:
            return ()
        clique, _ = nx.max_weight_clique(graph, weight=None)
        return tuple(sorted(clique))

    def _whole_kinds(self, app_i: int) -> tuple[int, ...]:
        return (0, 1, 2) if 2 in self.anchors[app_i] else (0, 1)

    def _clique_pressure(self, depth: int) -> tuple[int, int, int]:
        """Clique members that cannot sit whole on a touched node.

        Returns (members needing a fresh node or a penalty, fresh nodes that
        could take one, members whole-placeable nowhere).
        """
        clique = self.cliques[depth]
        n = self.n
        loads, cap, count = self.loads, self.cap, self.count
        touched = [i for i in range(n) if count[3 * i] or count[3 * i + 1] or count[3 * i + 2]]
        fresh = [i for i in range(n) if not (count[3 * i] or count[3 * i + 1] or count[3 * i + 2])]

        def fits(app_i: int, node: int) -> bool:
            d = self.app_demands[app_i]
            return all(loads[3 * node + k] + d[k] <= cap[3 * node + k] + CAPACITY_TOL for k in self._whole_kinds(app_i))

        def max_matching(nodes: list[int]) -> int:
            owner: dict[int, int] = {}

            def augment(item: int, seen: set) -> bool:
                for node in nodes:
                    if node in seen or not fits(item, node):
                        continue
                    seen.add(node)
                    if node not in owner or augment(owner[node], seen):
                        owner[node] = item
                        return True
                return False

            return sum(1 for item in clique if augment(item, set()))

        on_touched = max_matching(touched) if touched else 0
        if self.uniform_nodes:
            overall = min(len(clique), on_touched + len(fresh))
        else:
            overall = max_matching(touched + fresh)
        return len(clique) - on_touched, overall - on_touched, len(clique) - overall

    def _homeless_penalty(self, depth: int) -> float:
        """Least penalty forced by applications that cannot all sit whole on fresh nodes.

        Applications fitting no touched node whole must go to fresh nodes.
        Conflict-clique members among them each take a fresh node of their own,
        and the rest must fit into what is left. When a Hall-type count shows
        they cannot, at least one of them splits or is rejected.
        """
        if not self.uniform_nodes:
            return 0.0
        n, loads, cap, count = self.n, self.loads, self.cap, self.count
        touched = [i for i in range(n) if count[3 * i] or count[3 * i + 1] or count[3 * i + 2]]
        fresh = n - len(touched)
        demands = self.app_demands
        tol = CAPACITY_TOL
        homeless = [
            i for i in range(depth, len(self.apps))
            if not any(
                loads[3 * t] + demands[i][0] <= cap[3 * t] + tol
                and loads[3 * t + 1] + demands[i][1] <= cap[3 * t + 1] + tol
                for t in touched
            )
        ]
        undecided = range(depth, len(self.apps))
        penalty = min(self.split_penalty[i] for i in undecided)
        clique = set(self.cliques[depth])
        anchors = [i for i in homeless if i in clique]
        if len(anchors) > fresh:
            return penalty
        full = (cap[0], cap[1])
        bins = [(cap[3 * t] - loads[3 * t], cap[3 * t + 1] - loads[3 * t + 1]) for t in touched]
        bins += [(full[0] - demands[i][0], full[1] - demands[i][1]) for i in anchors]
        bins += [full] * (fresh - len(anchors))
        rest = [demands[i] for i in undecided if i not in anchors]
        if not rest:
            return 0.0

        def fits(d, b) -> bool:
            return d[0] <= b[0] + tol and d[1] <= b[1] + tol

        for k in (0, 1):
            for threshold in sorted({-1.0} | {d[k] for d in rest}):
                group = [d for d in rest if d[k] > threshold]
                if not group:
                    continue
                usable = [b for b in bins if any(fits(d, b) for d in group)]
                for dim in (0, 1):
                    if sum(d[dim] for d in group) > sum(b[dim] for b in usable) + tol:
                        return penalty
        return 0.0

    def _kind_state(self, k: int) -> tuple[float, list[int], list[float]]:
        """(free room on active components, inactive component indices, free room per active one)."""
        spare = 0.0
        inactive = []
        active_free = []
        for i in range(self.n):
            c = 3 * i + k
            if self.count[c]:
                free = self.cap[c] - self.loads[c]
                spare += free
                active_free.append(free)
            else:
                inactive.append(c)
        return spare, inactive, active_free

    def _activation_floor(self, k: int, depth: int, state, opened: int = 0, removed: int = 0) -> float:
        """Least idle power of inactive kind-``k`` components needed to hold the rest.

        ``opened`` is a known minimum number of components to activate and
        ``removed`` the number of undecided applications assumed rejected
        (their largest demands are dropped).
        """
        spare, inactive, active_free = state
        deficit = self.demand_suffix[depth][k] - self.demand_top[depth][k][removed] - spare
        if self.kind_uniform[k]:
            needed = math.ceil(deficit / self.cap[k] - 1e-9) if deficit > CAPACITY_TOL else 0
            needed = max(needed, opened)
            for size, many in self.big[depth][k]:
                if many - removed > needed:
                    fit = sum(1 for f in active_free if f >= size - CAPACITY_TOL)
                    needed = max(needed, many - removed - fit)
            if needed <= 0:
                return 0.0
            return math.inf if needed > len(inactive) else needed * self.idle[inactive[0]]
        if deficit <= CAPACITY_TOL:
            return 0.0
        total = 0.0
        for c in sorted(inactive, key=lambda c: self.idle[c] / self.cap[c]):
            take = min(self.cap[c], deficit)
            total += self.idle[c] * take / self.cap[c]
            deficit -= take
            if deficit <= CAPACITY_TOL:
                return total
        return math.inf

    def _forced_rejections(self, depth: int) -> int:
        """Undecided applications that cannot all be placed, by counting arguments per kind."""
        worst = 0
        rest = self.apps[depth:]
        for k in range(3):
            residual = [self.cap[3 * i + k] - self.loads[3 * i + k] for i in range(self.n)]
            free = sum(residual)
            demands = sorted((a.demands[k] for a in rest), reverse=True)
            total = sum(demands)
            dropped = 0
            for d in demands:
                if total <= free + CAPACITY_TOL:
                    break
                total -= d
                dropped += 1
            worst = max(worst, dropped)
            for size, many in self.big[depth][k]:
                fit = sum(1 for r in residual if r >= size - CAPACITY_TOL)
                worst = max(worst, many - fit)
        return worst

    def bound(self, depth: int, packing: bool = True) -> float:
        """Admissible bound on every completion of the current prefix.

        ``packing`` adds the costlier joint-packing arguments (conflict clique
        and Hall counts).

        The number of further rejections ``r`` is enumerated for the two
        smallest values the counting arguments allow; each case pays
        ``alpha3 * r`` plus the floor of placing the rest with the ``r``
        largest demands dropped. Anything beyond is charged rejections only.
        """
        cost = self.cost_now()
        remaining = len(self.apps) - depth
        if remaining == 0:
            return cost
        alpha2, alpha3 = self.w.alpha2, self.w.alpha3
        forced = self._forced_rejections(depth)
        clique = self.cliques[depth]
        penalties = self.clique_penalties[depth]
        if packing and len(clique) >= 2:
            excess, openable, nowhere = self._clique_pressure(depth)
            soft = sum(1 for p in penalties if p < alpha3)
            forced = max(forced, nowhere - soft)
        else:
            excess = openable = 0
        packing_penalty = self._homeless_penalty(depth) if packing else 0.0
        if packing_penalty >= alpha3:
            forced = max(forced, 1)
        sto_whole = packing and bool(clique) and all(2 in self.anchors[i] for i in clique)
        states = [self._kind_state(k) for k in range(3)]

        best = cost + alpha3 * (forced + 2)
        for r in (forced, forced + 1):
            if r >= remaining:
                best = min(best, cost + alpha3 * remaining)
                break
            base = cost + alpha3 * r + self.floor_suffix[depth] - self.floor_top[depth][r]
            forced_split = packing_penalty if r == 0 else 0.0
            sto_floor = None if sto_whole else self._activation_floor(2, depth, states[2], 0, r)
            inner = math.inf
            for opened in range(min(excess, openable) + 1):
                leftover = max(0, excess - opened - r)
                clique_split = sum(penalties[:leftover])
                if clique_split >= alpha3:
                    continue
                extra = self._activation_floor(0, depth, states[0], opened, r)
                extra += self._activation_floor(1, depth, states[1], opened, r)
                extra += sto_floor if sto_floor is not None else self._activation_floor(2, depth, states[2], opened, r)
                inner = min(inner, alpha2 * extra + max(clique_split, forced_split))
            best = min(best, base + inner)
        return best

    def pruned(self, lb: float, depth: int) -> bool:
        if lb > self.best_obj + OBJ_TOL:
            return True
        if lb >= self.best_obj - OBJ_TOL:
            # a tie can only win if the prefix is lexicographically smaller
            return vector_key(self.decisions[:depth]) > vector_key(self.best_dec[:depth])
        return False

    # -- branching ----------------------------------------------------------------

    def _channel_delta(self, src: int, dst: int, gbps: int) -> int:
        old = self.pair.get((src, dst), 0)
        return math.ceil((old + gbps) / self.rate) - (math.ceil(old / self.rate) if old else 0)

    def candidates(self, depth: int) -> list[tuple[int, int, int]]:
        """Capacity- and channel-feasible triples in branching order."""
        demands = self.app_demands[depth]
        app = self.apps[depth]
        n = self.n
        room = self.num_channels - self.taw
        touched = [bool(self.count[3 * i] or self.count[3 * i + 1] or self.count[3 * i + 2]) for i in range(n)]
        fits = [
            [self.loads[3 * i + k] + demands[k] <= self.cap[3 * i + k] + CAPACITY_TOL for i in range(n)]
            for k in range(3)
        ]
        node_class = self.node_class

        def allowed(used: list[bool]) -> list[int]:
            opened = set()
            nodes = []
            for i in range(n):
                if used[i]:
                    nodes.append(i)
                elif node_class[i] not in opened:
                    opened.add(node_class[i])
                    nodes.append(i)
            return nodes

        colocated: list[tuple[int, int, int]] = []
        split: list[tuple[int, int, int]] = []
        for c in allowed(touched):
            if not fits[0][c]:
                continue
            t1 = list(touched)
            t1[c] = True
            for m in allowed(t1):
                if not fits[1][m]:
                    continue
                used = 0 if m == c else self._channel_delta(c, m, app.cm_gbps)
                if used > room:
                    continue
                t2 = list(t1)
                t2[m] = True
                for st in allowed(t2):
                    if not fits[2][st]:
                        continue
                    if st == c:
                        extra = 0
                    elif st == m:
                        extra = self._channel_delta(c, m, app.cm_gbps + app.cd_gbps) - used
                    else:
                        extra = self._channel_delta(c, st, app.cd_gbps)
                    if used + extra > room:
                        continue
                    if c == m == st:
                        colocated.append((c, m, st))
                    else:
                        split.append((c, m, st))
        split.sort()
        return colocated + split

    def _add_flow(self, src: int, dst: int, gbps: int, undo: list) -> None:
        key = (src, dst)
        old = self.pair.get(key, 0)
        undo.append((key, old, self.taw))
        self.taw += self._channel_delta(src, dst, gbps)
        self.pair[key] = old + gbps
        self.inter += gbps

    def state_key(self, depth: int) -> tuple:
        """Rack state up to relabelling of nodes with identical hardware."""
        n = self.n
        loads = self.loads
        rows = sorted(
            (self.node_class[i], loads[3 * i], loads[3 * i + 1], loads[3 * i + 2], i) for i in range(n)
        )
        if not self.pair:
            return (depth, tuple(r[:4] for r in rows))
        pos = {r[4]: p for p, r in enumerate(rows)}
        pairs = tuple(sorted((pos[a], pos[b], g) for (a, b), g in self.pair.items() if g))
        return (depth, tuple(r[:4] for r in rows), pairs)

    def descend(self, depth: int) -> float:
        """Search the subtree; return a lower bound on its best objective."""
        self.nodes_visited += 1
        if self.nodes_visited % CHECK_EVERY == 1:
            if time.perf_counter() > self.deadline:
                raise _BudgetExhausted
        if self.node_limit is not None and self.nodes_visited > self.node_limit:
            raise _BudgetExhausted

        if depth == len(self.apps):
            return self.leaf()
        cost = self.cost_now()
        key = self.state_key(depth)
        lb = self.bound(depth, packing=False)
        known = self.memo.get(key)
        if known is not None:
            lb = max(lb, cost + known)
        if self.pruned(lb, depth):
            return lb
        if len(self.apps) - depth > PACKING_MIN_REMAINING:
            lb = max(lb, self.bound(depth))
            if self.pruned(lb, depth):
                return lb

        app = self.apps[depth]
        demands = self.app_demands[depth]
        result = math.inf
        for triple in self.candidates(depth):
            saved = (self.idle_sum, self.dyn_sum, self.intra, self.inter)
            saved_loads = []
            for k, node in enumerate(triple):
                c = 3 * node + k
                saved_loads.append((c, self.loads[c]))
                self.loads[c] += demands[k]
                if self.count[c] == 0:
                    self.idle_sum += self.idle[c]
                self.count[c] += 1
                self.dyn_sum += self.dyn_unit[c] * demands[k]

            cpu, mem, sto = triple
            undo: list = []
            for other, gbps in ((mem, app.cm_gbps), (sto, app.cd_gbps)):
                if other == cpu:
                    self.intra += gbps
                else:
                    self._add_flow(cpu, other, gbps, undo)

            self.decisions[depth] = triple
            result = min(result, self.descend(depth + 1))
            self.decisions[depth] = None

            for pkey, old, taw in reversed(undo):
                if old:
                    self.pair[pkey] = old
                else:
                    del self.pair[pkey]
                self.taw = taw
            for k, node in enumerate(triple):
                self.count[3 * node + k] -= 1
            for c, old in saved_loads:
                self.loads[c] = old
            self.idle_sum, self.dyn_sum, self.intra, self.inter = saved

        self.rejected += 1
        result = min(result, self.descend(depth + 1))
        self.rejected -= 1

        if len(self.memo) < MEMO_LIMIT or key in self.memo:
            increment = result - cost - MEMO_SLACK
            if known is None or increment > known:
                self.memo[key] = increment
        return result

    def leaf(self) -> float:
        b = breakdown_from_tallies(
            self.inst.rack,
            self.w,
            self.loads,
            [c > 0 for c in self.count],
            nch_bps=float(2 * self.inter) * GBPS,
            tor_bps=0.0,
            onboard_bps=float(self.intra + 2 * self.inter) * GBPS,
            tra=self.rejected,
            taw=self.taw,
        )
        if better(b.objective, self.decisions, self.best_obj, self.best_dec):
            self.best_obj = b.objective
            self.best_dec = tuple(self.decisions)
        return b.objective


def solve_exact(
    instance: Instance,
    budget_seconds: float = 600.0,
    *,
    node_limit: int | None = None,
    incumbent: Solution | None = None,
) -> Solution:
    """Best decision vector found within the budget.

    ``optimal`` is True only when the search tree was exhausted. ``node_limit``
    caps visited search nodes, a deterministic alternative to wall time.
    """
    if not budget_seconds > 0:
        raise ValueError(f"budget_seconds must be positive, got {budget_seconds}")
    deadline = time.perf_counter() + budget_seconds
    search = _Search(instance, deadline, node_limit)
    start = incumbent if incumbent is not None else seed_solution(instance)
    search.best_obj = start.objective
    search.best_dec = tuple(start.decisions)
    complete = True
    try:
        search.descend(0)
    except _BudgetExhausted:
        complete = False
    solution = evaluate(instance, search.best_dec)
    return solution.with_optimal(complete)
