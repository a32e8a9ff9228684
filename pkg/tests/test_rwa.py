import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rackfabric.errors import ChannelDeficit
from rackfabric.power import element_traffic_power
from rackfabric.rwa import (
    ChannelAssignment,
    FlowDemand,
    LogicalNetwork,
    aggregate_flows,
    assign_channels,
    channels_required,
    pair_demands,
    route_flows,
    validate_logical_network,
)
from rackfabric.solver import SCENARIOS
from rackfabric.topology import build_default_rack, make_plan
from rackfabric.workload import Application


def flow(src, dst, gbps, app_id=0):
    return FlowDemand(src, dst, gbps, app_id, "cpu-mem")


def test_colocated_app_makes_no_flows():
    rack = build_default_rack(9, 2, 50)
    inter, intra = aggregate_flows(rack, [Application(0, 0.9, 3.6, 80, 500, 100)], [(3, 3, 3)])
    assert inter == []
    assert intra == {3: 600e9}


def test_memory_elsewhere_makes_one_flow():
    rack = build_default_rack(9, 2, 50)
    inter, intra = aggregate_flows(rack, [Application(0, 0.9, 3.6, 80, 400, 50)], [(0, 1, 0)])
    assert inter == [FlowDemand(0, 1, 400, 0, "cpu-mem")]
    assert intra == {0: 50e9}


def test_rejected_and_empty_make_nothing():
    rack = build_default_rack(2, 2, 50)
    assert aggregate_flows(rack, [], []) == ([], {})
    assert aggregate_flows(rack, [Application(0, 0.9, 3.6, 80, 400, 50)], [None]) == ([], {})


@pytest.mark.parametrize("gbps, rate, expected", [(800, 50, 16), (100, 100, 1), (0, 50, 0), (101, 100, 2)])
def test_channels_required(gbps, rate, expected):
    assert channels_required(gbps, rate) == expected


def test_one_pair_spans_two_channels():
    ln = assign_channels([flow(0, 1, 60)], make_plan(2, 50))
    assert [(a.channel_id, a.src, a.dst) for a in ln.assignments] == [(0, 0, 1), (1, 0, 1)]
    assert ln.taw == 2
    assert ln.nch_traffic == {0: 60e9, 1: 60e9}


def test_channel_deficit_reported():
    with pytest.raises(ChannelDeficit) as info:
        assign_channels([flow(0, 1, 60), flow(0, 2, 50)], make_plan(2, 50))
    assert info.value.deficit == 1


def test_no_flows_no_channels():
    ln = assign_channels([], make_plan(2, 50))
    assert ln.taw == 0 and ln.assignments == ()


def test_flows_between_same_pair_share_channels():
    ln = assign_channels([flow(0, 1, 30, 0), flow(0, 1, 20, 1)], make_plan(2, 50))
    assert ln.taw == 1
    assert ln.assignments[0].carried_gbps == 50


def test_flow_must_cross_nodes():
    with pytest.raises(ValueError):
        flow(2, 2, 10)
    with pytest.raises(ValueError):
        flow(0, 1, 0)


def test_validator_flags_shared_channel():
    plan = make_plan(2, 50)
    ln = LogicalNetwork(assignments=(ChannelAssignment(0, 0, 1, 50.0), ChannelAssignment(0, 0, 1, 10.0)))
    assert len(validate_logical_network(ln, plan, [flow(0, 1, 60)])) == 1


def test_validator_flags_overfull_channel():
    plan = make_plan(2, 50)
    ln = LogicalNetwork(assignments=(ChannelAssignment(0, 0, 1, 60.0),))
    assert len(validate_logical_network(ln, plan, [flow(0, 1, 60)])) == 1


def test_validator_flags_missing_capacity():
    plan = make_plan(4, 50)
    ln = LogicalNetwork(assignments=(ChannelAssignment(0, 0, 1, 50.0),))
    problems = validate_logical_network(ln, plan, [flow(0, 1, 60)])
    assert any("0->1" in p for p in problems)


def test_validator_accepts_relay_path():
    plan = make_plan(4, 50)
    flows = [flow(0, 2, 20), flow(0, 1, 30), flow(1, 2, 30)]
    ln = route_flows(flows, plan, {(0, 2): (0, 1, 2)})
    assert ln.taw == 2
    assert validate_logical_network(ln, plan, flows) == []


pairs3 = [(a, b) for a in range(3) for b in range(3) if a != b]
flow_sets = st.lists(
    st.tuples(st.sampled_from(pairs3), st.integers(1, 180)), min_size=0, max_size=5
)


@given(flow_sets, st.sampled_from([2, 4, 8, 16]), st.sampled_from([50, 100]))
def test_direct_assignment_properties(items, w, r):
    flows = [flow(s, d, g, i) for i, ((s, d), g) in enumerate(items)]
    plan = make_plan(w, r)
    demands = pair_demands(flows)
    need = sum(channels_required(g, r) for g in demands.values())
    if need > w:
        with pytest.raises(ChannelDeficit):
            assign_channels(flows, plan)
        return
    ln = assign_channels(flows, plan)
    assert validate_logical_network(ln, plan, flows) == []
    assert ln.taw == need <= w
    assert len({a.channel_id for a in ln.assignments}) == ln.taw
    for pair, g in demands.items():
        used = [a for a in ln.assignments if (a.src, a.dst) == pair]
        assert len(used) == channels_required(g, r)
        assert sum(a.carried_gbps for a in used) >= g


# -- relay dominance -------------------------------------------------------------

def _network_cost(ln, rack, weights):
    tnpc = (
        element_traffic_power("nch", sum(ln.nch_traffic.values()), rack)
        + element_traffic_power("tor", ln.tor_traffic, rack)
        + element_traffic_power("onboard", sum(ln.onboard_traffic.values()), rack)
    )
    return weights.alpha1 * tnpc + weights.alpha4 * ln.taw


def _all_routings(flows, num_nodes):
    """Every mix of direct, one-relay and TOR paths over the demand pairs."""
    tor = num_nodes
    pairs = list(pair_demands(flows))
    options = []
    for src, dst in pairs:
        via = [(src, dst)] + [(src, m, dst) for m in range(num_nodes) if m not in (src, dst)] + [(src, tor, dst)]
        options.append(via)
    for choice in itertools.product(*options):
        yield dict(zip(pairs, choice))


def _best_costs(flows, w, r, weights):
    rack = build_default_rack(3, w, r)
    direct, relayed = None, None
    for paths in _all_routings(flows, 3):
        try:
            ln = route_flows(flows, rack.plan, paths, tor_id=rack.tor_id)
        except ChannelDeficit:
            continue
        cost = _network_cost(ln, rack, weights)
        if all(len(p) == 2 for p in paths.values()):
            direct = cost
        elif relayed is None or cost < relayed:
            relayed = cost
    return direct, relayed


SMALL_FLOW_SETS = [
    [flow(s, d, g) for (s, d), g in zip(combo, sizes)]
    for k in (1, 2, 3)
    for combo in itertools.combinations(pairs3, k)
    for sizes in itertools.product((20, 30, 60), repeat=k)
]


@pytest.mark.parametrize("w", [2, 4])
@pytest.mark.parametrize("r", [50, 100])
def test_relay_never_beats_direct_under_network_heavy_weights(w, r):
    weights = SCENARIOS["I"]
    for flows in SMALL_FLOW_SETS:
        direct, relayed = _best_costs(flows, w, r, weights)
        if direct is not None and relayed is not None:
            assert direct <= relayed + 1e-9, flows


def test_relay_can_win_when_network_power_is_cheap():
    # a relay through node 1 lets 0->2 ride the 0->1 and 1->2 channels
    flows = [flow(0, 2, 20), flow(0, 1, 30), flow(1, 2, 30)]
    for weights, relay_wins in ((SCENARIOS["I"], False), (SCENARIOS["II"], True)):
        direct, relayed = _best_costs(flows, 4, 50, weights)
        assert (relayed < direct) is relay_wins


def test_relay_can_fit_where_direct_cannot():
    flows = [flow(0, 2, 20), flow(0, 1, 30), flow(1, 2, 30)]
    direct, relayed = _best_costs(flows, 2, 50, SCENARIOS["I"])
    assert direct is None and relayed is not None
