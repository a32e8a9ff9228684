import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rackfabric.errors import CapacityViolation, Infeasible
from rackfabric.power import (
    SolverWeights,
    aggregate_power,
    component_power,
    element_traffic_power,
)
from rackfabric.rwa import aggregate_flows, assign_channels
from rackfabric.solver import SCENARIOS, Instance, evaluate
from rackfabric.topology import ResourceKind, build_default_rack
from rackfabric.workload import Application

# frozen from tests/oracle.py
CPU_AT_2_7 = 120.25
BIG_APP_COMPUTE = 137.82575
BIG_APP_ONBOARD = 0.06
BIG_APP_SPLIT_NCH = 1400.0

RACK = build_default_rack(9, 2, 50)
CPU = RACK.nodes[0].component(ResourceKind.CPU)
BIG_APP = Application(0, 2.7, 32.0, 240.0, 500, 100)


def _breakdown(rack, apps, placements, weights=SCENARIOS["I"]):
    flows, intra = aggregate_flows(rack, apps, placements)
    network = assign_channels(flows, rack.plan, intra_node_bps=intra)
    return aggregate_power(rack, apps, placements, network, weights)


def test_cpu_full_load_draws_peak():
    assert component_power(CPU, 3.6) == pytest.approx(130.0)


def test_unhosted_component_is_off():
    assert component_power(CPU, 0.0, hosted=False) == 0.0
    assert component_power(CPU, 0.0) == 0.0


def test_cpu_partial_load():
    assert component_power(CPU, 2.7) == pytest.approx(CPU_AT_2_7)


def test_overload_raises():
    with pytest.raises(CapacityViolation):
        component_power(CPU, 3.7)


def test_negative_load_rejected():
    with pytest.raises(ValueError):
        component_power(CPU, -0.1)


@pytest.mark.parametrize(
    "kind, bps, watts",
    [("tor", 0.0, 312.0), ("nch", 10e9, 14.0), ("onboard", 600e9, 0.06)],
)
def test_element_traffic_power(kind, bps, watts):
    assert element_traffic_power(kind, bps, RACK) == pytest.approx(watts)


def test_unknown_element_rejected():
    with pytest.raises(ValueError):
        element_traffic_power("laser", 1.0, RACK)


def test_empty_rack_costs_tor_idle():
    b = _breakdown(RACK, [], [])
    assert (b.tcpc_w, b.tnpc_w, b.tra, b.taw, b.objective) == (0.0, 312.0, 0, 0, 312.0)


def test_colocated_app_terms():
    b = _breakdown(RACK, [BIG_APP], [(0, 0, 0)])
    assert b.tcpc_w == pytest.approx(BIG_APP_COMPUTE, rel=1e-12)
    assert b.tnpc_w == pytest.approx(312.0 + BIG_APP_ONBOARD, rel=1e-12)
    assert b.nch_w == 0.0
    assert b.taw == 0
    assert b.objective == pytest.approx(BIG_APP_COMPUTE + 312.0 + BIG_APP_ONBOARD, rel=1e-12)


def test_split_memory_charges_both_interface_cards():
    rack = build_default_rack(9, 10, 50)
    b = _breakdown(rack, [BIG_APP], [(0, 1, 0)])
    assert b.nch_w == pytest.approx(BIG_APP_SPLIT_NCH)
    assert b.taw == 10
    # the 500 Gb/s flow crosses two boards, the 100 Gb/s one stays on one
    assert b.onboard_w == pytest.approx(0.1e-12 * (2 * 500e9 + 100e9))


def test_rejected_apps_add_weighted_count():
    b = _breakdown(RACK, [BIG_APP], [None], SolverWeights(alpha3=7.0))
    assert b.tra == 1
    assert b.objective == pytest.approx(312.0 + 7.0)


@given(st.floats(min_value=0.0, max_value=3.6), st.floats(min_value=0.0, max_value=3.6))
def test_component_power_monotone_and_bounded(a, b):
    lo, hi = sorted((a, b))
    p_lo, p_hi = component_power(CPU, lo, True), component_power(CPU, hi, True)
    assert p_lo <= p_hi <= CPU.peak_power_w + 1e-9


demand = st.tuples(
    st.sampled_from([0.9, 1.8, 2.7]),
    st.sampled_from([3.6, 7.2, 10.8]),
    st.sampled_from([80.0, 160.0]),
    st.integers(300, 800),
    st.integers(5, 128),
)


@given(st.lists(st.tuples(demand, st.tuples(*[st.integers(0, 8)] * 3)), min_size=1, max_size=4))
def test_breakdown_identity_on_feasible_placements(items):
    apps = [Application(i, *d) for i, (d, _) in enumerate(items)]
    rack = build_default_rack(9, 64, 100)
    for weights in SCENARIOS.values():
        try:
            sol = evaluate(Instance(rack, apps, weights), [p for _, p in items])
        except Infeasible:
            continue
        b = sol.breakdown
        assert b.identity_errors(weights) == []
        assert b.tcpc_w > 0
        if all(p[0] == p[1] == p[2] for _, p in items):
            assert b.nch_w == 0.0


def test_identity_check_reports_drift():
    b = _breakdown(RACK, [BIG_APP], [(0, 0, 0)])
    tampered = type(b)(**{**b.__dict__, "objective": b.objective + 1.0})
    assert len(tampered.identity_errors(SCENARIOS["I"])) == 1


@pytest.mark.parametrize("name", ["alpha1", "alpha3"])
def test_weights_validated(name):
    with pytest.raises(ValueError):
        SolverWeights(**{name: -1.0})
    with pytest.raises(ValueError):
        SolverWeights(**{name: math.inf})
