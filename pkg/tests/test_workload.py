import json
from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rackfabric.workload import (
    CD_RANGE,
    CM_RANGE,
    CPU_CHOICES,
    MEM_CHOICES,
    STO_CHOICES,
    Application,
    SplitMix64,
    WorkloadError,
    check_app,
    dumps,
    generate_apps,
    load_apps,
    loads,
    roundtrip,
    save_apps,
)

# First outputs of the reference SplitMix64 (rand_xoshiro 0.6, seed_from_u64).
SPLITMIX_VECTORS = {
    0: [16294208416658607535, 7960286522194355700, 487617019471545679,
        17909611376780542444, 1961750202426094747],
    42: [13679457532755275413, 2949826092126892291, 5139283748462763858,
         6349198060258255764, 701532786141963250],
    1234567: [6457827717110365317, 3203168211198807973, 9817491932198370423,
              4593380528125082431, 16408922859458223821],
}


@pytest.mark.parametrize("seed", sorted(SPLITMIX_VECTORS))
def test_splitmix_vectors(seed):
    rng = SplitMix64(seed)
    assert [rng.next_u64() for _ in range(5)] == SPLITMIX_VECTORS[seed]


def test_below_stays_in_range():
    rng = SplitMix64(7)
    assert all(0 <= rng.below(5) < 5 for _ in range(1000))
    with pytest.raises(ValueError):
        rng.below(0)


def test_reference_workload_bounds():
    apps = generate_apps(42, 15)
    assert [a.id for a in apps] == list(range(15))
    for a in apps:
        check_app(a)
        assert isinstance(a.cm_gbps, int) and isinstance(a.cd_gbps, int)


def test_reference_workload_first_app():
    assert generate_apps(42, 1)[0] == Application(0, 1.8, 7.2, 80.0, 504, 55)


def test_empty_workload():
    assert generate_apps(42, 0) == []


def test_generation_is_byte_stable():
    assert dumps(generate_apps(42, 15)) == dumps(generate_apps(42, 15))


def test_cpu_choices_are_uniform():
    apps = generate_apps(2024, 10_000)
    counts = Counter(a.cpu_ghz for a in apps)
    for value in CPU_CHOICES:
        assert abs(counts[value] / len(apps) - 1 / 3) <= 0.02


def test_flows_stay_in_range():
    apps = generate_apps(99, 10_000)
    assert min(a.cm_gbps for a in apps) >= CM_RANGE[0]
    assert max(a.cm_gbps for a in apps) <= CM_RANGE[1]
    assert min(a.cd_gbps for a in apps) >= CD_RANGE[0]
    assert max(a.cd_gbps for a in apps) <= CD_RANGE[1]
    assert {a.mem_gb for a in apps} == set(MEM_CHOICES)
    assert {a.sto_gb for a in apps} == set(STO_CHOICES)


@given(st.integers(min_value=0, max_value=2**64 - 1), st.integers(min_value=0, max_value=40))
def test_roundtrip_identity(seed, n):
    apps = generate_apps(seed, n)
    assert roundtrip(apps) == apps
    assert generate_apps(seed, n) == apps


def test_out_of_range_flow_names_field(tmp_path):
    entry = {"id": 0, "cpu_ghz": 0.9, "mem_gb": 3.6, "sto_gb": 80, "cm_gbps": 900, "cd_gbps": 10}
    path = tmp_path / "apps.json"
    path.write_text(json.dumps([entry]))
    with pytest.raises(WorkloadError) as info:
        load_apps(path)
    assert info.value.field == "cm_gbps"


def test_empty_file_gives_empty_list(tmp_path):
    path = tmp_path / "apps.json"
    path.write_text("[]")
    assert load_apps(path) == []


@pytest.mark.parametrize(
    "text, field_name",
    [
        ("{}", "<root>"),
        ("not json", "<root>"),
        ('[{"id": 0}]', "cpu_ghz"),
        ('[{"id": 0, "cpu_ghz": 0.9, "mem_gb": 3.6, "sto_gb": 80, "cm_gbps": 300.5, "cd_gbps": 5}]', "cm_gbps"),
        ('[{"id": 0, "cpu_ghz": 1.0, "mem_gb": 3.6, "sto_gb": 80, "cm_gbps": 300, "cd_gbps": 5}]', "cpu_ghz"),
        ('[{"id": 3, "cpu_ghz": 0.9, "mem_gb": 3.6, "sto_gb": 80, "cm_gbps": 300, "cd_gbps": 5}]', "id"),
    ],
)
def test_malformed_workloads_name_field(text, field_name):
    with pytest.raises(WorkloadError) as info:
        loads(text)
    assert info.value.field == field_name


def test_save_and_load(tmp_path):
    apps = generate_apps(5, 6)
    path = tmp_path / "w.json"
    save_apps(apps, path)
    assert load_apps(path) == apps
    assert path.read_text().endswith("\n")
