"""Descriptor parsing, validation, overrides and platform elaboration."""

import json

import pytest

import pulpsim
from pulpsim import parse, serialize, apply_overrides, build
from pulpsim.errors import ConfigError

from conftest import MINIMAL_PLATFORM, pulp_descriptor, build_pulp


def test_minimal_platform_parses():
    desc = parse(json.dumps(MINIMAL_PLATFORM))
    assert len(desc.components) == 2
    assert desc.components["cpu"]["params"]["branch_penalty"] == 2  # default filled


def test_bad_json_reported():
    with pytest.raises(ConfigError, match="invalid JSON"):
        parse("{nope")


def test_unknown_kind_reported_with_path():
    doc = json.loads(json.dumps(MINIMAL_PLATFORM))
    doc["components"]["cpu"]["kind"] = "quantum-core"
    with pytest.raises(ConfigError, match="components.cpu"):
        parse(json.dumps(doc))


def test_missing_required_param():
    doc = json.loads(json.dumps(MINIMAL_PLATFORM))
    del doc["components"]["ram"]["params"]["size"]
    with pytest.raises(ConfigError, match="ram.*size"):
        parse(json.dumps(doc))


def test_overlapping_ranges_name_both_paths():
    doc = {
        "clock_domains": {"main": {"frequency_hz": 200000000}},
        "components": {
            "m1": {"kind": "banked-memory", "domain": "main",
                   "params": {"base": "0x1C000000", "size": "0x80000"}},
            "m2": {"kind": "banked-memory", "domain": "main",
                   "params": {"base": "0x1C040000", "size": "0x80000"}},
            "ic": {"kind": "router", "domain": "main",
                   "params": {"mappings": [{"target": "m1"}, {"target": "m2"}]}},
        },
        "bindings": [],
    }
    with pytest.raises(ConfigError) as err:
        parse(json.dumps(doc))
    assert "m1" in str(err.value) and "m2" in str(err.value)


def test_non_integral_period_rejected_with_path():
    doc = json.loads(json.dumps(MINIMAL_PLATFORM))
    doc["clock_domains"]["main"]["frequency_hz"] = 333333333
    with pytest.raises(ConfigError, match="clock_domains.main"):
        parse(json.dumps(doc))


def test_serialize_roundtrip():
    desc = pulp_descriptor()
    again = parse(serialize(desc))
    assert again == desc


def test_override_scalar_and_nested():
    desc = pulp_descriptor()
    out = apply_overrides(desc, ["cluster.nb_cores=16",
                                 "cluster/tcdm.banks=64",
                                 "hyper.bandwidth_bits_per_sec=3000000000"])
    assert out.components["cluster"]["params"]["nb_cores"] == 16
    assert out.components["cluster"]["params"]["tcdm"]["banks"] == 64
    assert out.components["hyper"]["params"]["bandwidth_bits_per_sec"] == 3000000000
    # original untouched
    assert desc.components["cluster"]["params"]["nb_cores"] == 8


def test_override_equals_textual_edit():
    text = serialize(pulp_descriptor())
    desc_a = apply_overrides(parse(text), ["cluster.nb_cores=4"])
    edited = json.loads(text)
    edited["components"]["cluster"]["params"]["nb_cores"] = 4
    desc_b = parse(json.dumps(edited))
    assert desc_a == desc_b


def test_override_errors():
    desc = pulp_descriptor()
    with pytest.raises(ConfigError, match="no component"):
        apply_overrides(desc, ["nosuch.thing=1"])
    with pytest.raises(ConfigError, match="unknown parameter"):
        apply_overrides(desc, ["cluster.warp_drive=1"])
    with pytest.raises(ConfigError, match="type mismatch"):
        apply_overrides(desc, ["cluster.nb_cores=fast"])


def test_override_changes_instance_count():
    import re
    plat = build_pulp(["cluster.nb_cores=16"])
    pes = [p for p in plat.components if re.fullmatch(r"cluster/pe\d+", p)]
    assert len(pes) == 16


def test_build_twice_identical_dump():
    assert build_pulp().dump() == build_pulp().dump()


def test_unbound_port_reported():
    doc = json.loads(json.dumps(MINIMAL_PLATFORM))
    doc["bindings"] = [["cpu.fetch", "ram.in"]]     # data port dangles
    with pytest.raises(ConfigError, match="cpu.data"):
        build(parse(json.dumps(doc)))


def test_bind_direction_and_duplicate_errors():
    doc = json.loads(json.dumps(MINIMAL_PLATFORM))
    doc["bindings"].append(["cpu.data", "ram.in"])  # duplicate master
    with pytest.raises(ConfigError, match="already bound"):
        build(parse(json.dumps(doc)))

    doc = json.loads(json.dumps(MINIMAL_PLATFORM))
    doc["bindings"][0] = ["cpu.fetch", "cpu.fetch"]
    with pytest.raises(ConfigError, match="direction mismatch"):
        build(parse(json.dumps(doc)))

    doc = json.loads(json.dumps(MINIMAL_PLATFORM))
    doc["bindings"][0] = ["cpu.fetch", "ghost.in"]
    with pytest.raises(ConfigError, match="ghost"):
        parse(json.dumps(doc))


def test_elaborated_dump_matches_golden(tmp_path):
    import pathlib
    golden = pathlib.Path(__file__).parent / "data" / "pulp_open_dump.txt"
    dump = build_pulp().dump()
    assert dump == golden.read_text()
