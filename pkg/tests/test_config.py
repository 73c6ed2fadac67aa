import json

import pytest

from leaktwin.config import ConfigError, default_document, load_config, parse_config
from leaktwin.simkernel import Scenario, SimParams


def test_empty_document_is_defaults():
    assert parse_config({}) == (SimParams(), Scenario())


def test_default_document_round_trips(tmp_path):
    doc = default_document()
    path = tmp_path / "c.json"
    path.write_text(json.dumps(doc))
    assert load_config(path) == (SimParams(), Scenario())


def test_partial_override():
    params, scenario = parse_config(
        {"supercap": {"capacitance": 2.2}, "scenario": {"seed": 9, "dry_out_at": 5000}}
    )
    assert params.supercap.capacitance == 2.2
    assert (scenario.seed, scenario.dry_out_at) == (9, 5000.0)
    assert params.modem == SimParams().modem


def test_efficiency_table():
    params, _ = parse_config({"converter": {"efficiency_table": [[0.01, 0.8], [0.3, 0.7]]}})
    assert params.converter.efficiency_table == ((0.01, 0.8), (0.3, 0.7))


@pytest.mark.parametrize(
    "doc, path",
    [
        ({"modem": {"i_tx": "high"}}, "modem.i_tx"),
        ({"modem": {"nope": 1}}, "modem.nope"),
        ({"weather": {}}, "weather"),
        ({"scenario": {"seed": 1.5}}, "scenario.seed"),
        ({"scenario": {"overrides": {"warp": 1}}}, "scenario.overrides.warp"),
        ({"comparator": {"closed": True}}, "comparator.closed"),
        ({"harvester": {"k_derate": 3.0}}, "harvester"),
        ({"converter": {"efficiency_table": [[0.1]]}}, "converter.efficiency_table[0]"),
        ({"supercap": {"capacitance": True}}, "supercap.capacitance"),
    ],
)
def test_errors_name_the_key(doc, path):
    with pytest.raises(ConfigError) as info:
        parse_config(doc)
    assert info.value.path == path
    assert str(info.value).startswith(path)


def test_unreadable(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ConfigError):
        load_config(bad)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
