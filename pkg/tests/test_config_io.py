import json

import numpy as np
import pytest

from levisim import __version__
from levisim.config import DEFAULTS, RunConfig, parse_config
from levisim.errors import ConfigError
from levisim.io import read_csv, write_csv, write_json


def test_empty_config_is_default():
    cfg = parse_config("")
    assert cfg.as_dict() == DEFAULTS
    assert cfg.hash() == RunConfig().hash()


def test_values_are_typed():
    cfg = parse_config("[sim]\nn_steps = 2e6\n[surface]\nkind = gold\n[beam]\npower_mw = 150\n")
    assert cfg["sim"]["n_steps"] == 2_000_000 and isinstance(cfg["sim"]["n_steps"], int)
    assert cfg["beam"]["power_mw"] == 150.0
    assert cfg["surface"]["kind"] == "gold"
    assert cfg.hash() != RunConfig().hash()


def test_unknown_key_reports_line():
    with pytest.raises(ConfigError) as exc:
        parse_config("[beam]\nwavelength_nm = 1550\n\npowr_mw = 3\n")
    assert exc.value.line == 4 and exc.value.key == "powr_mw"


def test_unknown_section_reports_line():
    with pytest.raises(ConfigError) as exc:
        parse_config("# comment\n[laser]\npower = 1\n")
    assert exc.value.line == 2


def test_bad_value_and_choice():
    with pytest.raises(ConfigError) as exc:
        parse_config("[sim]\nstride = ten\n")
    assert exc.value.line == 2
    with pytest.raises(ConfigError):
        parse_config("[surface]\nkind = glass\n")


def test_builders():
    cfg = parse_config("[beam]\nwaist_um = 1.2\n[surface]\nkind = none\n")
    assert cfg.beam().waist == pytest.approx(1.2e-6)
    assert not cfg.surface().present
    assert cfg.env(1e-3).pressure_torr == 1e-3
    assert cfg.casimir().separation == pytest.approx(370e-9)


def test_csv_roundtrip(tmp_path):
    p = tmp_path / "a.csv"
    write_csv(p, {"x": np.array([1.0, 2.5e-30]), "n": np.array([1, 2])}, {"seed": 7, "config_hash": "ab"})
    text = p.read_text()
    assert text.startswith(f"# levisim {__version__}\n# config_hash: ab\n# seed: 7\n")
    header, cols = read_csv(p)
    assert cols["x"][1] == 2.5e-30 and list(cols["n"]) == [1, 2]


def test_csv_rows_with_missing_keys(tmp_path):
    p = tmp_path / "b.csv"
    write_csv(p, [{"a": 1.0}, {"a": 2.0, "b": "q,r"}])
    _, cols = read_csv(p)
    assert cols["b"] == ["", "q,r"]


def test_json_provenance(tmp_path):
    p = tmp_path / "c.json"
    write_json(p, {"v": np.float64(1.5), "c": 1 + 2j, "bad": float("nan")}, {"seed": 1})
    doc = json.loads(p.read_text())
    assert doc["provenance"]["levisim_version"] == __version__
    assert doc["data"] == {"v": 1.5, "c": [1.0, 2.0], "bad": "nan"}
