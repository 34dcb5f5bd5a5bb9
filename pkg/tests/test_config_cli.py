import json
import warnings

import pytest

from ocscatter.cli import SPECTRUM_HEADER, main
from ocscatter.config import ConfigError, emit_config, parse_config

MINIMAL = """
barrier:
  segments: [[-1.0, 1.0, 2.0]]
grids:
  k: {start: 0.5, stop: 2.0, num: 7}
"""

PACKET = """
barrier:
  segments: [[-1.0, 1.0, 4.0]]
packet: {k0: 2.0, l: 10.0, L: 60.0}
grids:
  k: {start: 0.5, stop: 3.0, num: 20}
  packet_k: {num: 384, span: 12.0}
  t: {start: 0.0, stop: 40.0, num: 9}
outputs: {snapshot_stride: 4}
"""


def test_minimal_config_fills_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.packet is None
    assert cfg.units.coupling == 1.0
    assert cfg.tolerances.identity == 1e-12
    assert cfg.grids.k.values()[-1] == 2.0


def test_field_errors_are_named():
    with pytest.raises(ConfigError, match=r"packet\.l: must be > 0"):
        parse_config(MINIMAL + "packet: {k0: 2.0, l: -1.0, L: 60.0}\n")
    with pytest.raises(ConfigError, match=r"packet\.L: required"):
        parse_config(MINIMAL + "packet: {k0: 2.0, l: 1.0}\n")
    with pytest.raises(ConfigError, match=r"grids\.k\.num"):
        parse_config("barrier: {}\ngrids: {k: {num: 2.5}}\n")
    with pytest.raises(ConfigError, match="barrier"):
        parse_config("units: {hbar: 1.0}\n")
    with pytest.raises(ConfigError, match="barrier: .*overlap"):
        parse_config("barrier: {segments: [[-1, 0.5, 1], [0, 1, 1]]}\n")


def test_unknown_keys_strict_and_lenient():
    text = MINIMAL + "extra: 1\n"
    with pytest.raises(ConfigError, match="unknown key extra"):
        parse_config(text, strict=True)
    with pytest.warns(UserWarning, match="unknown key extra"):
        parse_config(text)


def test_parse_error_reports_position():
    with pytest.raises(ConfigError, match=r"line 3, column \d+"):
        parse_config("barrier:\n  segments: [[1, 2]\n  deltas: }\n")


def test_numeric_strings_accepted():
    cfg = parse_config("barrier: {}\ntolerances: {identity: 1e-10}\n")
    assert cfg.tolerances.identity == 1e-10


def test_round_trip():
    cfg = parse_config(PACKET)
    assert parse_config(emit_config(cfg), strict=True) == cfg


def write(tmp_path, text):
    path = tmp_path / "run.yaml"
    path.write_text(text)
    return path


def test_spectrum_output_is_deterministic(tmp_path):
    cfg = write(tmp_path, MINIMAL)
    outs = []
    for name in ("a", "b"):
        assert main(["spectrum", "--config", str(cfg), "--out", str(tmp_path / name)]) == 0
        outs.append((tmp_path / name / "spectrum.csv").read_bytes())
    assert outs[0] == outs[1]
    lines = outs[0].decode().splitlines()
    assert lines[0].split(",") == SPECTRUM_HEADER
    assert len(lines) == 8
    m = json.loads((tmp_path / "a" / "manifest_spectrum.json").read_text())
    assert set(m["files"]) == {"config.resolved.yaml", "spectrum.csv"}


def test_subprocess_command(tmp_path):
    cfg = write(tmp_path, MINIMAL)
    assert main(["subprocess", "--config", str(cfg), "--out", str(tmp_path), "--k", "1.0"]) == 0
    side = json.loads((tmp_path / "subprocess.json").read_text())
    assert float(side["x_c"]) == 0.0


def test_validate_exit_codes(tmp_path, capsys):
    assert main(["validate", "--config", str(write(tmp_path, MINIMAL))]) == 0
    assert "checks passed" in capsys.readouterr().out
    tight = MINIMAL + "tolerances: {identity: 1.0e-30}\n"
    assert main(["validate", "--config", str(write(tmp_path, tight))]) == 1


def test_bad_config_exit_code(tmp_path):
    assert main(["spectrum", "--config", str(write(tmp_path, "barrier: [\n"))]) == 2
    assert main(["spectrum", "--config", str(tmp_path / "missing.yaml")]) == 2


def test_propagate_writes_snapshots(tmp_path):
    cfg = write(tmp_path, PACKET)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert main(["propagate", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    snaps = sorted((tmp_path / "snapshots").iterdir())
    assert [s.name for s in snaps] == ["snapshot_00000.csv", "snapshot_00004.csv",
                                       "snapshot_00008.csv"]
    rows = (tmp_path / "summary.csv").read_text().splitlines()
    assert len(rows) == 10


def test_propagate_needs_packet(tmp_path):
    assert main(["propagate", "--config", str(write(tmp_path, MINIMAL)),
                 "--out", str(tmp_path)]) == 2


def test_oracle_compare(tmp_path):
    cfg = write(tmp_path, MINIMAL)
    assert main(["oracle-compare", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "oracle_compare.csv").exists()
