import copy
import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest
import yaml
from hypothesis import HealthCheck, given, settings, strategies as st

from cascadesim.cli import main
from cascadesim.config import (ConfigError, config_from_dict, config_to_dict, format_float,
                               parse_config, serialize_config, sidecar_path)
from cascadesim.presets import PRESETS, preset

MINIMAL = """
version: 1
molecules:
  - tag: a
    energies: [0.0, 1.0]
    dephasing: [[0, 1, 0.1]]
    dipoles: [[0, 1, [0, 0, 1]]]
    position: [0, 0, 0]
  - tag: b
    energies: [0.0, 1.0]
    dephasing: [[0, 1, 0.1]]
    dipoles: [[0, 1, [0, 0, 1]]]
    position: [0, 0, 1]
pulses:
  - {name: E1, role: drive, center_time: 0, center_frequency: 1, width: 4}
  - {name: Es, role: detection, center_time: 10, center_frequency: 1, width: 4}
"""


def minimal():
    return yaml.safe_load(MINIMAL)


def errors_of(data, **kw):
    with pytest.raises(ConfigError) as info:
        config_from_dict(data, **kw)
    return info.value.errors


# ---------------------------------------------------------------- parsing

def test_minimal_config_fills_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.geometry.c == 1.0
    assert cfg.run.tolerance == 1e-6
    assert cfg.run.order == 1 and cfg.run.vmi and cfg.run.domain == "frequency"
    sc = cfg.scenario()
    assert [m.tag for m in sc.molecules] == ["a", "b"]
    assert sc.detection.polarization == (0.0, 0.0, 1.0)


def test_two_detection_pulses_rejected():
    data = minimal()
    data["pulses"][0]["role"] = "detection"
    assert any("exactly one detection pulse" in e for e in errors_of(data))


def test_negative_dephasing_names_molecule_and_pair():
    data = minimal()
    data["molecules"][1]["dephasing"] = [[0, 1, -0.2]]
    (err,) = errors_of(data)
    assert "'b'" in err and "(0, 1)" in err


def test_all_errors_reported_together():
    data = minimal()
    data["molecules"][0]["dephasing"] = [[0, 1, -0.1]]
    data["pulses"][0]["width"] = -1
    data["run"] = {"order": 1, "tolerance": 0}
    assert len(errors_of(data)) >= 3


def test_missing_detection_allowed_when_not_required():
    data = minimal()
    data["pulses"] = data["pulses"][:1]
    assert errors_of(data)
    data["run"] = {"vmi": False}
    data["molecules"] = data["molecules"][:1]
    assert config_from_dict(data, require_detection=False).molecules[0].tag == "a"


def test_duplicate_yaml_keys_rejected():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config(MINIMAL + "version: 1\n")


def _key_paths(obj, path=()):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield path + (k,)
            yield from _key_paths(v, path + (k,))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _key_paths(v, path + (i,))


def _rename(data, path, new):
    obj = data
    for p in path[:-1]:
        obj = obj[p]
    obj[new] = obj.pop(path[-1])


def test_any_single_character_key_mutation_is_an_error():
    base = config_to_dict(preset("scramble_demo"))
    base["geometry"]["coupling_separation"] = [0.0, 0.0, 1.0]
    base["run"]["scan"] = {"axis": "omega_s", "start": 1.8, "stop": 2.0, "steps": 3}
    base["run"]["output"] = "out.csv"
    paths = list(_key_paths(base))
    assert len(paths) > 40
    for path in paths:
        key = path[-1]
        for i in range(len(key)):
            sub = "q" if key[i] != "q" else "x"
            data = copy.deepcopy(base)
            _rename(data, path, key[:i] + sub + key[i + 1:])
            with pytest.raises(ConfigError):
                config_from_dict(data)


# ---------------------------------------------------------------- round trip

finite = st.floats(-5, 5, allow_nan=False)
positive = st.floats(0.05, 5)


@st.composite
def configs(draw):
    n_mol = draw(st.integers(2, 3))
    order = draw(st.integers(1, 3))
    mols = []
    for i in range(n_mol):
        d = draw(st.integers(2, 3))
        energies = sorted(draw(st.lists(st.floats(0, 3), min_size=d, max_size=d, unique=True)))
        pairs = [(n, m) for n in range(d) for m in range(n + 1, d)]
        mols.append({
            "tag": f"m{i}",
            "energies": energies,
            "dephasing": [[n, m, draw(st.floats(0, 1))] for n, m in pairs],
            "dipoles": [[n, m, [draw(finite), draw(finite), draw(finite)]] for n, m in pairs],
            "position": [float(i), draw(finite), draw(finite)],
        })
    pulses = []
    for j in range(order + 1):
        pulses.append({
            "name": f"E{j}", "role": "drive" if j < order else "detection",
            "center_time": draw(finite), "center_frequency": draw(positive),
            "width": draw(positive), "amplitude_re": draw(finite), "amplitude_im": draw(finite),
            "k_direction": [1.0, 0.0, 0.0], "polarization": [0.0, 0.6, 0.8],
        })
    run = {"order": order, "domain": draw(st.sampled_from(["time", "frequency"])),
           "vmi": True, "tolerance": draw(st.floats(1e-10, 1e-2)),
           "breakdown": draw(st.booleans())}
    return {"version": 1, "molecules": mols, "pulses": pulses,
            "geometry": {"c": draw(positive)}, "run": run}


@settings(max_examples=20, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(configs())
def test_serialize_parse_round_trip(data):
    cfg = config_from_dict(data)
    text = serialize_config(cfg)
    again = parse_config(text)
    assert again == cfg
    assert serialize_config(again) == text


@pytest.mark.parametrize("x", [0.1, 1 / 3, -2.5e-300, 1e22, 7.0, float("nan"), -float("inf")])
def test_float_format_round_trips(x):
    s = format_float(x)
    back = yaml.safe_load(s)
    assert isinstance(back, float)
    assert back == x or (np.isnan(x) and np.isnan(back))


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_validate_and_round_trip(name):
    cfg = preset(name)
    assert parse_config(serialize_config(cfg)) == cfg
    cfg.scenario()


def test_preset_shapes():
    dimer = preset("dimer_linear").scenario()
    a, b = dimer.molecules
    assert np.linalg.norm(a.position - b.position) == 1.0
    assert dimer.scan.axis == "omega_s"
    scramble = preset("scramble_demo").scenario()
    assert {m.tag: m.dephasing[0, 1] for m in scramble.molecules}["b"] == 0.01
    d1, d2 = scramble.drives
    assert d2.center_time - d1.center_time == 5 * d1.width
    assert len(preset("lattice_pm").scenario().molecules) == 125


def test_unknown_preset():
    with pytest.raises(KeyError, match="unknown preset"):
        preset("nope")


# ---------------------------------------------------------------- CLI

def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_signal_scan_writes_csv_and_sidecar(tmp_path, capsys):
    out = tmp_path / "s1.csv"
    code, _, _ = run_cli(capsys, "signal", "--preset", "dimer_linear", "--output", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 12
    assert lines[0] == "omega_s,signal"
    meta = json.loads(sidecar_path(out).read_text())
    assert meta["software_version"] and len(meta["digest"]) == 64
    first = out.read_bytes()
    assert run_cli(capsys, "signal", "--preset", "dimer_linear", "--output", str(out))[0] == 0
    assert out.read_bytes() == first


def test_breakdown_adds_one_column_per_term(tmp_path, capsys):
    out = tmp_path / "s2.csv"
    code, _, _ = run_cli(capsys, "signal", "--preset", "ladder_s2", "--domain", "freq",
                         "--breakdown", "--output", str(out))
    assert code == 0
    rows = list(csv.reader(io.StringIO(out.read_text())))
    assert rows[0] == ["signal", "term_b1", "term_b12", "term_b2"]
    total, *terms = map(float, rows[1])
    assert total == pytest.approx(sum(terms), rel=1e-12)


def test_output_directory_override(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("CASCADESIM_OUTPUT_DIR", str(tmp_path))
    code, out, _ = run_cli(capsys, "signal", "--preset", "dimer_linear", "--scan",
                           "omega_s=0.9:1.1:3", "--output", "elsewhere/x.csv")
    assert code == 0 and out == ""
    assert len((tmp_path / "x.csv").read_text().splitlines()) == 4


def test_signal_to_stdout(capsys):
    code, out, _ = run_cli(capsys, "signal", "--preset", "dimer_linear", "--no-vmi",
                           "--scan", "omega_s=1:1.2:2")
    assert code == 0
    assert out.splitlines()[0] == "omega_s,signal" and len(out.splitlines()) == 3


def test_respond_alpha_matches_closed_form(capsys):
    code, out, _ = run_cli(capsys, "respond", "--preset", "dimer_linear", "--args", "0.9")
    assert code == 0
    row = list(csv.DictReader(io.StringIO(out)))[0]
    val = float(row["re"]) + 1j * float(row["im"])
    want = 1 / (0.9 - 1 + 0.1j) - 1 / (0.9 + 1 + 0.1j)
    assert abs(val - want) < 1e-12


def test_diagrams_command(capsys):
    code, out, _ = run_cli(capsys, "diagrams", "--order", "3", "--permutations",
                           "--classify", "equal_order_cascading", "--count")
    assert code == 0 and out.strip() == "30"
    code, out, _ = run_cli(capsys, "diagrams", "--order", "2")
    assert len(json.loads(out)) == 5
    code, out, _ = run_cli(capsys, "diagrams", "--order", "5")
    counts = json.loads(out)
    assert counts["count_equal_order_cascading"] == 21
    assert counts["count_total"] == counts["enumerated"]


def test_preset_command_output_validates(tmp_path, capsys):
    target = tmp_path / "ladder.yaml"
    assert run_cli(capsys, "preset", "ladder_s2", "--output", str(target))[0] == 0
    code, out, _ = run_cli(capsys, "validate", str(target))
    assert code == 0 and out.startswith("ok: 2 molecules, 3 pulses, order 2")


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text(MINIMAL.replace("width: 4}", "widht: 4}", 1))
    code, _, err = run_cli(capsys, "validate", str(bad))
    assert code == 2
    assert "unknown key 'widht'" in err
    assert run_cli(capsys, "preset", "nope")[0] == 2
    assert run_cli(capsys, "validate", str(tmp_path / "missing.yaml"))[0] == 2


def test_numerical_failure_exit_code(tmp_path, capsys):
    cfg = tmp_path / "undamped.yaml"
    cfg.write_text(MINIMAL.replace("0.1]]", "0.0]]"))
    code, _, err = run_cli(capsys, "respond", "--config", str(cfg), "--args", "1.0")
    assert code == 3
    assert "numerical failure" in err


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "cascadesim.cli", "diagrams", "--order", "3",
                          "--count"], capture_output=True, text=True, check=False)
    assert res.returncode == 0 and res.stdout.strip() == "16"
