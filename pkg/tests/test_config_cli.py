import json

import numpy as np
import pytest
import yaml

from bosonic_grape.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main
from bosonic_grape.config import DEFAULTS, check, layered, resolve, validate
from bosonic_grape.hilbert import MHZ, NS, US
from bosonic_grape.manifest import MANIFEST_NAME, sha256_file
from bosonic_grape.pulse import PulseParams, zero_params

SMALL = {
    "code": {"name": "Bin11", "cavity_dim": 16},
    "gate": {"kind": "Z"},
    "T_gate_us": 0.1,
    "optimizer": {"max_iter": 15},
}


def _write(tmp_path, data, name="run.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(data))
    return p


def _manifest(out):
    return json.loads((out / MANIFEST_NAME).read_text())


# validation ---------------------------------------------------------------------


def test_valid_config_has_no_diagnostics(tmp_path):
    assert validate(_write(tmp_path, {"command": "optimize", "seed": 3, **SMALL})) == []


def test_negative_lifetime_reports_field_and_line(tmp_path):
    text = "command: optimize\nseed: 1\ndecoherence:\n  T1_us: -5\n"
    p = tmp_path / "bad.yaml"
    p.write_text(text)
    diags = validate(p)
    assert len(diags) == 1
    assert diags[0].field == "decoherence.T1_us" and diags[0].line == 4
    assert "positive" in diags[0].message


def test_missing_seed_reported(tmp_path):
    diags = validate(_write(tmp_path, {"command": "ensemble"}))
    assert [d.field for d in diags] == ["seed"]


def test_unknown_key_and_yaml_error(tmp_path):
    diags = validate(_write(tmp_path, {"command": "bound", "constraints": {"umax": 3}}))
    assert [d.field for d in diags] == ["constraints.umax"]
    p = tmp_path / "broken.yaml"
    p.write_text("command: [optimize\n")
    assert validate(p)[0].field == "<yaml>"


def test_missing_params_file(tmp_path):
    diags = validate(_write(tmp_path, {"command": "evaluate", "params": str(tmp_path / "nope.json")}))
    assert [d.field for d in diags] == ["params"]


def test_layering_order():
    cfg = layered({"preset": "weak", "constraints": {"dt_ns": 0.5}}, {"seed": 9})
    assert cfg["constraints"]["dt_ns"] == 0.5
    assert cfg["constraints"]["u_max_MHz"] == [20.0, 20.0, 15.0, 15.0]
    assert cfg["seed"] == 9
    assert DEFAULTS["seed"] is None
    cfg = layered({}, {"command": "bound", "out": None})
    assert check(cfg) == []


def test_resolve_converts_units():
    r = resolve(layered({"command": "bound", "T_gate_us": 0.5}))
    assert np.isclose(r.t_gate, 0.5 * US)
    assert np.isclose(r.f_max, 30 * MHZ) and np.isclose(r.dt, 2 * NS)
    assert np.isclose(r.chi, -2 * np.pi * 2e6)
    assert np.allclose(r.u_max, [20, 20, 3, 3])


# command line -------------------------------------------------------------------


def test_validate_command_exit_codes(tmp_path, capsys):
    assert main(["validate", str(_write(tmp_path, {"command": "optimize", "seed": 1}))]) == EXIT_OK
    assert "ok" in capsys.readouterr().out
    assert main(["validate", str(_write(tmp_path, {"command": "optimize"}, "b.yaml"))]) == EXIT_CONFIG
    assert main(["validate", str(tmp_path / "missing.yaml")]) == EXIT_CONFIG


def test_config_error_exit_code(tmp_path, capsys):
    assert main(["optimize", "--config", str(_write(tmp_path, SMALL)), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "seed" in capsys.readouterr().err


def test_optimize_writes_manifest_and_is_reproducible(tmp_path):
    cfg = _write(tmp_path, SMALL)
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        assert main(["optimize", "--config", str(cfg), "--seed", "5", "--out", str(out)]) == EXIT_OK
    m = _manifest(outs[0])
    assert m["status"] == "ok" and m["command"] == "optimize"
    assert set(m["files"]) == {"params.json", "waveform.csv", "run.json", "summary.json"}
    for name, digest in m["files"].items():
        assert sha256_file(outs[0] / name) == digest
    written = {p.relative_to(outs[0]).as_posix() for p in outs[0].rglob("*") if p.is_file()}
    assert written == set(m["files"]) | {MANIFEST_NAME}
    for name in ("params.json", "waveform.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    params = PulseParams.from_json((outs[0] / "params.json").read_text())
    assert params.seed == 5


def test_restarts_write_subdirectories(tmp_path):
    out = tmp_path / "r"
    args = ["optimize", "--config", str(_write(tmp_path, SMALL)), "--seed", "2", "--restarts", "2", "--out", str(out)]
    assert main(args) == EXIT_OK
    files = _manifest(out)["files"]
    assert "restart_000/params.json" in files and "restart_001/params.json" in files
    summary = json.loads((out / "summary.json").read_text())
    assert len(summary["restarts"]) == 2


def test_evaluate_susceptibility_trajectory(tmp_path):
    cfg = _write(tmp_path, SMALL)
    opt = tmp_path / "opt"
    assert main(["optimize", "--config", str(cfg), "--seed", "1", "--out", str(opt)]) == EXIT_OK
    params = str(opt / "params.json")
    ev = tmp_path / "ev"
    assert main(["evaluate", "--config", str(cfg), "--params", params, "--out", str(ev)]) == EXIT_OK
    fid = json.loads((ev / "fidelity.json").read_text())
    assert 0 <= fid["r0"] <= fid["r_L"] <= 1
    su = tmp_path / "su"
    assert main(["susceptibility", "--config", str(cfg), "--params", params, "--out", str(su)]) == EXIT_OK
    files = set(_manifest(su)["files"])
    assert {"report.json", "timecourse_CavityLoss.csv", "timecourse_TransmonRelaxation.csv"} <= files
    tr = tmp_path / "tr"
    assert main(["trajectory", "--config", str(cfg), "--params", params, "--out", str(tr)]) == EXIT_OK
    assert (tr / "trajectory.csv").read_text().startswith("t_ns,mean_photon")


def test_bound_command(tmp_path):
    data = {"bound": {"T_us": {"start": 0.2, "stop": 2.0, "num": 5}, "Tphi_us": {"start": 31, "stop": 85, "num": 3}}}
    out = tmp_path / "b"
    assert main(["bound", "--config", str(_write(tmp_path, data)), "--out", str(out)]) == EXIT_OK
    rows = (out / "minima.csv").read_text().splitlines()
    assert rows[0] == "Tphi_us,T_opt_ns,r_min_percent"
    assert abs(float(rows[1].split(",")[2]) - 0.995) < 1e-3
    assert len((out / "heatmap.csv").read_text().splitlines()) == 4


def test_numerical_failure_exit_code(tmp_path, capsys):
    # a strong constant cavity drive pushes the state out of a 16-level cavity
    t = zero_params(30 * MHZ, 0.1 * US, 2 * NS)
    c0 = np.array([0.0, 0.0, 15.0, 0.0])
    p = tmp_path / "drive.json"
    p.write_text(PulseParams(c0, t.a, t.b, t.f_max, t.t_gate, t.n_steps).to_json())
    out = tmp_path / "fail"
    args = ["trajectory", "--config", str(_write(tmp_path, SMALL)), "--params", str(p), "--out", str(out)]
    assert main(args) == EXIT_NUMERICAL
    assert "stage 'trajectory'" in capsys.readouterr().err
    assert _manifest(out)["status"] == "numerical failure"


def test_module_entry_point_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.strip() == "0.1.0"
