import json
import subprocess
import sys

import pytest

from maafc.cli import main
from maafc.codec import CodeSpec, GeneratorMatrix, build_generator
from maafc.weights import AFC8_WEIGHTS, WeightSet


@pytest.fixture
def exp_config(tmp_path):
    path = tmp_path / "exp.json"
    path.write_text(
        json.dumps(
            {
                "k": 30,
                "trials": 10,
                "batch_frames": 3,
                "snr_db": 15.0,
                "target_ber": 0.1,
                "snr_grid": [10.0, 20.0],
                "rate_grid": [0.5, 1.0],
            }
        )
    )
    return path


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_design_weights(tmp_path, capsys):
    out = tmp_path / "w.json"
    code, _, err = run(["design-weights", "--seed", 0, "--out", out], capsys)
    assert code == 0
    ws = WeightSet.from_json(out.read_text())
    assert ws.f == 8
    assert json.loads(err)["residual"] <= 1e-4


def test_encode_writes_generator_and_symbols(tmp_path, capsys):
    spec = CodeSpec(10, 3, AFC8_WEIGHTS, 4)
    cfg = tmp_path / "code.json"
    cfg.write_text(spec.to_json())
    sym = tmp_path / "u.csv"
    code, out, _ = run(["encode", "--config", cfg, "--rows", 5, "--bits", "1100110011", "--symbols-out", sym], capsys)
    assert code == 0
    assert GeneratorMatrix.from_text(out, 10) == build_generator(spec, 5)
    lines = sym.read_text().splitlines()
    assert lines[0] == "row,u" and len(lines) == 6


def test_simulate_with_trace(tmp_path, capsys, exp_config):
    trace = tmp_path / "t.csv"
    code, out, _ = run(["simulate", "--config", exp_config, "--m", 45, "--trace", trace, "--check-mode", "gauss"], capsys)
    assert code == 0
    assert out.splitlines()[0].startswith("inverse_sum_rate,m,")
    assert len(out.splitlines()) == 3
    assert trace.read_text().startswith("iteration,mean_abs_llr_1,ber_1,mean_abs_llr_2,ber_2")


def test_de_trajectory(capsys, exp_config):
    code, out, _ = run(["de", "--config", exp_config, "--inverse-rate", 0.75], capsys)
    assert code == 0
    assert out.splitlines()[0] == "t,m_1,m_2,ber_1,ber_2"


def test_sweeps_write_files(tmp_path, capsys, exp_config):
    for cmd, rows in (("sweep-snr", 3), ("ber-curve", 5)):
        out = tmp_path / f"{cmd}.csv"
        code, _, _ = run([cmd, "--config", exp_config, "--out", out, "--seed", 3, "--threads", 2], capsys)
        assert code == 0
        assert len(out.read_text().splitlines()) == rows


def test_failure_is_one_json_line(tmp_path, capsys):
    code, _, err = run(["de", "--config", tmp_path / "absent.json", "--m", 3], capsys)
    assert code != 0
    doc = json.loads(err.strip())
    assert doc["error"] == "FileNotFoundError" and "absent.json" in doc["message"]
    bad = tmp_path / "bad.json"
    bad.write_text('{"trials": 0}')
    code, _, err = run(["ber-curve", "--config", bad], capsys)
    assert code != 0 and json.loads(err)["error"] == "ValueError"


def test_console_entry_point(exp_config):
    proc = subprocess.run(
        [sys.executable, "-m", "maafc.cli", "de", "--config", str(exp_config), "--m", "30"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0 and proc.stdout.startswith("t,m_1")
