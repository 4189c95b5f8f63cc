import json
import os
import subprocess

import pytest

import uavfl

SMALL = {
    "fleet": {"n": 6},
    "plan": {"method": "C", "le": 1, "ge": 3, "lr": 1, "gr": 1, "eta": 0.05},
    "data": {"per_drone": 20, "total": 0, "dim": 6, "classes": 3},
}


def test_distance():
    assert uavfl.distance(uavfl.Position(0, 0), uavfl.Position(3, 4)) == pytest.approx(5.0)


def test_fedavg_weights_by_samples():
    out = uavfl.fedavg_aggregate([([1.0, 2.0], 1), ([4.0, 8.0], 3)])
    assert out == pytest.approx([3.25, 6.5])


def test_normalize_config_fills_defaults():
    cfg = uavfl.normalize_config({"fleet": {"n": 8}})
    assert cfg["fleet"]["n"] == 8
    assert cfg["plan"]["ge"] == 30
    with pytest.raises(ValueError):
        uavfl.normalize_config({"plan": {"lr": 0}})


def test_run_experiment_summary():
    result = uavfl.run_experiment(SMALL)
    assert result["type_label"] == "C_1lr_1gr_6"
    assert result["status"] == "completed"
    assert 0.0 <= result["final_accuracy"] <= 100.0
    assert result["records"] == 6 * 3


def test_link_budget():
    assert uavfl.noise_power_w() == pytest.approx(7.962e-14, rel=1e-2)
    assert uavfl.shannon_rate_bps(5.0) == pytest.approx(4.09e8, rel=1e-2)


def test_cli_round_trip(tmp_path):
    cli = os.environ.get("UAVFL_CLI")
    if not cli:
        pytest.skip("UAVFL_CLI not set")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(SMALL))
    out = tmp_path / "out"
    proc = subprocess.run([cli, "run", "--config", str(cfg), "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (out / "C_1lr_1gr_6_42.csv").exists()
