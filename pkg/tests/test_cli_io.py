import json
import struct

import numpy as np
import pytest

from elastoflow.cli import main
from elastoflow.config import SimConfig
from elastoflow.errors import ConfigError
from elastoflow.grid import Grid
from elastoflow.io_formats import (
    TRAJECTORY_COLUMNS,
    read_csv,
    read_height,
    write_height,
)

from oracles import gentle_height


def base_config(out_dir, **overrides):
    cfg = {
        "mode": "reduced",
        "n": 64,
        "m": 8,
        "d": 0.15,
        "e0": 0.15,
        "lame": {"lambda": 2.0, "mu": 1.0},
        "sigma": 1,
        "stepper": {"tau0": 2e-5, "growth": 1.0, "coupling": "lagged", "tol": 1e-10},
        "t_end": 2e-4,
        "perturbation": {"kind": "single_mode", "k": 1, "amplitude": 1e-3},
        "output": {"dir": str(out_dir), "checkpoint_every": 5},
    }
    cfg.update(overrides)
    return cfg


def write_config(tmp_path, cfg, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


# --- height binary ------------------------------------------------------------

@pytest.mark.parametrize("dim,n", [(1, 64), (2, 16)])
def test_height_round_trip(tmp_path, dim, n):
    grid = Grid(dim, n)
    h = gentle_height(grid, 3, band=3)
    path = tmp_path / "h.bin"
    write_height(path, h)
    back = read_height(path)
    assert back.grid == grid
    assert np.array_equal(back.values, h.values)
    raw = path.read_bytes()
    magic, version, ndim, d0, d1 = struct.unpack_from("<4sIIII", raw, 0)
    assert magic == b"ELFH"
    assert version == 1
    assert ndim == dim
    assert d0 == n
    assert len(raw) == 32 + 8 * grid.num_nodes


def test_height_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"NOPE" + b"\x00" * 60)
    with pytest.raises(ValueError):
        read_height(path)


# --- config -------------------------------------------------------------------

def test_config_requires_fields(tmp_path):
    cfg = base_config(tmp_path)
    del cfg["lame"]
    with pytest.raises(ConfigError):
        SimConfig.from_dict(cfg)


def test_config_rejects_bad_values(tmp_path):
    with pytest.raises(ConfigError):
        SimConfig.from_dict(base_config(tmp_path, n=63))
    with pytest.raises(ConfigError):
        SimConfig.from_dict(base_config(tmp_path, d=-0.1))
    bad = base_config(tmp_path)
    bad["stepper"] = {"tau0": 1e-5, "tau_min": 1e-4}
    with pytest.raises(ConfigError):
        SimConfig.from_dict(bad)
    bad2 = base_config(tmp_path)
    bad2["perturbation"] = {"kind": "single_mode", "amplitude": 1e-3}
    with pytest.raises(ConfigError):
        SimConfig.from_dict(bad2)


def test_config_full_mode_wavevector(tmp_path):
    cfg = base_config(tmp_path, mode="full", n=16, m=6)
    cfg["perturbation"] = {"kind": "single_mode", "k": [1, 1], "amplitude": 1e-3}
    sim = SimConfig.from_dict(cfg)
    assert sim.surface_dim == 2
    h = sim.initial_height()
    assert h.values.shape == (16, 16)
    cfg["perturbation"] = {"kind": "single_mode", "k": 1, "amplitude": 1e-3}
    with pytest.raises(ConfigError):
        SimConfig.from_dict(cfg)


def test_config_defaults(tmp_path):
    sim = SimConfig.from_dict(base_config(tmp_path))
    assert sim.h_min == pytest.approx(1e-3 * sim.d)
    assert sim.solver_rtol == 1e-10
    assert sim.scan_d_list is None


# --- CLI ------------------------------------------------------------------------

def test_simulate_outputs_and_determinism(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    cfg = base_config(out1)
    cfg["perturbation"] = {"kind": "random", "seed": 11, "amplitude": 1e-3, "band": 4}
    path = write_config(tmp_path, cfg)
    assert main(["simulate", "--config", str(path)]) == 0
    assert main(["simulate", "--config", str(path), "--out", str(out2)]) == 0
    csv1 = (out1 / "trajectory.csv").read_bytes()
    csv2 = (out2 / "trajectory.csv").read_bytes()
    assert csv1 == csv2
    header = csv1.decode().splitlines()[0]
    assert header == ",".join(TRAJECTORY_COLUMNS)
    assert (out1 / "height_0000.bin").exists()
    assert (out1 / "height_final.bin").exists()
    # a different seed changes the trajectory
    out3 = tmp_path / "c"
    assert main(["simulate", "--config", str(path), "--out", str(out3),
                 "--seed", "12"]) == 0
    assert (out3 / "trajectory.csv").read_bytes() != csv1


def test_simulate_flat_rows_identical(tmp_path):
    out = tmp_path / "flat"
    cfg = base_config(out, t_end=1e-4)
    cfg["perturbation"] = {"kind": "single_mode", "k": 1, "amplitude": 0.0}
    path = write_config(tmp_path, cfg)
    assert main(["simulate", "--config", str(path)]) == 0
    cols = read_csv(out / "trajectory.csv")
    for name in ("volume", "energy_total", "h_dev_l2"):
        assert np.max(np.abs(cols[name] - cols[name][0])) < 1e-12


def test_simulate_zero_horizon_single_row(tmp_path):
    out = tmp_path / "zero"
    cfg = base_config(out, t_end=0.0)
    path = write_config(tmp_path, cfg)
    assert main(["simulate", "--config", str(path)]) == 0
    rows = (out / "trajectory.csv").read_text().strip().splitlines()
    assert len(rows) == 2  # header + initial row


def test_exit_code_config_error(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "missing.json")]) == 2
    bad = write_config(tmp_path, {"mode": "reduced"}, name="bad.json")
    assert main(["simulate", "--config", str(bad)]) == 2


def test_exit_code_pinch_off(tmp_path):
    out = tmp_path / "pinch"
    cfg = base_config(out, e0=0.0, t_end=0.05, h_min=0.05)
    cfg["stepper"] = {"tau0": 2e-5, "tau_min": 5e-6, "growth": 1.0}
    cfg["forcing"] = {"kind": "single_mode", "k": 1, "amplitude": 8.0, "func": "cos"}
    cfg["perturbation"] = {"kind": "single_mode", "k": 1, "amplitude": 0.0}
    cfg["d"] = 0.1
    path = write_config(tmp_path, cfg)
    assert main(["simulate", "--config", str(path)]) == 3
    # the partial trajectory is still written
    assert (out / "trajectory.csv").exists()


def test_exit_code_solver_failure(tmp_path):
    out = tmp_path / "stall"
    cfg = base_config(out, e0=0.4, t_end=1e-4)
    cfg["stepper"] = {"tau0": 1e-6, "tau_min": 1e-6, "growth": 1.0,
                      "coupling": "picard", "tol": 1e-16, "max_iter": 1}
    path = write_config(tmp_path, cfg)
    assert main(["simulate", "--config", str(path)]) == 4


def test_threads_flag_accepted(tmp_path):
    out = tmp_path / "thr"
    cfg = base_config(out, t_end=4e-5)
    path = write_config(tmp_path, cfg)
    assert main(["simulate", "--config", str(path), "--threads", "1"]) == 0


def test_flat_scan_command(tmp_path):
    out = tmp_path / "scan"
    cfg = base_config(out, e0=1.2, t_end=0.0)
    cfg["scan"] = {"d_list": [0.05, 0.1, 0.2], "cutoff": 3}
    path = write_config(tmp_path, cfg)
    assert main(["flat-scan", "--config", str(path)]) == 0
    cols = read_csv(out / "scan.csv")
    assert list(cols) == ["d", "min_eig_L2", "min_eig_H1"]
    assert cols["min_eig_H1"][0] > 0 > cols["min_eig_H1"][-1]


def test_second_variation_command(tmp_path):
    out = tmp_path / "sv"
    cfg = base_config(out, t_end=0.0)
    cfg["perturbation"] = {"kind": "single_mode", "k": 1, "amplitude": 0.0}
    cfg["psi"] = {"modes": [1, 2], "epsilon": 1e-3}
    path = write_config(tmp_path, cfg)
    assert main(["second-variation", "--config", str(path)]) == 0
    text = (out / "second_variation.csv").read_text().splitlines()
    assert text[0] == "k,second_variation,fd_value,rel_mismatch"
    mismatches = [float(line.split(",")[3]) for line in text[1:]]
    assert all(m < 1e-3 for m in mismatches)


def test_energy_identity_command(tmp_path):
    out = tmp_path / "ei"
    cfg = base_config(out, t_end=0.0)
    cfg["stepper"] = {"tau0": 4e-6, "growth": 1.0}
    cfg["identity"] = {"steps": 8, "taus": [4e-6, 2e-6]}
    path = write_config(tmp_path, cfg)
    assert main(["energy-identity", "--config", str(path)]) == 0
    lines = (out / "energy_identity.csv").read_text().strip().splitlines()
    assert lines[0] == "tau,mismatch,lhs,rhs"
    assert len(lines) == 3


def test_full_mode_simulate_smoke(tmp_path):
    out = tmp_path / "full"
    cfg = base_config(out, mode="full", n=12, m=6, t_end=4e-5)
    cfg["n"] = 12
    cfg["perturbation"] = {"kind": "single_mode", "k": [1, 0], "amplitude": 1e-3}
    path = write_config(tmp_path, cfg)
    assert main(["simulate", "--config", str(path)]) == 0
    back = read_height(out / "height_final.bin")
    assert back.grid.surface_dim == 2
