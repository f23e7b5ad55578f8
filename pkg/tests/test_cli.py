import json

import numpy as np
import pytest

from nhgeo.cli import (EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, load_config, main)
from nhgeo.errors import ConfigError


def write_cfg(tmp_path, name="cfg.json", **overrides):
    cfg = {
        "model": {"m": 0.5, "L": 64},
        "packet": {"band": 0, "k_c": 3.45, "sigma": 8.0, "x_c": 32.0},
        "broadening": {"eta": 0.1, "eta_prime": 1.0, "T": 30.0, "dt": 0.05},
        "output": str(tmp_path / "run"),
    }
    for key, val in overrides.items():
        if isinstance(val, dict) and key in cfg:
            cfg[key].update(val)
        else:
            cfg[key] = val
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# config:")
    header = lines[1].split(",")
    data = np.array([[float(x) for x in line.split(",")] for line in lines[2:]])
    return header, data


def test_unknown_keys_rejected(tmp_path):
    path = write_cfg(tmp_path, model={"m": 0.5, "bogus": 1})
    with pytest.raises(ConfigError):
        load_config(str(path))
    assert main(["spectrum", "--config", str(path)]) == EXIT_CONFIG
    path2 = write_cfg(tmp_path, "c2.json", extra_section={"a": 1})
    assert main(["spectrum", "--config", str(path2)]) == EXIT_CONFIG


def test_invalid_physics_rejected(tmp_path):
    path = write_cfg(tmp_path, packet={"sigma": 100.0})   # sigma > L/8
    assert main(["spectrum", "--config", str(path)]) == EXIT_CONFIG
    path = write_cfg(tmp_path, "c2.json", model={"L": 63})
    assert main(["spectrum", "--config", str(path)]) == EXIT_CONFIG
    path = write_cfg(tmp_path, "c3.json", broadening={"eta": -0.1})
    assert main(["spectrum", "--config", str(path)]) == EXIT_CONFIG


def test_spectrum_values_and_reality(tmp_path):
    path = write_cfg(tmp_path)
    assert main(["spectrum", "--config", str(path)]) == EXIT_OK
    header, data = read_csv(tmp_path / "run_spectrum.csv")
    assert header == ["k", "re_e0", "im_e0", "re_e1", "im_e1"]
    # row at k = 0 holds +-sqrt(1 - 0.25)
    assert abs(data[0, 1] + 0.8660254037844386) < 1e-12
    assert abs(data[0, 3] - 0.8660254037844386) < 1e-12
    assert np.abs(data[:, [2, 4]]).max() < 1e-10


def test_spectrum_aborts_at_exceptional_point(tmp_path, capsys):
    path = write_cfg(tmp_path, model={"m": 1.2, "L": 64})
    assert main(["spectrum", "--config", str(path)]) == EXIT_NUMERICAL
    err = capsys.readouterr().err
    assert "exceptional" in err and "k =" in err


def test_geometry_scan_outputs(tmp_path):
    path = write_cfg(tmp_path, model={"m": 0.0, "L": 256})
    assert main(["geometry", "--config", str(path)]) == EXIT_OK
    header, data = read_csv(tmp_path / "run_geometry.csv")
    assert header[:5] == ["k", "re_q_b0", "im_q_b0", "re_Q_b0", "im_Q_b0"]
    # Hermitian limit: the metric column is 1/4, Q vanishes
    assert np.abs(data[:, 1] - 0.25).max() < 1e-3
    assert np.abs(data[:, 3]).max() < 1e-10
    path2 = write_cfg(tmp_path, "c8.json", model={"m": 0.8, "L": 256})
    assert main(["geometry", "--config", str(path2)]) == EXIT_OK
    _, data8 = read_csv(tmp_path / "run_geometry.csv")
    assert np.abs(data8[:, 3]).max() < 1e-8   # Re Q = 0 under PT


def test_response_trace(tmp_path):
    path = write_cfg(tmp_path, model={"m": 0.8, "L": 256},
                     packet={"k_c": 3.45575191894877, "sigma": 32.0, "x_c": 128.0},
                     broadening={"T": 40.0, "dt": 0.05})
    assert main(["response", "--config", str(path)]) == EXIT_OK
    header, data = read_csv(tmp_path / "run_response.csv")
    assert header == ["t", "c_numeric", "c_analytic"]
    assert data[0, 0] == 0.0 and np.all(data[:, 0] >= 0.0)
    # numeric mean tracks the band curvature within 1% of the trace scale
    from nhgeo import PTChainModel, band_curvature
    curv = band_curvature(PTChainModel(m=0.8, L=256), 0, data[0, 0] + 3.45575191894877)
    scale = np.abs(data[:, 1]).max()
    assert abs(data[:, 1].mean() - np.real(curv)) < 0.015 * scale


def test_spread_csv(tmp_path):
    path = write_cfg(tmp_path, model={"m": 0.8, "L": 512},
                     packet={"band": 0, "k_c": 3.45, "sigma": [16.0, 32.0], "x_c": 256.0})
    cfg = json.loads(path.read_text())
    cfg["sweep"] = {"variable": "k_c", "values": [2.2, 4.0]}
    path.write_text(json.dumps(cfg))
    assert main(["spread", "--config", str(path)]) == EXIT_OK
    header, data = read_csv(tmp_path / "run_spread.csv")
    assert header == ["sigma", "k_c", "spread", "geometry_part", "re_q_ref"]
    assert data.shape[0] == 4
    big = data[data[:, 0] == 32.0]
    assert np.all(np.abs(big[:, 3] - big[:, 4]) < 0.05 * np.abs(big[:, 4]))


def test_integrated_csv(tmp_path):
    path = write_cfg(tmp_path, model={"m": 0.8, "L": 512},
                     packet={"band": 0, "k_c": 3.45, "sigma": 32.0, "x_c": 256.0},
                     broadening={"eta": 0.02, "eta_prime": 0.2, "T": 300.0, "dt": 0.05})
    cfg = json.loads(path.read_text())
    cfg["sweep"] = {"variable": "k_c", "values": [3.45575191894877]}
    path.write_text(json.dumps(cfg))
    assert main(["integrated", "--config", str(path)]) == EXIT_OK
    header, data = read_csv(tmp_path / "run_integrated.csv")
    assert header == ["sigma", "k_c", "i_numeric", "i_analytic", "deviation"]
    assert abs(data[0, 2] - data[0, 3]) == abs(data[0, 4])


def test_determinism_bit_identical(tmp_path):
    path = write_cfg(tmp_path, model={"m": 0.8, "L": 128})
    assert main(["geometry", "--config", str(path)]) == EXIT_OK
    first = (tmp_path / "run_geometry.csv").read_bytes()
    assert main(["geometry", "--config", str(path), "--threads", "2"]) == EXIT_OK
    assert (tmp_path / "run_geometry.csv").read_bytes() == first


def test_out_prefix_override(tmp_path):
    path = write_cfg(tmp_path)
    out = str(tmp_path / "elsewhere" / "x")
    assert main(["spectrum", "--config", str(path), "--out", out]) == EXIT_OK
    assert (tmp_path / "elsewhere" / "x_spectrum.csv").exists()


def test_validate_reports_defectiveness_without_crash(tmp_path, capsys):
    # m = 1.0 places exceptional points on the grid: reported, exit 2
    path = write_cfg(tmp_path, model={"m": 1.0, "L": 64})
    code = main(["validate", "--config", str(path)])
    assert code == EXIT_NUMERICAL
    report = json.loads((tmp_path / "run_validate.json").read_text())
    assert report["passed"] is False
    assert "exceptional" in report["defective"]["message"]
