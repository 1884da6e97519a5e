import csv
import json

import numpy as np
import pytest
import yaml

from squeezed_ati.cli import ExperimentConfig, compute_table, convergence_report, load_config, main
from squeezed_ati.errors import ConfigError


def write_cfg(tmp_path, data, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return str(path)


def read_table(path):
    lines = path.read_text().splitlines()
    header = [ln for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if not ln.startswith("#")]
    rows = list(csv.reader(body))
    return header, rows[0], rows[1:]


def test_config_roundtrip(tmp_path):
    data = {
        "kind": "entropy-scan",
        "laser": {"n_cyc": 3, "E0": 0.05},
        "squeeze": {"theta": 0.0},
        "grids": {"epsilon": {"log10_start": -4, "log10_stop": -3, "num": 3}, "n_cyc": [1, 2]},
        "tolerances": {"neg_tol": 2e-3},
        "n_samples": 16,
    }
    cfg = load_config(write_cfg(tmp_path, data))
    assert cfg.laser.n_cyc == 3 and cfg.neg_tol == 2e-3
    assert np.allclose(cfg.eps_values(), np.logspace(-4, -3, 3))
    again = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg


@pytest.mark.parametrize("bad,msg", [
    ({"kind": "purity-scan", "cutoff": 10}, "cutoff out of range"),
    ({"kind": "spectra"}, "unknown experiment kind"),
    ({"kind": "purity-scan", "grids": {"v_f": []}}, "empty"),
    ({"kind": "purity-scan", "wigner_step": -1}, "positive"),
    ({"kind": "purity-scan", "colour": 1}, "unknown configuration keys"),
])
def test_config_validation(bad, msg):
    with pytest.raises(ConfigError, match=msg):
        ExperimentConfig.from_dict(bad)


def test_purity_scan_run(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"kind": "purity-scan", "epsilon": 1e-3})
    assert main(["run", cfg, "--out", str(tmp_path / "out")]) == 0
    header, cols, rows = read_table(tmp_path / "out" / "purity-scan.csv")
    assert cols == ["t1_au", "purity_phase", "purity_amplitude"]
    assert len(rows) == 200
    t1 = np.array([float(r[0]) for r in rows])
    assert t1[0] == 0 and t1[-1] < 2 * np.pi / 0.057
    assert any("units" in h for h in header)
    meta = json.loads((tmp_path / "out" / "purity-scan.json").read_text())
    assert ExperimentConfig.from_dict(meta["config"]) == load_config(cfg)
    assert meta["wall_time_s"] >= 0 and "version" in meta


def test_ionization_times_columns(tmp_path):
    cfg = ExperimentConfig.from_dict({"kind": "ionization-times", "grids": {"v_f": [-0.2, 0.2]}})
    cols, rows = compute_table(cfg)
    assert cols == ["epsilon_au", "v_f_au", "Re_t_ion_au", "Im_t_ion_au", "branch_id"]
    assert len({r[0] for r in rows}) == 12
    assert len(rows) == 12 * 2 * 4
    assert all(r[3] > 0 for r in rows)


def test_cutoff_override_exit_code(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"kind": "purity-scan"})
    assert main(["run", cfg, "--cutoff", "10", "--out", str(tmp_path)]) == 2
    assert "cutoff out of range" in capsys.readouterr().err


def test_bad_yaml_exit_code(tmp_path, capsys):
    path = tmp_path / "broken.yaml"
    path.write_text("kind: [unclosed")
    assert main(["run", str(path)]) == 2
    assert main(["run", str(tmp_path / "missing.yaml")]) == 2


def test_compute_error_names_cell(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"kind": "negativity-scan", "grids": {"v_f": [0.1, 5.0]}})
    assert main(["run", cfg, "--out", str(tmp_path)]) == 3
    assert "5.0" in capsys.readouterr().err


def test_tables_deterministic_and_parallel(tmp_path):
    data = {"kind": "entropy-scan", "grids": {"epsilon": [1e-4, 10**-2.9], "n_cyc": [1, 2]},
            "n_samples": 16}
    cfg = write_cfg(tmp_path, data)
    bodies = []
    for k, threads in enumerate(("1", "1", "2")):
        out = tmp_path / f"o{k}"
        assert main(["run", cfg, "--out", str(out), "--threads", threads]) == 0
        text = (out / "entropy-scan.csv").read_text()
        bodies.append([ln for ln in text.splitlines() if not ln.startswith("#")])
    assert bodies[0] == bodies[1] == bodies[2]
    assert bodies[0][0] == "epsilon_au,n_cyc,S_lin"


def test_displacement_compare_and_wigner(tmp_path):
    cfg = ExperimentConfig.from_dict({"kind": "displacement-compare",
                                      "grids": {"t1": [0.0, 20.0], "v_f": [0.1]}})
    cols, rows = compute_table(cfg)
    assert cols[2:4] == ["delta_phase_re_per_eps", "delta_phase_im_per_eps"]
    assert len(rows) == 2
    cfg = ExperimentConfig.from_dict({"kind": "wigner-dump", "v_f": 0.12, "wigner_step": 0.1})
    cols, rows = compute_table(cfg)
    assert cols == ["x", "p", "W"]
    step = abs(rows[1][1] - rows[0][1])
    assert sum(r[2] for r in rows) * step**2 == pytest.approx(1, abs=5e-3)


def test_convergence_report(tmp_path):
    cfg = ExperimentConfig.from_dict({"kind": "negativity-scan", "out": str(tmp_path)})
    rep = convergence_report(cfg)
    assert len(rep["rows"]) == 5
    assert rep["max_abs_deviation"]["negativity"] < 1e-3
    header, cols, rows = read_table(tmp_path / "negativity-scan_convergence.csv")
    assert cols[-3:] == ["baseline", "refined", "abs_deviation"]
    assert all(r[-3] and r[-2] for r in rows)
    cfg = ExperimentConfig.from_dict({"kind": "entropy-scan", "out": str(tmp_path),
                                      "grids": {"epsilon": [10**-2.9], "n_cyc": [2]}})
    rep = convergence_report(cfg)
    assert rep["max_abs_deviation"]["S_lin"] < 1e-3
