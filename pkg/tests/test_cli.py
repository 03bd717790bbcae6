import os

import numpy as np
import pytest

from relaycell.cli import EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_OK, main

BASE_CONFIG = """
[scenario]
rate = 3.0
noise = "-93 dBm"
f_c = "2.6 GHz"
p_out = 0.02

[profile]
e_b_max = "1 J"
e_r_max = "500 mJ"
eta_b = 2.66
eta_r = 3.1
e_b_tx_plus_u_rx = "90 mJ"
e_b_idle = "25 mJ"
e_r_idle = "10 mJ"
e_dsp_2hop = "50 mJ"

[layout]
d_b = "800 m"
grid_step = "90 m"
relays = [["100 m", "0 m"]]

[thresholds]
p_t = [0.5, 0.7]
e_t = ["200 mJ", "400 mJ"]
e_t_r = ["20 mJ", "60 mJ"]

[oracle]
samples = 2000
seed = 7
"""


@pytest.fixture()
def config_file(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(BASE_CONFIG)
    return str(path)


def read(path):
    with open(path, "rb") as fh:
        return fh.read()


def test_map_rea_columns_and_hash(config_file, tmp_path):
    out = tmp_path / "out"
    assert main(["map-rea", "--config", config_file, "--out", str(out)]) == EXIT_OK
    lines = read(out / "map_rea.csv").decode().splitlines()
    assert lines[0].startswith("# config_hash=")
    assert lines[1] == "x_m,y_m,relay_index,covered,p_relaying,member_pt_0.5,member_pt_0.7"
    assert len(lines) > 10


def test_map_eea_and_ici_columns(config_file, tmp_path):
    out = tmp_path / "out"
    assert main(["map-eea", "--config", config_file, "--out", str(out)]) == EXIT_OK
    header = read(out / "map_eea.csv").decode().splitlines()[1]
    assert header == "x_m,y_m,relay_index,covered,expected_rf_j,member_et_0.2,member_et_0.4"
    assert main(["map-ici", "--config", config_file, "--out", str(out)]) == EXIT_OK
    header = read(out / "map_ici.csv").decode().splitlines()[1]
    assert header == "x_m,y_m,interference_j"


def test_gamma_and_optimize(config_file, tmp_path):
    out = tmp_path / "out"
    assert main(["gamma", "--config", config_file, "--out", str(out)]) == EXIT_OK
    assert (out / "gamma.csv").exists() and (out / "gamma.txt").exists()
    header = read(out / "gamma.csv").decode().splitlines()[1]
    assert header == "d_b_m,n_r,scheme,upsilon_gain,upsilon_loss,gamma"

    cfg2 = tmp_path / "opt.toml"
    cfg2.write_text(BASE_CONFIG + '\n[optimize]\nobjective = "psi"\nn_r = 2\nsearch_step = "150 m"\n')
    assert main(["optimize", "--config", str(cfg2), "--out", str(out)]) == EXIT_OK
    header = read(out / "optimize.csv").decode().splitlines()[1]
    assert header == "d_b_m,n_r,objective,value,relay0_x_m,relay0_y_m,relay1_x_m,relay1_y_m"


def test_psi_infeasible_exit_code(config_file, tmp_path):
    # one relay cannot cover the whole 800 m sector with dsp = 50 mJ
    out = tmp_path / "out"
    assert main(["psi", "--config", config_file, "--out", str(out)]) == EXIT_INFEASIBLE


def test_validate_sigma_zero_all_zeta_zero(tmp_path, links):
    # degenerate config: a link file with zero shadowing makes the model and
    # the oracle agree exactly, so every error ratio vanishes
    link_file = tmp_path / "links0.toml"
    sections = []
    for label, l in links.items():
        sections.append(
            f"[{label}]\na = {l.a}\nb = {l.b}\nc = {l.c}\nd = {l.d}\n"
            f"sigma_db = 0.0\nh_tx = {l.h_tx}\nh_rx = {l.h_rx}"
        )
    link_file.write_text("\n".join(sections) + "\n")
    cfg = tmp_path / "zero.toml"
    cfg.write_text(BASE_CONFIG.replace(
        'p_out = 0.02', f'p_out = 0.02\nlink_params = "{link_file}"'
    ).replace("samples = 2000", "samples = 64"))
    out = tmp_path / "out"
    assert main(["validate", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    text = read(out / "validate.txt").decode()
    assert "zeta_r = 0\n" in text and "zeta_e = 0\n" in text and "zeta_i = 0\n" in text


def test_validate_runs_and_reports(config_file, tmp_path):
    out = tmp_path / "out"
    assert main(["validate", "--config", config_file, "--out", str(out)]) == EXIT_OK
    text = read(out / "validate.txt").decode()
    assert "zeta_r" in text and "zeta_e" in text and "zeta_i" in text
    rows = read(out / "validate.csv").decode().splitlines()
    assert rows[1] == "kind,threshold,zeta"
    assert len(rows) == 2 + 6  # two p_t + two e_t + two e_t_r


def test_scheme_map_runs(config_file, tmp_path):
    out = tmp_path / "out"
    cfg = tmp_path / "smap.toml"
    cfg.write_text(BASE_CONFIG + '\n[scheme_map]\nschemes = ["TwoHop", "EoPdf"]\nmc_samples = 64\n')
    assert main(["scheme-map", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    rows = read(out / "scheme_map.csv").decode().splitlines()
    assert rows[1] == "x_m,y_m,scheme"
    assert set(r.split(",")[2] for r in rows[2:]) <= {"DTx", "TwoHop", "EoPdf", "IrPdf"}


def test_reruns_are_byte_identical(config_file, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for sub in ("map-rea", "validate"):
        assert main([sub, "--config", config_file, "--out", str(out1)]) == EXIT_OK
        assert main([sub, "--config", config_file, "--out", str(out2)]) == EXIT_OK
    assert read(out1 / "map_rea.csv") == read(out2 / "map_rea.csv")
    assert read(out1 / "validate.csv") == read(out2 / "validate.csv")


def test_seed_override_changes_output(config_file, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["validate", "--config", config_file, "--out", str(out1)]) == EXIT_OK
    assert main(["validate", "--config", config_file, "--out", str(out2), "--seed", "8"]) == EXIT_OK
    assert read(out1 / "validate.csv") != read(out2 / "validate.csv")


def test_grid_step_override(config_file, tmp_path):
    out = tmp_path / "out"
    assert main(["map-rea", "--config", config_file, "--out", str(out), "--grid-step", "200"]) == EXIT_OK
    n_coarse = len(read(out / "map_rea.csv").decode().splitlines())
    assert main(["map-rea", "--config", config_file, "--out", str(out)]) == EXIT_OK
    assert len(read(out / "map_rea.csv").decode().splitlines()) > n_coarse


def test_config_errors_report_key(tmp_path):
    out = tmp_path / "out"
    bad = tmp_path / "bad.toml"
    bad.write_text(BASE_CONFIG.replace('e_r_max = "500 mJ"', 'e_r_max = 0.5'))
    assert main(["map-rea", "--config", str(bad), "--out", str(out)]) == EXIT_CONFIG
    bad.write_text(BASE_CONFIG + "\n[scenario]\nbogus_key = 1\n")
    assert main(["map-rea", "--config", str(bad), "--out", str(out)]) == EXIT_CONFIG
    bad.write_text(BASE_CONFIG.replace('"-93 dBm"', '"-93 W"'))
    assert main(["map-rea", "--config", str(bad), "--out", str(out)]) == EXIT_CONFIG
    assert main(["map-rea", "--config", str(tmp_path / "missing.toml"), "--out", str(out)]) == EXIT_CONFIG


def test_unit_parsing_strictness(tmp_path):
    out = tmp_path / "out"
    bad = tmp_path / "bad.toml"
    bad.write_text(BASE_CONFIG.replace('d_b = "800 m"', 'd_b = "800 J"'))
    assert main(["map-rea", "--config", str(bad), "--out", str(out)]) == EXIT_CONFIG
