import json

import numpy as np
import pytest

from yamabe_lab.cli import main, parse_args
from yamabe_lab.errors import ConfigError
from yamabe_lab.export import write_field
from yamabe_lab.reduced_functional import ScalarField2D


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


# --- ground-state ---------------------------------------------------------------

def test_ground_state_writes_files(tmp_path, capsys):
    out = tmp_path / "gs" / "profile.csv"
    code, text, _ = run(capsys, "ground-state", "--n", 2, "--q", 4, "--out", out)
    assert code == 0 and out.exists() and out.with_suffix(".json").exists()
    meta = json.loads(out.with_suffix(".json").read_text())
    assert meta["config"]["n"] == 2 and meta["config"]["q"] == 4.0


def test_ground_state_supercritical(tmp_path, capsys):
    code, _, err = run(capsys, "ground-state", "--n", 3, "--q", 7, "--out", tmp_path / "x.csv")
    assert code == 1 and "supercritical exponent" in err


def test_ground_state_closed_form_check(tmp_path, capsys):
    code, text, _ = run(capsys, "ground-state", "--n", 1, "--q", 4, "--check-closed-form",
                        "--out", tmp_path / "p.csv")
    assert code == 0
    dev = float(text.split("max deviation from closed form:")[1].split()[0])
    assert dev < 1e-5


def test_bad_flags_exit_1(tmp_path, capsys):
    assert run(capsys, "ground-state", "--n", "two", "--q", 4)[0] == 1
    assert run(capsys, "no-such-command")[0] == 1
    assert run(capsys, "ground-state", "--q", 4)[0] == 1


# --- beta-table and identities --------------------------------------------------

def test_beta_table_small_N_rejected(tmp_path, capsys):
    code, _, err = run(capsys, "beta-table", "--max-N", 3, "--out", tmp_path / "b.csv")
    assert code == 1 and "N must be >= 4" in err


def test_beta_table_single_pair(tmp_path, capsys):
    out = tmp_path / "b.csv"
    code, text, _ = run(capsys, "beta-table", "--pairs", "2,2", "--out", out)
    assert code == 0
    rows = out.read_text().splitlines()
    assert len(rows) == 2
    thm61 = float(rows[1].split(",")[10])
    assert thm61 < 1e-4 and rows[1].split(",")[9] == "negative"


def test_identities_pairs(tmp_path, capsys):
    code, text, _ = run(capsys, "identities", "--pair", "3,1;2,6", "--out", tmp_path / "i.json")
    assert code == 0
    assert "(3,1)  beta_mn" in text and "(negative)" in text
    block = text.split("(2,6)")[1]
    assert "thm61" in block
    rep = json.loads((tmp_path / "i.json").read_text())
    assert [p["sign"] for p in rep["pairs"]] == ["negative", "negative"]


def test_identities_fail_exit_2(tmp_path, capsys):
    code, text, _ = run(capsys, "identities", "--pair", "2,2", "--tol-id", "1e-30",
                        "--out", tmp_path / "i.json")
    assert code == 2 and "FAIL" in text


# --- config files -------------------------------------------------------------

def test_config_merge_under_flags(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n = 3\nq = 3\ngrid = 1024\n")
    args = parse_args(["ground-state", "--config", str(cfg), "--grid", "2048"])
    assert (args.n, args.q, args.grid) == (3, 3.0, 2048)


def test_config_sectioned_and_fractions(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[reduce]\neps = 1/16, 1/32, 1/45, 1/64\nflat = true\ncoarse = 8\n")
    args = parse_args(["reduce-sim", "--config", str(cfg)])
    assert args.eps == pytest.approx((1 / 16, 1 / 32, 1 / 45, 1 / 64))
    assert args.flat is True and args.coarse == 8


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n = 2\nq = 4\ncolour = blue\n")
    code, _, err = run(capsys, "ground-state", "--config", cfg)
    assert code == 1 and "colour" in err
    with pytest.raises(ConfigError):
        parse_args(["ground-state", "--config", str(tmp_path / "nope.cfg")])


# --- reduce-sim -----------------------------------------------------------------

SMALL_FLAT = ["reduce-sim", "--nx", 64, "--ny", 64, "--flat", "--eps", "1/10,1/12,1/14,1/16",
              "--scan-eps", "1/16", "--coarse", 8, "--coercivity-samples", 3]


def test_reduce_sim_flat(tmp_path, capsys):
    out = tmp_path / "flat"
    code, text, _ = run(capsys, *SMALL_FLAT, "--out", out)
    assert code == 0
    assert "F_eps constant: PASS" in text
    rep = json.loads((out / "report.json").read_text())
    assert all(rep["checks"][k] for k in rep["checks"] if k.startswith("F_constant"))
    assert (out / "s_g.csv").exists() and (out / "F_eps_0.062500.csv").exists()
    assert rep["config"]["nx"] == 64


def test_reduce_sim_deterministic(tmp_path, capsys):
    out = tmp_path / "det"
    names = ("report.json", "s_g.csv", "F_eps_0.062500.csv", "F_eps_0.062500.json")
    assert run(capsys, *SMALL_FLAT, "--out", out)[0] == 0
    first = {n: (out / n).read_bytes() for n in names}
    assert run(capsys, *SMALL_FLAT, "--out", out)[0] == 0
    assert all((out / n).read_bytes() == first[n] for n in names)


def test_reduce_sim_bump_small(tmp_path, capsys):
    code, text, _ = run(capsys, "reduce-sim", "--nx", 128, "--ny", 128,
                        "--eps", "1/11.3,1/16,1/22.6,1/32", "--scan-eps", "1/32", "--coarse", 8,
                        "--coercivity-samples", 3, "--out", tmp_path / "b")
    assert code == 0
    rep = json.loads((tmp_path / "b" / "report.json").read_text())
    assert rep["checks"]["concentration_eps_0.031250"]
    assert rep["scans"][0]["argmin_F"] == [4, 4]


def test_reduce_sim_undersized_grid(tmp_path, capsys):
    code, _, err = run(capsys, "reduce-sim", "--nx", 64, "--ny", 64, "--out", tmp_path / "u")
    assert code == 1 and "ResolutionExceeded" in err


def test_reduce_sim_bad_coarse(tmp_path, capsys):
    code, _, err = run(capsys, *SMALL_FLAT[:-4], "--coarse", 4, "--out", tmp_path / "c")
    assert code == 1


# --- predict ------------------------------------------------------------------

@pytest.fixture
def sg_file(tmp_path):
    f = ScalarField2D.from_function(lambda x, y: np.cos(2 * np.pi * x) + np.cos(2 * np.pi * y), 16, 16)
    return write_field(f, tmp_path / "sg.csv")


def test_predict_torus(tmp_path, capsys, sg_file):
    code, text, _ = run(capsys, "predict", "--field", sg_file, "--alpha", 5.85, "--beta", -0.38,
                        "--out", tmp_path / "pred")
    assert code == 0 and "cat = 3, betti_sum = 4" in text
    assert "MIN 1, MAX 1, SADDLE 2, DEGENERATE 0" in text
    assert (tmp_path / "pred" / "critical_points.csv").exists()


def test_predict_genus(tmp_path, capsys, sg_file):
    code, text, _ = run(capsys, "predict", "--field", sg_file, "--alpha", 1, "--beta", -1,
                        "--genus", 3, "--out", tmp_path / "pred")
    assert code == 0 and "betti_sum = 8" in text


def test_predict_constant_field_warns(tmp_path, capsys):
    path = write_field(ScalarField2D(8, 8, 1, 1, np.zeros((8, 8))), tmp_path / "c.csv")
    code, text, _ = run(capsys, "predict", "--field", path, "--alpha", 1, "--beta", -1,
                        "--out", tmp_path / "pred")
    assert code == 0 and "warning: all critical points are DEGENERATE" in text


def test_predict_missing_field(tmp_path, capsys):
    code, _, _ = run(capsys, "predict", "--field", tmp_path / "none.csv", "--alpha", 1, "--beta", -1)
    assert code == 1
