import math

import numpy as np
import pytest

from yamabe_lab.errors import ConfigError
from yamabe_lab.export import (
    jsonable,
    read_field,
    read_json,
    sidecar,
    write_beta_table,
    write_critical_points,
    write_field,
    write_profile,
)
from yamabe_lab.moments import BetaRow, beta_table
from yamabe_lab.reduced_functional import ScalarField2D, critical_points


def test_jsonable_handles_numpy_and_nan():
    out = jsonable({"a": np.float64(1.5), "b": np.int64(3), "c": math.nan, "d": np.arange(2),
                    "e": (np.bool_(True),)})
    assert out == {"a": 1.5, "b": 3, "c": None, "d": [0, 1], "e": [True]}


def test_profile_csv_and_sidecar(tmp_path, soliton):
    path = write_profile(soliton[4], tmp_path / "p" / "profile.csv", {"n": 1})
    lines = path.read_text().splitlines()
    assert lines[0] == "r,U,dU" and len(lines) == soliton[4].r.size + 1
    meta = read_json(sidecar(path))
    assert set(meta) >= {"n", "q", "s_star", "tail_coeff", "r_max", "config"}
    assert meta["s_star"] == soliton[4].s_star and meta["config"] == {"n": 1}
    back = np.loadtxt(path, delimiter=",", skiprows=1)
    assert np.array_equal(back[:, 1], soliton[4].U)


def test_field_roundtrip(tmp_path):
    f = ScalarField2D.from_function(lambda x, y: np.sin(2 * np.pi * x) * y, 16, 8, 2.0, 1.0)
    path = write_field(f, tmp_path / "f.csv", {"k": 1}, {"eps": 0.1})
    g = read_field(path)
    assert (g.nx, g.ny, g.L1, g.L2) == (16, 8, 2.0, 1.0)
    assert np.array_equal(g.values, f.values)
    assert read_json(sidecar(path))["eps"] == 0.1


def test_read_field_errors(tmp_path):
    with pytest.raises(ConfigError):
        read_field(tmp_path / "missing.csv")
    (tmp_path / "bad.csv").write_text("1,2\n3,4\n")
    (tmp_path / "bad.json").write_text('{"nx": 8}')
    with pytest.raises(ConfigError):
        read_field(tmp_path / "bad.csv")


def test_critical_points_csv(tmp_path):
    f = ScalarField2D.from_function(lambda x, y: np.cos(2 * np.pi * x) + np.cos(2 * np.pi * y), 8, 8)
    path = write_critical_points(critical_points(f), tmp_path / "cp.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "ix,iy,value,type" and len(lines) == 5
    assert lines[1].startswith("0,0,2.0,MAX")


def test_beta_table_csv(tmp_path):
    rows = beta_table([(2, 2), (1, 1)])
    path = write_beta_table(rows, tmp_path / "beta.csv", {"max_N": 4})
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(BetaRow.CSV_COLUMNS)
    assert lines[1].split(",")[9] == "negative"
    mirror = read_json(sidecar(path))
    assert mirror["rows"][0]["identities"]["pass"]["equ2"] is True
    assert mirror["rows"][1]["reason"] == "N_BELOW_4"
