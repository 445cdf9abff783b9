import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from yamabe_lab.errors import ConfigError, ExponentMismatch
from yamabe_lab.ground_state import (
    ProblemDims,
    ShootOptions,
    evaluate_profile,
    solve_radial_ground_state,
)
from yamabe_lab.moments import (
    NOT_APPLICABLE,
    BetaRow,
    alpha_beta,
    beta_table,
    compute_moments,
    pairs_up_to,
    sphere_area,
    sphere_z1_quartic,
    verify_identities,
)


def test_sphere_area_values():
    assert sphere_area(1) == pytest.approx(2.0)
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6, 7])
def test_angular_quartic_factor(n):
    # the quadrature path never uses the closed form 3ω/(n(n+2))
    assert sphere_z1_quartic(n) == pytest.approx(3 * sphere_area(n) / (n * (n + 2)), rel=1e-12)


def test_soliton_moments(soliton):
    ms = compute_moments(soliton[4])
    assert ms.I2 == pytest.approx(4.0, abs=1e-6)
    assert ms.Ip == pytest.approx(16 / 3, abs=1e-6)
    assert ms.D == pytest.approx(4 / 3, abs=1e-6)


def test_soliton_alpha(soliton):
    ab = alpha_beta(compute_moments(soliton[4]))
    assert ab.alpha == pytest.approx(4 / 3, abs=1e-6)
    assert math.isnan(ab.beta_mn) and ab.thm61_residual == NOT_APPLICABLE


def test_moments_positive(moments22):
    vals = [moments22.I2, moments22.Ip, moments22.D, moments22.M2, moments22.Mp, moments22.G,
            moments22.Q]
    assert all(math.isfinite(v) and v > 0 for v in vals)


def test_q_over_g(moments22):
    assert moments22.Q / moments22.G == pytest.approx(3 / 8, rel=1e-5)


def test_nehari(moments22):
    m = moments22
    assert abs(m.D + m.I2 - m.Ip) / m.Ip < 1e-5


def test_beta_cap_22(moments22, ab22):
    assert ab22.beta_cap == pytest.approx(-moments22.Mp / 4, rel=1e-4)
    assert ab22.beta_mn < 0 and ab22.sign == "negative"


def test_exponent_mismatch(prof22):
    with pytest.raises(ExponentMismatch):
        compute_moments(prof22, ProblemDims(2, 3))
    with pytest.raises(ExponentMismatch):
        compute_moments(prof22, ProblemDims(3, 1))


def _oracle_moment(prof, weight, power_r):
    """Adaptive quadrature on the interpolated profile, independent of the Simpson path."""
    n = prof.n

    def f(r):
        u, du = evaluate_profile(prof, r)
        return weight(u, du) * r ** (n - 1 + power_r)

    edges = [0.0, 1.0, 2.0, 4.0, 8.0, 16.0, prof.r_max, prof.r_max + 40]
    total = sum(quad(f, a, b, limit=400, epsabs=0, epsrel=1e-12)[0] for a, b in zip(edges, edges[1:]))
    return sphere_area(n) * total


def test_equp_33_against_quad_oracle():
    dims = ProblemDims(3, 3)
    prof = solve_radial_ground_state(3, dims.p, dims=dims)
    ms = compute_moments(prof, dims)
    p = dims.p
    G = _oracle_moment(prof, lambda u, du: du * du, 2)
    Mp = _oracle_moment(prof, lambda u, du: max(u, 0) ** p, 2)
    M2 = _oracle_moment(prof, lambda u, du: u * u, 2)
    assert ms.G == pytest.approx(G, rel=1e-6)
    assert ms.Mp == pytest.approx(Mp, rel=1e-6)
    assert ms.M2 == pytest.approx(M2, rel=1e-6)
    lhs = (3 - 4) / (3 + 2) * G
    res = abs(lhs - 2 / p * Mp + M2) / max(abs(lhs), 2 / p * Mp, M2)
    assert res < 1e-4
    assert verify_identities(ms, dims).equp_res < 1e-4


def test_identities_22_richardson():
    # two radial resolutions, Richardson-combined for a fourth-order rule
    dims = ProblemDims(2, 2)
    coarse = compute_moments(solve_radial_ground_state(2, 4.0, ShootOptions(grid=1025)), dims)
    fine = compute_moments(solve_radial_ground_state(2, 4.0, ShootOptions(grid=2049)), dims)
    vals = {k: (16 * getattr(fine, k) - getattr(coarse, k)) / 15
            for k in ("I2", "Ip", "D", "M2", "Mp", "G")}
    n, p = 2, 4.0
    assert abs(vals["D"] + vals["I2"] - vals["Ip"]) / vals["Ip"] < 1e-4
    equ2 = n * vals["I2"] - vals["G"] - vals["M2"] + vals["Mp"]
    assert abs(equ2) / max(n * vals["I2"], vals["G"], vals["M2"], vals["Mp"]) < 1e-4
    equp = (n - 4) / (n + 2) * vals["G"] - 2 / p * vals["Mp"] + vals["M2"]
    assert abs(equp) / max(abs((n - 4) / (n + 2) * vals["G"]), vals["Mp"] / 2, vals["M2"]) < 1e-4
    rep = verify_identities(fine, dims)
    assert rep.all_passed


def test_quadrature_convergence():
    grids = (257, 513, 1025, 2049)
    sets = [compute_moments(solve_radial_ground_state(2, 4.0, ShootOptions(grid=g))) for g in grids]
    for key in ("I2", "Ip", "D", "M2", "Mp", "G"):
        vals = [getattr(s, key) for s in sets]
        d1, d2 = abs(vals[1] - vals[0]), abs(vals[2] - vals[1])
        assert d2 <= d1 / 4 or d2 < 1e-11 * abs(vals[-1])


def test_identities_31(prof22):
    dims = ProblemDims(3, 1)
    prof = solve_radial_ground_state(3, dims.p, dims=dims)
    ms = compute_moments(prof, dims)
    ab = alpha_beta(ms, dims)
    assert ab.thm61_residual < 1e-4 and ab.beta_mn < 0


def test_n4_thm61_not_applicable():
    dims = ProblemDims(4, 1)
    prof = solve_radial_ground_state(4, dims.p, dims=dims)
    ms = compute_moments(prof, dims)
    rep = verify_identities(ms, dims)
    assert rep.thm61_res == NOT_APPLICABLE and rep.passed["thm61"]
    assert rep.all_passed


def test_identity_report_pass_flags(moments22):
    rep = verify_identities(moments22, ProblemDims(2, 2), tol_id=1e-30)
    assert not any(rep.passed[k] for k in ("nehari", "equ2", "equp", "ziquartic"))
    rep = verify_identities(moments22, ProblemDims(2, 2), tol_id=1e-4)
    assert all(v == (getattr(rep, f"{k}_res") <= 1e-4) for k, v in rep.passed.items())


def test_pairs_up_to():
    assert pairs_up_to(4) == [(2, 2), (3, 1)]
    assert len(pairs_up_to(8)) == 20
    with pytest.raises(ConfigError):
        pairs_up_to(3)


def test_beta_table_rows():
    rows = beta_table([(2, 2), (3, 1), (5, 1), (3, 4), (1, 1)])
    by = {(r.n, r.m): r for r in rows}
    assert by[(2, 2)].sign == "negative" and by[(3, 1)].sign == "negative"
    assert by[(5, 1)].p == pytest.approx(3.0) and by[(5, 1)].reason == ""
    assert by[(3, 4)].reason == ""
    assert by[(1, 1)].reason == "N_BELOW_4"
    assert len(rows[0].csv_row()) == len(BetaRow.CSV_COLUMNS)


@given(n=st.integers(3, 40), m=st.integers(1, 40))
def test_product_exponent_always_subcritical(n, m):
    # N > n forces 2N/(N-2) < 2n/(n-2), so the SUPERCRITICAL reason never fires for products
    assert ProblemDims(n, m).is_subcritical()


@given(pair=st.sampled_from(pairs_up_to(6)))
def test_formula_equivalence(pair):
    n, m = pair
    dims = ProblemDims(n, m)
    prof = solve_radial_ground_state(n, dims.p, ShootOptions(grid=2049), dims=dims)
    ab = alpha_beta(compute_moments(prof, dims), dims)
    assert abs(ab.beta_mn - ab.beta_mn_alt) <= 1e-3 * max(abs(ab.beta_mn), abs(ab.beta_mn_alt))
