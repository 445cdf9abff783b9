"""End-to-end acceptance checks, one test per criterion.

Each test prints a ``[criterion k] PASS|FAIL`` line (also collected in the
terminal summary) before asserting.
"""

import time

import numpy as np
import pytest
from scipy.integrate import quad

from yamabe_lab.ground_state import ProblemDims, closed_form_1d, evaluate_profile, solve_radial_ground_state
from yamabe_lab.moments import alpha_beta, beta_table, compute_moments, pairs_up_to, sphere_area
from yamabe_lab.reduced_functional import SurfaceTopology, Topology, multiplicity_bounds
from yamabe_lab.reduction_sim import (
    EpsNormContext,
    F_eps_scan,
    J_eps,
    MetricSpec,
    S_eps,
    build_torus_metric,
    h_eps_inner,
    order_check,
    transplant_bubble,
)

from .conftest import ACCEPTANCE_LINES

EPS_SWEEP = (1 / 16, 1 / 23, 1 / 32, 1 / 45, 1 / 64)
GRID = 256
COARSE = 16
TOL_ID = 1e-4


def report(k, ok, detail):
    line = f"[criterion {k:>2}] {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def table():
    t0 = time.perf_counter()
    rows = beta_table(pairs_up_to(8))
    return rows, time.perf_counter() - t0


@pytest.fixture(scope="module")
def prof():
    return solve_radial_ground_state(2, 4.0, dims=ProblemDims(2, 2))


@pytest.fixture(scope="module")
def bump_metric():
    return build_torus_metric(GRID, GRID, f_spec=MetricSpec.one_bump())


@pytest.fixture(scope="module")
def base_point(bump_metric):
    return bump_metric.field(bump_metric.s_g).argmax()


@pytest.fixture(scope="module")
def bump_report(bump_metric, base_point, prof):
    t0 = time.perf_counter()
    rep = order_check(bump_metric, base_point, prof, EPS_SWEEP)
    return rep, time.perf_counter() - t0


@pytest.fixture(scope="module")
def bump_scans(bump_metric, prof):
    return {e: F_eps_scan(EpsNormContext(bump_metric, e), prof, (COARSE, COARSE))
            for e in EPS_SWEEP[-2:]}


def test_criterion_01_soliton_oracle():
    worst_dev, worst_t = 0.0, 0.0
    for q in (3, 4, 6):
        t0 = time.perf_counter()
        p = solve_radial_ground_state(1, q)
        worst_t = max(worst_t, time.perf_counter() - t0)
        worst_dev = max(worst_dev, float(np.max(np.abs(p.U - closed_form_1d(q, p.r)))))
    report(1, worst_dev < 1e-5 and worst_t < 1.0,
           f"max deviation {worst_dev:.2e} (< 1e-05), slowest case {worst_t:.2f} s (< 1 s)")


def test_criterion_02_identity_suite(table):
    rows, elapsed = table
    worst = {}
    for r in rows:
        rep = r.identities
        for name in ("nehari", "equ2", "equp", "ziquartic", "thm61"):
            val = getattr(rep, f"{name}_res")
            if isinstance(val, str):
                continue
            worst[name] = max(worst.get(name, 0.0), val)
    n4_na = all(r.thm61_res == "NOT_APPLICABLE" for r in rows if r.n == 4)
    ok = len(rows) == 20 and all(v < TOL_ID for v in worst.values()) and n4_na and elapsed < 30
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    report(2, ok, f"{len(rows)} pairs, worst residuals: {detail}; runtime {elapsed:.1f} s (< 30 s)")


def test_criterion_03_beta_negative(table):
    rows, _ = table
    neg = all(r.beta_mn < 0 for r in rows)
    by = {(r.n, r.m): r for r in rows}
    agree = max(abs(by[k].beta_mn - by[k].beta_mn_alt) / max(abs(by[k].beta_mn), abs(by[k].beta_mn_alt))
                for k in ((2, 2), (3, 1)))
    report(3, neg and agree < 1e-4,
           f"beta_mn < 0 for {sum(r.beta_mn < 0 for r in rows)}/{len(rows)} pairs; "
           f"(2,2),(3,1) formula agreement {agree:.1e} (< 1e-04)")


def test_criterion_04_beta22_crosscheck(prof):
    dims = ProblemDims(2, 2)
    beta_cap = alpha_beta(compute_moments(prof, dims), dims).beta_cap

    def f(r):
        u, _ = evaluate_profile(prof, r)
        return max(u, 0.0) ** 4 * r**3

    edges = [0, 1, 2, 4, 8, 16, prof.r_max, prof.r_max + 40]
    mp = sphere_area(2) * sum(quad(f, a, b, limit=400, epsabs=0, epsrel=1e-12)[0]
                              for a, b in zip(edges, edges[1:]))
    rel = abs(beta_cap + mp / 4) / (mp / 4)
    report(4, rel < 1e-4, f"a_4 beta_22 = {beta_cap:.9f} vs -Mp/4 = {-mp / 4:.9f}, rel {rel:.1e}")


def test_criterion_05_order_estimates(bump_report):
    rep, elapsed = bump_report
    s, ph = rep.slopes["S_norm"], rep.slopes["phi_norm"]
    report(5, s >= 1.7 and ph >= 1.7 and elapsed < 300,
           f"slope |S(U)| {s:.3f}, slope |phi| {ph:.3f} (>= 1.7); runtime {elapsed:.1f} s (< 300 s)")


def test_criterion_06_kernel_limits(bump_report):
    rep, _ = bump_report
    last = rep.records[-1]
    target = rep.limits["psi_h1_sq"]
    rel = abs(abs(last.end2) - target) / target
    report(6, rel <= 0.05 and last.w_offdiag < 0.05,
           f"eps {last.eps:.4f}: |eps<d_x U, W1>| = {abs(last.end2):.4f} vs |psi|^2 = {target:.4f} "
           f"({100 * rel:.2f}% <= 5%), normalized <W1,W2> = {last.w_offdiag:.1e} (< 0.05)")


def test_criterion_07_concentration(bump_scans):
    parts, ok = [], True
    for e, sc in bump_scans.items():
        (ax, ay), (bx, by) = sc.F.argmin(), sc.s_g.argmax()
        dist = max(min(abs(ax - bx), COARSE - abs(ax - bx)), min(abs(ay - by), COARSE - abs(ay - by)))
        ok &= sc.complete and dist <= 1
        parts.append(f"eps {e:.4f}: argmin F {sc.F.argmin()} vs argmax s_g {sc.s_g.argmax()}")
    smallest = bump_scans[min(bump_scans)]
    corr = smallest.correlation()
    ok &= abs(corr) >= 0.99
    report(7, ok, "; ".join(parts) + f"; |corr| {abs(corr):.5f} (>= 0.99)")


def test_criterion_08_flat_null(bump_report, prof):
    rep, _ = bump_report
    flat = build_torus_metric(GRID, GRID)
    eps = EPS_SWEEP[-1]
    scan = F_eps_scan(EpsNormContext(flat, eps), prof, (8, 8))
    flat_phi = float(np.nanmax(scan.phi_norm))
    bump_phi = rep.records[-1].phi_norm
    ratio = bump_phi / flat_phi
    report(8, scan.complete and scan.spread() < 1e-6 and ratio >= 10,
           f"eps {eps:.4f}: flat F spread {scan.spread():.1e} (< 1e-06); "
           f"|phi| bump/flat = {bump_phi:.2e}/{flat_phi:.2e} = {ratio:.0f} (>= 10)")


def test_criterion_09_topology_bounds():
    got = [multiplicity_bounds(SurfaceTopology(Topology.SPHERE)),
           multiplicity_bounds(SurfaceTopology(Topology.TORUS))]
    genus = [multiplicity_bounds(SurfaceTopology.of_genus(g)) for g in range(1, 11)]
    ok = got == [(2, 2), (3, 4)] and all(b == (3, 2 + 2 * g) for g, b in enumerate(genus, start=1))
    report(9, ok, f"sphere {got[0]}, torus {got[1]}, genus 1..10 -> (3, 2+2g)")


def test_criterion_10_gradient_identity(bump_metric, base_point, prof):
    ctx = EpsNormContext(bump_metric, 1 / 32)
    sp = bump_metric.spectral
    rng = np.random.default_rng(10)
    U = transplant_bubble(ctx, base_point, prof)
    smooth = np.exp(-0.5 * sp.k2 * 0.03**2)
    passed, ratios = 0, []
    for _ in range(10):
        u = U + 0.3 * sp.inv(smooth * sp.fwd(rng.standard_normal(U.shape)))
        d = sp.inv(smooth * sp.fwd(rng.standard_normal(U.shape)))
        g = h_eps_inner(ctx, S_eps(ctx, u), d)
        errs = [abs((J_eps(ctx, u + t * d) - J_eps(ctx, u - t * d)) / (2 * t) - g) for t in (1e-3, 1e-4)]
        floor = 10 * np.finfo(float).eps * abs(J_eps(ctx, u)) / 1e-4
        ok = errs[1] <= errs[0] / 50 or errs[1] <= floor
        passed += ok
        ratios.append(errs[0] / max(errs[1], 1e-300))
    report(10, passed == 10, f"{passed}/10 trials, error ratio per decade of t: "
           f"min {min(ratios):.0f}, median {np.median(ratios):.0f} (second order = 100)")
