"""Weighted integrals of the ground state, the constants α and β_{m,n}, and
the integral identities that tie them together."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import quad, simpson
from scipy.special import gamma, roots_jacobi

from .errors import ConfigError, ExponentMismatch, YamabeLabError
from .ground_state import (
    ProblemDims,
    RadialProfile,
    ShootOptions,
    critical_exponent,
    solve_radial_ground_state,
)

__all__ = [
    "MomentSet",
    "BetaResult",
    "IdentityReport",
    "BetaRow",
    "sphere_area",
    "sphere_z1_quartic",
    "compute_moments",
    "alpha_beta",
    "verify_identities",
    "beta_table",
    "pairs_up_to",
    "NOT_APPLICABLE",
]

NOT_APPLICABLE = "NOT_APPLICABLE"
TOL_ID = 1e-4


def sphere_area(n: int) -> float:
    """Area of the unit sphere ``S^(n-1)`` in ``R^n``."""
    return 2.0 * math.pi ** (n / 2.0) / gamma(n / 2.0)


def sphere_z1_quartic(n: int) -> float:
    """``∫_{S^(n-1)} θ_1^4 dσ`` by Gauss-Jacobi quadrature on the θ_1 marginal.

    On ``S^(n-1)`` the coordinate ``t = θ_1`` has density
    ``ω_{n-2} (1-t²)^((n-3)/2)``; a three-node rule integrates ``t^4`` exactly.
    This does not use the closed form ``3 ω_{n-1} / (n(n+2))``.
    """
    if n == 1:
        return 2.0
    a = (n - 3) / 2.0
    t, w = roots_jacobi(3, a, a)
    return float(sphere_area(n - 1) * np.sum(w * t**4))


@dataclass(frozen=True)
class MomentSet:
    """Seven integrals over ``R^n`` of the ground state with exponent ``q``.

    ``Q`` is assembled from the angular quadrature of ``θ_1^4``;
    ``Q_from_G`` is ``3 G / (n(n+2))``.
    """

    n: int
    q: float
    I2: float
    Ip: float
    D: float
    M2: float
    Mp: float
    G: float
    Q: float
    Q_from_G: float

    def as_dict(self):
        return asdict(self)


def _radial_integral(prof: RadialProfile, f_grid, f_tail, weight_power):
    """``∫_0^∞ f(r) r^k dr``: Simpson on the grid plus the far-field remainder."""
    r = prof.r
    body = simpson(f_grid * r**weight_power, x=r)
    tail, _ = quad(lambda s: f_tail(s) * s**weight_power, prof.r_max, prof.r_max + 60.0, limit=200)
    return float(body + tail)


def compute_moments(prof: RadialProfile, dims: ProblemDims | None = None) -> MomentSet:
    """Radial quadrature of every moment used by α, β and the identities."""
    n, q = prof.n, prof.q
    if dims is not None and not math.isclose(dims.p, q, rel_tol=1e-12):
        raise ExponentMismatch(f"profile exponent {q} differs from p_(m+n) = {dims.p}")
    if dims is not None and dims.n != n:
        raise ExponentMismatch(f"profile dimension {n} differs from dims.n = {dims.n}")
    w = sphere_area(n)
    U = np.maximum(prof.U, 0.0)
    dU = prof.dU

    def tail_u(s):
        return max(prof.tail(s)[0], 0.0)

    def tail_du(s):
        return prof.tail(s)[1]

    k = n - 1
    I2 = w * _radial_integral(prof, U**2, lambda s: tail_u(s) ** 2, k)
    Ip = w * _radial_integral(prof, U**q, lambda s: tail_u(s) ** q, k)
    D = w * _radial_integral(prof, dU**2, lambda s: tail_du(s) ** 2, k)
    M2 = w * _radial_integral(prof, U**2, lambda s: tail_u(s) ** 2, k + 2)
    Mp = w * _radial_integral(prof, U**q, lambda s: tail_u(s) ** q, k + 2)
    radial_G = _radial_integral(prof, dU**2, lambda s: tail_du(s) ** 2, k + 2)
    G = w * radial_G
    # (U'/|z|)^2 z_1^4 = U'^2 r^2 θ_1^4 on the sphere of radius r
    Q = sphere_z1_quartic(n) * radial_G
    return MomentSet(n=n, q=q, I2=I2, Ip=Ip, D=D, M2=M2, Mp=Mp, G=G, Q=Q,
                     Q_from_G=3.0 * G / (n * (n + 2)))


def _rel(*terms, signed_sum):
    scale = max(abs(t) for t in terms)
    return abs(signed_sum) / scale if scale > 0 else 0.0


@dataclass(frozen=True)
class BetaResult:
    alpha: float
    beta_mn: float
    beta_mn_alt: float
    beta_cap: float
    thm61_residual: float | str

    @property
    def sign(self) -> str:
        if self.beta_mn < 0:
            return "negative"
        if self.beta_mn > 0:
            return "positive"
        return "zero"


def _thm61_terms(ms: MomentSet, dims: ProblemDims, beta_cap: float):
    n, m, N, p, a = dims.n, dims.m, dims.N, dims.p, dims.a
    lhs = n * (n - 4) * beta_cap
    t_mp = 4.0 / p * m / (N - 2) * ms.Mp
    t_m2 = (6.0 - a) * ms.M2
    return lhs, t_mp, t_m2


def alpha_beta(ms: MomentSet, dims: ProblemDims | None = None) -> BetaResult:
    """α, both expressions for β_{m,n}, and the residual of the β closed form.

    Without ``dims`` (e.g. a 1-D soliton that belongs to no product) only α
    is meaningful and the β fields are NaN.
    """
    alpha = 0.5 * (ms.D + ms.I2) - ms.Ip / ms.q
    if dims is None:
        nan = math.nan
        return BetaResult(alpha, nan, nan, nan, NOT_APPLICABLE)
    n, a = dims.n, dims.a
    beta_mn = ms.I2 / a - ms.Q / 3.0
    beta_alt = ms.I2 / a - ms.G / (n * (n + 2))
    beta_cap = a * beta_mn
    if n == 4:
        thm61 = NOT_APPLICABLE
    else:
        lhs, t_mp, t_m2 = _thm61_terms(ms, dims, beta_cap)
        thm61 = _rel(lhs, t_mp, t_m2, signed_sum=lhs - t_mp + t_m2)
    return BetaResult(alpha, beta_mn, beta_alt, beta_cap, thm61)


@dataclass(frozen=True)
class IdentityReport:
    nehari_res: float
    equ2_res: float
    equp_res: float
    ziquartic_res: float
    thm61_res: float | str
    tol_id: float

    @property
    def passed(self) -> dict:
        out = {}
        for name in ("nehari", "equ2", "equp", "ziquartic", "thm61"):
            val = getattr(self, f"{name}_res")
            out[name] = True if val == NOT_APPLICABLE else bool(val <= self.tol_id)
        return out

    @property
    def all_passed(self) -> bool:
        return all(self.passed.values())


def verify_identities(ms: MomentSet, dims: ProblemDims, tol_id: float = TOL_ID) -> IdentityReport:
    """Relative residuals of the Nehari and Pohozaev-type identities.

    Each residual is scaled by the largest term of its identity.
    """
    n, p = dims.n, ms.q
    nehari = _rel(ms.D, ms.I2, ms.Ip, signed_sum=ms.D + ms.I2 - ms.Ip)
    equ2 = _rel(n * ms.I2, ms.G, ms.M2, ms.Mp, signed_sum=n * ms.I2 - ms.G - ms.M2 + ms.Mp)
    lhs = (n - 4.0) / (n + 2.0) * ms.G
    equp = _rel(lhs, 2.0 / p * ms.Mp, ms.M2, signed_sum=lhs - 2.0 / p * ms.Mp + ms.M2)
    zq = _rel(ms.Q, ms.Q_from_G, signed_sum=ms.Q - ms.Q_from_G)
    thm61 = alpha_beta(ms, dims).thm61_residual
    return IdentityReport(nehari, equ2, equp, zq, thm61, tol_id)


@dataclass(frozen=True)
class BetaRow:
    n: int
    m: int
    N: int
    p: float
    a: float
    alpha: float = math.nan
    beta_mn: float = math.nan
    beta_mn_alt: float = math.nan
    beta_cap: float = math.nan
    sign: str = ""
    thm61_res: float | str = NOT_APPLICABLE
    reason: str = ""
    identities: IdentityReport | None = None

    CSV_COLUMNS = ("n", "m", "N", "p", "a", "alpha", "beta_mn", "beta_mn_alt",
                   "beta_cap", "sign", "thm61_res")

    def csv_row(self):
        return [getattr(self, c) for c in self.CSV_COLUMNS]


def pairs_up_to(max_N: int, min_N: int = 4, min_n: int = 2):
    """All ``(n, m)`` with ``min_N <= n + m <= max_N``, ``n >= min_n``, ``m >= 1``."""
    if max_N < 4:
        raise ConfigError("N must be >= 4")
    return [(n, N - n) for N in range(min_N, max_N + 1) for n in range(min_n, N)]


def _row(pair, opts: ShootOptions, tol_id: float) -> BetaRow:
    n, m = pair
    dims = ProblemDims(n, m)
    if dims.N < 4:
        nan = math.nan
        p, a = (dims.p, dims.a) if dims.N > 2 else (nan, nan)
        return BetaRow(n=n, m=m, N=dims.N, p=p, a=a, reason="N_BELOW_4")
    base = dict(n=n, m=m, N=dims.N, p=dims.p, a=dims.a)
    if not dims.p < critical_exponent(n):
        return BetaRow(**base, reason="SUPERCRITICAL")
    try:
        prof = solve_radial_ground_state(n, dims.p, opts, dims=dims)
    except YamabeLabError as exc:
        return BetaRow(**base, reason=f"SOLVER_FAILED: {exc}")
    ms = compute_moments(prof, dims)
    br = alpha_beta(ms, dims)
    rep = verify_identities(ms, dims, tol_id)
    return BetaRow(**base, alpha=br.alpha, beta_mn=br.beta_mn, beta_mn_alt=br.beta_mn_alt,
                   beta_cap=br.beta_cap, sign=br.sign, thm61_res=br.thm61_residual,
                   identities=rep)


def beta_table(pairs, opts: ShootOptions = ShootOptions(), tol_id: float = TOL_ID,
               workers: int = 1) -> list[BetaRow]:
    """One :class:`BetaRow` per ``(n, m)``; unusable pairs carry a reason code."""
    pairs = [tuple(int(v) for v in pr) for pr in pairs]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            return list(ex.map(_row, pairs, [opts] * len(pairs), [tol_id] * len(pairs)))
    return [_row(pr, opts, tol_id) for pr in pairs]
