"""Radial ground state of ``-ΔU + U = U^(q-1)`` in R^n by shooting.

The profile ``U(r)`` is found by bisecting the central amplitude ``s = U(0)``
between an amplitude whose trajectory turns back up (escapes) and one whose
trajectory crosses zero.  The two bracketing trajectories agree up to the
radius where the unstable mode of the linearisation takes over; beyond that
radius the profile is continued with the decaying solution of the far-field
equation, ``C r^(-ν) K_ν(r)`` with ``ν = n/2 - 1``, plus its leading
nonlinear correction.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson, solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.special import kve

from .errors import (
    BracketNotFound,
    ConfigError,
    InvalidAmplitude,
    NonConvergedIntegration,
    SupercriticalExponent,
)

__all__ = [
    "ProblemDims",
    "ShootOptions",
    "Outcome",
    "TrajectoryOutcome",
    "RadialProfile",
    "shoot",
    "solve_radial_ground_state",
    "evaluate_profile",
    "linearized_kernel_residual",
    "closed_form_1d",
    "critical_exponent",
    "kernel_h1_norm_sq",
    "kernel_h1_gram",
]


def critical_exponent(n: int) -> float:
    """Sobolev exponent ``2n/(n-2)``; ``inf`` for ``n <= 2``."""
    return math.inf if n <= 2 else 2.0 * n / (n - 2)


@dataclass(frozen=True)
class ProblemDims:
    """Base dimension ``n`` and fibre dimension ``m`` of the product ``M^n x N^m``."""

    n: int
    m: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ConfigError(f"n must be an integer >= 1, got {self.n}")
        if int(self.m) != self.m or self.m < 1:
            raise ConfigError(f"m must be an integer >= 1, got {self.m}")

    @property
    def N(self) -> int:
        return self.n + self.m

    @property
    def p(self) -> float:
        if self.N <= 2:
            raise ConfigError("p is undefined for N = n + m <= 2")
        return 2.0 * self.N / (self.N - 2)

    @property
    def a(self) -> float:
        if self.N <= 2:
            raise ConfigError("a is undefined for N = n + m <= 2")
        return 4.0 * (self.N - 1) / (self.N - 2)

    def is_subcritical(self) -> bool:
        return 2.0 < self.p < critical_exponent(self.n)


@dataclass(frozen=True)
class ShootOptions:
    """Numerical knobs for the shooting solver.

    ``tol_bisect`` is relative to the amplitude.  ``decay_floor`` is the level
    below which an upward turn of ``U`` is not counted as an escape, and
    ``decay_tol`` is the level at which :func:`shoot` reports ``DECAYS``.
    """

    r_max: float = 40.0
    tol_bisect: float = 1e-12
    tol_ode: float = 1e-12
    grid: int = 4096
    r0: float = 1e-6
    decay_floor: float = 1e-8
    decay_tol: float = 1e-6
    max_doublings: int = 60

    def __post_init__(self):
        if self.r_max < 20:
            raise ConfigError(f"r_max must be >= 20, got {self.r_max}")
        for name in ("tol_bisect", "tol_ode", "r0", "decay_floor", "decay_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be strictly positive")
        if self.grid < 16:
            raise ConfigError("grid must have at least 16 samples")


class Outcome(str, enum.Enum):
    CROSSES_ZERO = "CROSSES_ZERO"
    ESCAPES = "ESCAPES"
    DECAYS = "DECAYS"


@dataclass(frozen=True)
class TrajectoryOutcome:
    cls: Outcome
    event_radius: float
    U: float = math.nan
    dU: float = math.nan


def _series_start(s, n, q, r0):
    c = (s - s ** (q - 1)) / (2 * n)
    return [s + c * r0 * r0, 2 * c * r0]


def _integrate(s, n, q, r_max, rtol, r0, *, decay_tol=None, dense=False):
    """Integrate the radial ODE from ``r0``; stop at the first classifying event."""
    nm1 = n - 1.0
    qm1 = q - 1.0

    def rhs(r, y):
        u = y[0]
        du = y[1]
        return (du, -nm1 / r * du + u - (u**qm1 if u > 0.0 else 0.0))

    def crosses(r, y):
        return y[0]

    crosses.terminal = True
    crosses.direction = -1

    def turns_up(r, y):
        return y[1]

    turns_up.terminal = True
    turns_up.direction = 1

    events = [crosses, turns_up]
    if decay_tol is not None:
        level = decay_tol * s

        def decays(r, y):
            return max(y[0], abs(y[1])) - level

        decays.terminal = True
        decays.direction = -1
        events.append(decays)

    y0 = _series_start(s, n, q, r0)
    return solve_ivp(
        rhs,
        (r0, r_max),
        y0,
        method="DOP853",
        rtol=rtol,
        atol=1e-30 * s,
        events=events,
        dense_output=dense,
    )


def _classify(sol, s, n, q, opts: ShootOptions, detect_decay: bool) -> TrajectoryOutcome:
    if sol.status == -1:
        raise NonConvergedIntegration(sol.message)
    hits = [(ev[0], k) for k, ev in enumerate(sol.t_events) if ev.size]
    if hits:
        r_ev, k = min(hits)
        y = sol.y_events[k][0]
        if k == 0:
            return TrajectoryOutcome(Outcome.CROSSES_ZERO, r_ev, y[0], y[1])
        if k == 1:
            if y[0] > opts.decay_floor or not detect_decay:
                return TrajectoryOutcome(Outcome.ESCAPES, r_ev, y[0], y[1])
        return TrajectoryOutcome(Outcome.DECAYS, r_ev, y[0], y[1])
    u, du = sol.y[:, -1]
    if max(u, abs(du)) < opts.decay_floor * max(s, 1.0):
        return TrajectoryOutcome(Outcome.DECAYS, sol.t[-1], u, du)
    raise NonConvergedIntegration(
        f"trajectory s={s!r} reached r_max={opts.r_max} without a classifying event"
    )


def shoot(s: float, n: int, q: float, opts: ShootOptions = ShootOptions(), *,
          detect_decay: bool = True) -> TrajectoryOutcome:
    """Classify the radial trajectory with ``U(0) = s``, ``U'(0) = 0``.

    With ``detect_decay`` the trajectory is reported as ``DECAYS`` once both
    ``U`` and ``|U'|`` fall below ``opts.decay_tol * s`` while still
    decreasing, which is the resolution limit of an initial-value shot
    (rounding errors feed the growing mode ``e^r``).  The bisection disables
    it so that every iterate lands in one of the two bracketing classes.
    """
    if not s > 0:
        raise InvalidAmplitude(f"amplitude must be positive, got {s}")
    if not q > 2:
        raise ConfigError(f"exponent must exceed 2, got {q}")
    if s - s ** (q - 1) >= 0.0:
        # U''(0) >= 0: the trajectory never decreases (s = 1 is the constant solution)
        return TrajectoryOutcome(Outcome.ESCAPES, 0.0, s, 0.0)
    sol = _integrate(s, n, q, opts.r_max, opts.tol_ode, opts.r0,
                     decay_tol=opts.decay_tol if detect_decay else None)
    return _classify(sol, s, n, q, opts, detect_decay)


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Sampled ground state on ``r = linspace(0, r_max, grid)``.

    ``tail_coeff`` is the constant ``c`` in ``U(r) ~ c r^(-(n-1)/2) e^(-r)``;
    evaluation beyond the last sample uses the exact Bessel form of which this
    is the leading term.
    """

    n: int
    q: float
    r: np.ndarray
    U: np.ndarray
    dU: np.ndarray
    s_star: float
    tail_coeff: float
    r_resolved: float
    ode_residual: float
    bisection: tuple = field(default=(), repr=False)
    dims: ProblemDims | None = None

    @property
    def r_max(self) -> float:
        return float(self.r[-1])

    @property
    def nu(self) -> float:
        return self.n / 2.0 - 1.0

    @property
    def bessel_coeff(self) -> float:
        return self.tail_coeff / math.sqrt(math.pi / 2.0)

    def tail(self, r):
        """Far-field continuation of ``(U, U')`` beyond the resolved range."""
        return _tail_values(self.n, self.q, self.bessel_coeff, np.asarray(r, dtype=float))

    def d2U(self):
        """Second derivative on the grid, read off the ODE."""
        n, q = self.n, self.q
        rhs = self.U - np.maximum(self.U, 0.0) ** (q - 1)
        out = np.empty_like(self.U)
        out[0] = rhs[0] / n
        out[1:] = -(n - 1) / self.r[1:] * self.dU[1:] + rhs[1:]
        return out

    def _splines(self):
        cache = self.__dict__.get("_spl")
        if cache is None:
            d2 = self.d2U()
            cache = (CubicHermiteSpline(self.r, self.U, self.dU),
                     CubicHermiteSpline(self.r, self.dU, d2))
            object.__setattr__(self, "_spl", cache)
        return cache

    def __call__(self, r):
        return evaluate_profile(self, r)


def _tail_shape(n, r):
    nu = n / 2.0 - 1.0
    return np.log(kve(nu, r)) - nu * np.log(r) - r


def _tail_correction(lin, q):
    # leading response of -ΔU + U = U^(q-1) to the source lin^(q-1), exact in 1-D
    return lin ** (q - 1) / ((q - 1) ** 2 - 1)


def _tail_values(n, q, C, r):
    """``C r^(-ν) K_ν(r)`` plus its first nonlinear correction, and the derivative."""
    nu = n / 2.0 - 1.0
    with np.errstate(under="ignore"):
        scale = C * r ** (-nu) * np.exp(-r)
        lin = scale * kve(nu, r)
        dlin = -scale * kve(nu + 1.0, r)
        corr = _tail_correction(lin, q)
        dcorr = (q - 1) * corr / np.where(lin > 0, lin, 1.0) * dlin
    return lin - corr, dlin - dcorr


def _ode_residual(sol, n, q, r_nodes, delta=1e-3):
    """Max residual of the ODE along a dense trajectory, derivative by a 5-point stencil."""
    r_nodes = r_nodes[(r_nodes > 2 * delta + sol.t[0]) & (r_nodes < sol.t[-1] - 2 * delta)]
    if r_nodes.size == 0:
        return 0.0
    offs = np.array([-2.0, -1.0, 1.0, 2.0]) * delta
    w = np.array([1.0, -8.0, 8.0, -1.0]) / (12.0 * delta)
    ys = np.stack([sol.sol(r_nodes + o) for o in offs])  # (4, 2, k)
    yc = sol.sol(r_nodes)
    u, du = yc
    d_u = np.tensordot(w, ys[:, 0, :], axes=1)
    d_du = np.tensordot(w, ys[:, 1, :], axes=1)
    res_ode = np.abs(-d_du - (n - 1) / r_nodes * du + u - np.maximum(u, 0) ** (q - 1))
    res_kin = np.abs(d_u - du)
    return float(max(res_ode.max(), res_kin.max()))


def solve_radial_ground_state(n: int, q: float, opts: ShootOptions = ShootOptions(),
                              dims: ProblemDims | None = None) -> RadialProfile:
    """Positive radial ground state of ``-ΔU + U = U^(q-1)`` in ``R^n``."""
    if int(n) != n or n < 1:
        raise ConfigError(f"dimension must be an integer >= 1, got {n}")
    if not q > 2:
        raise ConfigError(f"exponent must exceed 2, got {q}")
    if n >= 3 and q >= critical_exponent(n):
        raise SupercriticalExponent(
            f"supercritical exponent: q={q} >= 2n/(n-2)={critical_exponent(n)}"
        )

    coarse = 1e-8
    log = []

    def classify(s, rtol):
        sol = _integrate(s, n, q, opts.r_max, rtol, opts.r0)
        out = _classify(sol, s, n, q, opts, detect_decay=False)
        log.append((s, out.cls))
        return out.cls

    # geometric sweep for a bracket
    lo = hi = None
    for k in range(opts.max_doublings):
        s = 1.01 * 2.0**k
        if classify(s, coarse) is Outcome.ESCAPES:
            lo = s
        else:
            hi = s
            break
    if lo is None or hi is None:
        raise BracketNotFound(f"no ESCAPES/CROSSES_ZERO bracket for n={n}, q={q}")

    while hi - lo > opts.tol_bisect * hi:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        rtol = min(coarse, max(opts.tol_ode, 1e-3 * (hi - lo) / hi))
        if classify(mid, rtol) is Outcome.ESCAPES:
            lo = mid
        else:
            hi = mid

    sol_lo = _integrate(lo, n, q, opts.r_max, opts.tol_ode, opts.r0, dense=True)
    sol_hi = _integrate(hi, n, q, opts.r_max, opts.tol_ode, opts.r0, dense=True)
    r_end = min(sol_lo.t[-1], sol_hi.t[-1])

    # Both bracketing trajectories carry the growing mode of the linearisation
    # with opposite signs.  While their difference D is small the equation is
    # effectively linear in it, so U_lo + w*D cancels the mode; w and the tail
    # constant C come from one least-squares fit over the last decade before
    # the linear regime ends.
    probe = np.linspace(opts.r0, r_end, 8000)
    y_lo = sol_lo.sol(probe)
    y_hi = sol_hi.sol(probe)
    D = y_hi[0] - y_lo[0]
    bad = (np.abs(D) > 1e-2 * np.abs(y_lo[0])) | (y_lo[0] <= 0)
    r_lin = float(probe[np.argmax(bad)]) if bad.any() else float(r_end)
    if r_lin < 3.0:
        raise NonConvergedIntegration(
            f"bracketing trajectories separate at r={r_lin:.3g}; bisection did not resolve the profile"
        )
    in_win = (probe > r_lin - math.log(10.0)) & (probe <= r_lin) & (y_lo[0] > opts.decay_floor)
    if in_win.sum() < 8:
        raise NonConvergedIntegration("not enough resolved samples for the tail fit")
    rw = probe[in_win]
    shape = np.exp(_tail_shape(n, rw))
    A = np.column_stack([D[in_win] / shape, -np.ones(rw.size)])
    C = 0.0
    for _ in range(3):
        corr = _tail_correction(C * shape, q) if C > 0 else 0.0
        (w, C), *_ = np.linalg.lstsq(A, (-corr - y_lo[0][in_win]) / shape, rcond=None)
    C = float(C)
    if not C > 0:
        raise NonConvergedIntegration("tail fit produced a non-positive constant")
    r_res = r_lin

    r = np.linspace(0.0, opts.r_max, opts.grid)
    U = np.empty_like(r)
    dU = np.empty_like(r)
    s_star = lo + w * (hi - lo)
    inner = r <= r_res
    near = r < opts.r0
    mid_r = inner & ~near
    ylo = sol_lo.sol(r[mid_r])
    yhi = sol_hi.sol(r[mid_r])
    U[mid_r], dU[mid_r] = ylo + w * (yhi - ylo)
    c2 = (s_star - s_star ** (q - 1)) / (2 * n)
    U[near] = s_star + c2 * r[near] ** 2
    dU[near] = 2 * c2 * r[near]
    U[~inner], dU[~inner] = _tail_values(n, q, C, r[~inner])

    resid = max(_ode_residual(sol_lo, n, q, r[mid_r]), _ode_residual(sol_hi, n, q, r[mid_r]))
    # the Bessel tail solves the linear equation exactly; what is left is U^(q-1)
    if (~inner).any():
        resid = max(resid, float(U[~inner].max() ** (q - 1)))

    U.setflags(write=False)
    dU.setflags(write=False)
    r.setflags(write=False)
    return RadialProfile(
        n=int(n), q=float(q), r=r, U=U, dU=dU, s_star=s_star,
        tail_coeff=C * math.sqrt(math.pi / 2.0), r_resolved=r_res,
        ode_residual=resid, bisection=tuple(log), dims=dims,
    )


def evaluate_profile(prof: RadialProfile, r):
    """``(U(r), U'(r))``; Hermite interpolation on the grid, Bessel tail beyond."""
    r_arr = np.abs(np.asarray(r, dtype=float))
    scalar = r_arr.ndim == 0
    r_arr = np.atleast_1d(r_arr)
    u = np.empty_like(r_arr)
    du = np.empty_like(r_arr)
    inside = r_arr <= prof.r_max
    if inside.any():
        su, sdu = prof._splines()
        u[inside] = su(r_arr[inside])
        du[inside] = sdu(r_arr[inside])
    if (~inside).any():
        u[~inside], du[~inside] = prof.tail(r_arr[~inside])
    if scalar:
        return float(u[0]), float(du[0])
    return u, du


def closed_form_1d(q: float, x):
    """Exact 1-D soliton ``(q/2)^(1/(q-2)) sech^(2/(q-2))((q-2)x/2)``."""
    if not q > 2:
        raise ConfigError("closed form needs q > 2")
    x = np.asarray(x, dtype=float)
    amp = (q / 2.0) ** (1.0 / (q - 2.0))
    with np.errstate(over="ignore"):
        sech = 1.0 / np.cosh(0.5 * (q - 2.0) * x)
    out = amp * sech ** (2.0 / (q - 2.0))
    return float(out) if out.ndim == 0 else out


def _kernel_fields(prof: RadialProfile, h: float, extent: float):
    """ψ^1 (= ∂U/∂z_1) and its ingredients on a symmetric Cartesian cloud."""
    n = prof.n
    if n > 3:
        raise ConfigError("Cartesian kernel check is implemented for n <= 3")
    m = int(round(extent / h))
    ax = np.arange(-m, m + 1) * h
    grids = np.meshgrid(*([ax] * n), indexing="ij")
    rad = np.sqrt(sum(g * g for g in grids))
    return ax, grids, rad


_LAPLACE_STENCILS = {2: (-2.0, 1.0), 4: (-2.5, 4.0 / 3.0, -1.0 / 12.0)}


def linearized_kernel_residual(prof: RadialProfile, i: int = 1, h: float = 0.01,
                               extent: float | None = None, order: int = 4) -> float:
    """Discrete L² residual of ``-Δψ + ψ - (q-1)U^(q-2)ψ`` for ``ψ = ∂U/∂z_i``.

    Parameters
    ----------
    order : {2, 4}
        Accuracy of the central-difference Laplacian on the Cartesian cloud
        of step ``h``; the residual then vanishes like ``h**order``.

    Boundary layers of the cloud are dropped.
    """
    n = prof.n
    if not 1 <= i <= n:
        raise ConfigError(f"axis index must be in 1..{n}")
    if order not in _LAPLACE_STENCILS:
        raise ConfigError("order must be 2 or 4")
    if extent is None:
        extent = {1: 12.0, 2: 8.0, 3: 6.0}.get(n, 6.0)
    ax, grids, rad = _kernel_fields(prof, h, extent)
    u, du = evaluate_profile(prof, rad)
    with np.errstate(invalid="ignore", divide="ignore"):
        psi = np.where(rad > 0, du * grids[i - 1] / rad, 0.0)
    weights = _LAPLACE_STENCILS[order]
    lap = n * weights[0] * psi
    for axis in range(n):
        for k, wk in enumerate(weights[1:], start=1):
            lap = lap + wk * (np.roll(psi, k, axis=axis) + np.roll(psi, -k, axis=axis))
    lap /= h * h
    res = -lap + psi - (prof.q - 1.0) * np.maximum(u, 0.0) ** (prof.q - 2.0) * psi
    core = tuple(slice(4, -4) for _ in range(n))
    return float(np.sqrt(np.sum(res[core] ** 2) * h**n))


def profile_quadrature(prof: RadialProfile, values: np.ndarray) -> float:
    """``∫_0^{r_max} values(r) dr`` by composite Simpson on the profile grid."""
    return float(simpson(values, x=prof.r))


def kernel_h1_norm_sq(prof: RadialProfile) -> float:
    """``‖ψ^i‖²_{H¹(R^n)}`` for ``ψ^i = ∂U/∂z_i`` by radial quadrature.

    With ``ψ = U'(r) θ_i`` one has ``|∇ψ|² = U''² θ_i² + (U'/r)² (1 - θ_i²)``
    and the sphere average of ``θ_i²`` is ``1/n``.
    """
    from .moments import sphere_area

    n, r = prof.n, prof.r
    d2 = prof.d2U()
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(r > 0, prof.dU / np.where(r > 0, r, 1.0), d2)
    integrand = (prof.dU**2 + d2**2 + (n - 1) * ratio**2) / n * r ** (n - 1)
    return float(sphere_area(n) * simpson(integrand, x=r))


def kernel_h1_gram(prof: RadialProfile, h: float = 0.02, extent: float | None = None) -> np.ndarray:
    """Discrete ``H¹(R^n)`` Gram matrix of ``ψ^1, …, ψ^n`` on a Cartesian cloud.

    Gradients are second-order central differences; the cloud is symmetric
    about the origin.
    """
    n = prof.n
    if extent is None:
        extent = {1: 12.0, 2: 8.0, 3: 6.0}.get(n, 6.0)
    ax, grids, rad = _kernel_fields(prof, h, extent)
    _, du = evaluate_profile(prof, rad)
    with np.errstate(invalid="ignore", divide="ignore"):
        psis = [np.where(rad > 0, du * g / rad, 0.0) for g in grids]
    grads = [np.gradient(ps, h) for ps in psis]
    if n == 1:
        grads = [[g] for g in grads]
    gram = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            val = np.sum(psis[i] * psis[j]) + sum(np.sum(a * b) for a, b in zip(grads[i], grads[j]))
            gram[i, j] = val * h**n
    return gram
