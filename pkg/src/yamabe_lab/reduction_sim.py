"""Discrete finite-dimensional reduction for

    -ε² Δ_g u + (s_g ε²/6 + 1) u = (u⁺)³

on a conformally flat torus ``g = e^{2f}(dx² + dy²)``, i.e. base dimension
``n = 2`` with fibre dimension ``m = 2`` (``p = 4``, ``a = 6``).

Grid functions are arrays of shape ``(ny, nx)`` with x the fast index.  The
flat Laplacian is spectral.  In two dimensions the metric gradient pairing
times the volume form is the flat one, so the ε-inner product is

    ⟨u, v⟩_ε = ε⁻² h₁h₂ Σ [ε² u (-Δv) + e^{2f} u v] = h₁h₂ Σ u · A v,

with the symmetric positive operator ``A = ε⁻²(-ε²Δ + e^{2f})``.  Dual
residuals ``A S_ε(u) = A u - ε⁻² e^{2f} F(u)`` avoid elliptic solves
inside the reduction loop.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import fft as sfft
from scipy.sparse.linalg import LinearOperator, cg, minres

from .errors import (
    ConfigError,
    ContractionFailed,
    GridTooCoarse,
    MaxIters,
    NumericalError,
    ResolutionExceeded,
    ShapeMismatch,
    SolverDiverged,
)
from .ground_state import RadialProfile, evaluate_profile, kernel_h1_norm_sq
from .reduced_functional import ScalarField2D, critical_points

__all__ = [
    "Bump",
    "TrigMode",
    "MetricSpec",
    "TorusMetric",
    "EpsNormContext",
    "KernelProjector",
    "PhiResult",
    "ScanResult",
    "EpsRecord",
    "ReductionReport",
    "build_torus_metric",
    "cutoff",
    "transplant_bubble",
    "kernel_basis",
    "h_eps_inner",
    "h_eps_norm",
    "apply_istar",
    "S_eps",
    "dual_residual",
    "J_eps",
    "solve_phi",
    "F_eps_scan",
    "order_check",
    "coercivity_proxy",
    "loglog_slope",
]

P_EXP = 4.0
A_CONST = 6.0
ISTAR_RTOL = 1e-10


# ---------------------------------------------------------------- metric

@dataclass(frozen=True)
class Bump:
    """Periodic Gaussian-like bump ``amp·exp(Σ κ(cos θ - 1))`` of width ``width``."""

    amp: float
    cx: float
    cy: float
    width: float

    def _parts(self, x, y, L1, L2):
        wx, wy = 2 * math.pi / L1, 2 * math.pi / L2
        kx = 1.0 / (wx * self.width) ** 2
        ky = 1.0 / (wy * self.width) ** 2
        tx, ty = wx * (x - self.cx), wy * (y - self.cy)
        b = self.amp * np.exp(kx * (np.cos(tx) - 1.0) + ky * (np.cos(ty) - 1.0))
        return b, (kx, ky, wx, wy, tx, ty)

    def value(self, x, y, L1, L2):
        return self._parts(x, y, L1, L2)[0]

    def laplacian(self, x, y, L1, L2):
        b, (kx, ky, wx, wy, tx, ty) = self._parts(x, y, L1, L2)
        gx, gy = -kx * wx * np.sin(tx), -ky * wy * np.sin(ty)
        lap_phase = -kx * wx**2 * np.cos(tx) - ky * wy**2 * np.cos(ty)
        return b * (gx * gx + gy * gy + lap_phase)


@dataclass(frozen=True)
class TrigMode:
    """``amp·cos(2π kx x/L1 + φx)·cos(2π ky y/L2 + φy)``."""

    amp: float
    kx: int
    ky: int
    phase_x: float = 0.0
    phase_y: float = 0.0

    def value(self, x, y, L1, L2):
        return (self.amp * np.cos(2 * math.pi * self.kx * x / L1 + self.phase_x)
                * np.cos(2 * math.pi * self.ky * y / L2 + self.phase_y))

    def laplacian(self, x, y, L1, L2):
        w2 = (2 * math.pi * self.kx / L1) ** 2 + (2 * math.pi * self.ky / L2) ** 2
        return -w2 * self.value(x, y, L1, L2)


@dataclass(frozen=True)
class MetricSpec:
    """Conformal exponent ``f = offset + Σ bumps + Σ modes``."""

    bumps: tuple = ()
    modes: tuple = ()
    offset: float = 0.0

    def terms(self):
        return tuple(self.bumps) + tuple(self.modes)

    def f(self, x, y, L1, L2):
        out = np.full(np.broadcast(x, y).shape, float(self.offset))
        for t in self.terms():
            out = out + t.value(x, y, L1, L2)
        return out

    def laplacian(self, x, y, L1, L2):
        out = np.zeros(np.broadcast(x, y).shape)
        for t in self.terms():
            out = out + t.laplacian(x, y, L1, L2)
        return out

    @property
    def is_flat(self) -> bool:
        return not any(t.amp != 0 for t in self.terms())

    @classmethod
    def one_bump(cls, amp=0.1, width=0.08, center=(0.5, 0.5), lift_to_zero=True):
        """Single bump; with ``lift_to_zero`` the maximum of ``f`` is 0."""
        return cls(bumps=(Bump(amp, center[0], center[1], width),),
                   offset=-amp if lift_to_zero else 0.0)

    def as_dict(self):
        return {"bumps": [asdict(b) for b in self.bumps],
                "modes": [asdict(m) for m in self.modes],
                "offset": self.offset}


class _Spectral:
    """rfft2 helpers on an ``(ny, nx)`` periodic grid."""

    def __init__(self, nx, ny, L1, L2):
        self.shape = (ny, nx)
        ky = 2 * np.pi * np.fft.fftfreq(ny, d=L2 / ny)
        kx = 2 * np.pi * np.fft.rfftfreq(nx, d=L1 / nx)
        self.k2 = ky[:, None] ** 2 + kx[None, :] ** 2
        w = np.full(kx.size, 2.0)
        w[0] = 1.0
        if nx % 2 == 0:
            w[-1] = 1.0
        self.parseval_w = w[None, :] / (nx * ny)

    def fwd(self, u):
        return sfft.rfft2(u)

    def inv(self, uh):
        return sfft.irfft2(uh, s=self.shape)

    def neg_lap(self, u):
        return self.inv(self.k2 * self.fwd(u))

    def dirichlet_pair(self, u, v):
        """``Σ u (-Δv)`` evaluated symmetrically in Fourier space."""
        uh, vh = self.fwd(u), self.fwd(v)
        return float(np.sum(self.parseval_w * self.k2 * (uh.real * vh.real + uh.imag * vh.imag)))


@dataclass(frozen=True, eq=False)
class TorusMetric:
    """Conformally flat metric ``e^{2f}(dx² + dy²)`` on a periodic grid."""

    nx: int
    ny: int
    L1: float
    L2: float
    f: np.ndarray
    e2f: np.ndarray
    s_g: np.ndarray
    spec: MetricSpec = field(repr=False)

    @property
    def h1(self):
        return self.L1 / self.nx

    @property
    def h2(self):
        return self.L2 / self.ny

    @property
    def h(self):
        return max(self.h1, self.h2)

    @property
    def cell(self):
        return self.h1 * self.h2

    @property
    def max_f(self):
        return float(np.max(self.f))

    @property
    def spectral(self) -> _Spectral:
        sp = self.__dict__.get("_sp")
        if sp is None:
            sp = _Spectral(self.nx, self.ny, self.L1, self.L2)
            object.__setattr__(self, "_sp", sp)
        return sp

    def coords(self):
        return ScalarField2D.coords(self.nx, self.ny, self.L1, self.L2)

    def f_at(self, x, y):
        return float(self.spec.f(x, y, self.L1, self.L2))

    def spectral_sg(self):
        return 2.0 * np.exp(-2.0 * self.f) * self.spectral.neg_lap(self.f)

    def sg_consistency(self) -> float:
        """Max difference between the stored and spectrally recomputed curvature."""
        return float(np.max(np.abs(self.spectral_sg() - self.s_g)))

    def gauss_bonnet(self) -> float:
        """``|Σ s_g dμ| / Σ |s_g| dμ``; zero on a torus."""
        dmu = self.e2f * self.cell
        den = float(np.sum(np.abs(self.s_g) * dmu))
        return abs(float(np.sum(self.s_g * dmu))) / den if den > 0 else 0.0

    def field(self, values) -> ScalarField2D:
        return ScalarField2D(self.nx, self.ny, self.L1, self.L2, values)


def build_torus_metric(nx: int, ny: int, L1: float = 1.0, L2: float = 1.0,
                       f_spec: MetricSpec = MetricSpec()) -> TorusMetric:
    """Sample ``f`` and its scalar curvature ``s_g = -2 e^{-2f} Δf``.

    ``s_g`` is taken from the analytic Laplacian of the spec; the spectral
    recomputation is available through :meth:`TorusMetric.sg_consistency`.
    """
    if nx < 8 or ny < 8:
        raise ConfigError("grid must be at least 8 x 8")
    if L1 <= 0 or L2 <= 0:
        raise ConfigError("periods must be positive")
    h = max(L1 / nx, L2 / ny)
    for b in f_spec.bumps:
        if b.width < 4 * h:
            raise GridTooCoarse(f"bump width {b.width} < 4h = {4 * h}")
    for md in f_spec.modes:
        if 2 * abs(md.kx) >= nx or 2 * abs(md.ky) >= ny:
            raise GridTooCoarse("trigonometric mode at or above the Nyquist limit")
    x, y = ScalarField2D.coords(nx, ny, L1, L2)
    f = f_spec.f(x, y, L1, L2)
    e2f = np.exp(2.0 * f)
    s_g = -2.0 * f_spec.laplacian(x, y, L1, L2) / e2f
    return TorusMetric(nx, ny, L1, L2, f, e2f, s_g, f_spec)


# ------------------------------------------------------------ ε-geometry

@dataclass(frozen=True, eq=False)
class EpsNormContext:
    metric: TorusMetric
    eps: float

    def __post_init__(self):
        m = self.metric
        if not self.eps > 0:
            raise ConfigError("eps must be positive")
        if self.eps > min(m.L1, m.L2) / 10:
            raise ConfigError("eps must not exceed min(L1, L2)/10")

    def check_resolution(self):
        m = self.metric
        need = 4 * m.h * math.exp(m.max_f)
        if self.eps < need * (1 - 1e-12):
            raise ResolutionExceeded(f"eps = {self.eps:.6g} < 4 h e^(max f) = {need:.6g}")

    @property
    def sp(self) -> _Spectral:
        return self.metric.spectral

    def _check(self, *us):
        shape = (self.metric.ny, self.metric.nx)
        for u in us:
            if np.shape(u) != shape:
                raise ShapeMismatch(f"field shape {np.shape(u)} != {shape}")

    def gram_apply(self, u):
        """``A u = ε⁻²(-ε²Δu + e^{2f} u)``."""
        e = self.eps
        return self.sp.neg_lap(u) + self.metric.e2f * u / (e * e)

    def mass_weight(self):
        """Pointwise factor turning ``F(u)`` into its dual: ``ε⁻² e^{2f}``."""
        return self.metric.e2f / self.eps**2

    def precond_A(self):
        """Constant-coefficient spectral inverse of ``A`` (symmetric positive)."""
        e2, cbar = self.eps**2, float(np.mean(self.metric.e2f))
        sym = 1.0 / (self.sp.k2 + cbar / e2)
        sp = self.sp
        return lambda r: sp.inv(sym * sp.fwd(r))


def h_eps_inner(ctx: EpsNormContext, u, v) -> float:
    """``⟨u, v⟩_ε``; exactly symmetric in its arguments."""
    ctx._check(u, v)
    m = ctx.metric
    grad = ctx.sp.dirichlet_pair(u, v)
    mass = float(np.sum(u * v * m.e2f))
    return m.cell * (grad + mass / ctx.eps**2)


def h_eps_norm(ctx: EpsNormContext, u) -> float:
    return math.sqrt(max(h_eps_inner(ctx, u, u), 0.0))


def apply_istar(ctx: EpsNormContext, v, *, rtol: float = ISTAR_RTOL, maxiter: int = 500,
                x0=None, info: dict | None = None):
    """Solve ``(-ε² e^{-2f} Δ + 1) u = v`` on the periodic grid.

    Equivalently ``(-ε²Δ + e^{2f}) u = e^{2f} v``, solved by conjugate
    gradients preconditioned with the constant-coefficient spectral inverse.
    The relative residual is checked against ``rtol`` on exit.
    """
    ctx._check(v)
    m, sp, e2 = ctx.metric, ctx.sp, ctx.eps**2
    rhs = m.e2f * v
    nrm = float(np.linalg.norm(rhs))
    if nrm == 0.0:
        return np.zeros_like(rhs)
    cbar = float(np.mean(m.e2f))
    sym = 1.0 / (e2 * sp.k2 + cbar)
    u = sp.inv(sym * sp.fwd(rhs))
    iters = 0
    if not np.all(m.e2f == m.e2f.flat[0]):
        shape, n = rhs.shape, rhs.size

        def op(w):
            w = w.reshape(shape)
            return (e2 * sp.neg_lap(w) + m.e2f * w).ravel()

        def pre(r):
            return sp.inv(sym * sp.fwd(r.reshape(shape))).ravel()

        counter = [0]

        def cb(_):
            counter[0] += 1

        start = u if x0 is None else x0
        sol, _ = cg(LinearOperator((n, n), op), rhs.ravel(), x0=start.ravel(),
                    rtol=0.01 * rtol, atol=0.0, maxiter=maxiter,
                    M=LinearOperator((n, n), pre), callback=cb)
        u = sol.reshape(shape)
        iters = counter[0]
    res = float(np.linalg.norm(e2 * sp.neg_lap(u) + m.e2f * u - rhs)) / nrm
    if info is not None:
        info.update(iters=iters, residual=res)
    if not res <= rtol:
        raise SolverDiverged(f"i* residual {res:.3e} above {rtol:.1e}")
    return u


def _F(ctx: EpsNormContext, u):
    return np.maximum(u, 0.0) ** 3 - (ctx.metric.s_g / A_CONST) * ctx.eps**2 * u


def _dF(ctx: EpsNormContext, u):
    return 3.0 * np.maximum(u, 0.0) ** 2 - (ctx.metric.s_g / A_CONST) * ctx.eps**2


def S_eps(ctx: EpsNormContext, u):
    """``u - i*((u⁺)³ - (s_g/6) ε² u)``."""
    ctx._check(u)
    return u - apply_istar(ctx, _F(ctx, u))


def dual_residual(ctx: EpsNormContext, u):
    """``A S_ε(u)``, computed without an elliptic solve."""
    return ctx.gram_apply(u) - ctx.mass_weight() * _F(ctx, u)


def J_eps(ctx: EpsNormContext, u) -> float:
    """Energy whose ε-gradient is :func:`S_eps`."""
    ctx._check(u)
    m, e2 = ctx.metric, ctx.eps**2
    grad = 0.5 * e2 * ctx.sp.dirichlet_pair(u, u)
    up = np.maximum(u, 0.0)
    pot = np.sum(((m.s_g * e2 + A_CONST) / (2 * A_CONST)) * u * u * m.e2f
                 - up**4 * m.e2f / P_EXP)
    return m.cell * (grad + float(pot)) / e2


# ------------------------------------------------------- bubble transplant

def cutoff(t):
    """C² bump: 1 on [0, 1/2], 0 on [1, ∞), quintic smoothstep in between."""
    t = np.asarray(t, dtype=float)
    s = np.clip(2.0 * t - 1.0, 0.0, 1.0)
    return 1.0 - s**3 * (10.0 - 15.0 * s + 6.0 * s * s)


def _displacements(metric: TorusMetric, x):
    """Minimal-image displacement ``y - x`` in physical units for base point
    ``x = (ix, iy)`` given in (possibly fractional) grid units."""
    ix, iy = float(x[0]), float(x[1])
    nx, ny = metric.nx, metric.ny
    jx = np.arange(nx, dtype=float) - ix
    jy = np.arange(ny, dtype=float) - iy
    jx = (jx + nx / 2.0) % nx - nx / 2.0
    jy = (jy + ny / 2.0) % ny - ny / 2.0
    return jx[None, :] * metric.h1, jy[:, None] * metric.h2


def _frame(ctx: EpsNormContext, x, r_cut):
    m = ctx.metric
    if r_cut > min(m.L1, m.L2) / 4 * (1 + 1e-12):
        raise ConfigError("r_cut must not exceed min(L1, L2)/4")
    dx, dy = _displacements(m, x)
    scale = math.exp(m.f_at(float(x[0]) * m.h1, float(x[1]) * m.h2))
    zx, zy = np.broadcast_arrays(scale * dx, scale * dy)
    rho = np.sqrt(zx * zx + zy * zy)
    return zx, zy, rho


def _check_profile(prof: RadialProfile):
    if prof.n != 2 or prof.q != P_EXP:
        raise ConfigError("torus reduction needs the n = 2, q = 4 ground state")


def transplant_bubble(ctx: EpsNormContext, x, prof: RadialProfile, r_cut: float = 0.25):
    """``U(ρ/ε) χ(ρ/r_cut)`` with ``ρ = e^{f(x)} |y - x|``."""
    _check_profile(prof)
    _, _, rho = _frame(ctx, x, r_cut)
    out = np.zeros_like(rho)
    inside = rho < r_cut
    u, _ = evaluate_profile(prof, rho[inside] / ctx.eps)
    out[inside] = u * cutoff(rho[inside] / r_cut)
    return out


def kernel_basis(ctx: EpsNormContext, x, prof: RadialProfile, r_cut: float = 0.25):
    """Transplanted ``ψ^i(z) = U'(|z|) z_i/|z|``; returns ``(W1, W2, gram)``."""
    _check_profile(prof)
    zx, zy, rho = _frame(ctx, x, r_cut)
    inside = rho < r_cut
    W = []
    for zi in (zx, zy):
        w = np.zeros_like(rho)
        r_in = rho[inside]
        _, du = evaluate_profile(prof, r_in / ctx.eps)
        with np.errstate(invalid="ignore", divide="ignore"):
            dirn = np.where(r_in > 0, zi[inside] / np.where(r_in > 0, r_in, 1.0), 0.0)
        w[inside] = du * dirn * cutoff(r_in / r_cut)
        W.append(w)
    gram = np.array([[h_eps_inner(ctx, a, b) for b in W] for a in W])
    return W[0], W[1], gram


class KernelProjector:
    """ε-orthogonal projection onto the complement of ``span{W1, W2}``."""

    def __init__(self, ctx: EpsNormContext, W):
        self.ctx = ctx
        self.W = [np.asarray(w) for w in W]
        self.AW = [ctx.gram_apply(w) for w in self.W]
        cell = ctx.metric.cell
        self.gram = np.array([[cell * float(np.sum(a * w)) for w in self.W] for a in self.AW])
        self.gram = 0.5 * (self.gram + self.gram.T)
        self.ginv = np.linalg.inv(self.gram)

    def coeffs(self, w):
        cell = self.ctx.metric.cell
        return self.ginv @ np.array([cell * float(np.sum(a * w)) for a in self.AW])

    def __call__(self, w):
        c = self.coeffs(w)
        return w - c[0] * self.W[0] - c[1] * self.W[1]

    def transpose(self, r):
        """Euclidean adjoint of the projection (acts on dual residuals)."""
        cell = self.ctx.metric.cell
        c = self.ginv @ np.array([cell * float(np.sum(w * r)) for w in self.W])
        return r - c[0] * self.AW[0] - c[1] * self.AW[1]

    def normalized_offdiag(self):
        g = self.gram
        return abs(g[0, 1]) / math.sqrt(g[0, 0] * g[1, 1])


# ------------------------------------------------------------ reduction

@dataclass(frozen=True, eq=False)
class PhiResult:
    phi: np.ndarray
    phi_norm_eps: float
    iters: int
    contraction_ratio: float
    residual_perp: float
    inner_iters: tuple = ()
    steps: tuple = ()
    S_norm: float = math.nan
    orth: tuple = ()
    U: np.ndarray | None = field(default=None, repr=False)
    W: tuple = field(default=(), repr=False)
    energy: float = math.nan


def _linearized(ctx, U):
    weight = ctx.mass_weight() * _dF(ctx, U)
    return lambda v: ctx.gram_apply(v) - weight * v


def _nonlinear_rest(ctx, U, phi):
    up = np.maximum(U, 0.0)
    cubic = np.maximum(U + phi, 0.0) ** 3 - up**3 - 3.0 * up * up * phi
    return -ctx.mass_weight() * cubic


def solve_phi(ctx: EpsNormContext, x, prof: RadialProfile, tol_fp: float = 1e-10,
              max_iter: int = 50, *, r_cut: float = 0.25, inner_rtol: float = 1e-10,
              inner_maxiter: int = 2000, phi0=None, U=None, W=None,
              check_residual: bool = True) -> PhiResult:
    """Fixed point ``φ = L⁻¹(N(φ) - Π^⊥ S_ε(U))`` on the complement of the kernel.

    In dual form each step solves ``Pᵀ B P φ = -Pᵀ(A S_ε(U) + N(φ_k))`` with
    ``B = A - ε⁻² e^{2f} F'(U)`` by preconditioned MINRES and then projects.
    """
    if U is None:
        U = transplant_bubble(ctx, x, prof, r_cut)
    if W is None:
        W1, W2, _ = kernel_basis(ctx, x, prof, r_cut)
        W = (W1, W2)
    proj = KernelProjector(ctx, W)
    shape, n = U.shape, U.size
    B = _linearized(ctx, U)
    R0 = dual_residual(ctx, U)
    pre = ctx.precond_A()

    def op(v):
        pv = proj(v.reshape(shape))
        return proj.transpose(B(pv)).ravel()

    Lop = LinearOperator((n, n), op, dtype=float)
    Mop = LinearOperator((n, n), lambda r: pre(r.reshape(shape)).ravel(), dtype=float)

    phi = np.zeros(shape) if phi0 is None else proj(np.asarray(phi0, dtype=float))
    steps, inner, ratios = [], [], []
    bad = 0
    for k in range(1, max_iter + 1):
        rhs = -proj.transpose(R0 + _nonlinear_rest(ctx, U, phi))
        count = [0]

        def cb(_):
            count[0] += 1

        sol, info = minres(Lop, rhs.ravel(), x0=phi.ravel(), M=Mop, rtol=inner_rtol,
                           maxiter=inner_maxiter, callback=cb)
        if info < 0 or not np.all(np.isfinite(sol)):
            raise SolverDiverged("inner MINRES solve broke down")
        new = proj(sol.reshape(shape))
        step = h_eps_norm(ctx, new - phi)
        inner.append(count[0])
        steps.append(step)
        phi = new
        if len(steps) >= 2 and steps[-2] > 0:
            ratio = steps[-1] / steps[-2]
            ratios.append(ratio)
            bad = bad + 1 if ratio > 0.95 else 0
            if bad >= 3:
                raise ContractionFailed(f"step ratio above 0.95 for 3 iterations (last {ratio:.3f})")
        if step <= tol_fp:
            break
    else:
        raise MaxIters(f"no convergence in {max_iter} iterations (last step {steps[-1]:.3e})")
    phi_norm = h_eps_norm(ctx, phi)
    S_U = h_eps_norm(ctx, S_eps(ctx, U))
    res_perp = math.nan
    if check_residual:
        res_perp = h_eps_norm(ctx, proj(S_eps(ctx, U + phi)))
    orth = tuple(abs(h_eps_inner(ctx, phi, w)) / max(phi_norm * h_eps_norm(ctx, w), 1e-300)
                 for w in W)
    return PhiResult(phi=phi, phi_norm_eps=phi_norm, iters=len(steps),
                     contraction_ratio=max(ratios) if ratios else 0.0,
                     residual_perp=res_perp, inner_iters=tuple(inner), steps=tuple(steps),
                     S_norm=S_U, orth=orth, U=U, W=tuple(W), energy=J_eps(ctx, U + phi))


# ------------------------------------------------------------ scanning

def pearson(a, b) -> float:
    a = np.asarray(a, float).ravel()
    b = np.asarray(b, float).ravel()
    a, b = a - a.mean(), b - b.mean()
    den = math.sqrt(float(np.sum(a * a)) * float(np.sum(b * b)))
    return float(np.sum(a * b)) / den if den > 0 else math.nan


@dataclass(frozen=True, eq=False)
class ScanResult:
    eps: float
    F: ScalarField2D
    s_g: ScalarField2D
    phi_norm: np.ndarray
    failures: tuple
    base_points: tuple
    elapsed: float

    @property
    def complete(self) -> bool:
        return not self.failures

    def spread(self) -> float:
        v = self.F.values[np.isfinite(self.F.values)]
        return float((v.max() - v.min()) / abs(v.mean()))

    def correlation(self, alpha=None, beta_mn=None) -> float:
        """Pearson correlation of ``F_ε - α`` with ``(β/2) ε² s_g``."""
        F = self.F.values
        ok = np.isfinite(F)
        pred = self.s_g.values if beta_mn is None else 0.5 * beta_mn * self.eps**2 * self.s_g.values
        shift = 0.0 if alpha is None else alpha
        return pearson(F[ok] - shift, pred[ok])

    def extrema(self):
        return critical_points(self.F) if self.complete else None


def F_eps_scan(ctx: EpsNormContext, prof: RadialProfile, coarse=(16, 16), *,
               x_grid=None, tol_fp: float = 1e-10, max_iter: int = 50,
               r_cut: float = 0.25, progress=None) -> ScanResult:
    """``F_ε(x) = J_ε(U_{ε,x} + φ_{ε,x})`` over a coarse grid of base points.

    Base points default to every ``(nx/cx)``-th fine node.  Points where the
    reduction fails are stored as NaN and listed in ``failures``.
    """
    m = ctx.metric
    cx, cy = coarse
    if cx < 8 or cy < 8:
        raise ConfigError("the scan needs at least 8 x 8 base points")
    if m.nx % cx or m.ny % cy:
        raise ConfigError("coarse grid must divide the fine grid")
    if x_grid is None:
        x_grid = [(i * (m.nx // cx), j * (m.ny // cy)) for j in range(cy) for i in range(cx)]
    t0 = time.perf_counter()
    F = np.full((cy, cx), np.nan)
    sg = np.full((cy, cx), np.nan)
    pn = np.full((cy, cx), np.nan)
    fails = []
    phi_prev = None
    for idx, x in enumerate(x_grid):
        j, i = divmod(idx, cx)
        sg[j, i] = m.s_g[int(x[1]) % m.ny, int(x[0]) % m.nx]
        try:
            res = solve_phi(ctx, x, prof, tol_fp, max_iter, r_cut=r_cut, check_residual=False)
        except NumericalError as exc:
            fails.append((tuple(x), type(exc).__name__))
            continue
        F[j, i] = res.energy
        pn[j, i] = res.phi_norm_eps
        if progress is not None:
            progress(idx, x, res)
    return ScanResult(ctx.eps, ScalarField2D(cx, cy, m.L1, m.L2, F),
                      ScalarField2D(cx, cy, m.L1, m.L2, sg), pn, tuple(fails),
                      tuple(tuple(x) for x in x_grid), time.perf_counter() - t0)


# ------------------------------------------------------------ order check

def loglog_slope(xs, ys) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    return float(np.polyfit(lx, ly, 1)[0])


def coercivity_proxy(ctx: EpsNormContext, U, proj: KernelProjector, samples: int = 50,
                     seed: int = 0, x=None) -> float:
    """Smallest ``‖Π^⊥ S'_ε(U) w‖_ε / ‖w‖_ε`` over random ``w`` in the complement.

    Samples are smooth random fields windowed around the bubble, so they
    probe the operator where it differs from the identity.
    """
    rng = np.random.default_rng(seed)
    m = ctx.metric
    sp = ctx.sp
    weight = np.exp(-0.5 * (np.hypot(*_displacements(m, x)) / (3 * ctx.eps)) ** 2) \
        if x is not None else 1.0
    filt = np.exp(-0.5 * sp.k2 * ctx.eps**2)
    best = math.inf
    for _ in range(samples):
        raw = sp.inv(filt * sp.fwd(rng.standard_normal(U.shape)))
        w = proj(weight * raw)
        nw = h_eps_norm(ctx, w)
        if nw == 0:
            continue
        Sw = w - apply_istar(ctx, _dF(ctx, U) * w)
        best = min(best, h_eps_norm(ctx, proj(Sw)) / nw)
    return best


@dataclass(frozen=True)
class EpsRecord:
    eps: float
    S_norm: float
    dS_W1_norm: float
    phi_norm: float
    end2: float
    end1: float
    w_offdiag: float
    w11: float
    J_U: float
    F: float
    contraction_ratio: float
    phi_iters: int
    residual_perp: float
    orth: tuple
    coercivity: float
    min_u_ratio: float
    seconds: float


@dataclass(frozen=True)
class ReductionReport:
    eps_list: tuple
    records: tuple
    slopes: dict
    limits: dict
    base_point: tuple
    correlation: float = math.nan
    scans: tuple = ()

    def as_dict(self):
        return {
            "eps_list": list(self.eps_list),
            "base_point": list(self.base_point),
            "records": [asdict(r) for r in self.records],
            "slopes": dict(self.slopes),
            "limits": dict(self.limits),
            "correlation": self.correlation,
        }


def order_check(metric: TorusMetric, x, prof: RadialProfile, eps_list, *,
                r_cut: float = 0.25, tol_fp: float = 1e-10, max_iter: int = 50,
                fd_step: float = 1e-4, dx_cells: float = 0.25, coercivity_samples: int = 50,
                seed: int = 0) -> ReductionReport:
    """Per-ε norms of the approximate solution and of the reduction, with
    least-squares log-log slopes.

    ``end2`` is ``ε⟨∂_v U_{ε,x}, W^v⟩_ε`` and ``end1`` is ``ε²‖∂_v W^v‖_ε``
    for ``v = e_1``; the base-point derivative is a central difference of
    ``dx_cells`` fine cells.
    """
    eps_list = tuple(float(e) for e in eps_list)
    if len(eps_list) < 4:
        raise ConfigError("order check needs at least 4 values of eps")
    ctxs = [EpsNormContext(metric, e) for e in eps_list]
    for c in ctxs:
        c.check_resolution()
    x = (float(x[0]), float(x[1]))
    records = []
    for ctx in ctxs:
        t0 = time.perf_counter()
        U = transplant_bubble(ctx, x, prof, r_cut)
        W1, W2, gram = kernel_basis(ctx, x, prof, r_cut)
        S_U = S_eps(ctx, U)
        t = fd_step
        dS = (S_eps(ctx, U + t * W1) - S_eps(ctx, U - t * W1)) / (2 * t)
        xp, xm = (x[0] + dx_cells, x[1]), (x[0] - dx_cells, x[1])
        hstep = 2 * dx_cells * metric.h1
        dU = (transplant_bubble(ctx, xp, prof, r_cut) - transplant_bubble(ctx, xm, prof, r_cut)) / hstep
        dW = (kernel_basis(ctx, xp, prof, r_cut)[0] - kernel_basis(ctx, xm, prof, r_cut)[0]) / hstep
        res = solve_phi(ctx, x, prof, tol_fp, max_iter, r_cut=r_cut, U=U, W=(W1, W2))
        proj = KernelProjector(ctx, (W1, W2))
        coer = coercivity_proxy(ctx, U, proj, coercivity_samples, seed, x) \
            if coercivity_samples else math.nan
        u = U + res.phi
        records.append(EpsRecord(
            eps=ctx.eps,
            S_norm=h_eps_norm(ctx, S_U),
            dS_W1_norm=h_eps_norm(ctx, dS),
            phi_norm=res.phi_norm_eps,
            end2=ctx.eps * h_eps_inner(ctx, dU, W1),
            end1=ctx.eps**2 * h_eps_norm(ctx, dW),
            w_offdiag=abs(gram[0, 1]) / math.sqrt(gram[0, 0] * gram[1, 1]),
            w11=float(gram[0, 0]),
            J_U=J_eps(ctx, U),
            F=res.energy,
            contraction_ratio=res.contraction_ratio,
            phi_iters=res.iters,
            residual_perp=res.residual_perp,
            orth=res.orth,
            coercivity=coer,
            min_u_ratio=float(u.min() / u.max()),
            seconds=time.perf_counter() - t0,
        ))
    slopes = {
        "S_norm": loglog_slope(eps_list, [r.S_norm for r in records]),
        "dS_W1_norm": loglog_slope(eps_list, [r.dS_W1_norm for r in records]),
        "phi_norm": loglog_slope(eps_list, [r.phi_norm for r in records]),
    }
    limits = {"psi_h1_sq": kernel_h1_norm_sq(prof)}
    return ReductionReport(eps_list, tuple(records), slopes, limits, x)
