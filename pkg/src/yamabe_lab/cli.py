"""Command-line front end.

Exit codes: 0 success, 1 invalid configuration, 2 numerical failure (or a
failed verification where the command is a check).
"""

from __future__ import annotations

import argparse
import configparser
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, NumericalError
from .export import (
    read_field,
    write_beta_table,
    write_critical_points,
    write_field,
    write_json,
    write_profile,
)
from .ground_state import (
    ProblemDims,
    ShootOptions,
    closed_form_1d,
    solve_radial_ground_state,
)
from .moments import (
    NOT_APPLICABLE,
    TOL_ID,
    alpha_beta,
    beta_table,
    compute_moments,
    pairs_up_to,
    verify_identities,
)
from .reduced_functional import (
    CritType,
    SurfaceTopology,
    Topology,
    critical_points,
    multiplicity_bounds,
    predict_F,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


# --------------------------------------------------------------- parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _number(text: str) -> float:
    """Float or ratio of floats, e.g. ``0.25``, ``1/64`` or ``1/22.6``."""
    try:
        num, _, den = text.strip().partition("/")
        return float(num) / float(den) if den else float(num)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc


def _number_list(text: str):
    return tuple(_number(t) for t in text.replace(";", ",").split(",") if t.strip())


def _int_pair(text: str):
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected n,m but got {text!r}")
    return int(parts[0]), int(parts[1])


def _pair_list(text: str):
    return tuple(_int_pair(t) for t in text.replace(" ", ";").split(";") if t.strip())


def _groups(width: int):
    def parse(text: str):
        out = []
        for chunk in text.split(";"):
            if not chunk.strip():
                continue
            vals = tuple(_number(t) for t in chunk.split(","))
            if len(vals) != width:
                raise argparse.ArgumentTypeError(f"expected {width} comma-separated numbers in {chunk!r}")
            out.append(vals)
        return tuple(out)
    return parse


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _common(p):
    p.add_argument("--config", type=Path, help="flat key = value file; explicit flags win")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, help="output path")


def _shoot_flags(p):
    p.add_argument("--r-max", type=float, default=40.0)
    p.add_argument("--grid", type=int, default=4096)
    p.add_argument("--tol-bisect", type=float, default=1e-12)
    p.add_argument("--tol-ode", type=float, default=1e-12)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="yamabe-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ground-state", help="radial ground state by shooting")
    _common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=_number, required=True)
    _shoot_flags(p)
    p.add_argument("--check-closed-form", action="store_true")
    p.set_defaults(func=cmd_ground_state, out=Path("out/ground_state/profile.csv"))

    p = sub.add_parser("beta-table", help="alpha and beta over dimension pairs")
    _common(p)
    p.add_argument("--max-N", dest="max_N", type=int, default=8)
    p.add_argument("--min-N", dest="min_N", type=int, default=4)
    p.add_argument("--pairs", type=_pair_list, help="explicit pairs, e.g. '2,2;3,1'")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--tol-id", type=float, default=TOL_ID)
    _shoot_flags(p)
    p.set_defaults(func=cmd_beta_table, out=Path("out/beta_table.csv"))

    p = sub.add_parser("identities", help="integral identity residuals per pair")
    _common(p)
    p.add_argument("--pair", type=_pair_list, help="pairs to check, e.g. '3,1' or '2,2;2,6'")
    p.add_argument("--max-N", dest="max_N", type=int, default=8)
    p.add_argument("--tol-id", type=float, default=TOL_ID)
    _shoot_flags(p)
    p.set_defaults(func=cmd_identities, out=Path("out/identities.json"))

    p = sub.add_parser("reduce-sim", help="discrete reduction on a conformally flat torus")
    _common(p)
    p.add_argument("--nx", type=int, default=256)
    p.add_argument("--ny", type=int, default=256)
    p.add_argument("--L1", type=float, default=1.0)
    p.add_argument("--L2", type=float, default=1.0)
    p.add_argument("--flat", action="store_true", help="ignore bumps and modes")
    p.add_argument("--bump", type=_groups(4), default=((0.1, 0.5, 0.5, 0.08),),
                   help="amp,cx,cy,width[;...]")
    p.add_argument("--mode", type=_groups(3), default=(), help="amp,kx,ky[;...]")
    p.add_argument("--lift-to-zero", type=_bool, default=True,
                   help="shift f so that max f = 0")
    p.add_argument("--eps", type=_number_list, default=(1 / 16, 1 / 23, 1 / 32, 1 / 45, 1 / 64))
    p.add_argument("--scan-eps", type=_number_list, help="eps values for the F scan "
                   "(default: the two smallest)")
    p.add_argument("--coarse", type=int, default=16, help="base points per direction in the scan")
    p.add_argument("--no-scan", action="store_true")
    p.add_argument("--base-point", type=_number_list, help="ix,iy in grid units")
    p.add_argument("--r-cut", type=float, default=0.25)
    p.add_argument("--tol-fp", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=50)
    p.add_argument("--coercivity-samples", type=int, default=50)
    p.add_argument("--strict", action="store_true", help="exit 2 if any check fails")
    p.set_defaults(func=cmd_reduce_sim, out=Path("out/reduce_sim"))

    p = sub.add_parser("predict", help="leading-order F, critical points, topology bounds")
    _common(p)
    p.add_argument("--field", type=Path, required=True, help="s_g field CSV with JSON sidecar")
    p.add_argument("--eps", type=_number, default=1 / 64)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--topology", choices=[t.value.lower() for t in Topology], default="torus")
    p.add_argument("--genus", type=int)
    p.set_defaults(func=cmd_predict, out=Path("out/predict"))
    return parser


def _read_config(path: Path) -> dict:
    if not path.exists():
        raise ConfigError(f"config file {path} not found")
    text = path.read_text()
    if not text.lstrip().startswith("["):
        text = "[run]\n" + text
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    out = {}
    for section in cp.sections():
        for k, v in cp[section].items():
            out[k.strip().replace("-", "_")] = v
    return out


def _subparser(parser):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action
    raise RuntimeError("parser has no subcommands")


def _config_path(argv):
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return Path(argv[i + 1])
        if tok.startswith("--config="):
            return Path(tok.split("=", 1)[1])
    return None


def parse_args(argv=None):
    """Parse ``argv``; values from ``--config`` act as defaults under explicit flags."""
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    cfg_path = _config_path(argv)
    if cfg_path is None or not argv or argv[0] not in _subparser(parser).choices:
        return parser.parse_args(argv)
    cfg = _read_config(cfg_path)
    sub = _subparser(parser).choices[argv[0]]
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
    unknown = sorted(set(cfg) - set(actions))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    defaults = {}
    for key, raw in cfg.items():
        act = actions[key]
        if isinstance(act, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            defaults[key] = _bool(raw)
        elif act.type is not None:
            try:
                defaults[key] = act.type(raw)
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key}: {exc}") from exc
        else:
            defaults[key] = raw
        act.required = False
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def resolved_config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}


def _opts(args) -> ShootOptions:
    return ShootOptions(r_max=args.r_max, grid=args.grid, tol_bisect=args.tol_bisect,
                        tol_ode=args.tol_ode)


# --------------------------------------------------------------- commands

def cmd_ground_state(args) -> int:
    prof = solve_radial_ground_state(args.n, args.q, _opts(args))
    cfg = resolved_config(args)
    write_profile(prof, args.out, cfg)
    print(f"s_star = {prof.s_star:.15g}  tail_coeff = {prof.tail_coeff:.10g}  "
          f"ode_residual = {prof.ode_residual:.3e}")
    print(f"wrote {args.out}")
    if args.check_closed_form:
        if args.n != 1:
            raise ConfigError("--check-closed-form needs --n 1")
        dev = float(np.max(np.abs(prof.U - closed_form_1d(args.q, prof.r))))
        ok = dev < 1e-5
        print(f"max deviation from closed form: {dev:.3e} ({'PASS' if ok else 'FAIL'} at 1e-05)")
        return EXIT_OK if ok else EXIT_NUMERIC
    return EXIT_OK


def _pairs(args, explicit):
    if explicit:
        for n, m in explicit:
            if n + m < 4:
                raise ConfigError("N must be >= 4")
        return list(explicit)
    if args.max_N < 4:
        raise ConfigError("N must be >= 4")
    return pairs_up_to(args.max_N, getattr(args, "min_N", 4))


def cmd_beta_table(args) -> int:
    pairs = _pairs(args, args.pairs)
    rows = beta_table(pairs, _opts(args), args.tol_id, workers=args.workers)
    write_beta_table(rows, args.out, resolved_config(args))
    print(f"{'n':>2} {'m':>2} {'p':>8} {'alpha':>12} {'beta_mn':>13} {'sign':>9} thm61_res")
    failed = False
    for r in rows:
        if r.reason:
            print(f"{r.n:>2} {r.m:>2}  skipped: {r.reason}")
            failed |= r.reason.startswith("SOLVER_FAILED")
            continue
        t = r.thm61_res if r.thm61_res == NOT_APPLICABLE else f"{r.thm61_res:.2e}"
        print(f"{r.n:>2} {r.m:>2} {r.p:8.5f} {r.alpha:12.6f} {r.beta_mn:13.6f} {r.sign:>9} {t}")
    print(f"wrote {args.out}")
    return EXIT_NUMERIC if failed else EXIT_OK


def cmd_identities(args) -> int:
    pairs = _pairs(args, args.pair)
    opts = _opts(args)
    report, all_ok = [], True
    for n, m in pairs:
        dims = ProblemDims(n, m)
        if not dims.is_subcritical():
            print(f"({n},{m}) skipped: SUPERCRITICAL")
            continue
        prof = solve_radial_ground_state(n, dims.p, opts, dims=dims)
        ms = compute_moments(prof, dims)
        br = alpha_beta(ms, dims)
        rep = verify_identities(ms, dims, args.tol_id)
        print(f"({n},{m})  beta_mn = {br.beta_mn:.8g} ({br.sign})")
        for name, ok in rep.passed.items():
            val = getattr(rep, f"{name}_res")
            shown = val if val == NOT_APPLICABLE else f"{val:.3e}"
            print(f"    {name:<10} {shown:>14}  {'PASS' if ok else 'FAIL'}")
        all_ok &= rep.all_passed
        report.append({"n": n, "m": m, "beta_mn": br.beta_mn, "sign": br.sign,
                       "residuals": {k: getattr(rep, f"{k}_res") for k in rep.passed},
                       "pass": rep.passed})
    write_json(args.out, {"pairs": report, "tol_id": args.tol_id, "config": resolved_config(args)})
    print(f"wrote {args.out}")
    return EXIT_OK if all_ok else EXIT_NUMERIC


def _metric_spec(args):
    from .reduction_sim import Bump, MetricSpec, TrigMode

    if args.flat:
        return MetricSpec()
    bumps = tuple(Bump(*b) for b in args.bump)
    modes = tuple(TrigMode(a, int(kx), int(ky)) for a, kx, ky in args.mode)
    offset = 0.0
    if args.lift_to_zero:
        from .reduction_sim import build_torus_metric

        raw = build_torus_metric(args.nx, args.ny, args.L1, args.L2, MetricSpec(bumps, modes))
        offset = -raw.max_f
    return MetricSpec(bumps, modes, offset)


def cmd_reduce_sim(args) -> int:
    from .reduction_sim import (
        EpsNormContext,
        F_eps_scan,
        build_torus_metric,
        order_check,
    )

    if not args.no_scan and args.coarse < 8:
        raise ConfigError("--coarse must be at least 8")
    spec = _metric_spec(args)
    metric = build_torus_metric(args.nx, args.ny, args.L1, args.L2, spec)
    eps_list = tuple(sorted(args.eps, reverse=True))
    for e in eps_list:
        EpsNormContext(metric, e).check_resolution()
    if args.base_point:
        if len(args.base_point) != 2:
            raise ConfigError("--base-point needs ix,iy")
        x = tuple(args.base_point)
    elif spec.bumps:
        b = spec.bumps[0]
        x = (round(b.cx / metric.h1), round(b.cy / metric.h2))
    else:
        x = (args.nx // 2, args.ny // 2)
    prof = solve_radial_ground_state(2, 4.0)
    dims = ProblemDims(2, 2)
    ab = alpha_beta(compute_moments(prof, dims), dims)
    rep = order_check(metric, x, prof, eps_list, r_cut=args.r_cut, tol_fp=args.tol_fp,
                      max_iter=args.max_iter, coercivity_samples=args.coercivity_samples,
                      seed=args.seed)
    out = Path(args.out)
    cfg = resolved_config(args)
    checks = {}
    print(f"alpha = {ab.alpha:.10g}  beta_22 = {ab.beta_mn:.10g}  |psi|^2_H1 = "
          f"{rep.limits['psi_h1_sq']:.8g}")
    print(f"{'eps':>9} {'|S(U)|':>10} {'|dS W1|':>10} {'|phi|':>10} {'end2':>9} {'end1':>9} "
          f"{'<W1,W2>':>9} {'ratio':>6} {'coerc':>6}")
    for r in rep.records:
        print(f"{r.eps:9.5f} {r.S_norm:10.3e} {r.dS_W1_norm:10.3e} {r.phi_norm:10.3e} "
              f"{r.end2:9.4f} {r.end1:9.3e} {r.w_offdiag:9.2e} {r.contraction_ratio:6.3f} "
              f"{r.coercivity:6.3f}")
    print("slopes: " + "  ".join(f"{k} = {v:.3f}" for k, v in rep.slopes.items()))
    if not metric.spec.is_flat:
        checks["slope_S"] = rep.slopes["S_norm"] >= 1.7
        checks["slope_phi"] = rep.slopes["phi_norm"] >= 1.7
    last = rep.records[-1]
    checks["end2_5pct"] = abs(abs(last.end2) / rep.limits["psi_h1_sq"] - 1) <= 0.05
    checks["W_orth"] = last.w_offdiag < 0.05
    write_field(metric.field(metric.s_g), out / "s_g.csv", cfg)
    scans = []
    if not args.no_scan:
        scan_eps = args.scan_eps or eps_list[-2:]
        for e in sorted(scan_eps, reverse=True):
            ctx = EpsNormContext(metric, e)
            sc = F_eps_scan(ctx, prof, (args.coarse, args.coarse), tol_fp=args.tol_fp,
                            max_iter=args.max_iter, r_cut=args.r_cut)
            tag = f"eps_{e:.6f}"
            write_field(sc.F, out / f"F_{tag}.csv", cfg, {"eps": e})
            entry = {"eps": e, "failures": [list(f) for f in sc.failures],
                     "spread": sc.spread(), "argmin_F": sc.F.argmin(),
                     "argmax_s_g": sc.s_g.argmax(), "phi_norm_max": float(np.nanmax(sc.phi_norm))}
            if sc.complete:
                cps = sc.extrema()
                write_critical_points(cps, out / f"critical_{tag}.csv", cfg)
                entry["extrema"] = cps.counts()
            if metric.spec.is_flat:
                ok = sc.spread() < 1e-6
                checks[f"F_constant_{tag}"] = ok
                print(f"eps = {e:.5f}: F_eps constant: {'PASS' if ok else 'FAIL'} "
                      f"(relative spread {sc.spread():.2e})")
            else:
                corr = sc.correlation(ab.alpha, ab.beta_mn)
                (ax, ay), (bx, by) = sc.F.argmin(), sc.s_g.argmax()
                dist = max(min(abs(ax - bx), args.coarse - abs(ax - bx)),
                           min(abs(ay - by), args.coarse - abs(ay - by)))
                entry.update(correlation=corr, argmin_cell_distance=dist)
                checks[f"concentration_{tag}"] = dist <= 1
                print(f"eps = {e:.5f}: argmin F = {sc.F.argmin()}  argmax s_g = {sc.s_g.argmax()}  "
                      f"corr = {corr:.5f}")
            scans.append(entry)
        if not metric.spec.is_flat and scans:
            checks["correlation"] = abs(scans[-1]["correlation"]) >= 0.99
    payload = rep.as_dict()
    for r in payload["records"]:
        r.pop("seconds", None)
    payload.update(alpha=ab.alpha, beta_mn=ab.beta_mn, scans=scans, checks=checks,
                   metric={"spec": spec.as_dict(), "max_f": metric.max_f,
                           "gauss_bonnet": metric.gauss_bonnet(),
                           "sg_consistency": metric.sg_consistency()},
                   config=cfg)
    write_json(out / "report.json", payload)
    for k, ok in checks.items():
        print(f"check {k}: {'PASS' if ok else 'FAIL'}")
    print(f"wrote {out / 'report.json'}")
    if args.strict and not all(checks.values()):
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_predict(args) -> int:
    field = read_field(args.field)
    if args.genus is not None:
        topo = SurfaceTopology.of_genus(args.genus)
    else:
        topo = SurfaceTopology(Topology(args.topology.upper()))
    alpha, beta = args.alpha, args.beta
    if alpha is None or beta is None:
        prof = solve_radial_ground_state(2, 4.0)
        dims = ProblemDims(2, 2)
        ab = alpha_beta(compute_moments(prof, dims), dims)
        alpha = ab.alpha if alpha is None else alpha
        beta = ab.beta_mn if beta is None else beta
    F = predict_F(field, args.eps, alpha, beta)
    cps = critical_points(F)
    cat, betti = multiplicity_bounds(topo)
    out = Path(args.out)
    cfg = resolved_config(args)
    write_field(F, out / "F_pred.csv", cfg, {"eps": args.eps, "alpha": alpha, "beta_mn": beta})
    write_critical_points(cps, out / "critical_points.csv", cfg)
    counts = cps.counts()
    print(f"topology {topo.kind.value} genus {topo.genus}: cat = {cat}, betti_sum = {betti}")
    print("critical points: " + ", ".join(f"{k} {v}" for k, v in counts.items()))
    if counts[CritType.DEGENERATE.value] == len(cps) and len(cps) > 0:
        print("warning: all critical points are DEGENERATE")
    nondeg = len(cps.nondegenerate)
    print(f"nondegenerate critical points: {nondeg} (lower bound {betti})")
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
