"""Command line entry point: ``lamegap {solve,sweep,fit,bstar,check,export}``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import io
from .asymptotics import (blow_up_predicate, estimate_bstar, fit_smallest,
                          profile_check, run_sweep, solve_single)
from .config import FORMATS, RunConfig, check_eps, load_config
from .errors import (AssemblyError, ConfigError, ContractError, GeometryError,
                     LamegapError, MeshQualityError, SolverError)

log = logging.getLogger("lamegap")

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3
FIT_QUANTITIES = ("max_grad_segment", "a_11", "a_22")


class _Fail(Exception):
    def __init__(self, code, msg):
        super().__init__(msg)
        self.code = code


def _config(args) -> RunConfig:
    if not args.config:
        raise _Fail(EXIT_INVALID, "--config is required")
    return load_config(args.config)


def _formats(args, cfg):
    if getattr(args, "format", None):
        return [f.strip() for f in args.format.split(",")]
    return list(cfg.output.formats)


def _eps_tag(eps):
    return f"{eps:.6g}".replace(".", "p")


def cmd_solve(args):
    cfg = _config(args)
    eps = check_eps(args.eps) if args.eps is not None else cfg.geometry.eps
    out = args.out or cfg.output.directory
    params = cfg.sweep_params()
    rec = solve_single(params, eps)
    files = [io.write_json(rec, os.path.join(out, f"result_eps{_eps_tag(eps)}.json"))]
    if "vtk" in _formats(args, cfg):
        files.append(_export_field(cfg, eps, "vtk", out))
    io.write_manifest(out, cfg, files)
    print(f"eps={eps:g} max_grad_segment={rec['max_grad_segment']:.6g} "
          f"C={np.round(rec['C'], 8).tolist()}")
    return EXIT_OK


def _run_sweep(cfg, jobs):
    params = cfg.sweep_params()
    return run_sweep(params, cfg.sweep.eps, jobs=jobs)


def cmd_sweep(args):
    cfg = _config(args)
    out = args.out or cfg.output.directory
    jobs = args.jobs or cfg.sweep.jobs
    res = _run_sweep(cfg, jobs)
    for f in res.failures:
        print(f"row eps={f['eps']:g} failed: {f['error']}", file=sys.stderr)
    if len(res.records) < 3:
        raise _Fail(EXIT_NUMERIC, f"only {len(res.records)} valid rows")
    files = [io.write_sweep_csv(res.rows, os.path.join(out, "sweep.csv"))]
    for rec in res.records:
        files.append(io.write_json(
            rec, os.path.join(out, "rows", f"eps{_eps_tag(rec['eps'])}.json")))
    n = min(cfg.sweep.fit_points, len(res.records))
    fmts = _formats(args, cfg)
    for q in FIT_QUANTITIES:
        fit = res.fit(q, n=n)
        files.append(io.write_json(fit.to_dict(),
                                   os.path.join(out, f"fit_{q}.json")))
        if "svg" in fmts:
            files.append(io.svg_loglog(os.path.join(out, f"fit_{q}.svg"),
                                       res.eps, res.column(q), fit,
                                       title=q, ylabel=q))
    files.append(io.write_json(profile_check(res.records),
                               os.path.join(out, "profile_check.json")))
    if res.failures:
        files.append(io.write_json(res.failures,
                                   os.path.join(out, "failures.json")))
    io.write_manifest(out, cfg, files)
    for q in FIT_QUANTITIES:
        fit = res.fit(q, n=n)
        print(f"{q}: slope {fit.slope:.4f} (r2 {fit.r_squared:.4f})")
    return EXIT_OK


def cmd_fit(args):
    cols = _read_csv(args.csv)
    q = args.quantity
    if q not in cols:
        raise _Fail(EXIT_INVALID, f"unknown column {q!r}; "
                                  f"available: {', '.join(cols)}")
    eps = cols["eps"]
    ys = np.abs(cols[q])
    n = args.points or min(4, len(eps))
    if len(eps) < 3:
        raise _Fail(EXIT_INVALID, "need at least 3 rows to fit")
    try:
        fit = fit_smallest(eps, ys, n=n, model=args.model, quantity=q)
    except ContractError as exc:
        raise _Fail(EXIT_INVALID, str(exc)) from exc
    out = args.out or os.path.dirname(os.path.abspath(args.csv))
    io.write_json(fit.to_dict(), os.path.join(out, f"fit_{q}.json"))
    io.svg_loglog(os.path.join(out, f"fit_{q}.svg"), eps, ys,
                  fit if args.model == "pure" else None, title=q, ylabel=q)
    print(f"{q}: slope {fit.slope:.6f}, intercept {fit.intercept:.6f}, "
          f"r2 {fit.r_squared:.6f} on {len(fit.points)} points "
          f"(model {args.model})")
    return EXIT_OK


def _read_csv(path):
    if not os.path.exists(path):
        raise _Fail(EXIT_INVALID, f"no such file: {path}")
    return io.read_sweep_csv(path)


def cmd_bstar(args):
    src = args.source
    cfg = None
    if args.config:
        cfg = load_config(args.config)
    if src is None or src.endswith(".toml"):
        cfg = load_config(src) if src else _config(args)
        res = _run_sweep(cfg, args.jobs or cfg.sweep.jobs)
        eps = res.eps
        B = np.array([r["b"] for r in res.records])
    else:
        cols = _read_csv(src)
        missing = [c for c in ("eps", "b_1", "b_2", "b_3") if c not in cols]
        if missing:
            raise _Fail(EXIT_INVALID, f"CSV lacks columns {missing}")
        eps = cols["eps"]
        B = np.column_stack([cols["b_1"], cols["b_2"], cols["b_3"]])
        if cfg is None:
            man = os.path.join(os.path.dirname(os.path.abspath(src)),
                               "manifest.json")
            if not os.path.exists(man):
                raise _Fail(EXIT_INVALID, "boundary data unknown: pass "
                                          "--config or keep manifest.json "
                                          "next to the CSV")
            _, cfg = io.read_manifest(man)
    if len(eps) < 3:
        raise _Fail(EXIT_NUMERIC, f"only {len(eps)} rows; need at least 3")
    est = estimate_bstar((eps, B), d=2)
    tol = 3.0 * est.uncertainty
    phi = cfg.phi()
    grad = phi.grad_at_P
    pred = blow_up_predicate(2, est.b_star, grad, tol=np.maximum(tol, 1e-12),
                             grad_tol=1e-12)
    report = est.to_dict()
    report["predicate"] = {"expected": pred.expected,
                           "condition": pred.condition, "k0": pred.k0,
                           **pred.details}
    out = args.out or (os.path.dirname(os.path.abspath(src))
                       if src and not src.endswith(".toml")
                       else cfg.output.directory)
    io.write_json(report, os.path.join(out, "bstar.json"))
    print("b* =", np.array2string(est.b_star, precision=6),
          "+/-", np.array2string(est.uncertainty, precision=2))
    verdict = (f"blow-up expected via condition ({pred.condition}), "
               f"k0={pred.k0}" if pred.expected else "no blow-up condition met")
    print(verdict)
    return EXIT_OK


def cmd_check(args):
    from .verify import run_checks
    cfg = load_config(args.config) if args.config else RunConfig()
    eps = check_eps(args.eps) if args.eps is not None else cfg.geometry.eps
    from .geometry import MaterialParams
    mat = MaterialParams(cfg.material.lam, cfg.material.mu)
    report = run_checks(eps=eps, mat=mat, phi=cfg.phi())
    for name, r in report.items():
        if name != "ok":
            print(f"{'PASS' if r['ok'] else 'FAIL'}  {name}")
    if args.out:
        io.write_json(report, os.path.join(args.out, "checks.json"))
    return EXIT_OK if report["ok"] else EXIT_NUMERIC


def _export_field(cfg, eps, fmt, out):
    from .decomposition import decompose
    from .geometry import MaterialParams, disk_configuration
    from .mesh import build_gap_mesh, refine_uniform
    if fmt not in FORMATS:
        raise _Fail(EXIT_INVALID, f"unknown format {fmt!r}")
    geom = disk_configuration(cfg.geometry.outer_radius,
                              cfg.geometry.inclusion_radius, eps)
    mesh = build_gap_mesh(geom, cfg.grading())
    for _ in range(cfg.discretization.refinements):
        mesh = refine_uniform(mesh)
    tag = _eps_tag(eps)
    if fmt == "svg":
        w = 4 * max(geom.R, 5 * eps)
        return io.svg_mesh(os.path.join(out, f"mesh_eps{tag}.svg"), mesh,
                           window=(-w, w, -0.2 * w, 0.6 * w))
    if fmt == "json":
        rec = solve_single(cfg.sweep_params(), eps)
        return io.write_json(rec, os.path.join(out, f"result_eps{tag}.json"))
    res = decompose(mesh, MaterialParams(cfg.material.lam, cfg.material.mu),
                    geom, cfg.phi())
    if fmt == "vtk":
        return io.write_vtk(os.path.join(out, f"field_eps{tag}.vtk"), mesh,
                            res.u)
    if fmt == "csv":
        return io.field_csv(os.path.join(out, f"field_eps{tag}.csv"), res.u)
    raise AssertionError(fmt)


def cmd_export(args):
    cfg = _config(args)
    eps = check_eps(args.eps) if args.eps is not None else cfg.geometry.eps
    out = args.out or cfg.output.directory
    files = []
    for fmt in _formats(args, cfg):
        files.append(_export_field(cfg, eps, fmt, out))
    io.write_manifest(out, cfg, files)
    for f in files:
        print(f)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="lamegap", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="single-eps pipeline")
    s.add_argument("--config", required=False)
    s.add_argument("--eps", type=float)
    s.add_argument("--out")
    s.add_argument("--format")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("sweep", help="eps sweep with CSV and fits")
    s.add_argument("--config")
    s.add_argument("--jobs", type=int)
    s.add_argument("--out")
    s.add_argument("--format")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("fit", help="log-log rate fit of a CSV column")
    s.add_argument("csv")
    s.add_argument("--quantity", default="max_grad_segment")
    s.add_argument("--model", choices=("pure", "rho"), default="pure")
    s.add_argument("--points", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("bstar", help="limit loads and blow-up verdict")
    s.add_argument("source", nargs="?", help="sweep CSV or config TOML")
    s.add_argument("--config")
    s.add_argument("--jobs", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_bstar)

    s = sub.add_parser("check", help="finite element verification suite")
    s.add_argument("--config")
    s.add_argument("--eps", type=float)
    s.add_argument("--out")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("export", help="write mesh/field files")
    s.add_argument("--config")
    s.add_argument("--eps", type=float)
    s.add_argument("--format", default=None)
    s.add_argument("--out")
    s.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except _Fail as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, ContractError, GeometryError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SolverError, MeshQualityError, AssemblyError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except LamegapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
