"""Command-line entry point: ``slaglab <subcommand> [options]``.

Exit codes: 0 when every evaluated check passes, 1 when some check fails,
2 for malformed input or configuration, 3 for an alpha above the ceiling,
4 for any other numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import Config
from .errors import AlphaTooLarge, ConfigError, SlagError

log = logging.getLogger("slaglab")

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_ALPHA, EXIT_NUMERIC = 0, 1, 2, 3, 4


class InputError(Exception):
    pass


# --- helpers ----------------------------------------------------------------

def _config(args) -> Config:
    cfg = Config.load(args.config) if getattr(args, "config", None) else Config()
    over = {"quad_tol": getattr(args, "quad_tol", None),
            "mesh_level": getattr(args, "mesh_level", None)}
    if getattr(args, "alphas", None):
        over["alphas"] = tuple(args.alphas)
    try:
        return cfg.with_overrides(**over)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _alpha(args, cfg: Config) -> float:
    return float(args.alpha) if args.alpha is not None else float(cfg.alphas[1 % len(cfg.alphas)])


def _emit(args, payload: dict, text: str) -> None:
    from .pipeline import to_json
    print(to_json(payload) if args.json else text)


def _out_dir(args) -> Path | None:
    if getattr(args, "out_dir", None):
        p = Path(args.out_dir)
        p.mkdir(parents=True, exist_ok=True)
        return p
    return None


def _read_json(path: str):
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {path}: line {exc.lineno} column {exc.colno}: "
                         f"{exc.msg}") from exc


def _status_code(checks) -> int:
    return EXIT_OK if all(c.passed for c in checks if c.evaluated) else EXIT_FAIL


# --- subcommands --------------------------------------------------------------

def cmd_angles(args) -> int:
    """Characteristic angles of a plane pair given as {"p1": (2n, n), "p2": (2n, n)}."""
    from .symplectic import angle_criterion, characteristic_angles

    data = _read_json(args.input)
    if not isinstance(data, dict) or "p1" not in data or "p2" not in data:
        raise InputError('expected an object with keys "p1" and "p2" (real 2n x n bases)')
    try:
        p1 = np.asarray(data["p1"], dtype=float)
        p2 = np.asarray(data["p2"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"plane bases must be numeric matrices: {exc}") from exc
    if p1.ndim != 2 or p2.ndim != 2:
        raise InputError("plane bases must be 2-d arrays")
    pair = characteristic_angles(p1, p2)
    special, crit = angle_criterion(pair.angles)
    payload = {"angles": pair.angles.tolist(), "sum": float(pair.angles.sum()),
               "sum_over_pi": float(pair.angles.sum() / np.pi), "reversed": pair.reversed,
               "special": special, "criterion": crit}
    text = "\n".join([
        "angles: " + ", ".join(f"{t:.12f}" for t in pair.angles),
        f"sum:    {payload['sum']:.12f} ({payload['sum_over_pi']:.9f} pi)",
        f"union special Lagrangian: {special}",
        f"neck criterion (sum = pi): {crit}",
    ])
    _emit(args, payload, text)
    return EXIT_OK


def cmd_neck(args) -> int:
    from .lawlor import get_neck
    from .pipeline import format_table, measure_neck, neck_checks

    cfg = _config(args)
    neck = get_neck(cfg.a, cfg.quad_tol)
    nm = measure_neck(cfg)
    checks = neck_checks(nm, cfg.n)
    info = {"a": list(cfg.a), "A": neck.A, "R0": neck.R0, "theta_inf": neck.theta_inf.tolist(),
            "plane_angles": neck.plane_angles().tolist(), "quad_tol": cfg.quad_tol,
            "tail_error": float(np.max(neck.table["error"]))}
    out = _out_dir(args)
    if out is not None:
        (out / "neck.json").write_text(json.dumps({**info, "table": neck.table}, indent=2,
                                                  default=lambda o: np.asarray(o).tolist()))
    payload = {"neck": info, "measurements": nm,
               "checks": [c.__dict__ for c in checks]}
    text = "\n".join([f"a = {info['a']}, A = {neck.A:.6g}, R0 = {neck.R0:.12g}",
                      "plane angles: " + ", ".join(f"{t:.12f}" for t in info["plane_angles"]),
                      "", format_table(checks, only_present=True)])
    _emit(args, payload, text)
    return _status_code(checks)


def surface_description(cfg: Config, S) -> dict:
    from .cache import cache_dir, _key
    p = S.params
    ref = {"a": list(cfg.a), "quad_tol": cfg.quad_tol, "key": _key(cfg.a, cfg.quad_tol),
           "cache_dir": str(cache_dir()) if cache_dir() else None}
    return {"config": cfg.to_dict(), "config_hash": cfg.hash,
            "params": {"alpha": p.alpha, "K": p.K, "C0": p.C0, "R0": p.R0, "n": p.n,
                       "delta": p.delta, "eps": p.eps},
            "planes": [B.tolist() for B in S.planes], "orientation_signs": list(S.signs),
            "neck_cache": ref,
            "pieces": [pc.cubic.tolist() for pc in S.pieces]}


def cmd_build(args) -> int:
    from .pipeline import make_surface

    cfg = _config(args)
    S = make_surface(cfg, _alpha(args, cfg))
    desc = surface_description(cfg, S)
    out = _out_dir(args)
    if out is not None:
        (out / "surface.json").write_text(json.dumps(desc, indent=2, sort_keys=True))
    p = desc["params"]
    text = (f"alpha = {p['alpha']:g}  delta = {p['delta']:.6g}  eps = {p['eps']:.6g}  "
            f"K = {p['K']:.6g}  C0 = {p['C0']:.6g}  R0 = {p['R0']:.6g}")
    _emit(args, desc, text)
    return EXIT_OK


def _report_and_exit(args, report) -> int:
    from .pipeline import format_table, write_report
    out = _out_dir(args)
    if out is not None:
        write_report(report, out)
    _emit(args, report.to_dict(), format_table(report.checks))
    return _status_code(report.checks)


def _run(args, cfg, alphas) -> int:
    from .pipeline import run

    def progress(a, row):
        log.info("alpha = %g done in %.1f s", a, row["seconds"])

    try:
        report = run(cfg, alphas, spectral=not args.no_spectral, jobs=args.jobs,
                     progress=progress)
    except Exception as exc:
        partial = getattr(exc, "partial_report", None)
        out = _out_dir(args)
        if partial is not None and out is not None:
            from .pipeline import write_report
            write_report(partial, out, figures=False)
            log.error("partial results written to %s", out)
        raise
    return _report_and_exit(args, report)


def cmd_verify(args) -> int:
    cfg = _config(args)
    return _run(args, cfg, [_alpha(args, cfg)])


def cmd_sweep(args) -> int:
    cfg = _config(args)
    alphas = list(cfg.alphas)
    if len(alphas) < 3:
        log.warning("fewer than three alphas: slope checks are reported as insufficient points")
    return _run(args, cfg, alphas)


def cmd_spectrum(args) -> int:
    from .pipeline import make_surface, mesh_config
    from .spectral import GluedSpectrum

    cfg = _config(args)
    S = make_surface(cfg, _alpha(args, cfg))
    sp = GluedSpectrum(S, mesh_config(cfg))
    f = sp.fields()
    payload = {"alpha": S.params.alpha, "eigenvalues": sp.nu.tolist(),
               "backward_errors": sp.eig.residuals.tolist(), "nodes": len(sp.mesh.points),
               "sigma_pairing": f.sigma_pairing}
    out = _out_dir(args)
    if out is not None:
        write_spectrum(out, sp, f)
    text = "\n".join([f"alpha = {S.params.alpha:g}, {len(sp.mesh.points)} nodes"]
                     + [f"nu_{j} = {v:.12g}" for j, v in enumerate(sp.nu)])
    _emit(args, payload, text)
    return EXIT_OK


def write_spectrum(out: Path, sp, f) -> None:
    """eigenvalues.csv, fields.csv (one row per node id) and mesh.json."""
    mesh = sp.mesh
    with open(out / "eigenvalues.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "nu", "backward_error"])
        for j, (v, r) in enumerate(zip(sp.nu, sp.eig.residuals)):
            w.writerow([j, repr(float(v)), repr(float(r))])
    d = mesh.points.shape[1]
    with open(out / "fields.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node", "side", "zone"] + [f"p{i}" for i in range(d)]
                   + ["S", "S_bar", "sigma", "psi0", "psi1", "v_e"]
                   + [f"u{j}" for j in range(sp.eig.vectors.shape[1])])
        cols = np.column_stack([mesh.points, f.S, f.S_bar, f.sigma, f.psi0, f.psi1, f.v_e,
                                sp.eig.vectors])
        lab = mesh.labels
        for i in range(len(mesh.points)):
            w.writerow([i, int(lab["side"][i]), lab["zone"][i]] + [repr(float(v)) for v in cols[i]])
    mesh_json = {
        "schema": 1,
        "description": "nodes: ambient coordinates in R^{2n}; cells: tetrahedra as node ids; "
                       "boundary: triangles as node ids; boundary_side: 1 or 2 per triangle",
        "nodes": mesh.points.tolist(),
        "cells": mesh.cells.tolist(),
        "boundary": mesh.boundary.tolist(),
        "boundary_side": np.asarray(mesh.labels["boundary_side"]).tolist(),
        "node_side": np.asarray(mesh.labels["side"]).tolist(),
    }
    (out / "mesh.json").write_text(json.dumps(mesh_json))


def cmd_report(args) -> int:
    from .pipeline import Check, format_table

    path = Path(args.path)
    if path.is_dir():
        path = path / "report.json"
    data = _read_json(str(path))
    try:
        checks = [Check(**c) for c in data["checks"]]
    except (KeyError, TypeError) as exc:
        raise InputError(f"{path} is not a sweep report: {exc}") from exc
    _emit(args, data, format_table(checks))
    return _status_code(checks)


# --- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="slaglab", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, alpha=False, alphas=False, mesh=False):
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--quad-tol", type=float, help="quadrature tolerance for the neck")
        sp.add_argument("--out-dir", help="directory for CSV/JSON/SVG outputs")
        sp.add_argument("--json", action="store_true", help="print JSON instead of a table")
        if alpha:
            sp.add_argument("--alpha", type=float, help="gluing parameter")
        if alphas:
            sp.add_argument("--alphas", type=float, nargs="+", help="gluing parameters")
        if mesh:
            sp.add_argument("--mesh-level", type=int, help="icosphere refinement level")

    a = sub.add_parser("angles", help="characteristic angles of a Lagrangian plane pair")
    a.add_argument("input", help="plane-pair JSON file, or - for stdin")
    a.add_argument("--json", action="store_true")
    a.set_defaults(func=cmd_angles)

    n = sub.add_parser("neck", help="tabulate the neck and run its checks")
    common(n)
    n.set_defaults(func=cmd_neck)

    b = sub.add_parser("build", help="build the glued surface for one alpha")
    common(b, alpha=True)
    b.set_defaults(func=cmd_build)

    for name, fn, hlp in (("verify", cmd_verify, "all checks at one alpha"),
                          ("sweep", cmd_sweep, "all checks over an alpha sweep")):
        s = sub.add_parser(name, help=hlp)
        common(s, alpha=(name == "verify"), alphas=(name == "sweep"), mesh=True)
        s.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
        s.add_argument("--no-spectral", action="store_true", help="skip the eigenproblem")
        s.set_defaults(func=fn)

    s = sub.add_parser("spectrum", help="Neumann eigenpairs and fields at one alpha")
    common(s, alpha=True, mesh=True)
    s.set_defaults(func=cmd_spectrum)

    r = sub.add_parser("report", help="re-print a saved sweep report")
    r.add_argument("path", help="report.json or the directory holding it")
    r.add_argument("--json", action="store_true")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (InputError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AlphaTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ALPHA
    except SlagError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
