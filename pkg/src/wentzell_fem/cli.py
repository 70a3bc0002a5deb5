"""Command-line front end: ``python -m wentzell_fem <subcommand> [flags]``.

Every subcommand writes a CSV (``--out``, default stdout is left for the
summary) and prints a short summary. Exit status 2 means invalid flags, 1 a
numerical failure such as a singular system near the spectrum.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from pathlib import Path

import numpy as np

from . import assembly, disk_oracle, evolution, linsolve, mesh as mesh_mod, resolvent

SUBCOMMANDS = ("mesh-info", "constants", "solve-elliptic", "evolve", "spectrum", "dispersion", "l-limit")


class ConfigError(ValueError):
    """Invalid configuration; ``flag`` names the offending option."""

    def __init__(self, flag: str, message: str):
        self.flag = flag
        super().__init__(f"--{flag}: {message}")


def _add_mesh(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--rings", type=int, default=None, help="structured unit-disk mesh with this many rings")
    g.add_argument("--mesh", type=Path, default=None, help="mesh file in the text format")


def _add_kl(p):
    p.add_argument("--k", type=float, default=None)
    p.add_argument("--l", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wentzell_fem", description=__doc__.splitlines()[0])
    parser.add_argument("--config", type=Path, help="flat key=value file; flags on the command line win")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("mesh-info", help="mesh statistics")
    _add_mesh(p)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("constants", help="explicit coercivity constants")
    _add_kl(p)
    p.add_argument("--c8", type=float, default=1.0)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("solve-elliptic", help="resolvent problem (lambda A + B) u = A h")
    _add_kl(p)
    _add_mesh(p)
    p.add_argument("--lambda", dest="lam", type=complex, default=None)
    p.add_argument("--u0", default="gaussian", help="right-hand side h: constant, gaussian or mode<n>")
    p.add_argument("--out", type=Path)

    p = sub.add_parser("evolve", help="theta-scheme evolution")
    _add_kl(p)
    _add_mesh(p)
    p.add_argument("--tau", type=float, default=1e-3)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=1.0)
    p.add_argument("--u0", default="gaussian")
    p.add_argument("--out", type=Path)

    p = sub.add_parser("spectrum", help="generalized eigenvalues of the pencil (dense QZ)")
    _add_kl(p)
    _add_mesh(p)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("dispersion", help="unit-disk dispersion roots")
    _add_kl(p)
    p.add_argument("--n-max", dest="n_max", type=int, default=5)
    p.add_argument("--mu-max", dest="mu_max", type=float, default=20.0)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("l-limit", help="peak H1(Omega) norm as l decreases")
    p.add_argument("--k", type=float, default=None)
    p.add_argument("--l-list", dest="l_list", default="0.8,0.4,0.2,0.1")
    _add_mesh(p)
    p.add_argument("--tau", type=float, default=1e-3)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=1.0)
    p.add_argument("--u0", default="gaussian")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path)
    return parser


def read_config(path: Path) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError("config", f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def _apply_config(parser, argv):
    """Re-parse with config values injected as defaults of the chosen subparser."""
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    values = read_config(args.config)
    subparser = parser._subparsers._group_actions[0].choices[args.subcommand]
    known = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, raw in values.items():
        dest = {"lambda": "lam"}.get(key, key)
        if dest not in known:
            raise ConfigError(key, f"unknown key in {args.config} for {args.subcommand}")
        action = known[dest]
        try:
            defaults[dest] = action.type(raw) if action.type else raw
        except ValueError:
            raise ConfigError(key, f"invalid value {raw!r}") from None
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def validate(args) -> None:
    """Domain checks performed before any computation."""
    cmd = args.subcommand
    if cmd in ("constants", "solve-elliptic", "evolve", "spectrum", "dispersion", "l-limit"):
        if args.k is None:
            raise ConfigError("k", "k is required")
        if not math.isfinite(args.k) or args.k == 0:
            raise ConfigError("k", "k must be nonzero")
    if cmd in ("constants", "solve-elliptic", "evolve", "spectrum", "dispersion"):
        if args.l is None:
            raise ConfigError("l", "l is required")
        if not (math.isfinite(args.l) and args.l > 0):
            raise ConfigError("l", "l must be positive")
    if cmd == "constants" and not (math.isfinite(args.c8) and args.c8 > 0):
        raise ConfigError("c8", "c8 must be positive")
    if cmd in ("evolve", "l-limit"):
        if not (math.isfinite(args.tau) and args.tau > 0):
            raise ConfigError("tau", "tau must be positive")
        if not (0.5 <= args.theta <= 1.0):
            raise ConfigError("theta", "theta must lie in [0.5, 1]")
        if not args.T >= args.tau:
            raise ConfigError("T", "T must be at least tau")
    if cmd in ("mesh-info", "solve-elliptic", "evolve", "spectrum", "l-limit"):
        if args.mesh is None and args.rings is None:
            args.rings = 8
        if args.rings is not None and args.rings < 1:
            raise ConfigError("rings", "rings must be a positive integer")
    if cmd in ("solve-elliptic", "evolve", "l-limit"):
        if not (args.u0 in ("constant", "gaussian") or (args.u0.startswith("mode") and args.u0[4:].isdigit())):
            raise ConfigError("u0", "u0 must be constant, gaussian or mode<n>")
    if cmd == "solve-elliptic" and args.lam is None:
        raise ConfigError("lambda", "lambda is required")
    if cmd == "dispersion":
        if args.n_max < 0:
            raise ConfigError("n-max", "n-max must be nonnegative")
        if not args.mu_max > 0:
            raise ConfigError("mu-max", "mu-max must be positive")
    if cmd == "l-limit":
        try:
            args.l_values = [float(s) for s in args.l_list.split(",") if s.strip()]
        except ValueError:
            raise ConfigError("l-list", "expected comma-separated numbers") from None
        if not args.l_values or any(not l > 0 for l in args.l_values):
            raise ConfigError("l-list", "all l values must be positive")
        if any(b >= a for a, b in zip(args.l_values, args.l_values[1:])):
            raise ConfigError("l-list", "l values must be strictly decreasing")
        if args.k <= 0:
            raise ConfigError("k", "l-limit needs k > 0 (reactive case)")
        if args.workers < 1:
            raise ConfigError("workers", "workers must be >= 1")


def _load_mesh(args):
    if args.mesh is not None:
        try:
            text = args.mesh.read_text()
        except OSError as exc:
            raise ConfigError("mesh", str(exc)) from None
        try:
            return mesh_mod.load_mesh_text(text)
        except mesh_mod.MeshError as exc:
            raise ConfigError("mesh", str(exc)) from None
    return mesh_mod.build_disk_mesh(args.rings)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([f"{x:.17g}" if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def dispatch(args, stdout=None) -> str:
    """Run one subcommand; returns the CSV text (also written to ``--out`` if given)."""
    cmd = args.subcommand
    lines: list[str] = []

    if cmd == "constants":
        rep = resolvent.constants_report(args.k, args.l, args.c8)
        text = rep.to_csv()
        lines.append(
            f"C6={rep.C6:.17g} delta0={rep.delta0:.6g} lambda0={rep.lambda0:.17g} C5={rep.C5:.17g}"
        )
        lines.append(rep.to_text().rstrip())
        lines.append("(lambda0 is an upper-bound template; C8 is a configured domain constant)")

    elif cmd == "dispersion":
        roots = disk_oracle.dispersion_roots(args.k, args.l, args.n_max, args.mu_max)
        text = disk_oracle.dispersion_table_csv(roots)
        grow = [r for r in roots if r.branch == "growing"]
        lines.append(f"{len(roots)} roots, {len(grow)} growing")
        for r in grow:
            lines.append(f"  n={r.n} sigma={r.sigma:.12g}")

    else:
        mesh = _load_mesh(args)
        trace = mesh_mod.trace_map(mesh)
        if cmd == "mesh-info":
            stats = [
                ("nodes", mesh.n_nodes),
                ("triangles", mesh.n_triangles),
                ("boundary_nodes", mesh.n_boundary),
                ("h", mesh.h()),
                ("area", mesh.area()),
                ("perimeter", trace.perimeter()),
            ]
            text = _csv(["key", "value"], stats)
            lines += [f"{k} = {v:.17g}" if isinstance(v, float) else f"{k} = {v}" for k, v in stats]

        elif cmd == "solve-elliptic":
            pencil = assembly.build_pencil(mesh, trace, args.k, args.l)
            h = evolution.initial_data(args.u0, mesh)
            lam = args.lam if args.lam.imag != 0 else args.lam.real
            sol = resolvent.solve_resolvent(pencil, lam, h)
            u = np.asarray(sol.u, dtype=complex)
            text = _csv(
                ["node", "x", "y", "re_u", "im_u"],
                ((i, float(x), float(y), float(v.real), float(v.imag)) for i, ((x, y), v) in enumerate(zip(mesh.nodes, u))),
            )
            lines.append(f"lambda={args.lam} residual_bulk={sol.residual_bulk:.3e} residual_boundary={sol.residual_boundary:.3e}")
            lines.append(f"max|u|={np.abs(u).max():.6g}")

        elif cmd == "evolve":
            pencil = assembly.build_pencil(mesh, trace, args.k, args.l)
            u0 = evolution.initial_data(args.u0, mesh)
            ts = evolution.evolve(pencil, u0, args.tau, args.T, args.theta)
            text = ts.to_csv()
            lines.append(f"steps={len(ts.times) - 1} t_end={ts.times[-1]:.6g}")
            lines.append(f"norm_H: {ts.norm_H[0]:.6g} -> {ts.norm_H[-1]:.6g} (max {ts.norm_H.max():.6g})")
            drift = np.abs(ts.conserved - ts.conserved[0]).max()
            lines.append(f"conserved quantity drift {drift:.3e}")

        elif cmd == "spectrum":
            pencil = assembly.build_pencil(mesh, trace, args.k, args.l)
            rep = linsolve.pencil_spectrum(pencil)
            text = rep.to_csv()
            lines.append(f"dimension={rep.dimension} finite={len(rep.eigenvalues)} infinite={rep.n_infinite}")
            lines.append(f"sigma_max={rep.sigma_max:.12g} max residual={np.nanmax(rep.residuals):.3e}")
            nonreal = int((np.abs(rep.eigenvalues.imag) > 1e-8 * np.maximum(np.abs(rep.eigenvalues), 1)).sum())
            lines.append(f"non-real eigenvalues: {nonreal}")

        elif cmd == "l-limit":
            u0 = evolution.initial_data(args.u0, mesh)
            rows = evolution.l_limit_experiment(
                args.k, args.l_values, u0, args.tau, args.T, mesh, args.theta, args.workers
            )
            text = evolution.l_limit_csv(rows)
            for r in rows:
                lines.append(f"l={r.l:g} peak_H1={r.peak_norm_H1:.6g} k^2/(4l)={r.predicted_sigma_max:.6g}")
        else:  # pragma: no cover - argparse restricts choices
            raise ConfigError("subcommand", f"unknown subcommand {cmd}")

    if args.out is not None:
        args.out.write_text(text)
        lines.append(f"wrote {args.out}")
    print("\n".join(lines), file=stdout or sys.stdout)
    return text


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        validate(args)
        dispatch(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (resolvent.NearSpectrumError, evolution.StepSizeError, linsolve.SingularMatrixError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    except linsolve.DimensionTooLargeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
