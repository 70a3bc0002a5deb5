"""Discrete growth rates per angular mode against the Bessel dispersion roots on the unit disk."""
import argparse
import math

from wentzell_fem import build_disk_mesh, build_pencil, dispersion_roots, pencil_spectrum, trace_map
from wentzell_fem.modes import growth_rates_by_mode


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k", type=float, default=2.0)
    ap.add_argument("--l", type=float, default=0.5)
    ap.add_argument("--rings", type=int, nargs="+", default=[4, 8, 16])
    ap.add_argument("--n-max", type=int, default=4)
    args = ap.parse_args()

    oracle = {r.n: r.sigma for r in dispersion_roots(args.k, args.l, args.n_max) if r.branch == "growing"}
    modes = sorted(oracle)
    print(f"oracle growth rates (k={args.k}, l={args.l}): " + ", ".join(f"n={n}: {oracle[n]:.10f}" for n in modes))
    print("rings,dimension," + ",".join(f"sigma_{n},relerr_{n},order_{n}" for n in modes))
    prev = None
    for rings in args.rings:
        mesh = build_disk_mesh(rings)
        tr = trace_map(mesh)
        rep = pencil_spectrum(build_pencil(mesh, tr, args.k, args.l))
        qz = growth_rates_by_mode(rep, mesh, tr, modes)
        errs = {n: abs(qz.get(n, 0.0) - oracle[n]) / oracle[n] for n in modes}
        cells = []
        for n in modes:
            order = math.log2(prev[n] / errs[n]) if prev and errs[n] > 0 else float("nan")
            cells += [f"{qz.get(n, float('nan')):.10f}", f"{errs[n]:.3e}", f"{order:.2f}"]
        print(f"{rings},{rep.dimension}," + ",".join(cells))
        prev = errs


if __name__ == "__main__":
    main()
