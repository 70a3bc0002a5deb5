"""Manufactured-solution convergence of the resolvent solve and comparison with the radial FD oracle."""
import argparse
import math

import numpy as np

from wentzell_fem import assemble_bulk, build_disk_mesh, build_pencil, solve_resolvent, trace_map
from wentzell_fem.disk_oracle import radial_resolvent_fd


def l2(M, v):
    return math.sqrt(v @ (M @ v))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=2, help="angular index of the harmonic solution r^n cos(n theta)")
    ap.add_argument("--l", type=float, default=0.5)
    ap.add_argument("--lam", type=float, default=5.0)
    ap.add_argument("--rings", type=int, nargs="+", default=[4, 8, 16, 32])
    args = ap.parse_args()
    k = args.l * args.n  # makes r^n cos(n theta) satisfy the boundary equation

    print("rings,h,l2_error,order,radial_fd_rel_l2")
    prev = None
    for rings in args.rings:
        mesh = build_disk_mesh(rings)
        tr = trace_map(mesh)
        M, _ = assemble_bulk(mesh)
        x, y = mesh.nodes.T
        r, th = np.hypot(x, y), np.arctan2(y, x)
        exact = r**args.n * np.cos(args.n * th)
        u = solve_resolvent(build_pencil(mesh, tr, k, args.l), args.lam, args.lam * exact).u
        err = l2(M, u - exact)
        order = math.log2(prev / err) if prev else float("nan")
        prev = err

        H = lambda s: np.exp(-2 * s**2)
        ua = solve_resolvent(build_pencil(mesh, tr, 1.0, 1.0), args.lam, H(r)).u
        ref = radial_resolvent_fd(0, args.lam, 1.0, 1.0, H)(r)
        print(f"{rings},{mesh.h():.4f},{err:.4e},{order:.3f},{l2(M, ua - ref) / l2(M, ref):.3e}")


if __name__ == "__main__":
    main()
