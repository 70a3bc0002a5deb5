"""Theta-scheme time stepping of ``A_mass du/dt = -B_stiff u`` and the small-l experiment."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse.linalg as spla

from .assembly import GramSet, Pencil, assemble_boundary, assemble_bulk, build_pencil, gram_set
from .linsolve import Factorization, SingularMatrixError
from .mesh import Mesh, polar, trace_map
from .resolvent import constants_report


class StepSizeError(SingularMatrixError):
    pass


# --- initial data -----------------------------------------------------------


def constant_data(mesh: Mesh, c: float = 1.0) -> np.ndarray:
    return np.full(mesh.n_nodes, float(c))


def mode_data(mesh: Mesh, n: int) -> np.ndarray:
    """Nodal samples of r^n cos(n theta)."""
    r, th = polar(mesh.nodes)
    return r**n * np.cos(n * th)


def gaussian_data(mesh: Mesh, center=(0.3, 0.0), width: float = 0.2) -> np.ndarray:
    d2 = ((mesh.nodes - np.asarray(center)) ** 2).sum(axis=1)
    return np.exp(-d2 / width**2)


def initial_data(name: str, mesh: Mesh) -> np.ndarray:
    """Built-in data: ``constant``, ``gaussian`` or ``mode<n>`` (e.g. ``mode1``)."""
    if name == "constant":
        return constant_data(mesh)
    if name == "gaussian":
        return gaussian_data(mesh)
    if name.startswith("mode") and name[4:].isdigit():
        return mode_data(mesh, int(name[4:]))
    raise ValueError(f"unknown initial datum {name!r}; use constant, gaussian or mode<n>")


# --- stepping ---------------------------------------------------------------


def _check_step(tau: float, theta: float) -> None:
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if not 0.5 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0.5, 1], got {theta}")


class ThetaStepper:
    """One-step map ``(A + theta tau B) u+ = (A - (1 - theta) tau B) u`` with a cached factorization."""

    def __init__(self, pencil: Pencil, tau: float, theta: float = 1.0):
        _check_step(tau, theta)
        self.pencil, self.tau, self.theta = pencil, float(tau), float(theta)
        A, B = pencil.A_mass, pencil.B_stiff
        self.lhs = (A + (theta * tau) * B).tocsc()
        self.rhs_op = (A - ((1.0 - theta) * tau) * B).tocsr()
        try:
            self._fac = Factorization(self.lhs)
        except SingularMatrixError as exc:
            lam0 = constants_report(pencil.k, pencil.l).lambda0
            raise StepSizeError(
                f"step matrix singular for tau={tau}, theta={theta}; try tau < 1/lambda0 = {1 / lam0:.3e}",
                exc.pivot,
            ) from exc

    def __call__(self, u: np.ndarray) -> np.ndarray:
        return self._fac.solve(self.rhs_op @ u)


def theta_step(pencil: Pencil, u, tau: float, theta: float = 1.0) -> np.ndarray:
    return ThetaStepper(pencil, tau, theta)(np.asarray(u, dtype=float))


@dataclass
class TimeSeries:
    times: np.ndarray
    norm_H: np.ndarray
    norm_H1Omega: np.ndarray
    conserved: np.ndarray
    snapshots: dict[int, np.ndarray] = field(default_factory=dict)  # step index -> state

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "norm_H", "norm_H1_omega", "conserved"])
        for row in zip(self.times, self.norm_H, self.norm_H1Omega, self.conserved):
            w.writerow([f"{x:.17g}" for x in row])
        return buf.getvalue()


def evolve(
    pencil: Pencil,
    u0,
    tau: float,
    T: float,
    theta: float = 1.0,
    grams: GramSet | None = None,
    *,
    snapshot_every: int | None = None,
) -> TimeSeries:
    """March ``ceil(T / tau)`` steps from ``u0`` recording the tracked norms after each step."""
    _check_step(tau, theta)
    if not T >= tau:
        raise ValueError(f"T must be at least tau (T={T}, tau={tau})")
    if grams is None:
        grams = gram_set(pencil.mesh, pencil.trace)
    step = ThetaStepper(pencil, tau, theta)
    nsteps = int(math.ceil(T / tau - 1e-9))
    u = np.asarray(u0, dtype=float).copy()
    one_A = pencil.A_mass.T @ np.ones(pencil.n)

    times = tau * np.arange(nsteps + 1)
    nH = np.empty(nsteps + 1)
    nH1 = np.empty(nsteps + 1)
    cons = np.empty(nsteps + 1)
    snaps = {}
    for i in range(nsteps + 1):
        if i:
            u = step(u)
        nH[i] = grams.norm("H", u)
        nH1[i] = grams.norm("H1Omega", u)
        cons[i] = one_A @ u
        if snapshot_every and (i % snapshot_every == 0 or i == nsteps):
            snaps[i] = u.copy()
    return TimeSeries(times, nH, nH1, cons, snaps)


def step_operator_norm(stepper: ThetaStepper, grams: GramSet, iters: int = 200, seed: int = 0) -> float:
    """G_H operator norm of the one-step map, by power iteration on S^T G S against G."""
    G = grams.G_H.tocsc()
    Gf = Factorization(G)
    S = stepper
    lhsT = Factorization(stepper.lhs.T.tocsc())
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(stepper.pencil.n)
    est = 0.0
    for _ in range(iters):
        x /= math.sqrt(x @ (G @ x))
        y = S(x)
        # S^T G y = rhs_op^T lhs^{-T} G y
        z = Gf.solve(stepper.rhs_op.T @ lhsT.solve(G @ y))
        new = math.sqrt(max(x @ (G @ z), 0.0))
        x = z
        if abs(new - est) <= 1e-13 * new:
            est = new
            break
        est = new
    return est


# --- small-l experiment -------------------------------------------------------


@dataclass(frozen=True)
class LLimitRow:
    l: float
    peak_norm_H1: float
    predicted_sigma_max: float


def l_limit_experiment(
    k: float,
    l_list: Sequence[float],
    u0: np.ndarray | Callable[[Mesh], np.ndarray],
    tau: float,
    T: float,
    mesh: Mesh,
    theta: float = 1.0,
    workers: int = 1,
) -> list[LLimitRow]:
    """Peak H1(Omega) norm over [0, T] for each l, same datum, step and mesh.

    ``predicted_sigma_max`` is the large-mode asymptote ``k^2 / (4 l)``.
    """
    if not k > 0:
        raise ValueError("the small-l experiment concerns the reactive case k > 0")
    l_list = [float(l) for l in l_list]
    if any(not l > 0 for l in l_list):
        raise ValueError("all l values must be positive")
    if any(b >= a for a, b in zip(l_list, l_list[1:])):
        raise ValueError("l_list must be strictly decreasing")
    return _sweep(k, l_list, u0, tau, T, mesh, theta, workers)


def _sweep(k, l_list, u0, tau, T, mesh, theta, workers):
    trace = trace_map(mesh)
    bulk = assemble_bulk(mesh)
    boundary = assemble_boundary(mesh, trace)
    grams = gram_set(mesh, trace, bulk=bulk, boundary=boundary)
    u0 = u0(mesh) if callable(u0) else np.asarray(u0, dtype=float)

    def run(l):
        pencil = build_pencil(mesh, trace, k, l, bulk=bulk, boundary=boundary)
        ts = evolve(pencil, u0, tau, T, theta, grams)
        return LLimitRow(l, float(ts.norm_H1Omega.max()), k * k / (4.0 * l))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, l_list))
    return [run(l) for l in l_list]


def dissipative_sweep(k, l_list, u0, tau, T, mesh, theta=1.0):
    """Control run of the sweep for k < 0."""
    if not k < 0:
        raise ValueError("control sweep expects k < 0")
    return _sweep(k, [float(l) for l in l_list], u0, tau, T, mesh, theta, 1)


def l_limit_csv(rows: Sequence[LLimitRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["l", "peak_norm_H1", "predicted_sigma_max"])
    for r in rows:
        w.writerow([f"{r.l:.17g}", f"{r.peak_norm_H1:.17g}", f"{r.predicted_sigma_max:.17g}"])
    return buf.getvalue()
