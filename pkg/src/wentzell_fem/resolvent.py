"""Elliptic resolvent problem, explicit coercivity constants and compatibility residuals."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, fields
from typing import Callable

import numpy as np

from .assembly import Pencil, assemble_boundary
from .linsolve import Factorization, SingularMatrixError
from .mesh import Mesh, trace_map


class NearSpectrumError(SingularMatrixError):
    """The resolvent system is singular: lambda is (close to) minus a pencil eigenvalue."""


@dataclass(frozen=True)
class ConstantsReport:
    """Coercivity constants of the shifted form for given k, l and domain constant C8.

    ``lambda0`` is an upper-bound template: C8 depends on the domain and is a
    configuration input, not a computed sharp value.
    """

    k: float
    l: float
    C8: float
    epsilon: float
    C6: float
    delta0: float
    lambda0: float
    C5: float

    def to_text(self) -> str:
        names = [f.name for f in fields(self)]
        width = max(len(n) for n in names)
        return "\n".join(f"{n:<{width}} = {getattr(self, n):.17g}" for n in names) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f.name for f in fields(self)])
        w.writerow([f"{getattr(self, f.name):.17g}" for f in fields(self)])
        return buf.getvalue()


def constants_report(k: float, l: float, C8: float = 1.0) -> ConstantsReport:
    if not (math.isfinite(k) and math.isfinite(l) and math.isfinite(C8)):
        raise ValueError("k, l and C8 must be finite")
    if k == 0:
        raise ValueError("k must be nonzero")
    if not l > 0:
        raise ValueError("l must be positive")
    if not C8 > 0:
        raise ValueError("C8 must be positive")
    ak = abs(k)
    C6 = (ak + l) ** 2 / (2 * l) + 1.5 * ak
    delta0 = min(2.0, l) / (4 * C6 * C8)
    lambda0 = max(C6 * C8 / delta0, ak + 2 * C6 * C8 * (delta0 + 1 / delta0))
    C5 = min(0.5, l / 4, lambda0 / 2)
    return ConstantsReport(k, l, C8, l / (ak + l), C6, delta0, lambda0, C5)


@dataclass(frozen=True)
class EllipticSolution:
    u: np.ndarray
    lam: complex
    residual_bulk: float
    residual_boundary: float


class Resolvent:
    """Factorized ``lam A + B`` for repeated solves at a fixed lambda."""

    def __init__(self, pencil: Pencil, lam: complex):
        self.pencil = pencil
        self.lam = lam
        A, B = pencil.A_mass, pencil.B_stiff
        if np.iscomplexobj(lam) and complex(lam).imag != 0.0:
            M = (complex(lam) * A.astype(complex) + B).tocsc()
        else:
            M = (float(np.real(lam)) * A + B).tocsc()
        self.matrix = M
        try:
            self._fac = Factorization(M)
        except SingularMatrixError as exc:
            raise NearSpectrumError(
                f"resolvent system singular at lambda={lam}: lambda is near the discrete spectrum", exc.pivot
            ) from exc

    def solve(self, h) -> EllipticSolution:
        h = np.asarray(h)
        rhs = self.pencil.A_mass @ h
        u = self._fac.solve(rhs)
        r = self.matrix @ u - rhs
        loop = self.pencil.trace.loop
        mask = np.ones(len(u), dtype=bool)
        mask[loop] = False
        scale = max(np.linalg.norm(rhs), 1e-300)
        res_b = float(np.linalg.norm(r[loop]) / scale)
        res_i = float(np.linalg.norm(r[mask]) / scale)
        if not np.all(np.isfinite(u)) or max(res_b, res_i) > 1e-8:
            raise NearSpectrumError(f"resolvent solve inaccurate at lambda={self.lam} (residual {max(res_b, res_i):.2e})")
        return EllipticSolution(u, self.lam, res_i, res_b)


def solve_resolvent(pencil: Pencil, lam: complex, h) -> EllipticSolution:
    """Discrete weak resolvent equation ``(lam A + B) u = A h``."""
    return Resolvent(pencil, lam).solve(h)


# --- compatibility ----------------------------------------------------------


@dataclass(frozen=True)
class AnalyticField:
    """Boundary data of an initial datum needed for first-order compatibility.

    Each callable takes boundary points (m, 2) and outward normals (m, 2).
    """

    laplacian: Callable[[np.ndarray, np.ndarray], np.ndarray]
    normal_derivative: Callable[[np.ndarray, np.ndarray], np.ndarray]
    surface_laplacian: Callable[[np.ndarray, np.ndarray], np.ndarray]
    value: Callable[[np.ndarray], np.ndarray] | None = None


def constant_field(c: float = 1.0) -> AnalyticField:
    zero = lambda p, nu: np.zeros(len(p))
    return AnalyticField(zero, zero, zero, lambda p: np.full(len(p), float(c)))


def radius_squared_field() -> AnalyticField:
    """u0 = r^2: Laplacian 4, gradient 2x; on the unit circle u0 is constant."""
    return AnalyticField(
        laplacian=lambda p, nu: np.full(len(p), 4.0),
        normal_derivative=lambda p, nu: 2.0 * np.einsum("id,id->i", p, nu),
        surface_laplacian=lambda p, nu: np.zeros(len(p)),
        value=lambda p: np.einsum("id,id->i", p, p),
    )


def harmonic_mode_field(n: int) -> AnalyticField:
    """u0 = r^n cos(n theta) with data evaluated on the unit circle."""

    def normal(p, nu):
        r, th = np.hypot(p[:, 0], p[:, 1]), np.arctan2(p[:, 1], p[:, 0])
        # grad of r^n cos(n th) in polar components (n r^{n-1} cos, -n r^{n-1} sin)
        er = p / r[:, None]
        et = np.column_stack([-er[:, 1], er[:, 0]])
        g = n * r[:, None] ** (n - 1) * (np.cos(n * th)[:, None] * er - np.sin(n * th)[:, None] * et)
        return np.einsum("id,id->i", g, nu)

    def lap_gamma(p, nu):
        th = np.arctan2(p[:, 1], p[:, 0])
        return -(n**2) * np.cos(n * th)

    def value(p):
        r, th = np.hypot(p[:, 0], p[:, 1]), np.arctan2(p[:, 1], p[:, 0])
        return r**n * np.cos(n * th)

    return AnalyticField(lambda p, nu: np.zeros(len(p)), normal, lap_gamma, value)


def compatibility_residual(u0: AnalyticField, k: float, l: float, mesh: Mesh) -> float:
    """Boundary L2 norm of ``(Lap u0)|_Gamma - k (u0)_nu - l Lap_Gamma u0`` (order-one condition)."""
    trace = trace_map(mesh)
    p = mesh.nodes[trace.loop]
    nu = mesh.boundary_normals()
    r = u0.laplacian(p, nu) - k * u0.normal_derivative(p, nu) - l * u0.surface_laplacian(p, nu)
    Mb, _ = assemble_boundary(mesh, trace)
    Ml = Mb[trace.loop][:, trace.loop]
    return float(np.sqrt(max(r @ (Ml @ r), 0.0)))
