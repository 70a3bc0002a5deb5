"""Semi-analytic reference solutions on the unit disk.

Separating variables ``u = exp(sigma t) R(r) cos(n theta)`` in the heat
equation with boundary law ``u_t = k u_r + l u_thetatheta`` gives

* growing branch, sigma = mu^2:  R = I_n(mu r),  sigma = k mu I_n'(mu)/I_n(mu) - l n^2
* decaying branch, sigma = -mu^2: R = J_n(mu r), -mu^2 = k mu J_n'(mu)/J_n(mu) - l n^2

Both relations are solved in a pole-free form obtained from
``mu Z_n' = mu Z_{n-1} -/+ n Z_n`` and division by ``mu^n / (2^n n!)``.

Nothing here touches the finite-element assembly or the linear solvers.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla

from . import bessel


class NearSpectrumError(ArithmeticError):
    pass


@dataclass(frozen=True)
class DispersionRoot:
    n: int
    sigma: float
    branch: str  # "growing", "decaying" or "zero"
    bracket: tuple[float, float]  # in mu = sqrt(|sigma|)
    residual: float

    @property
    def mu(self) -> float:
        return math.sqrt(abs(self.sigma))


def _norm_factor(n: int) -> float:
    return 2.0**n * math.factorial(n)


def growing_dispersion(n: int, mu, k: float, l: float):
    """Pole-free growing-branch dispersion function; its value at mu=0 is k n - l n^2 (n >= 1)."""
    mu = np.asarray(mu, dtype=float)
    if n == 0:
        # (k mu I_1 - mu^2 I_0) / mu^2
        return k * bessel.in_scaled(1, mu) - bessel.in_scaled(0, mu)
    c = _norm_factor(n)
    return c * (k * bessel.in_scaled(n - 1, mu) - (k * n + l * n * n + mu**2) * bessel.in_scaled(n, mu))


def decaying_dispersion(n: int, mu, k: float, l: float):
    """Pole-free decaying-branch dispersion function; its value at mu=0 is k n - l n^2 (n >= 1)."""
    mu = np.asarray(mu, dtype=float)
    if n == 0:
        # (-k mu J_1 + mu^2 J_0) / mu^2
        return bessel.jn_scaled(0, mu) - k * bessel.jn_scaled(1, mu)
    c = _norm_factor(n)
    return c * (k * bessel.jn_scaled(n - 1, mu) + (mu**2 - l * n * n - k * n) * bessel.jn_scaled(n, mu))


def _bisect(f: Callable[[float], float], a: float, b: float, fa: float, tol: float = 1e-12) -> float:
    for _ in range(200):
        if b - a <= tol * max(1.0, abs(a)):
            break
        c = 0.5 * (a + b)
        fc = float(f(c))
        if fc == 0.0:
            return c
        if (fc > 0) == (fa > 0):
            a, fa = c, fc
        else:
            b = c
    return 0.5 * (a + b)


def dispersion_roots(
    k: float, l: float, n_max: int, mu_max: float = 20.0, *, step: float = 5e-3
) -> list[DispersionRoot]:
    """All sign-change-bracketed real roots of both branches for modes 0..n_max.

    The constant mode (n = 0) and the harmonic mode r^n cos(n theta) when
    ``k n == l n^2`` appear as ``branch="zero"`` roots with sigma = 0.
    """
    if k == 0 or not l > 0:
        raise ValueError("dispersion roots need k != 0 and l > 0")
    if n_max < 0 or not mu_max > 0:
        raise ValueError("n_max must be >= 0 and mu_max > 0")
    mu_max = min(float(mu_max), bessel.MAX_ARG)
    grid = np.linspace(0.0, mu_max, max(int(math.ceil(mu_max / step)), 2) + 1)
    roots: list[DispersionRoot] = []
    for n in range(n_max + 1):
        marginal = k * n - l * n * n
        if n == 0 or abs(marginal) <= 1e-13 * max(abs(k) * n, 1.0):
            roots.append(DispersionRoot(n, 0.0, "zero", (0.0, 0.0), abs(marginal) if n else 0.0))
        for branch, fn, sgn in (("growing", growing_dispersion, 1.0), ("decaying", decaying_dispersion, -1.0)):
            vals = fn(n, grid, k, l)
            for i in range(1, len(grid) - 1):
                a, b = grid[i], grid[i + 1]
                fa, fb = vals[i], vals[i + 1]
                if fa == 0.0:
                    mu = a
                elif (fa > 0) != (fb > 0):
                    mu = _bisect(lambda x: fn(n, x, k, l), a, b, fa)
                else:
                    continue
                res = abs(float(fn(n, mu, k, l)))
                roots.append(DispersionRoot(n, float(sgn * mu * mu), branch, (float(a), float(b)), res))
    return roots


def growing_rates(k: float, l: float, n_max: int, mu_max: float = 20.0) -> dict[int, float]:
    """Largest positive rate per mode, for modes that have one."""
    out: dict[int, float] = {}
    for r in dispersion_roots(k, l, n_max, mu_max):
        if r.branch == "growing":
            out[r.n] = max(out.get(r.n, -np.inf), r.sigma)
    return out


def max_growth_rate(k: float, l: float, n_max: int | None = None, mu_max: float = 30.0) -> float:
    """Largest real dispersion rate over all modes (0 if nothing grows)."""
    if n_max is None:
        n_max = max(int(abs(k) / l) + 3, 3)
    rates = growing_rates(k, l, n_max, mu_max)
    return max(rates.values(), default=0.0)


def dispersion_table_csv(roots: Sequence[DispersionRoot]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "sigma", "branch", "residual"])
    for r in roots:
        w.writerow([r.n, f"{r.sigma:.17g}", r.branch, f"{r.residual:.17g}"])
    return buf.getvalue()


# --- radial resolvent --------------------------------------------------------


@dataclass(frozen=True)
class RadialSolution:
    grid: np.ndarray
    values: np.ndarray
    n: int
    lam: float
    residual: float

    def __call__(self, r) -> np.ndarray:
        return np.interp(r, self.grid, self.values)


def _radial_system(n: int, lam: float, k: float, l: float, N: int):
    """Tridiagonal (banded) matrix of the second-order radial scheme, grid r_i = i/N.

    Row 0 encodes regularity at the origin, row N the boundary equation with
    the ghost value eliminated through the interior equation.
    """
    dr = 1.0 / N
    r = np.arange(N + 1) * dr
    lower = np.zeros(N + 1)  # coefficient of R_{i-1} in row i
    diag = np.zeros(N + 1)
    upper = np.zeros(N + 1)  # coefficient of R_{i+1} in row i
    scale = np.ones(N + 1)  # multiplies H_i on the right-hand side
    if n == 0:
        diag[0] = 4.0 / dr**2 + lam
        upper[0] = -4.0 / dr**2
    else:
        diag[0] = 1.0
        scale[0] = 0.0
    ri = r[1:N]
    lower[1:N] = -1.0 / dr**2 + 1.0 / (2.0 * ri * dr)
    diag[1:N] = 2.0 / dr**2 + n * n / ri**2 + lam
    upper[1:N] = -1.0 / dr**2 - 1.0 / (2.0 * ri * dr)
    # ghost: R_{N+1} = R_{N-1} + 2 dr D,  D = ((l n^2 + lam) R_N - H_N) / k
    # row N: -(2 R_{N-1} - 2 R_N)/dr^2 - (2/dr + 1) D + (n^2 + lam) R_N = H_N
    g = (2.0 / dr + 1.0) / k
    lower[N] = -2.0 / dr**2
    diag[N] = 2.0 / dr**2 + n * n + lam - g * (l * n * n + lam)
    scale[N] = 1.0 - g
    return r, lower, diag, upper, scale


def radial_resolvent_fd(
    n: int,
    lam: float,
    k: float,
    l: float,
    H: Callable[[np.ndarray], np.ndarray] | np.ndarray,
    points: int = 10001,
) -> RadialSolution:
    """Mode-n reduction of the resolvent problem solved by finite differences.

    Solves ``-(R'' + R'/r - n^2 R / r^2) + lam R = H`` on [0, 1] with
    ``-k R'(1) + (l n^2 + lam) R(1) = H(1)``. ``H`` is a callable of r or an
    array of samples on the uniform grid with ``points`` nodes.
    """
    if n < 0:
        raise ValueError("mode must be nonnegative")
    if k == 0:
        raise ValueError("k must be nonzero")
    N = points - 1
    r, lower, diag, upper, scale = _radial_system(n, float(lam), float(k), float(l), N)
    h = np.asarray(H(r) if callable(H) else H, dtype=float)
    if h.shape != r.shape:
        raise ValueError(f"expected {len(r)} radial samples, got {h.shape}")
    rhs = scale * h
    ab = np.zeros((3, N + 1))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    try:
        R = sla.solve_banded((1, 1), ab, rhs, check_finite=True)
    except sla.LinAlgError as exc:
        raise NearSpectrumError(f"reduced radial operator singular at lambda={lam}: {exc}") from exc
    Ar = diag * R
    Ar[1:] += lower[1:] * R[:-1]
    Ar[:-1] += upper[:-1] * R[1:]
    res = float(np.linalg.norm(Ar - rhs) / max(np.linalg.norm(rhs), np.linalg.norm(diag * R), 1e-300))
    if not np.all(np.isfinite(R)) or res > 1e-8:
        raise NearSpectrumError(f"reduced radial operator nearly singular at lambda={lam} (residual {res:.2e})")
    return RadialSolution(r, R, n, float(lam), res)


# --- modal evolution ---------------------------------------------------------


def radial_profile(root: DispersionRoot, r) -> np.ndarray:
    """Mode profile normalized so that R(1) = 1."""
    r = np.asarray(r, dtype=float)
    n, mu = root.n, root.mu
    if root.branch == "zero" or mu == 0.0:
        return r**n
    if root.branch == "growing":
        return r**n * bessel.in_scaled(n, mu * r) / bessel.in_scaled(n, mu)
    return r**n * bessel.jn_scaled(n, mu * r) / bessel.jn_scaled(n, mu)


def modal_reference(root: DispersionRoot, t: float, points) -> np.ndarray:
    """exp(sigma t) R(r) cos(n theta) at Cartesian ``points`` (shape (..., 2))."""
    p = np.asarray(points, dtype=float)
    r = np.hypot(p[..., 0], p[..., 1])
    theta = np.arctan2(p[..., 1], p[..., 0])
    return math.exp(root.sigma * t) * radial_profile(root, r) * np.cos(root.n * theta)
