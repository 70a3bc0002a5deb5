"""Sparse direct solves and dense generalized eigenvalue analysis of the pencil."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

DENSE_CUTOFF = 3000
INFINITE_BETA = 1e-12


class SingularMatrixError(ArithmeticError):
    """Raised when a factorization meets a (numerically) zero pivot."""

    def __init__(self, message: str, pivot: int | None = None):
        self.pivot = pivot
        super().__init__(message if pivot is None else f"{message} (pivot {pivot})")


class DimensionTooLargeError(ValueError):
    pass


class Factorization:
    """Sparse LU with partial pivoting, reusable across right-hand sides.

    Symmetric indefinite systems are handled by the pivoting LU; a pivot below
    ``pivot_tol * max|U_ii|`` is reported as singular.
    """

    def __init__(self, M, pivot_tol: float = 1e-13):
        M = sp.csc_matrix(M)
        if M.shape[0] != M.shape[1]:
            raise ValueError(f"matrix must be square, got {M.shape}")
        self.shape = M.shape
        self.matrix = M
        # natural ordering keeps results reproducible across runs and platforms
        try:
            self._lu = spla.splu(M, permc_spec="COLAMD", diag_pivot_thresh=1.0)
        except RuntimeError as exc:
            raise SingularMatrixError(f"matrix is exactly singular: {exc}", _first_zero_pivot(str(exc))) from exc
        d = np.abs(self._lu.U.diagonal())
        scale = d.max() if len(d) else 1.0
        small = np.flatnonzero(d <= pivot_tol * scale)
        if len(small):
            # map back from the column permutation to an original index
            piv = int(self._lu.perm_c[small[0]])
            raise SingularMatrixError(
                f"matrix is numerically singular: |pivot| = {d[small[0]]:.3e} vs max {scale:.3e}", piv
            )

    def solve(self, rhs) -> np.ndarray:
        rhs = np.asarray(rhs)
        if rhs.shape[0] != self.shape[0]:
            raise ValueError(f"rhs has length {rhs.shape[0]}, expected {self.shape[0]}")
        if np.iscomplexobj(rhs) and not np.iscomplexobj(self.matrix.data):
            return self._lu.solve(np.ascontiguousarray(rhs.real)) + 1j * self._lu.solve(
                np.ascontiguousarray(rhs.imag)
            )
        return self._lu.solve(rhs)


def _first_zero_pivot(msg: str) -> int | None:
    digits = "".join(c if c.isdigit() else " " for c in msg).split()
    return int(digits[-1]) if digits else None


def relative_residual(M, x, rhs) -> float:
    r = M @ x - rhs
    denom = max(np.linalg.norm(rhs), 1e-300)
    return float(np.linalg.norm(r) / denom)


def solve_sparse(M, rhs, tol: float = 1e-10) -> np.ndarray:
    """Direct solve; raises SingularMatrixError on a zero pivot or residual above ``tol``."""
    fac = Factorization(M)
    x = fac.solve(rhs)
    res = relative_residual(fac.matrix, x, np.asarray(rhs))
    if not np.all(np.isfinite(x)) or res > tol:
        raise SingularMatrixError(f"solve failed to reach tolerance: relative residual {res:.2e}")
    return x


@dataclass
class SpectrumReport:
    """Finite generalized eigenvalues of ``B x = lam A x`` with backward errors."""

    eigenvalues: np.ndarray  # complex, finite part only, sorted by real part
    residuals: np.ndarray
    eigenvectors: np.ndarray | None
    n_infinite: int
    dimension: int
    k: float | None = None
    l: float | None = None
    h: float | None = None
    infinite_alpha_beta: np.ndarray = field(default_factory=lambda: np.empty((0, 2), dtype=complex))

    @property
    def growth_rates(self) -> np.ndarray:
        """Rates of ``exp(-lam t)``: minus the real parts."""
        return -self.eigenvalues.real

    @property
    def sigma_max(self) -> float:
        return float(self.growth_rates.max()) if len(self.eigenvalues) else 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["re_lambda", "im_lambda", "residual"])
        for lam, res in zip(self.eigenvalues, self.residuals):
            w.writerow([f"{lam.real:.17g}", f"{lam.imag:.17g}", f"{res:.17g}"])
        return buf.getvalue()


def generalized_eigs(B, A, *, vectors: bool = True, cutoff: int = DENSE_CUTOFF, k=None, l=None, h=None) -> SpectrumReport:
    """All generalized eigenvalues of the pair via QZ on dense copies.

    Pairs with ``|beta| < INFINITE_BETA * max(|alpha|, |beta|)`` are counted as
    infinite and excluded from the finite spectrum.
    """
    n = B.shape[0]
    if n > cutoff:
        raise DimensionTooLargeError(
            f"pencil dimension {n} exceeds the dense cutoff {cutoff}; coarsen the mesh"
        )
    Bd = B.toarray() if sp.issparse(B) else np.asarray(B, dtype=float)
    Ad = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
    if vectors:
        w, vr = sla.eig(Bd, Ad, right=True, homogeneous_eigvals=True)
    else:
        w = sla.eig(Bd, Ad, right=False, homogeneous_eigvals=True)
        vr = None
    alpha, beta = w[0], w[1]
    mag = np.maximum(np.abs(alpha), np.abs(beta))
    finite = np.abs(beta) >= INFINITE_BETA * np.where(mag > 0, mag, 1.0)
    lam = alpha[finite] / beta[finite]
    order = np.lexsort((lam.imag, lam.real))
    lam = lam[order]
    X = vr[:, finite][:, order] if vr is not None else None

    if X is not None:
        normA = np.linalg.norm(Ad, 2)
        normB = np.linalg.norm(Bd, 2)
        R = Bd @ X - (Ad @ X) * lam[None, :]
        res = np.linalg.norm(R, axis=0) / ((np.abs(lam) * normA + normB) * np.linalg.norm(X, axis=0))
    else:
        res = np.full(len(lam), np.nan)
    return SpectrumReport(
        eigenvalues=lam,
        residuals=res,
        eigenvectors=X,
        n_infinite=int((~finite).sum()),
        dimension=n,
        k=k,
        l=l,
        h=h,
        infinite_alpha_beta=np.column_stack([alpha[~finite], beta[~finite]]),
    )


def pencil_spectrum(pencil, *, vectors: bool = True, cutoff: int = DENSE_CUTOFF) -> SpectrumReport:
    return generalized_eigs(
        pencil.B_stiff, pencil.A_mass, vectors=vectors, cutoff=cutoff, k=pencil.k, l=pencil.l, h=pencil.mesh.h()
    )
