"""Sparse operators of the coupled bulk/boundary weak form.

All unknowns live on mesh nodes; boundary operators are embedded into the full
node index space with zero rows and columns at interior nodes, so the trace of
a nodal vector is just its restriction to the boundary loop.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import Mesh, TraceMap


class AssemblyError(RuntimeError):
    pass


class UnsupportedParameterError(ValueError):
    pass


def _finalize(mat) -> sp.csr_matrix:
    mat = sp.csr_matrix(mat)
    mat.sum_duplicates()
    mat.eliminate_zeros()
    mat.sort_indices()
    return mat


def _zero_row_sums(mat: sp.csr_matrix) -> sp.csr_matrix:
    """Overwrite the diagonal with minus the off-diagonal row sum.

    Constants then lie in the kernel up to a single rounding per row rather than
    through cancellation across element contributions.
    """
    off = mat - sp.diags(mat.diagonal())
    off = _finalize(off)
    # symmetric off-diagonal part keeps the result exactly symmetric
    off = _finalize(0.5 * (off + off.T))
    diag = -np.asarray(off.sum(axis=1)).ravel()
    return _finalize(off + sp.diags(diag))


def _symmetrize(mat) -> sp.csr_matrix:
    return _finalize(0.5 * (mat + mat.T))


def element_gradients(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """Areas (F,) and gradients (F, 3, 2) of the linear hat functions."""
    p = mesh.nodes[mesh.triangles]
    area = mesh.signed_areas()
    degenerate = np.flatnonzero(~(area > 1e-14 * max(mesh.h(), 1.0) ** 2))
    if len(degenerate):
        i = int(degenerate[0])
        raise AssemblyError(f"triangle {i} {mesh.triangles[i].tolist()} is degenerate (area {area[i]:.3e})")
    # gradient of phi_i is the rotated opposite edge / (2 area)
    e = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    grads = np.stack([-e[..., 1], e[..., 0]], axis=-1) / (2.0 * area[:, None, None])
    return area, grads


def assemble_bulk(mesh: Mesh) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Consistent P1 mass and stiffness matrices on the triangulation."""
    area, grads = element_gradients(mesh)
    t = mesh.triangles
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    V = mesh.n_nodes

    k_loc = area[:, None, None] * np.einsum("fid,fjd->fij", grads, grads)
    m_ref = (np.ones((3, 3)) + np.eye(3)) / 12.0
    m_loc = area[:, None, None] * m_ref[None]

    K = sp.coo_matrix((k_loc.ravel(), (rows, cols)), shape=(V, V))
    M = sp.coo_matrix((m_loc.ravel(), (rows, cols)), shape=(V, V))
    return _symmetrize(M), _zero_row_sums(_finalize(K))


def assemble_boundary(mesh: Mesh, trace: TraceMap) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Periodic P1 mass and Laplace-Beltrami stiffness on the boundary loop, chord-length based."""
    loop = trace.loop
    a = loop
    b = np.roll(loop, -1)
    ell = trace.arc_weights
    V = mesh.n_nodes
    rows = np.concatenate([a, a, b, b])
    cols = np.concatenate([a, b, a, b])
    mass = np.concatenate([ell / 3, ell / 6, ell / 6, ell / 3])
    stiff = np.concatenate([1 / ell, -1 / ell, -1 / ell, 1 / ell])
    M = sp.coo_matrix((mass, (rows, cols)), shape=(V, V))
    K = sp.coo_matrix((stiff, (rows, cols)), shape=(V, V))
    return _symmetrize(M), _zero_row_sums(_finalize(K))


def loop_block(mat, trace: TraceMap):
    """Restrict an embedded boundary operator to the m x m loop block (loop order)."""
    loop = trace.loop
    return sp.csr_matrix(mat)[loop][:, loop]


@dataclass(frozen=True)
class Pencil:
    """Matrix pair of the semi-discrete problem ``A_mass du/dt = -B_stiff u``.

    ``A_mass = M_bulk - M_bnd / k`` and ``B_stiff = K_bulk - (l / k) K_bnd``.
    For k > 0 the mass matrix is indefinite.
    """

    A_mass: sp.csr_matrix
    B_stiff: sp.csr_matrix
    k: float
    l: float
    mesh: Mesh
    trace: TraceMap

    @property
    def n(self) -> int:
        return self.A_mass.shape[0]


def check_parameters(k: float, l: float) -> None:
    if not np.isfinite(k) or not np.isfinite(l):
        raise UnsupportedParameterError("k and l must be finite")
    if k == 0:
        raise UnsupportedParameterError("k must be nonzero: the non-interactive case k=0 is out of scope")
    if not l > 0:
        raise UnsupportedParameterError(f"l must be positive, got {l}")


def build_pencil(mesh: Mesh, trace: TraceMap, k: float, l: float, *, bulk=None, boundary=None) -> Pencil:
    check_parameters(k, l)
    M, K = bulk if bulk is not None else assemble_bulk(mesh)
    Mb, Kb = boundary if boundary is not None else assemble_boundary(mesh, trace)
    A = _symmetrize(M - Mb / k)
    B = _zero_row_sums(_finalize(K - (l / k) * Kb))
    return Pencil(A, B, float(k), float(l), mesh, trace)


@dataclass(frozen=True)
class GramSet:
    G_H: sp.csr_matrix  # bulk stiffness + boundary stiffness + boundary mass
    G_H1Omega: sp.csr_matrix  # bulk stiffness + bulk mass
    G_H1Gamma: sp.csr_matrix  # boundary stiffness + boundary mass, embedded V x V

    def norm(self, which: str, u) -> float:
        G = {"H": self.G_H, "H1Omega": self.G_H1Omega, "H1Gamma": self.G_H1Gamma}[which]
        u = np.asarray(u)
        return float(np.sqrt(max(np.real(np.vdot(u, G @ u)), 0.0)))


def gram_set(mesh: Mesh, trace: TraceMap, *, bulk=None, boundary=None) -> GramSet:
    M, K = bulk if bulk is not None else assemble_bulk(mesh)
    Mb, Kb = boundary if boundary is not None else assemble_boundary(mesh, trace)
    G_gamma = _symmetrize(Kb + Mb)
    return GramSet(
        G_H=_symmetrize(K + G_gamma),
        G_H1Omega=_symmetrize(K + M),
        G_H1Gamma=G_gamma,
    )


def norm_equivalence_bounds(grams: GramSet) -> tuple[float, float]:
    """Extreme generalized eigenvalues of (H1(Omega) + H1(Gamma) Gram, H Gram)."""
    lhs = (grams.G_H1Omega + grams.G_H1Gamma).toarray()
    w = sla.eigvalsh(lhs, grams.G_H.toarray())
    return float(w.min()), float(w.max())


def dtn_matrix(mesh: Mesh, trace: TraceMap, K_bulk=None) -> np.ndarray:
    """Discrete Dirichlet-to-Neumann map: Schur complement of K_bulk onto the loop.

    Rows and columns are in boundary-loop order.
    """
    if K_bulk is None:
        K_bulk = assemble_bulk(mesh)[1]
    K = sp.csc_matrix(K_bulk)
    loop = trace.loop
    inner = mesh.interior_nodes()
    if len(inner) == 0:
        raise AssemblyError("mesh has no interior nodes; the harmonic extension is trivial")
    K_gg = K[loop][:, loop].toarray()
    K_ig = K[inner][:, loop].toarray()
    K_ii = K[inner][:, inner].tocsc()
    try:
        lu = spla.splu(K_ii)
    except RuntimeError as exc:
        raise AssemblyError(f"singular interior stiffness block: {exc}") from exc
    ext = lu.solve(K_ig)
    dtn = K_gg - K_ig.T @ ext
    dtn = 0.5 * (dtn + dtn.T)
    np.fill_diagonal(dtn, 0.0)
    np.fill_diagonal(dtn, -dtn.sum(axis=1))
    return dtn


def harmonic_extension(mesh: Mesh, trace: TraceMap, loop_values, K_bulk=None) -> np.ndarray:
    """Discrete harmonic extension of loop data to all nodes."""
    if K_bulk is None:
        K_bulk = assemble_bulk(mesh)[1]
    K = sp.csr_matrix(K_bulk)
    inner = mesh.interior_nodes()
    u = trace.extend(np.asarray(loop_values, dtype=float), mesh.n_nodes)
    rhs = -(K[inner][:, trace.loop] @ u[trace.loop])
    u[inner] = spla.spsolve(K[inner][:, inner].tocsc(), rhs)
    return u


def auxiliary_boundary_matrix(
    mesh: Mesh, trace: TraceMap, l_aux: float, k_aux: float, shift: float, *, dtn=None, boundary=None
) -> np.ndarray:
    """Loop matrix ``-k_aux * DtN + l_aux * K_bnd + shift * M_bnd`` (SPD for k_aux<0<l_aux, shift>0)."""
    if not k_aux < 0:
        raise ValueError(f"k_aux must be negative, got {k_aux}")
    if not l_aux > 0:
        raise ValueError(f"l_aux must be positive, got {l_aux}")
    if not shift > 0:
        raise ValueError(f"shift must be positive, got {shift}")
    if dtn is None:
        dtn = dtn_matrix(mesh, trace)
    Mb, Kb = boundary if boundary is not None else assemble_boundary(mesh, trace)
    mat = -k_aux * dtn + l_aux * loop_block(Kb, trace).toarray() + shift * loop_block(Mb, trace).toarray()
    return 0.5 * (mat + mat.T)


def export_coo_text(mat) -> str:
    """``row col value`` lines, 17 significant digits."""
    coo = sp.coo_matrix(mat)
    order = np.lexsort((coo.col, coo.row))
    return "".join(
        f"{r} {c} {v:.17g}\n" for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order])
    )
