"""Triangulations of planar domains with an explicitly ordered boundary loop.

The boundary loop is stored counterclockwise, so the outward normal of the
boundary edge ``(loop[i], loop[i+1])`` is its tangent rotated by -90 degrees.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np


class MeshError(ValueError):
    """Base class for mesh parse and validation failures."""


class MeshFormatError(MeshError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MeshValidationError(MeshError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class OpenLoopError(MeshValidationError):
    pass


class InvertedTriangleError(MeshValidationError):
    pass


@dataclass(frozen=True, eq=False)
class Mesh:
    nodes: np.ndarray  # (V, 2)
    triangles: np.ndarray  # (F, 3), counterclockwise
    boundary_loop: np.ndarray  # (m,), cyclic order

    def __post_init__(self):
        for name in ("nodes", "triangles", "boundary_loop"):
            arr = getattr(self, name)
            arr.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_boundary(self) -> int:
        return len(self.boundary_loop)

    def signed_areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def area(self) -> float:
        return float(self.signed_areas().sum())

    def edges(self) -> np.ndarray:
        """Unique undirected edges as sorted index pairs."""
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    def h(self) -> float:
        """Longest edge length."""
        e = self.edges()
        return float(np.linalg.norm(self.nodes[e[:, 0]] - self.nodes[e[:, 1]], axis=1).max())

    def interior_nodes(self) -> np.ndarray:
        mask = np.ones(self.n_nodes, dtype=bool)
        mask[self.boundary_loop] = False
        return np.flatnonzero(mask)

    def boundary_normals(self) -> np.ndarray:
        """Outward unit normals at boundary loop nodes (average of adjacent edge normals)."""
        p = self.nodes[self.boundary_loop]
        t_next = np.roll(p, -1, axis=0) - p
        t_prev = p - np.roll(p, 1, axis=0)
        n_next = np.column_stack([t_next[:, 1], -t_next[:, 0]])
        n_prev = np.column_stack([t_prev[:, 1], -t_prev[:, 0]])
        n_next /= np.linalg.norm(n_next, axis=1)[:, None]
        n_prev /= np.linalg.norm(n_prev, axis=1)[:, None]
        n = n_next + n_prev
        return n / np.linalg.norm(n, axis=1)[:, None]

    def __eq__(self, other):
        if not isinstance(other, Mesh):
            return NotImplemented
        return (
            np.array_equal(self.nodes, other.nodes)
            and np.array_equal(self.triangles, other.triangles)
            and np.array_equal(self.boundary_loop, other.boundary_loop)
        )

    __hash__ = None


def make_mesh(nodes, triangles, boundary_loop) -> Mesh:
    """Construct a Mesh and validate it eagerly."""
    mesh = Mesh(
        np.array(nodes, dtype=float).reshape(-1, 2),
        np.array(triangles, dtype=np.int64).reshape(-1, 3),
        np.array(boundary_loop, dtype=np.int64).ravel(),
    )
    validate_mesh(mesh)
    return mesh


def validate_mesh(mesh: Mesh, tri_lines=None, loop_lines=None) -> None:
    """Check all Mesh invariants; ``*_lines`` map entries to source lines for messages."""

    def tline(i):
        return None if tri_lines is None else tri_lines[i]

    def lline(i):
        return None if loop_lines is None else loop_lines[i]

    V = mesh.n_nodes
    if not np.all(np.isfinite(mesh.nodes)):
        raise MeshValidationError("non-finite node coordinate")
    t = mesh.triangles
    bad = np.argwhere((t < 0) | (t >= V))
    if len(bad):
        i, j = bad[0]
        raise MeshValidationError(
            f"triangle {i} references node index {t[i, j]} outside [0, {V})", tline(i)
        )
    area = mesh.signed_areas()
    nonpos = np.flatnonzero(area <= 0)
    if len(nonpos):
        i = int(nonpos[0])
        raise InvertedTriangleError(
            f"triangle {i} has non-positive signed area {area[i]:.3e} (inverted or degenerate)",
            tline(i),
        )

    loop = mesh.boundary_loop
    bad = np.flatnonzero((loop < 0) | (loop >= V))
    if len(bad):
        i = int(bad[0])
        raise MeshValidationError(
            f"boundary loop entry {i} references node index {loop[i]} outside [0, {V})", lline(i)
        )
    if len(np.unique(loop)) != len(loop):
        raise MeshValidationError("boundary loop visits a node twice")

    # directed boundary edges: edges used by exactly one triangle, kept with their ccw orientation
    d = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    key = np.sort(d, axis=1)
    _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    inv = inv.ravel()
    if np.any(counts > 2):
        raise MeshValidationError("non-manifold edge shared by more than two triangles")
    bedges = d[counts[inv] == 1]
    bnodes = np.unique(bedges)
    loop_set = set(loop.tolist())
    missing = sorted(set(bnodes.tolist()) - loop_set)
    if missing:
        raise OpenLoopError(f"open loop: boundary node {missing[0]} is missing from the boundary loop")
    extra = sorted(loop_set - set(bnodes.tolist()))
    if extra:
        raise MeshValidationError(f"boundary loop node {extra[0]} lies on no boundary edge")
    succ = {int(a): int(b) for a, b in bedges}
    if len(succ) != len(bedges):
        raise MeshValidationError("boundary is not a single simple closed curve")
    m = len(loop)
    if m and len(bedges) != m:
        raise OpenLoopError("open loop: boundary has more than one component or dangling edges")
    for i in range(m):
        a, b = int(loop[i]), int(loop[(i + 1) % m])
        if succ.get(a) != b:
            raise OpenLoopError(
                f"open loop: consecutive loop nodes {a} -> {b} do not share a counterclockwise boundary edge",
                lline((i + 1) % m),
            )


def build_disk_mesh(rings: int) -> Mesh:
    """Structured triangulation of the unit disk with ``rings`` concentric rings.

    Ring ``j`` has radius ``j / rings`` and ``6 j`` equally spaced nodes starting
    at angle 0. Neighbouring rings are zipped together by angle.
    """
    if isinstance(rings, bool) or int(rings) != rings or rings < 1:
        raise ValueError(f"rings must be a positive integer, got {rings!r}")
    rings = int(rings)
    nodes = [(0.0, 0.0)]
    ring_ids = [[0]]
    for j in range(1, rings + 1):
        n = 6 * j
        theta = 2.0 * np.pi * np.arange(n) / n
        r = j / rings
        start = len(nodes)
        nodes.extend(zip(r * np.cos(theta), r * np.sin(theta)))
        ring_ids.append(list(range(start, start + n)))

    tris = []
    for j in range(1, rings + 1):
        inner, outer = ring_ids[j - 1], ring_ids[j]
        ni, no = len(inner), len(outer)
        # each of the 6 sectors holds j "up" and j-1 "down" triangles
        for s in range(6):
            for i in range(j):
                a, b = s * (j - 1) + i, s * j + i
                tris.append((inner[a % ni], outer[b % no], outer[(b + 1) % no]))
                if i < j - 1:
                    tris.append((inner[a % ni], outer[(b + 1) % no], inner[(a + 1) % ni]))
    return make_mesh(np.array(nodes), np.array(tris), np.array(ring_ids[-1]))


# --- text format -----------------------------------------------------------


def _content_lines(stream: TextIO):
    for lineno, raw in enumerate(stream, start=1):
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        yield lineno, s.split()


def load_mesh_text(text) -> Mesh:
    """Parse the whitespace-separated mesh format.

    Line 1 is ``V F m``, followed by V lines ``x y``, F lines ``i j k``
    (0-based, counterclockwise) and m lines holding the boundary loop in cyclic
    order. Lines starting with ``#`` are comments.
    """
    if isinstance(text, str):
        text = io.StringIO(text)
    lines = _content_lines(text)

    def take(kind, nfields, conv):
        try:
            lineno, toks = next(lines)
        except StopIteration:
            raise MeshFormatError(f"unexpected end of file while reading {kind}") from None
        if len(toks) != nfields:
            raise MeshFormatError(f"expected {nfields} fields for {kind}, found {len(toks)}", lineno)
        try:
            return lineno, [conv(t) for t in toks]
        except ValueError:
            raise MeshFormatError(f"malformed {kind}: {' '.join(toks)!r}", lineno) from None

    hline, (V, F, m) = take("header 'V F m'", 3, int)
    if V < 0 or F < 0 or m < 0:
        raise MeshFormatError("negative count in header", hline)
    nodes = np.empty((V, 2))
    for i in range(V):
        _, nodes[i] = take("node coordinates", 2, float)
    tris = np.empty((F, 3), dtype=np.int64)
    tri_lines = []
    for i in range(F):
        ln, tris[i] = take("triangle", 3, int)
        tri_lines.append(ln)
    loop = np.empty(m, dtype=np.int64)
    loop_lines = []
    for i in range(m):
        ln, (loop[i],) = take("boundary loop index", 1, int)
        loop_lines.append(ln)
    extra = next(lines, None)
    if extra is not None:
        raise MeshFormatError("trailing data after boundary loop (counts in header too small?)", extra[0])
    mesh = Mesh(nodes, tris, loop)
    validate_mesh(mesh, tri_lines, loop_lines)
    return mesh


def dump_mesh_text(mesh: Mesh) -> str:
    out = [f"{mesh.n_nodes} {mesh.n_triangles} {mesh.n_boundary}"]
    out += [f"{x!r} {y!r}" for x, y in mesh.nodes.tolist()]
    out += [f"{i} {j} {k}" for i, j, k in mesh.triangles.tolist()]
    out += [str(i) for i in mesh.boundary_loop.tolist()]
    return "\n".join(out) + "\n"


# --- trace -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TraceMap:
    """Identification of boundary nodes with positions on the boundary loop."""

    loop: np.ndarray
    position: np.ndarray  # (V,), -1 at interior nodes
    arc_weights: np.ndarray  # chord length of edge (loop[i], loop[i+1])

    def boundary_index_of(self, node: int) -> int | None:
        """Loop position of ``node``, or None if it is not a boundary node."""
        p = int(self.position[node])
        return None if p < 0 else p

    def node_at(self, position: int) -> int:
        return int(self.loop[position])

    def perimeter(self) -> float:
        return float(self.arc_weights.sum())

    def restrict(self, values: np.ndarray) -> np.ndarray:
        """Nodal vector on the whole mesh -> values on the loop."""
        return np.asarray(values)[..., self.loop]

    def extend(self, loop_values: np.ndarray, n_nodes: int | None = None) -> np.ndarray:
        n = len(self.position) if n_nodes is None else n_nodes
        out = np.zeros(n, dtype=np.result_type(loop_values, float))
        out[self.loop] = loop_values
        return out


def trace_map(mesh: Mesh) -> TraceMap:
    loop = mesh.boundary_loop
    position = np.full(mesh.n_nodes, -1, dtype=np.int64)
    position[loop] = np.arange(len(loop))
    p = mesh.nodes[loop]
    chords = np.linalg.norm(np.roll(p, -1, axis=0) - p, axis=1)
    for a in (position, chords):
        a.setflags(write=False)
    return TraceMap(loop=loop, position=position, arc_weights=chords)


def polar(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    points = np.asarray(points)
    return np.hypot(points[..., 0], points[..., 1]), np.arctan2(points[..., 1], points[..., 0])
