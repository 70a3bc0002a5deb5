"""Label discrete eigenvectors by their dominant angular Fourier index on the boundary."""
from __future__ import annotations

import numpy as np

from .linsolve import SpectrumReport
from .mesh import Mesh, TraceMap


def dominant_boundary_mode(mesh: Mesh, trace: TraceMap, vectors: np.ndarray, n_max: int | None = None) -> np.ndarray:
    """Index n maximizing |sum_j v_j exp(-i n theta_j)| over boundary nodes, per column of ``vectors``."""
    p = mesh.nodes[trace.loop]
    theta = np.arctan2(p[:, 1], p[:, 0])
    if n_max is None:
        n_max = len(trace.loop) // 2
    n = np.arange(n_max + 1)
    basis = np.exp(-1j * np.outer(n, theta)) * trace.arc_weights
    V = np.asarray(vectors)[trace.loop]
    power = np.abs(basis @ V) ** 2
    return np.argmax(power, axis=0)


def growth_rates_by_mode(
    report: SpectrumReport, mesh: Mesh, trace: TraceMap, modes, tol: float = 1e-8
) -> dict[int, float]:
    """Largest growth rate (minus real part) among eigenvalues whose vector has dominant index n.

    Modes with no rate above ``tol`` are omitted (the zero mode sits at rounding level).
    """
    if report.eigenvectors is None:
        raise ValueError("spectrum was computed without eigenvectors")
    labels = dominant_boundary_mode(mesh, trace, report.eigenvectors)
    rates = report.growth_rates
    out = {}
    for n in modes:
        sel = (labels == n) & (rates > tol)
        if np.any(sel):
            out[int(n)] = float(rates[sel].max())
    return out
