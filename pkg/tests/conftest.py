from functools import lru_cache

import numpy as np
import pytest

from wentzell_fem.assembly import assemble_boundary, assemble_bulk, build_pencil, gram_set
from wentzell_fem.linsolve import pencil_spectrum
from wentzell_fem.mesh import build_disk_mesh, trace_map


@lru_cache(maxsize=None)
def disk(rings):
    mesh = build_disk_mesh(rings)
    return mesh, trace_map(mesh)


@lru_cache(maxsize=None)
def operators(rings):
    mesh, trace = disk(rings)
    return assemble_bulk(mesh), assemble_boundary(mesh, trace)


@lru_cache(maxsize=None)
def pencil(rings, k, l):
    mesh, trace = disk(rings)
    bulk, boundary = operators(rings)
    return build_pencil(mesh, trace, k, l, bulk=bulk, boundary=boundary)


@lru_cache(maxsize=None)
def grams(rings):
    mesh, trace = disk(rings)
    bulk, boundary = operators(rings)
    return gram_set(mesh, trace, bulk=bulk, boundary=boundary)


@lru_cache(maxsize=None)
def spectrum(rings, k, l):
    return pencil_spectrum(pencil(rings, k, l))


def boundary_angles(rings):
    mesh, trace = disk(rings)
    p = mesh.nodes[trace.loop]
    return np.arctan2(p[:, 1], p[:, 0])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE_LINES = []


def record_acceptance(name, ok, detail):
    _ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
