"""Finite elements for the heat equation with reactive-diffusive dynamical boundary conditions."""
from .assembly import GramSet, Pencil, assemble_boundary, assemble_bulk, build_pencil, dtn_matrix, gram_set
from .disk_oracle import dispersion_roots, radial_resolvent_fd
from .evolution import TimeSeries, evolve, l_limit_experiment, theta_step
from .linsolve import SpectrumReport, generalized_eigs, pencil_spectrum, solve_sparse
from .mesh import Mesh, TraceMap, build_disk_mesh, load_mesh_text, trace_map
from .resolvent import ConstantsReport, constants_report, solve_resolvent

__version__ = "0.1.0"
