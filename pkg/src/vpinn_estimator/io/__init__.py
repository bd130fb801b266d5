"""I/O utilities for vpinn-estimator."""

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .export import (
    read_table,
    write_breakdown_csv,
    write_convergence_csv,
    write_slopes_csv,
    write_trace_csv,
)
from .mesh_io import MeshLoader, MeshLoadError, dump_mesh, load_mesh

__all__ = [
    "CheckpointError",
    "load_checkpoint",
    "save_checkpoint",
    "read_table",
    "write_breakdown_csv",
    "write_convergence_csv",
    "write_slopes_csv",
    "write_trace_csv",
    "MeshLoader",
    "MeshLoadError",
    "dump_mesh",
    "load_mesh",
]
