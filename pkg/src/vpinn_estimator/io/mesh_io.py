"""
Plain-text mesh files.

Format:
    nv nt
    x y            (nv lines)
    i j k          (nt lines, 0-based vertex indices)

Coordinates are written with ``repr`` (shortest round-trip representation),
so a dump/load cycle reproduces every double exactly.
"""

import logging
from pathlib import Path
from typing import Union

import numpy as np

from ..fem.mesh import Mesh, MeshError

logger = logging.getLogger(__name__)


class MeshLoadError(Exception):
    """Exception raised when a mesh file cannot be read."""
    pass


class MeshLoader:
    """Reader for the plain-text mesh format."""

    def load(self, file_path: Union[str, Path], name: str = None) -> Mesh:
        """
        Load a mesh file.

        Args:
            file_path: Path to the text file
            name: Mesh name (file stem by default)

        Returns:
            Validated Mesh

        Raises:
            MeshLoadError: Missing file, malformed content or invalid triangulation
        """
        file_path = Path(file_path)
        if not file_path.exists():
            raise MeshLoadError(f"File not found: {file_path}")

        lines = [
            line.split("#", 1)[0].strip()
            for line in file_path.read_text(encoding="utf-8").splitlines()
        ]
        lines = [line for line in lines if line]
        if not lines:
            raise MeshLoadError(f"{file_path}: empty mesh file")

        try:
            nv, nt = (int(tok) for tok in lines[0].split())
        except ValueError:
            raise MeshLoadError(f"{file_path}: header must be 'nv nt', got {lines[0]!r}")
        if len(lines) != 1 + nv + nt:
            raise MeshLoadError(
                f"{file_path}: expected {nv} vertex and {nt} triangle lines, found {len(lines) - 1} lines"
            )

        try:
            vertices = np.array([[float(t) for t in line.split()] for line in lines[1:1 + nv]])
            triangles = np.array([[int(t) for t in line.split()] for line in lines[1 + nv:]])
        except ValueError as e:
            raise MeshLoadError(f"{file_path}: malformed number: {e}")

        try:
            mesh = Mesh.from_triangles(vertices, triangles, name=name or file_path.stem)
        except MeshError as e:
            raise MeshLoadError(f"{file_path}: {e}")

        logger.info(f"Loaded {mesh!r} from {file_path}")
        return mesh


def load_mesh(file_path: Union[str, Path], name: str = None) -> Mesh:
    """Convenience wrapper around MeshLoader.load."""
    return MeshLoader().load(file_path, name)


def dump_mesh(mesh: Mesh, file_path: Union[str, Path]) -> Path:
    """Write a mesh in the plain-text format."""
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    out = [f"{mesh.n_vertices} {mesh.n_triangles}"]
    out.extend(f"{x!r} {y!r}" for x, y in mesh.vertices.tolist())
    out.extend(f"{i} {j} {k}" for i, j, k in mesh.triangles.tolist())
    file_path.write_text("\n".join(out) + "\n", encoding="utf-8")
    logger.debug(f"Wrote {mesh!r} to {file_path}")
    return file_path
