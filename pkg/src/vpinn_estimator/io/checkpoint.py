"""
Network parameter checkpoints.

An ``.npz`` archive holding ``format_version``, ``widths``, the layer arrays
``W0, b0, W1, b1, ...`` in row-major order and optional scalar metadata.
Doubles are stored bit-exactly.
"""

import logging
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np

from ..nn.network import MLPParams, NetworkError

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


class CheckpointError(Exception):
    """Exception raised when a checkpoint cannot be written or read."""
    pass


def save_checkpoint(
    params: MLPParams,
    file_path: Union[str, Path],
    metadata: Optional[Dict[str, Union[int, float, str]]] = None,
) -> Path:
    """
    Save parameters (and scalar metadata such as the mesh size) to ``file_path``.

    Returns:
        The path written (numpy appends ``.npz`` if missing)
    """
    file_path = Path(file_path)
    if file_path.suffix != ".npz":
        file_path = file_path.with_suffix(".npz")
    file_path.parent.mkdir(parents=True, exist_ok=True)

    arrays = {
        "format_version": np.array(FORMAT_VERSION),
        "widths": np.array(params.widths, dtype=np.int64),
    }
    for layer, (W, b) in enumerate(zip(params.weights, params.biases)):
        arrays[f"W{layer}"] = np.ascontiguousarray(W)
        arrays[f"b{layer}"] = np.ascontiguousarray(b)
    for key, value in (metadata or {}).items():
        arrays[f"meta_{key}"] = np.array(value)

    np.savez(file_path, **arrays)
    logger.debug(f"Saved checkpoint ({params.n_params} parameters) to {file_path}")
    return file_path


def load_checkpoint(file_path: Union[str, Path]) -> Tuple[MLPParams, Dict[str, object]]:
    """
    Load parameters and metadata.

    Raises:
        CheckpointError: Missing file, unknown version or inconsistent arrays
    """
    file_path = Path(file_path)
    if not file_path.exists():
        raise CheckpointError(f"File not found: {file_path}")

    try:
        with np.load(file_path, allow_pickle=False) as archive:
            version = int(archive["format_version"])
            if version != FORMAT_VERSION:
                raise CheckpointError(
                    f"{file_path}: unsupported checkpoint version {version} (expected {FORMAT_VERSION})"
                )
            widths = tuple(int(w) for w in archive["widths"])
            n_layers = len(widths) - 1
            weights = [np.array(archive[f"W{layer}"], dtype=float) for layer in range(n_layers)]
            biases = [np.array(archive[f"b{layer}"], dtype=float) for layer in range(n_layers)]
            metadata = {
                key[len("meta_"):]: archive[key].item()
                for key in archive.files
                if key.startswith("meta_")
            }
    except (KeyError, ValueError, OSError) as e:
        raise CheckpointError(f"{file_path}: unreadable checkpoint: {e}")

    try:
        params = MLPParams(widths, weights, biases)
    except NetworkError as e:
        raise CheckpointError(f"{file_path}: {e}")

    logger.debug(f"Loaded checkpoint {list(widths)} from {file_path}")
    return params, metadata
