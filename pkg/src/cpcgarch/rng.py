"""
Seed-deterministic standard normals with per-block substreams.

Paths are grouped in blocks of :data:`BLOCK`.  Block ``b`` draws from a Philox
counter stream keyed by the seed with the block index in the high counter
word, so a path's innovations depend only on ``(seed, path index, day)``:
they do not change with the number of paths, the horizon, or how the blocks
are split across workers.  Uniforms are mapped to normals by the inverse CDF.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

__all__ = ["BLOCK", "block_normals", "path_normals"]

BLOCK = 1024
_MASK64 = (1 << 64) - 1


def _bitgen(seed: int, block: int) -> np.random.Philox:
    seed = int(seed) & ((1 << 128) - 1)
    key = np.array([seed & _MASK64, seed >> 64], dtype=np.uint64)
    counter = np.array([0, 0, block, 0], dtype=np.uint64)
    return np.random.Philox(counter=counter, key=key)


def block_normals(seed: int, block: int, n_steps: int) -> np.ndarray:
    """Normals of shape ``(n_steps, BLOCK)`` for one block, day-major."""
    raw = _bitgen(seed, block).random_raw(n_steps * BLOCK)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)
    return ndtri(u).reshape(n_steps, BLOCK)


def path_normals(seed: int, first_path: int, n_paths: int, n_steps: int) -> np.ndarray:
    """Normals of shape ``(n_steps, n_paths)`` for paths ``first_path ...``."""
    if n_paths <= 0:
        return np.empty((n_steps, 0))
    first_block = first_path // BLOCK
    last_block = (first_path + n_paths - 1) // BLOCK
    z = np.concatenate([block_normals(seed, b, n_steps) for b in range(first_block, last_block + 1)], axis=1)
    off = first_path - first_block * BLOCK
    return z[:, off : off + n_paths]
