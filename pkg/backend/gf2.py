"""GF(2) linear algebra for exponent-vector parities."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np


def to_gf2(matrix) -> np.ndarray:
    return (np.asarray(matrix, dtype=np.int64) % 2).astype(np.uint8)


@dataclass(frozen=True)
class RowReduceResult:
    matrix: np.ndarray
    rank: int
    pivots: Tuple[int, ...]


def gf2_row_reduce(matrix) -> RowReduceResult:
    mat = to_gf2(matrix).copy()
    if mat.ndim != 2:
        raise ValueError('GF(2) row reduction expects a 2-D matrix')
    m, n = mat.shape
    pivots = []
    row = 0
    for col in range(n):
        if row == m:
            break
        candidates = np.nonzero(mat[row:, col])[0]
        if candidates.size == 0:
            continue
        pivot = row + int(candidates[0])
        if pivot != row:
            mat[[row, pivot]] = mat[[pivot, row]]
        for r in range(m):
            if r != row and mat[r, col] == 1:
                mat[r, :] ^= mat[row, :]
        pivots.append(col)
        row += 1
    return RowReduceResult(matrix=mat, rank=len(pivots), pivots=tuple(pivots))


def gf2_rank(matrix) -> int:
    return gf2_row_reduce(matrix).rank


def gf2_nullspace_basis(matrix) -> np.ndarray:
    """Return a basis for the nullspace of matrix over GF(2)."""
    reduced = gf2_row_reduce(matrix)
    mat = reduced.matrix
    n = mat.shape[1]
    pivots = set(reduced.pivots)
    basis = []
    for free in (c for c in range(n) if c not in pivots):
        vec = np.zeros(n, dtype=np.uint8)
        vec[free] = 1
        for row, col in enumerate(reduced.pivots):
            if mat[row, free] == 1:
                vec[col] = 1
        basis.append(vec)
    if not basis:
        return np.zeros((0, n), dtype=np.uint8)
    return np.vstack(basis)


def smallest_nullspace_vector(rows, n_cols: int) -> Optional[Tuple[int, ...]]:
    """
    Least nonzero m with rows @ m == 0 (mod 2), comparing vectors from the
    last coordinate down, or None when the nullspace is trivial.

    The first prefix of columns with a nontrivial kernel has a one-dimensional
    kernel; its generator, padded with zeros, is the minimum.
    """
    mat = to_gf2(rows).reshape(-1, n_cols)
    for p in range(n_cols):
        if gf2_rank(mat[:, :p + 1]) == p + 1:
            continue
        kernel = gf2_nullspace_basis(mat[:, :p + 1])
        vector = next(v for v in kernel if v[p] == 1)
        return tuple(int(b) for b in vector) + (0,) * (n_cols - p - 1)
    return None


def is_orthogonal(m: Sequence[int], rows) -> bool:
    """True when m . row == 0 (mod 2) for every row."""
    vec = to_gf2(m)
    mat = to_gf2(rows).reshape(-1, vec.size)
    return not np.any((mat.astype(np.int64) @ vec.astype(np.int64)) % 2)
