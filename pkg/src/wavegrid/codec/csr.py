"""Compressed sparse row storage of a dense array of doubles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

INDEX_MAX = 2**32 - 1


class CorruptBlockError(ValueError):
    pass


@dataclass
class CsrBlock:
    values: np.ndarray
    col: np.ndarray
    row: np.ndarray
    rows: int
    cols: int

    def validate(self) -> None:
        v, col, row = self.values, self.col, self.row
        if self.rows < 1 or self.cols < 1:
            raise CorruptBlockError("rows and cols must be >= 1")
        if len(row) != self.rows + 1:
            raise CorruptBlockError(f"ROW has {len(row)} entries, expected {self.rows + 1}")
        if len(col) != len(v):
            raise CorruptBlockError("COL and V lengths differ")
        if row[0] != 0 or row[-1] != len(v):
            raise CorruptBlockError("ROW must start at 0 and end at len(V)")
        if np.any(np.diff(row.astype(np.int64)) < 0):
            raise CorruptBlockError("ROW is not nondecreasing")
        if len(col) and int(col.max()) >= self.cols:
            raise CorruptBlockError("column index out of range")
        if len(col) > 1:
            r = np.repeat(np.arange(self.rows), np.diff(row.astype(np.int64)))
            c = col.astype(np.int64)
            if np.any((r[1:] == r[:-1]) & (c[1:] <= c[:-1])):
                raise CorruptBlockError("COL not strictly increasing within a row")

    @property
    def nnz(self) -> int:
        return len(self.values)

    def nbytes(self, value_width: int = 8) -> int:
        return value_width * len(self.values) + 4 * len(self.col) + 4 * len(self.row)


def as_matrix(a: np.ndarray) -> np.ndarray:
    """2-D view: product of the leading axes by the last axis."""
    a = np.asarray(a)
    if a.ndim == 0:
        raise ValueError("cannot view a scalar as a matrix")
    if a.ndim == 1:
        return a.reshape(1, -1)
    return a.reshape(-1, a.shape[-1])


def csr_encode(matrix: np.ndarray, dtype=np.float64) -> CsrBlock:
    m = np.ascontiguousarray(as_matrix(np.asarray(matrix, dtype=np.float64)))
    rows, cols = m.shape
    if rows < 1 or cols < 1:
        raise ValueError("matrix must have at least one row and one column")
    if cols > INDEX_MAX or m.size > INDEX_MAX:
        raise OverflowError("matrix too large for 32-bit CSR indices")
    # zero means the +0.0 bit pattern, so -0.0 survives a round trip
    r, c = np.nonzero(m.view(np.uint64))
    counts = np.bincount(r, minlength=rows)
    row = np.zeros(rows + 1, dtype=np.uint32)
    np.cumsum(counts, out=row[1:])
    return CsrBlock(m[r, c].astype(dtype), c.astype(np.uint32), row, rows, cols)


def csr_decode(block: CsrBlock) -> np.ndarray:
    block.validate()
    out = np.zeros((block.rows, block.cols), dtype=np.float64)
    r = np.repeat(np.arange(block.rows), np.diff(block.row.astype(np.int64)))
    out[r, block.col.astype(np.int64)] = block.values
    return out
