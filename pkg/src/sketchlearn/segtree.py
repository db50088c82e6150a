"""Two-level segment tree over a dense matrix for weighted sampling.

A root tree holds partial sums of squared row norms, one tree per row holds
partial sums of squared entries. Both use the implicit heap layout (node k
has children 2k and 2k+1) padded to a power of two, so a weighted draw is a
single root-to-leaf descent and an entry update touches two log-length
paths. Raw signed entries are kept alongside the squared trees.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    EmptyMatrix,
    IndexOutOfRange,
    NonFinite,
    ZeroMatrix,
    ZeroRow,
)


def _pow2_at_least(n: int) -> int:
    p = 1
    while p < n:
        p <<= 1
    return p


def _descend(nodes: np.ndarray, u: np.ndarray, leaves: int) -> np.ndarray:
    """Vectorized prefix-sum descent; one row of ``u`` per draw.

    ``nodes`` is either a single tree (1-D) or one tree per draw (2-D).
    Ties go right: the left branch is taken only when u < leftSum, except
    that an empty right subtree forces left so rounding can never enter
    zero mass.
    """
    if u.size == 0:
        return np.zeros(0, dtype=np.int64)
    u = u.copy()
    k = np.ones(u.shape, dtype=np.int64)
    two_d = nodes.ndim == 2
    rows = np.arange(u.shape[0]) if two_d else None
    while k[0] < leaves:
        if two_d:
            left = nodes[rows, 2 * k]
            right = nodes[rows, 2 * k + 1]
        else:
            left = nodes[2 * k]
            right = nodes[2 * k + 1]
        go_left = (u < left) | (right <= 0.0)
        k = 2 * k + (~go_left)
        u = np.where(go_left, u, u - left)
    return k - leaves


class SegTreeMatrix:
    """Matrix store supporting O(log) norm-weighted sampling and updates."""

    def __init__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.size == 0:
            raise EmptyMatrix(f"need a nonempty 2-D matrix, got shape {x.shape}")
        self._init_zero(x.shape[0], x.shape[1])
        self.set_rows(0, x)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "SegTreeMatrix":
        """All-zero store to be filled incrementally via set_rows/update."""
        if rows < 1 or cols < 1:
            raise EmptyMatrix(f"need positive dimensions, got {rows}x{cols}")
        t = cls.__new__(cls)
        t._init_zero(rows, cols)
        return t

    def _init_zero(self, rows: int, cols: int) -> None:
        self.rows = rows
        self.cols = cols
        self._rpad = _pow2_at_least(rows)
        self._cpad = _pow2_at_least(cols)
        self._values = np.zeros((rows, cols))
        self._row_nodes = np.zeros((rows, 2 * self._cpad))
        self._root_nodes = np.zeros(2 * self._rpad)

    # -- construction ------------------------------------------------------

    def set_rows(self, start: int, block) -> None:
        """Overwrite rows ``start:start+len(block)`` in one vectorized pass."""
        block = np.atleast_2d(np.asarray(block, dtype=np.float64))
        stop = start + block.shape[0]
        if not (0 <= start and stop <= self.rows and block.shape[1] == self.cols):
            raise IndexOutOfRange(
                f"rows [{start}, {stop}) x {block.shape[1]} does not fit "
                f"in {self.rows}x{self.cols}"
            )
        if not np.isfinite(block).all():
            raise NonFinite("block contains NaN or Inf")
        self._values[start:stop] = block
        nodes = self._row_nodes[start:stop]
        cpad = self._cpad
        nodes[:, cpad : cpad + self.cols] = block * block
        half = cpad >> 1
        while half >= 1:
            nodes[:, half : 2 * half] = (
                nodes[:, 2 * half : 4 * half : 2]
                + nodes[:, 2 * half + 1 : 4 * half : 2]
            )
            half >>= 1
        root = self._root_nodes
        root[self._rpad + start : self._rpad + stop] = nodes[:, 1]
        lo, hi = self._rpad + start, self._rpad + stop - 1
        while lo > 1:
            lo >>= 1
            hi >>= 1
            k = np.arange(lo, hi + 1)
            root[k] = root[2 * k] + root[2 * k + 1]

    def update(self, i: int, j: int, v: float) -> None:
        """Set entry (i, j) to ``v``, refreshing both root-to-leaf paths."""
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexOutOfRange(f"({i}, {j}) outside {self.rows}x{self.cols}")
        v = float(v)
        if not np.isfinite(v):
            raise NonFinite(f"update value {v!r} is not finite")
        self._values[i, j] = v
        rn = self._row_nodes[i]
        p = self._cpad + j
        rn[p] = v * v
        p >>= 1
        while p >= 1:
            rn[p] = rn[2 * p] + rn[2 * p + 1]
            p >>= 1
        root = self._root_nodes
        q = self._rpad + i
        root[q] = rn[1]
        q >>= 1
        while q >= 1:
            root[q] = root[2 * q] + root[2 * q + 1]
            q >>= 1

    # -- accessors ---------------------------------------------------------

    def get(self, i: int, j: int) -> float:
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexOutOfRange(f"({i}, {j}) outside {self.rows}x{self.cols}")
        return float(self._values[i, j])

    def row_norm_sq(self, i):
        """Squared norm of row ``i``; accepts an int or an index array."""
        i = np.asarray(i)
        if i.size and (i.min() < 0 or i.max() >= self.rows):
            raise IndexOutOfRange(f"row index outside [0, {self.rows})")
        out = self._root_nodes[self._rpad + i]
        return float(out) if out.ndim == 0 else out

    def fro_norm_sq(self) -> float:
        return float(self._root_nodes[1])

    @property
    def shape(self) -> tuple:
        return (self.rows, self.cols)

    @property
    def dense(self) -> np.ndarray:
        """The stored signed entries. Treat as read-only; mutate via update."""
        return self._values

    def to_dense(self) -> np.ndarray:
        return self._values.copy()

    # -- sampling ----------------------------------------------------------

    def sample_rows(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw ``size`` i.i.d. row indices with probability rowNormSq/froSq."""
        total = self._root_nodes[1]
        if total <= 0.0:
            raise ZeroMatrix("cannot sample rows of an all-zero matrix")
        u = rng.random(size) * total
        return _descend(self._root_nodes, u, self._rpad)

    def sample_row(self, rng: np.random.Generator) -> int:
        return int(self.sample_rows(rng, 1)[0])

    def sample_cols_in_rows(
        self, rows, rng: np.random.Generator
    ) -> np.ndarray:
        """For each row index, draw a column with in-row law entrySq/rowNormSq."""
        rows = np.asarray(rows, dtype=np.int64)
        if rows.size and (rows.min() < 0 or rows.max() >= self.rows):
            raise IndexOutOfRange(f"row index outside [0, {self.rows})")
        totals = self._root_nodes[self._rpad + rows]
        if np.any(totals <= 0.0):
            bad = int(rows[np.argmax(totals <= 0.0)])
            raise ZeroRow(f"row {bad} has zero norm; its column law is undefined")
        u = rng.random(rows.size) * totals
        return _descend(self._row_nodes[rows], u, self._cpad)

    def sample_col_in_row(self, i: int, rng: np.random.Generator) -> int:
        return int(self.sample_cols_in_rows(np.array([i]), rng)[0])
