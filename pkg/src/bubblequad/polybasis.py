"""Total-degree product Chebyshev bases on a box and their Vandermonde matrices."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import PointOutsideBox
from .geometry import Box3

BOX_SLACK = 1e-12


def dim_poly(n: int) -> int:
    """Dimension of trivariate polynomials of total degree <= n."""
    if n < 0:
        raise ValueError("degree must be >= 0")
    return (n + 1) * (n + 2) * (n + 3) // 6


def graded_lex(n: int) -> np.ndarray:
    """Exponent triples with sum <= n, by total degree then lexicographically.

    Returns an integer array of shape (dim_poly(n), 3).
    """
    if n < 0:
        raise ValueError("degree must be >= 0")
    out = [
        (a, b, g - a - b)
        for g in range(n + 1)
        for a in range(g + 1)
        for b in range(g - a + 1)
    ]
    return np.array(out, dtype=np.int64).reshape(-1, 3)


@dataclass(frozen=True, eq=False)
class MultiIndexSet:
    degree: int
    indices: np.ndarray

    @classmethod
    def of_degree(cls, n: int) -> "MultiIndexSet":
        idx = graded_lex(n)
        idx.flags.writeable = False
        return cls(n, idx)

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True, eq=False)
class ChebBasis:
    """Product Chebyshev basis of total degree ``degree`` on ``box``.

    ``column_mask`` optionally restricts the basis to a strictly increasing
    subset of the graded-lex columns (surface-restricted spaces).
    """

    box: Box3
    index_set: MultiIndexSet
    column_mask: np.ndarray | None = None

    def __post_init__(self):
        if self.column_mask is not None:
            mask = np.asarray(self.column_mask, dtype=np.int64)
            full = len(self.index_set)
            if mask.ndim != 1 or mask.size == 0:
                raise ValueError("column_mask must be a non-empty 1-D index list")
            if np.any(np.diff(mask) <= 0) or mask[0] < 0 or mask[-1] >= full:
                raise ValueError("column_mask must be strictly increasing and < full dimension")
            mask.flags.writeable = False
            object.__setattr__(self, "column_mask", mask)

    @classmethod
    def full(cls, box: Box3, n: int) -> "ChebBasis":
        return cls(box, MultiIndexSet.of_degree(n))

    @property
    def degree(self) -> int:
        return self.index_set.degree

    @property
    def full_dim(self) -> int:
        return len(self.index_set)

    @property
    def ncols(self) -> int:
        return self.full_dim if self.column_mask is None else len(self.column_mask)

    @cached_property
    def exponents(self) -> np.ndarray:
        """Exponent triples of the active columns, in column order."""
        idx = self.index_set.indices
        return idx if self.column_mask is None else idx[self.column_mask]

    def with_mask(self, mask) -> "ChebBasis":
        return ChebBasis(self.box, self.index_set, mask)


def chebyshev_table(s: np.ndarray, n: int) -> np.ndarray:
    """``T_0(s), ..., T_n(s)`` by the three-term recurrence, shape (len(s), n + 1)."""
    s = np.asarray(s, dtype=float)
    T = np.empty((s.size, n + 1))
    T[:, 0] = 1.0
    if n >= 1:
        T[:, 1] = s
    for m in range(2, n + 1):
        T[:, m] = 2.0 * s * T[:, m - 1] - T[:, m - 2]
    return T


def box_coordinates(box: Box3, points) -> np.ndarray:
    """Affine map of ``points`` onto ``[-1, 1]^3``, clamped within the slack."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    lo, hi = np.asarray(box.lo), np.asarray(box.hi)
    width = hi - lo
    slack = BOX_SLACK * width
    bad = np.any((P < lo - slack) | (P > hi + slack), axis=1)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise PointOutsideBox(f"point {i} {P[i].tolist()} lies outside box {box.lo}..{box.hi}")
    sigma = (2.0 * P - hi - lo) / width
    return np.clip(sigma, -1.0, 1.0)


def cheb_vandermonde(basis: ChebBasis, points) -> np.ndarray:
    """Rows are points, columns the (masked) basis polynomials evaluated there."""
    sigma = box_coordinates(basis.box, points)
    n = basis.degree
    tx = chebyshev_table(sigma[:, 0], n)
    ty = chebyshev_table(sigma[:, 1], n)
    tz = chebyshev_table(sigma[:, 2], n)
    a = basis.exponents
    return tx[:, a[:, 0]] * ty[:, a[:, 1]] * tz[:, a[:, 2]]
