"""Matrix-valued fields sampled on quadrature grids, and weighted-norm specs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class FieldError(ValueError):
    pass


@dataclass(frozen=True)
class NormSpec:
    """Weighted-norm specification: exponent p and base point z0.

    The weight is |z - z0|^(1 - 2/p); at p = 2 it is identically one.
    """

    p: float = 2.0
    z0: complex = 0.0

    def __post_init__(self):
        if not 1.0 < self.p < np.inf:
            raise FieldError("p must lie in (1, inf)")

    @property
    def q(self):
        return self.p / (self.p - 1.0)

    def weight(self, z):
        z = np.asarray(z)
        a = 1.0 - 2.0 / self.p
        if a == 0.0:
            return np.ones(z.shape if z.shape else 1)
        return np.abs(z - self.z0) ** a


@dataclass
class MatrixField:
    """One complex n x n matrix per grid node, stored as (N, n, n)."""

    grid: object
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim == 1:
            v = v[:, None, None]
        if v.ndim != 3 or v.shape[1] != v.shape[2]:
            raise FieldError(f"values must be (N, n, n), got {v.shape}")
        if v.shape[0] != self.grid.size:
            raise FieldError(f"value count {v.shape[0]} != grid size {self.grid.size}")
        if not np.all(np.isfinite(v)):
            raise FieldError("field has non-finite entries")
        self.values = v

    @property
    def n(self):
        return self.values.shape[1]

    @classmethod
    def from_callable(cls, grid, fn, n=None):
        """Sample a callable z -> scalar or (n, n) matrix on the grid nodes."""
        first = np.asarray(fn(grid.nodes[0]), dtype=complex)
        if first.ndim == 0:
            try:
                vals = np.asarray(fn(grid.nodes), dtype=complex)
                if vals.shape != grid.nodes.shape:
                    raise ValueError
            except (ValueError, TypeError):  # not vectorized
                vals = np.array([fn(z) for z in grid.nodes], dtype=complex)
            return cls(grid, vals[:, None, None])
        m = first.shape[0]
        vals = np.empty((grid.size, m, m), dtype=complex)
        for j, z in enumerate(grid.nodes):
            vals[j] = np.asarray(fn(z), dtype=complex)
        return cls(grid, vals)

    @classmethod
    def identity(cls, grid, n=1):
        vals = np.broadcast_to(np.eye(n, dtype=complex), (grid.size, n, n)).copy()
        return cls(grid, vals)

    @classmethod
    def zeros(cls, grid, n=1):
        return cls(grid, np.zeros((grid.size, n, n), dtype=complex))

    def copy(self):
        return MatrixField(self.grid, self.values.copy())

    def __add__(self, other):
        return MatrixField(self.grid, self.values + _coerce(other, self))

    def __sub__(self, other):
        return MatrixField(self.grid, self.values - _coerce(other, self))

    def __neg__(self):
        return MatrixField(self.grid, -self.values)

    def rmul(self, other):
        """Nodewise right matrix product: self(z) other(z)."""
        return MatrixField(self.grid, np.einsum("jab,jbc->jac", self.values, _coerce(other, self)))

    def lmul(self, other):
        """Nodewise left matrix product: other(z) self(z)."""
        return MatrixField(self.grid, np.einsum("jab,jbc->jac", _coerce(other, self), self.values))

    def scale(self, factors):
        """Multiply each node's matrix by a complex scalar factor."""
        return MatrixField(self.grid, self.values * np.asarray(factors)[:, None, None])

    def inv(self):
        return MatrixField(self.grid, np.linalg.inv(self.values))

    def det(self):
        return np.linalg.det(self.values)

    def frobenius(self):
        """Per-node Frobenius norm."""
        return np.sqrt((np.abs(self.values) ** 2).sum(axis=(1, 2)))

    def spectral(self):
        """Per-node spectral (2-)norm."""
        return np.linalg.svd(self.values, compute_uv=False)[:, 0]

    def max_abs(self):
        return float(np.abs(self.values).max()) if self.values.size else 0.0


def _coerce(other, like):
    if isinstance(other, MatrixField):
        return other.values
    arr = np.asarray(other, dtype=complex)
    if arr.ndim == 0:
        return complex(arr) * np.eye(like.n, dtype=complex)[None, :, :]
    if arr.ndim == 2:
        return arr[None, :, :]
    return arr
