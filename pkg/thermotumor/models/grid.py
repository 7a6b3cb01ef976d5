"""
Uniform cell-centered rectangular grids (dimension 1-3) and per-cell fields.

Cells are numbered in row-major (C) order over ``cells``; cell centers sit
at (i + 1/2)h along every axis. The discrete Laplacian is assembled as
-sum_a D_a^T D_a from the interior face-difference matrices D_a, which
encodes the homogeneous-Neumann (mirror ghost cell) closure exactly.
"""
from dataclasses import dataclass, field
from functools import cached_property, reduce
from typing import Callable, List, Tuple, Union

import numpy as np
import scipy.sparse as sp

from thermotumor.core.exceptions import FieldError


@dataclass(frozen=True)
class Grid:
    cells: Tuple[int, ...]
    extent: Tuple[float, ...]

    def __post_init__(self):
        cells = tuple(int(n) for n in self.cells)
        extent = tuple(float(length) for length in self.extent)
        if not 1 <= len(cells) <= 3:
            raise ValueError("grid dimension must be 1, 2 or 3")
        if len(extent) != len(cells):
            raise ValueError("cells and extent must have one entry per axis")
        if any(n < 2 for n in cells):
            raise ValueError("every axis needs at least 2 cells")
        if any(not (length > 0 and np.isfinite(length)) for length in extent):
            raise ValueError("every axis extent must be finite and > 0")
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "extent", extent)

    @classmethod
    def uniform(cls, dim: int, cells: int, extent: float = 1.0) -> "Grid":
        return cls((cells,) * dim, (extent,) * dim)

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.cells

    @property
    def size(self) -> int:
        return int(np.prod(self.cells))

    @property
    def spacing(self) -> Tuple[float, ...]:
        return tuple(length / n for length, n in zip(self.extent, self.cells))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def measure(self) -> float:
        return float(np.prod(self.extent))

    def centers(self) -> List[np.ndarray]:
        """Flattened cell-center coordinates, one array per axis"""
        axes = [(np.arange(n) + 0.5) * h for n, h in zip(self.cells, self.spacing)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return [m.ravel() for m in mesh]

    @cached_property
    def face_differences(self) -> List[sp.csr_matrix]:
        """Per-axis (u_j - u_i)/h over interior faces"""
        operators = []
        for axis, (n, h) in enumerate(zip(self.cells, self.spacing)):
            diff_1d = sp.diags([-np.ones(n - 1), np.ones(n - 1)], [0, 1], shape=(n - 1, n)) / h
            factors = [sp.identity(m, format="csr") for m in self.cells]
            factors[axis] = diff_1d
            operators.append(reduce(lambda a, b: sp.kron(a, b, format="csr"), factors).tocsr())
        return operators

    @cached_property
    def laplacian_matrix(self) -> sp.csr_matrix:
        lap = sp.csr_matrix((self.size, self.size))
        for diff in self.face_differences:
            lap = lap - (diff.T @ diff)
        return lap.tocsr()

    @cached_property
    def helmholtz_matrix(self) -> sp.csr_matrix:
        """-Δ_h + I"""
        return (sp.identity(self.size, format="csr") - self.laplacian_matrix).tocsr()


Number = Union[int, float]


@dataclass(eq=False)
class Field:
    """One scalar per cell of ``grid``, row-major"""
    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float).ravel()
        if values.size != self.grid.size:
            raise FieldError(
                f"field has {values.size} values but the grid has {self.grid.size} cells",
                context={"expected": self.grid.size, "got": values.size},
            )
        if not np.all(np.isfinite(values)):
            raise FieldError("field contains non-finite values")
        self.values = values

    # --- constructors ---
    @classmethod
    def constant(cls, grid: Grid, value: float) -> "Field":
        return cls(grid, np.full(grid.size, float(value)))

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.size))

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[..., np.ndarray]) -> "Field":
        """fn receives one coordinate array per axis"""
        values = np.broadcast_to(np.asarray(fn(*grid.centers()), dtype=float), (grid.size,))
        return cls(grid, values)

    # --- views ---
    def as_array(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> "Field":
        return Field(self.grid, fn(self.values))

    # --- arithmetic ---
    def _other(self, other: Union["Field", Number]) -> Union[np.ndarray, float]:
        if isinstance(other, Field):
            if other.grid != self.grid:
                raise FieldError("fields live on different grids")
            return other.values
        return float(other)

    def __add__(self, other):
        return Field(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Field(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return Field(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return Field(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return Field(self.grid, self.values / self._other(other))

    def __neg__(self):
        return Field(self.grid, -self.values)

    def allclose(self, other: "Field", atol: float = 0.0, rtol: float = 1e-12) -> bool:
        return other.grid == self.grid and bool(np.allclose(self.values, other.values, atol=atol, rtol=rtol))

    def equals(self, other: "Field") -> bool:
        return other.grid == self.grid and bool(np.array_equal(self.values, other.values))

