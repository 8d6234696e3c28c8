"""Phase-space points, the symplectic form, and rectangular evaluation grids.

A point of R^{2n} is stored as (x, xi) with x the position part and xi the
momentum part.  Internally batches of points travel as arrays of shape
(..., 2n) with the n position coordinates first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class DimensionMismatchError(ValueError):
    """Two phase-space objects with different mode counts were combined."""


def _as_coords(v, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a scalar or 1-d sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must have finite entries, got {arr}")
    return arr


@dataclass(frozen=True)
class PhasePoint:
    """A point X = (x, xi) of R^{2n}, n in {1, 2}."""

    x: np.ndarray
    xi: np.ndarray

    def __init__(self, x, xi):
        object.__setattr__(self, "x", _as_coords(x, "x"))
        object.__setattr__(self, "xi", _as_coords(xi, "xi"))
        if self.x.shape != self.xi.shape:
            raise DimensionMismatchError(
                f"x has {self.x.size} coordinates but xi has {self.xi.size}"
            )
        if self.n not in (1, 2):
            raise ValueError(f"mode count n={self.n} unsupported, expected 1 or 2")
        self.x.setflags(write=False)
        self.xi.setflags(write=False)

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def vec(self) -> np.ndarray:
        """Coordinates as a flat array [x_1..x_n, xi_1..xi_n]."""
        return np.concatenate([self.x, self.xi])

    @staticmethod
    def from_vec(vec: np.ndarray) -> "PhasePoint":
        vec = np.asarray(vec, dtype=float)
        n = vec.size // 2
        return PhasePoint(vec[:n], vec[n:])

    def __add__(self, other: "PhasePoint") -> "PhasePoint":
        self._check_same_n(other)
        return PhasePoint(self.x + other.x, self.xi + other.xi)

    def __sub__(self, other: "PhasePoint") -> "PhasePoint":
        self._check_same_n(other)
        return PhasePoint(self.x - other.x, self.xi - other.xi)

    def __neg__(self) -> "PhasePoint":
        return PhasePoint(-self.x, -self.xi)

    def __rmul__(self, a: float) -> "PhasePoint":
        return PhasePoint(a * self.x, a * self.xi)

    def _check_same_n(self, other: "PhasePoint") -> None:
        if self.n != other.n:
            raise DimensionMismatchError(
                f"cannot combine points with n={self.n} and n={other.n}"
            )

    def __repr__(self) -> str:
        return f"PhasePoint(x={self.x.tolist()}, xi={self.xi.tolist()})"


def symplectic_form(X: PhasePoint, Z: PhasePoint) -> float:
    """sigma((x,xi),(y,eta)) = y.xi - x.eta; antisymmetric and bilinear."""
    X._check_same_n(Z)
    return float(np.dot(Z.x, X.xi) - np.dot(X.x, Z.xi))


def sq_norm(X: PhasePoint) -> float:
    """Squared Euclidean norm |X|^2 = sum x_j^2 + sum xi_j^2."""
    return float(np.dot(X.x, X.x) + np.dot(X.xi, X.xi))


def sigma_arr(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Symplectic form on coordinate arrays of shape (..., 2n)."""
    n = A.shape[-1] // 2
    return np.sum(B[..., :n] * A[..., n:], axis=-1) - np.sum(
        A[..., :n] * B[..., n:], axis=-1
    )


def sq_norm_arr(A: np.ndarray) -> np.ndarray:
    return np.sum(A * A, axis=-1)


@dataclass(frozen=True)
class GridAxis:
    lo: float
    hi: float
    count: int

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"axis needs lo < hi, got [{self.lo}, {self.hi}]")
        if self.count < 1:
            raise ValueError("axis needs count >= 1")

    def values(self) -> np.ndarray:
        if self.count == 1:
            return np.array([0.5 * (self.lo + self.hi)])
        return np.linspace(self.lo, self.hi, self.count)


@dataclass(frozen=True)
class PhaseGrid:
    """Rectangular grid over R^{2n}.

    Axes are ordered x_1..x_n, xi_1..xi_n.  Enumeration is total with axis 0
    (x_1) varying fastest, so CSV output is reproducible row for row.
    """

    axes: tuple[GridAxis, ...]

    def __init__(self, axes: Iterable[GridAxis | tuple]):
        axes = tuple(a if isinstance(a, GridAxis) else GridAxis(*a) for a in axes)
        if len(axes) not in (2, 4):
            raise ValueError("grid must have 2n axes with n in {1, 2}")
        object.__setattr__(self, "axes", axes)

    @property
    def n(self) -> int:
        return len(self.axes) // 2

    @property
    def size(self) -> int:
        return int(np.prod([a.count for a in self.axes]))

    def points(self) -> np.ndarray:
        """All grid points, shape (size, 2n), axis 0 fastest."""
        vals = [a.values() for a in self.axes]
        mesh = np.meshgrid(*vals, indexing="ij")
        # axis 0 fastest means it is the innermost loop: Fortran flatten order
        cols = [m.ravel(order="F") for m in mesh]
        return np.stack(cols, axis=1)

    @staticmethod
    def from_spec(spec: str) -> "PhaseGrid":
        """Parse a grid spec like "-2:2:17,-2:2:17" (lo:hi:count per axis)."""
        axes = []
        for part in spec.split(","):
            bits = part.split(":")
            if len(bits) != 3:
                raise ValueError(f"bad grid axis {part!r}, expected lo:hi:count")
            axes.append(GridAxis(float(bits[0]), float(bits[1]), int(bits[2])))
        return PhaseGrid(axes)

    def spec(self) -> str:
        return ",".join(f"{a.lo:g}:{a.hi:g}:{a.count}" for a in self.axes)


def square_grid(n: int, half_width: float, step: float) -> PhaseGrid:
    """Symmetric grid [-w, w]^{2n} with the given step."""
    count = int(round(2 * half_width / step)) + 1
    return PhaseGrid([GridAxis(-half_width, half_width, count)] * (2 * n))
