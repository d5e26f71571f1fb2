"""
Rough path and controlled curve data models.

Area convention: area[t, s] is the iterated integral of (X - X(s)) against dX
from node s to node t, first tensor index on the integrand, second on dX.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Any

import numpy as np

from .circle_grid import CircleGrid
from .errors import GridMismatch

# Alias for one-parameter grid functions: node axis first.
GridCurve = np.ndarray


@dataclass(frozen=True, eq=False)
class RoughPath:
    """
    A nu-rough path (X, XX) sampled on a circle grid.

    Attributes:
        nu: Hölder exponent
        grid: circle grid the path is sampled on
        x: first level, shape (N, 3)
        area: second level, shape (N, N, 3, 3), zero on the diagonal
        segment_area: area of each forward segment i -> i+1 (mod N), shape (N, 3, 3)
        holder_x: cached |X|_nu
        holder_area: cached |XX|_2nu
    """
    nu: float
    grid: CircleGrid
    x: np.ndarray
    area: np.ndarray
    segment_area: np.ndarray
    holder_x: float = 0.0
    holder_area: float = 0.0

    def __post_init__(self):
        n = self.grid.n_points
        if not 0.0 < self.nu < 1.0:
            raise ValueError(f"nu must lie in (0, 1), got {self.nu}")
        if self.x.shape != (n, 3):
            raise GridMismatch(f"x must have shape ({n}, 3), got {self.x.shape}")
        if self.area.shape != (n, n, 3, 3):
            raise GridMismatch(f"area must have shape ({n}, {n}, 3, 3), got {self.area.shape}")
        if self.segment_area.shape != (n, 3, 3):
            raise GridMismatch(f"segment_area must have shape ({n}, 3, 3), got {self.segment_area.shape}")

    @property
    def n_points(self) -> int:
        return self.grid.n_points

    @property
    def increments(self) -> np.ndarray:
        """Forward increments X(i+1) - X(i), wrapping at the seam."""
        return np.roll(self.x, -1, axis=0) - self.x

    @property
    def scale(self) -> float:
        """Curve scale used for tolerances: max(1, sup |X|)."""
        return max(1.0, float(np.max(np.abs(self.x))))

    @cached_property
    def loop_area(self) -> np.ndarray:
        """Area of the full loop based at node 0."""
        last = self.n_points - 1
        closing = self.x[0] - self.x[last]
        return (self.area[last, 0] + self.segment_area[last]
                + np.outer(self.x[last] - self.x[0], closing))

    @property
    def levy_area(self) -> np.ndarray:
        """Antisymmetric part of the full loop area."""
        loop = self.loop_area
        return 0.5 * (loop - loop.T)

    def with_area(self, area: np.ndarray) -> 'RoughPath':
        """Copy with a replaced area grid (fault injection and tests)."""
        return RoughPath(self.nu, self.grid, self.x, area, self.segment_area,
                         self.holder_x, self.holder_area)


@dataclass(frozen=True, eq=False)
class ControlledCurve:
    """
    A curve Y controlled by a rough path, with Gubinelli derivative Y'.

    The remainder R(t, s) = Y(t) - Y(s) - Y'(s)(X(t) - X(s)) is derived from
    (Y, Y', X) on first access and never stored independently.

    Attributes:
        y: values, shape (N,) + value shape
        y_prime: derivative, shape (N,) + value shape + (3,)
        base: the rough path Y is controlled by
    """
    y: np.ndarray
    y_prime: np.ndarray
    base: RoughPath

    def __post_init__(self):
        n = self.base.n_points
        if self.y.shape[0] != n or self.y_prime.shape[0] != n:
            raise GridMismatch(
                f"controlled curve needs {n} nodes, got {self.y.shape[0]} and {self.y_prime.shape[0]}"
            )
        if self.y_prime.shape != self.y.shape + (3,):
            raise GridMismatch(
                f"y_prime shape {self.y_prime.shape} does not match y shape {self.y.shape} + (3,)"
            )

    @property
    def value_shape(self) -> tuple:
        return self.y.shape[1:]

    @cached_property
    def remainder(self) -> np.ndarray:
        """R(t, s), shape (N, N) + value shape."""
        dy = self.y[:, None] - self.y[None, :]
        dx = self.base.x[:, None, :] - self.base.x[None, :, :]
        return dy - np.einsum('s...a,tsa->ts...', self.y_prime, dx)


@dataclass(frozen=True)
class ControlledNorm:
    """
    Norms of a controlled curve.

    Attributes:
        derivative_holder: |Y'|_nu
        remainder_norm: |R|_2nu
        sup_value: sup |Y|
        derivative_sup: sup of the row-sum norm of Y'
        holder_value: |Y|_nu
        base_holder: |X|_nu
    """
    derivative_holder: float
    remainder_norm: float
    sup_value: float
    derivative_sup: float
    holder_value: float
    base_holder: float

    @property
    def seminorm(self) -> float:
        return self.derivative_holder + self.remainder_norm

    @property
    def full_norm(self) -> float:
        return self.seminorm + self.sup_value

    @property
    def holder_bound(self) -> float:
        """
        Right-hand side of |Y|_nu <= (full + sup|Y'|)(1 + |X|_nu).

        Follows from |Y|_nu <= sup|Y'| |X|_nu + |R|_2nu. The plain form
        full(1 + |X|_nu) omits sup|Y'|, which full does not control: it fails
        on small loops with Y = X, Y' = I (see plain_holder_bound).
        """
        return (self.full_norm + self.derivative_sup) * (1.0 + self.base_holder)

    @property
    def plain_holder_bound(self) -> float:
        """full(1 + |X|_nu), reported alongside holder_bound."""
        return self.full_norm * (1.0 + self.base_holder)

    def holder_inequality_holds(self, rtol: float = 1e-12) -> bool:
        return self.holder_value <= self.holder_bound * (1.0 + rtol) + rtol

    def to_dict(self) -> Dict[str, Any]:
        return {
            'seminorm': self.seminorm,
            'full_norm': self.full_norm,
            'derivative_holder': self.derivative_holder,
            'remainder_norm': self.remainder_norm,
            'sup_value': self.sup_value,
            'derivative_sup': self.derivative_sup,
            'holder_value': self.holder_value,
            'holder_bound': self.holder_bound,
            'plain_holder_bound': self.plain_holder_bound,
        }
