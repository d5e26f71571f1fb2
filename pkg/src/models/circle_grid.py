"""
Uniform grid on the circle S^1, identified with [0, 1).
"""

from dataclasses import dataclass

import numpy as np

MIN_POINTS = 8
MAX_POINTS = 1024


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class CircleGrid:
    """
    Uniform circle grid with nodes xi_i = i / N.

    Attributes:
        n_points: grid size N, a power of two with 8 <= N <= 1024
    """
    n_points: int

    def __post_init__(self):
        if not isinstance(self.n_points, (int, np.integer)) or isinstance(self.n_points, bool):
            raise ValueError("n_points must be an integer")
        if not is_power_of_two(int(self.n_points)):
            raise ValueError(f"n_points must be a power of two, got {self.n_points}")
        if not MIN_POINTS <= self.n_points <= MAX_POINTS:
            raise ValueError(f"n_points must lie in [{MIN_POINTS}, {MAX_POINTS}], got {self.n_points}")

    @property
    def spacing(self) -> float:
        return 1.0 / self.n_points

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_points) / self.n_points

    def coarsen(self, factor: int = 2) -> 'CircleGrid':
        """Grid on every `factor`-th node."""
        return CircleGrid(self.n_points // factor)
