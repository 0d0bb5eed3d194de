"""Sample grids shared by the scans."""
from typing import Sequence, Tuple

import numpy as np

from ..errors import DomainError


def disk_samples(radius: float, grid: int, center: complex = 0.0) -> np.ndarray:
    """Points of a ``grid x grid`` lattice on ``[-r, r]^2`` inside the closed disk.

    Args:
        radius (float): Disk radius
        grid (int): Lattice points per real axis, at least 2
        center (complex): Disk center

    Returns:
        np.ndarray: Complex sample points in row-major lattice order
    """
    if grid < 2:
        raise DomainError(f"grid must be >= 2, got {grid}")
    if not radius > 0:
        raise DomainError(f"radius must be positive, got {radius}")
    axis = np.linspace(-radius, radius, grid)
    re, im = np.meshgrid(axis, axis, indexing="ij")
    lattice = (re + 1j * im).ravel()
    inside = np.abs(lattice) <= radius * (1 + 1e-12)
    return lattice[inside] + complex(center)


def polydisk_samples(
    radius: float, grid: int, center: Sequence[complex] = (0.0, 0.0)
) -> Tuple[np.ndarray, np.ndarray]:
    """All pairs of disk samples, one disk per coordinate."""
    first = disk_samples(radius, grid, center[0])
    second = disk_samples(radius, grid, center[1])
    z, w = np.meshgrid(first, second, indexing="ij")
    return z.ravel(), w.ravel()
