"""Masked 2D lattice: disc domain builder, five-point Laplacian, exports.

The medium is a disc of active cells embedded in a dense square array
(row-major, bounding box 2r+1 on a side). Inactive cells hold exactly 0.0
and are never read by the stencil: at the rim, missing neighbours drop out
of the stencil sum and the centre weight shrinks accordingly (degree
reduction). That is the discrete zero-flux boundary, the natural choice
for a closed droplet whose coating nothing crosses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(eq=False)
class DomainMask:
    """Bounding square with an inside-disc flag per cell.

    Directional edge weights (``w_north`` etc.) are 1.0 where both a cell
    and its neighbour in that direction are active, else 0.0. They are
    derived once here so the stencil never re-tests membership.
    """

    width: int
    height: int
    active: np.ndarray  # bool, shape (height, width)
    radius_nodes: int
    w_north: np.ndarray = field(init=False, repr=False)
    w_south: np.ndarray = field(init=False, repr=False)
    w_west: np.ndarray = field(init=False, repr=False)
    w_east: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        a = self.active
        if a.shape != (self.height, self.width):
            raise ValueError(
                f"active array shape {a.shape} does not match "
                f"{self.height}x{self.width}"
            )
        af = a.astype(np.float64)
        wn = np.zeros_like(af)
        ws = np.zeros_like(af)
        ww = np.zeros_like(af)
        we = np.zeros_like(af)
        wn[1:, :] = af[1:, :] * af[:-1, :]
        ws[:-1, :] = af[:-1, :] * af[1:, :]
        ww[:, 1:] = af[:, 1:] * af[:, :-1]
        we[:, :-1] = af[:, :-1] * af[:, 1:]
        self.w_north, self.w_south, self.w_west, self.w_east = wn, ws, ww, we

    @property
    def center(self) -> tuple[int, int]:
        """Grid centre (cx, cy) of the bounding square."""
        return (self.width - 1) // 2, (self.height - 1) // 2

    @property
    def active_count(self) -> int:
        return int(self.active.sum())

    def contains_disc(self, cx: int, cy: int, radius: int) -> bool:
        """True if every cell of the given disc is active."""
        for y in range(cy - radius, cy + radius + 1):
            for x in range(cx - radius, cx + radius + 1):
                if (x - cx) ** 2 + (y - cy) ** 2 <= radius * radius:
                    if not (0 <= x < self.width and 0 <= y < self.height):
                        return False
                    if not self.active[y, x]:
                        return False
        return True


@dataclass(eq=False)
class ScalarField:
    """Dimensionless concentration values over a mask; 0.0 off the disc."""

    values: np.ndarray  # float64, shape (mask.height, mask.width)
    mask: DomainMask

    def copy(self) -> "ScalarField":
        return ScalarField(self.values.copy(), self.mask)


def build_disc(radius_nodes: int) -> DomainMask:
    """Disc mask of the given radius, centred in a (2r+1)^2 bounding square.

    A cell (x, y) is active iff (x-cx)^2 + (y-cy)^2 <= radius^2.
    """
    if radius_nodes < 2:
        raise ValueError(f"disc radius must be >= 2, got {radius_nodes}")
    n = 2 * radius_nodes + 1
    c = radius_nodes
    yy, xx = np.mgrid[0:n, 0:n]
    active = (xx - c) ** 2 + (yy - c) ** 2 <= radius_nodes * radius_nodes
    return DomainMask(width=n, height=n, active=active, radius_nodes=radius_nodes)


def zeros(mask: DomainMask) -> ScalarField:
    return ScalarField(np.zeros((mask.height, mask.width)), mask)


def full(mask: DomainMask, value: float) -> ScalarField:
    """Field equal to `value` on active cells, 0 elsewhere."""
    vals = np.where(mask.active, float(value), 0.0)
    return ScalarField(vals, mask)


def laplacian5(fld: ScalarField, dx: float) -> ScalarField:
    """Five-point Laplacian with degree reduction at the mask edge.

    Per active cell: sum over active 4-neighbours of (f_n - f_c), divided
    by dx^2. Accumulation order is fixed (north, south, west, east) so the
    result is bitwise reproducible; for a constant field every difference
    is exactly zero, hence the output is exactly zero.
    """
    if dx <= 0:
        raise ValueError(f"grid spacing must be positive, got {dx}")
    u = fld.values
    m = fld.mask
    un = np.zeros_like(u)
    us = np.zeros_like(u)
    uw = np.zeros_like(u)
    ue = np.zeros_like(u)
    un[1:, :] = u[:-1, :]
    us[:-1, :] = u[1:, :]
    uw[:, 1:] = u[:, :-1]
    ue[:, :-1] = u[:, 1:]
    acc = m.w_north * (un - u)
    acc += m.w_south * (us - u)
    acc += m.w_west * (uw - u)
    acc += m.w_east * (ue - u)
    acc /= dx * dx
    out = np.where(m.active, acc, 0.0)
    return ScalarField(out, m)


def total_mass(fld: ScalarField) -> float:
    """Exact sum of values over active cells (row-major extraction, fsum)."""
    return math.fsum(fld.values[fld.mask.active])


def write_pgm(fld: ScalarField, path) -> None:
    """Binary P5 graymap: values clamped to [0, 1] mapped to 0..255.

    Inactive cells are written as 0.
    """
    u = np.clip(fld.values, 0.0, 1.0) * 255.0
    pixels = np.where(fld.mask.active, np.rint(u), 0.0).astype(np.uint8)
    header = f"P5\n{fld.mask.width} {fld.mask.height}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(pixels.tobytes())


def field_to_csv(fld: ScalarField) -> str:
    """Numeric CSV grid, one row per lattice row; inactive cells are empty."""
    lines = []
    for y in range(fld.mask.height):
        row = [
            repr(float(fld.values[y, x])) if fld.mask.active[y, x] else ""
            for x in range(fld.mask.width)
        ]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"
