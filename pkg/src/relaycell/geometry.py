"""Hexagonal cell, sector and neighbor-cell geometry, evaluation grids.

Conventions (fixed throughout the package):

* The serving cell is a flat-top hexagon centered at the origin with
  circumradius ``d_b`` and vertices at angles 0, 60, ..., 300 degrees.
* Sector 1 is the 120-degree wedge around the +x axis (the rhombus with
  corners (0,0), (d_b/2, +h), (d_b, 0), (d_b/2, -h), h = sqrt(3)/2 * d_b).
  Its base station sits at the vertex (d_b, 0) and radiates toward the cell
  center (boresight along -x).
* The six neighbor cells are congruent hexagons centered at distance
  sqrt(3)*d_b, at angles 30 + k*60 degrees.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SQRT3 = np.sqrt(3.0)

NO_RELAY = -1


class EmptyGridError(ValueError):
    """Grid step too coarse: no sample point falls inside the sector."""


@dataclass(frozen=True)
class UserPos:
    """Planar position in meters relative to the serving cell center."""

    x: float
    y: float

    def as_array(self):
        return np.array([self.x, self.y], dtype=float)


@dataclass(frozen=True)
class CellLayout:
    """Cell size, relay positions (inside sector 1) and grid resolution."""

    d_b: float
    relays: tuple = ()
    grid_step: float = 25.0

    def __post_init__(self):
        if self.d_b <= 0:
            raise ValueError("d_b must be > 0")
        if self.grid_step <= 0:
            raise ValueError("grid_step must be > 0")
        rel = tuple((float(x), float(y)) for x, y in self.relays)
        object.__setattr__(self, "relays", rel)
        for x, y in rel:
            if not in_sector(np.array([x]), np.array([y]), self.d_b)[0]:
                raise ValueError(f"relay ({x}, {y}) lies outside sector 1")

    @property
    def n_r(self) -> int:
        return len(self.relays)

    @property
    def bs_pos(self):
        return np.array([self.d_b, 0.0])

    @property
    def sector_area(self) -> float:
        return (SQRT3 / 2.0) * self.d_b**2

    def relay_array(self):
        return np.array(self.relays, dtype=float).reshape(-1, 2)

    def mirrored(self) -> "CellLayout":
        """Layout reflected about the x axis (the sector's symmetry axis)."""
        return CellLayout(self.d_b, tuple((x, -y) for x, y in self.relays), self.grid_step)


def in_hexagon(x, y, d_b) -> np.ndarray:
    """Membership in the flat-top hexagon of circumradius d_b at the origin."""
    x = np.abs(np.asarray(x, dtype=float))
    y = np.abs(np.asarray(y, dtype=float))
    h = SQRT3 / 2.0 * d_b
    return (y <= h + 1e-9) & (y <= SQRT3 * (d_b - x) + 1e-9)


def in_sector(x, y, d_b) -> np.ndarray:
    """Membership in sector 1 (|angle| <= 60 degrees, inside the hexagon)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    wedge = (x >= 0.0) & (np.abs(y) <= SQRT3 * x + 1e-9)
    return wedge & in_hexagon(x, y, d_b)


def _centered_axis(lo: float, hi: float, step: float) -> np.ndarray:
    n = max(int(np.ceil((hi - lo) / step)), 1)
    return lo + (np.arange(n) + 0.5) * step


def _symmetric_axis(half_extent: float, step: float) -> np.ndarray:
    """Cell centers at +-(k + 1/2)*step, symmetric about 0 (no 0 sample)."""
    m = int(np.floor(half_extent / step + 0.5))
    if m <= 0:
        return np.empty(0)
    pos = (np.arange(m) + 0.5) * step
    return np.concatenate([-pos[::-1], pos])


def sector_grid(layout: CellLayout) -> np.ndarray:
    """Cell-centered sample points inside sector 1, row-major by y then x.

    The y samples are symmetric about the sector axis, so the grid maps onto
    itself under the mirror symmetry.  Returns an (n, 2) array; raises
    EmptyGridError when the step is so coarse that no sample lands inside.
    """
    h = SQRT3 / 2.0 * layout.d_b
    xs = _centered_axis(0.0, layout.d_b, layout.grid_step)
    ys = _symmetric_axis(h, layout.grid_step)
    if len(ys) == 0:
        raise EmptyGridError(f"grid_step {layout.grid_step} m leaves sector 1 of d_b={layout.d_b} m unsampled")
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    mask = in_sector(xx, yy, layout.d_b)
    pts = np.column_stack([xx[mask], yy[mask]])
    if len(pts) == 0:
        raise EmptyGridError(f"grid_step {layout.grid_step} m leaves sector 1 of d_b={layout.d_b} m unsampled")
    return pts


def hexagon_grid(d_b: float, grid_step: float) -> np.ndarray:
    """Cell-centered sample points inside a full hexagon, row-major by y then x."""
    h = SQRT3 / 2.0 * d_b
    xs = _symmetric_axis(d_b, grid_step)
    ys = _symmetric_axis(h, grid_step)
    if len(xs) == 0 or len(ys) == 0:
        raise EmptyGridError(f"grid_step {grid_step} m leaves the hexagon of d_b={d_b} m unsampled")
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    mask = in_hexagon(xx, yy, d_b)
    pts = np.column_stack([xx[mask], yy[mask]])
    if len(pts) == 0:
        raise EmptyGridError(f"grid_step {grid_step} m leaves the hexagon of d_b={d_b} m unsampled")
    return pts


def neighbor_cells(layout: CellLayout):
    """Centers and grids of the six surrounding cells.

    Returns (centers, grids): centers is a (6, 2) array of hexagon centers at
    distance sqrt(3)*d_b and angles 30 + k*60 degrees; grids[i] holds the
    absolute positions of the i-th neighbor's grid (the relative hexagon grid
    translated to its center).
    """
    angles = np.deg2rad(30.0 + 60.0 * np.arange(6))
    centers = SQRT3 * layout.d_b * np.column_stack([np.cos(angles), np.sin(angles)])
    rel = hexagon_grid(layout.d_b, layout.grid_step)
    grids = [rel + c for c in centers]
    return centers, grids


def serving_bs_relative(points: np.ndarray, d_b: float):
    """Serving base-station vertex for each point of a (relative) hexagon grid.

    Every cell hosts base stations at its 0/120/240-degree vertices, each
    serving the 120-degree wedge opening toward the cell center.  Returns an
    (n, 2) array of BS positions relative to the cell center.
    """
    ang = np.mod(np.arctan2(points[:, 1], points[:, 0]), 2.0 * np.pi)
    sector = np.floor_divide(np.mod(ang + np.pi / 3.0, 2.0 * np.pi), 2.0 * np.pi / 3.0).astype(int)
    bs_angles = np.deg2rad(np.array([0.0, 120.0, 240.0]))[np.clip(sector, 0, 2)]
    return d_b * np.column_stack([np.cos(bs_angles), np.sin(bs_angles)])


def serving_assignment(u: UserPos, layout: CellLayout, relay_cost) -> int:
    """Index of the relay minimizing ``relay_cost(u, relay_pos)``.

    Ties break toward the lowest index; ``NO_RELAY`` when the layout has no
    relays.
    """
    if layout.n_r == 0:
        return NO_RELAY
    costs = [float(relay_cost(u, np.asarray(r, dtype=float))) for r in layout.relays]
    return int(np.argmin(costs))
