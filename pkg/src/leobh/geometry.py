"""Constellation layout: hexagonal cell grid, satellite placement, coverage sets.

Cells live on a flat local tangent plane (km).  Cell centers form a hex
lattice with spacing sqrt(3) * cell_radius, so neighbouring hexagons of
circumradius `cell_radius_km` tile without gaps.  Satellites sit on a
rows x cols grid of sub-satellite points whose spacing is solved
numerically so that the union of per-satellite footprints (the C cells
nearest each sub-satellite point) has exactly `n_cells_total` members.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .scenario import Scenario

# Fixed sub-lattice offset of the satellite grid.  A generic (irrational-ish)
# alignment removes distance ties, so footprint membership changes one cell at
# a time as the spacing grows and every union size in range is reachable.
_GRID_OFFSET = (0.2371, 0.1489)


@dataclass
class CellGrid:
    """Cell centers on the tangent plane, indexed by cell id."""

    centers: np.ndarray  # (V, 2) km

    @property
    def n_cells(self) -> int:
        return len(self.centers)

    def check_cell(self, cell_id: int) -> None:
        if not 0 <= cell_id < self.n_cells:
            raise ValueError(f"unknown cell id {cell_id} (grid has {self.n_cells} cells)")

    def distance_km(self, i: int, j: int) -> float:
        self.check_cell(i)
        self.check_cell(j)
        return float(np.hypot(*(self.centers[i] - self.centers[j])))

    def pairwise_distances_km(self) -> np.ndarray:
        d = self.centers[:, None, :] - self.centers[None, :, :]
        return np.hypot(d[..., 0], d[..., 1])

    def to_dict(self) -> dict:
        return {"centers_km": self.centers.tolist()}


@dataclass
class CoverageMap:
    """Satellite positions and their footprints (ordered nearest-first)."""

    sat_positions: np.ndarray  # (N, 3) km, z = altitude
    covered: list[list[int]]   # per satellite, C cell ids

    @property
    def n_sats(self) -> int:
        return len(self.sat_positions)

    def covering_sats(self, n_cells: int) -> list[list[int]]:
        """For each cell id, the satellites that cover it."""
        out: list[list[int]] = [[] for _ in range(n_cells)]
        for n, cells in enumerate(self.covered):
            for c in cells:
                out[c].append(n)
        return out

    def to_dict(self) -> dict:
        return {
            "sat_positions_km": self.sat_positions.tolist(),
            "covered": [list(map(int, cells)) for cells in self.covered],
        }


def export_layout(grid: CellGrid, coverage: CoverageMap, path: str | Path) -> None:
    doc = {"grid": grid.to_dict(), "coverage": coverage.to_dict()}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def _sat_grid_shape(n_sats: int) -> tuple[int, int]:
    rows = max(1, int(math.isqrt(n_sats)))
    cols = math.ceil(n_sats / rows)
    return rows, cols


def _sat_xy(n_sats: int, spacing_km: float, lattice_step_km: float) -> np.ndarray:
    rows, cols = _sat_grid_shape(n_sats)
    xs, ys = [], []
    for i in range(n_sats):
        r, c = divmod(i, cols)
        xs.append((c - (cols - 1) / 2.0) * spacing_km)
        ys.append((r - (rows - 1) / 2.0) * spacing_km)
    off = np.array(_GRID_OFFSET) * lattice_step_km
    return np.column_stack([xs, ys]) + off


def _hex_lattice(x_lo, x_hi, y_lo, y_hi, step_km):
    """Axial hex lattice points covering the given bounding box."""
    row_h = step_km * math.sqrt(3.0) / 2.0
    r_min, r_max = math.floor(y_lo / row_h) - 1, math.ceil(y_hi / row_h) + 1
    qs, rs = [], []
    for r in range(r_min, r_max + 1):
        y = r * row_h
        # x = step * (q + r/2)
        q_min = math.floor(x_lo / step_km - r / 2.0) - 1
        q_max = math.ceil(x_hi / step_km - r / 2.0) + 1
        for q in range(q_min, q_max + 1):
            qs.append(q)
            rs.append(r)
    q = np.array(qs, dtype=np.int64)
    r = np.array(rs, dtype=np.int64)
    xy = np.column_stack([step_km * (q + r / 2.0), r * row_h])
    return q, r, xy


def _footprints(sat_xy: np.ndarray, lattice_xy: np.ndarray, c_per_sat: int) -> np.ndarray:
    """Indices (N, C) of the C lattice cells nearest each satellite."""
    d = sat_xy[:, None, :] - lattice_xy[None, :, :]
    dist = np.hypot(d[..., 0], d[..., 1])
    # distance-first deterministic order; lattice index breaks near-ties
    order = np.argsort(dist, axis=1, kind="stable")
    return order[:, :c_per_sat]


def build_constellation(scenario: Scenario) -> tuple[CellGrid, CoverageMap]:
    """Generate the cell grid and coverage sets for a scenario.

    Raises ValueError("layout-infeasible ...") when no satellite spacing in
    the scanned range produces exactly `n_cells_total` distinct cells.
    """
    n, c, v = scenario.n_sats, scenario.cells_per_sat, scenario.n_cells_total
    step = math.sqrt(3.0) * scenario.cell_radius_km

    if n == 1:
        if v != c:
            raise ValueError("layout-infeasible: single satellite covers exactly C cells")
        spacing = 0.0
    else:
        spacing = _solve_spacing(n, c, v, step)

    sat_xy = _sat_xy(n, spacing, step)
    margin = 6.0 * step
    q, r, lattice_xy = _hex_lattice(
        sat_xy[:, 0].min() - margin, sat_xy[:, 0].max() + margin,
        sat_xy[:, 1].min() - margin, sat_xy[:, 1].max() + margin, step)
    foot = _footprints(sat_xy, lattice_xy, c)

    used = np.unique(foot.ravel())
    if len(used) != v:
        raise ValueError(
            f"layout-infeasible: solved spacing yields {len(used)} cells, expected {v}")

    # final ids ordered by (row, column) of the axial lattice
    order = np.lexsort((q[used], r[used]))
    used = used[order]
    id_of = {int(lat): cid for cid, lat in enumerate(used)}
    grid = CellGrid(centers=lattice_xy[used].copy())

    covered = []
    for sat in range(n):
        covered.append([id_of[int(lat)] for lat in foot[sat]])
    sat_pos = np.column_stack([sat_xy, np.full(n, scenario.altitude_km)])
    return grid, CoverageMap(sat_positions=sat_pos, covered=covered)


_BUILD_CACHE: dict[tuple, tuple[CellGrid, CoverageMap]] = {}


def build_constellation_cached(scenario: Scenario) -> tuple[CellGrid, CoverageMap]:
    """Memoized `build_constellation` (layouts depend only on these fields)."""
    key = (scenario.n_sats, scenario.cells_per_sat, scenario.n_cells_total,
           scenario.cell_radius_km, scenario.altitude_km)
    if key not in _BUILD_CACHE:
        _BUILD_CACHE[key] = build_constellation(scenario)
    return _BUILD_CACHE[key]


def _solve_spacing(n: int, c: int, v: int, step: float) -> float:
    """Scan satellite-grid spacing until the footprint union has v cells."""
    rings = _footprint_rings(c)
    lo = 0.25 * step
    hi = (4 * rings + 6) * step
    n_steps = 2400
    margin = (2 * rings + 4) * step

    # one lattice big enough for the widest spacing under scan
    sat_hi = _sat_xy(n, hi, step)
    _, _, lattice_xy = _hex_lattice(
        sat_hi[:, 0].min() - margin, sat_hi[:, 0].max() + margin,
        sat_hi[:, 1].min() - margin, sat_hi[:, 1].max() + margin, step)

    for k in range(n_steps + 1):
        spacing = lo + (hi - lo) * k / n_steps
        foot = _footprints(_sat_xy(n, spacing, step), lattice_xy, c)
        if len(np.unique(foot.ravel())) == v:
            return spacing
    raise ValueError(
        f"layout-infeasible: no spacing in [{lo:.1f}, {hi:.1f}] km gives {v} distinct cells")


def _footprint_rings(c: int) -> int:
    rings = 0
    total = 1
    while total < c:
        rings += 1
        total += 6 * rings
    return rings


def slant_range_km(sat_pos: np.ndarray, cell_id: int, grid: CellGrid) -> float:
    """Straight-line satellite-to-cell-center distance."""
    grid.check_cell(cell_id)
    gx, gy = grid.centers[cell_id]
    dx, dy, dz = sat_pos[0] - gx, sat_pos[1] - gy, sat_pos[2]
    return float(math.sqrt(dx * dx + dy * dy + dz * dz))


def off_axis_angle_deg(sat_pos: np.ndarray, boresight_cell: int, victim_cell: int,
                       grid: CellGrid) -> float:
    """Angle at the satellite between the boresight and victim directions."""
    grid.check_cell(boresight_cell)
    grid.check_cell(victim_cell)
    if boresight_cell == victim_cell:
        return 0.0
    sat = np.asarray(sat_pos, dtype=float)
    vb = np.append(grid.centers[boresight_cell], 0.0) - sat
    vv = np.append(grid.centers[victim_cell], 0.0) - sat
    cosang = np.dot(vb, vv) / (np.linalg.norm(vb) * np.linalg.norm(vv))
    return float(np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0))))
