"""Surface controllers: distributed allocation, wave, static funnel, single-cell.

All controllers map object observations to the n+m height differences of a
ControlInput; the reference cell is always leveled to the lowest potential.
The stroke split (frac_x, frac_y) decides how much of the actuator stroke
serves each axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .dynamics import ObjectState, locate_cell
from .surface import (
    ActuatorGrid,
    ControlInput,
    SurfaceConfig,
    reconstruct_actuator_grid,
)

MODES = ("distributed", "wave", "funnel", "single_cell")


@dataclass(frozen=True)
class OccupancySets:
    """Occupied columns/rows split by their side of the reference cell.

    cols_left/right hold occupied column indices strictly below/above the
    reference column; rows_below/above likewise for rows.  The reference
    column and row never appear.
    """

    cols_left: tuple[int, ...]
    cols_right: tuple[int, ...]
    rows_below: tuple[int, ...]
    rows_above: tuple[int, ...]


@dataclass(frozen=True)
class SingleCellGains:
    """Feedback gains and saturation bounds for the single-cell law.

    Gains are capped at stroke/(2W) and stroke/(2L) so the four actuator
    heights stay inside [0, stroke].  Saturation bounds default to the cell
    dimensions.
    """

    kx: float
    ky: float
    sat_x: float | None = None
    sat_y: float | None = None

    def validate(self, cfg: SurfaceConfig) -> None:
        if self.kx <= 0 or self.ky <= 0:
            raise ValueError("gains must be positive")
        if self.kx > cfg.stroke / (2 * cfg.W) + 1e-12:
            raise ValueError(f"kx {self.kx} exceeds stroke/(2W)")
        if self.ky > cfg.stroke / (2 * cfg.L) + 1e-12:
            raise ValueError(f"ky {self.ky} exceeds stroke/(2L)")


@dataclass(frozen=True)
class ControllerParams:
    """Mode-independent controller knobs carried by a scenario."""

    frac_x: float = 0.5
    frac_y: float = 0.5
    gains: SingleCellGains | None = None
    # Hardware-style tuning: put the whole stroke on whichever axis still
    # carries more error, per tick, instead of the fixed split.
    hardware_split: bool = False


def occupancy_sets(objects: list[ObjectState], cfg: SurfaceConfig) -> OccupancySets:
    """Occupied columns/rows relative to the reference cell."""
    cols = set()
    rows = set()
    for o in objects:
        col, row = locate_cell(o, cfg)
        cols.add(col)
        rows.add(row)
    return OccupancySets(
        cols_left=tuple(sorted(c for c in cols if c < cfg.ref_col)),
        cols_right=tuple(sorted(c for c in cols if c > cfg.ref_col)),
        rows_below=tuple(sorted(r for r in rows if r < cfg.ref_row)),
        rows_above=tuple(sorted(r for r in rows if r > cfg.ref_row)),
    )


def distributed_allocation(
    s: OccupancySets, a: float, b: float, cfg: SurfaceConfig
) -> ControlInput:
    """Spread each side's stroke share evenly over its occupied columns/rows."""
    dz_col = [0.0] * cfg.n
    for col in s.cols_left:
        dz_col[col - 1] = a * cfg.stroke / len(s.cols_left)
    for col in s.cols_right:
        dz_col[col - 1] = -a * cfg.stroke / len(s.cols_right)
    dz_row = [0.0] * cfg.m
    for row in s.rows_below:
        dz_row[row - 1] = b * cfg.stroke / len(s.rows_below)
    for row in s.rows_above:
        dz_row[row - 1] = -b * cfg.stroke / len(s.rows_above)
    return ControlInput(tuple(dz_col), tuple(dz_row), a, b)


def wave(s: OccupancySets, a: float, b: float, cfg: SurfaceConfig) -> ControlInput:
    """Put each side's full stroke share on its outermost occupied column/row."""
    dz_col = [0.0] * cfg.n
    if s.cols_left:
        dz_col[min(s.cols_left) - 1] = a * cfg.stroke
    if s.cols_right:
        dz_col[max(s.cols_right) - 1] = -a * cfg.stroke
    dz_row = [0.0] * cfg.m
    if s.rows_below:
        dz_row[min(s.rows_below) - 1] = b * cfg.stroke
    if s.rows_above:
        dz_row[max(s.rows_above) - 1] = -b * cfg.stroke
    return ControlInput(tuple(dz_col), tuple(dz_row), a, b)


def static_funnel(a: float, b: float, cfg: SurfaceConfig) -> ControlInput:
    """Time-invariant bowl: distributed allocation as if every column/row were occupied."""
    full = OccupancySets(
        cols_left=tuple(range(1, cfg.ref_col)),
        cols_right=tuple(range(cfg.ref_col + 1, cfg.n + 1)),
        rows_below=tuple(range(1, cfg.ref_row)),
        rows_above=tuple(range(cfg.ref_row + 1, cfg.m + 1)),
    )
    return distributed_allocation(full, a, b, cfg)


def _saturate(value: float, bound: float) -> float:
    return math.copysign(bound, value) if abs(value) > bound else value


def single_cell_feedback(
    e_x: float,
    e_y: float,
    gains: SingleCellGains,
    cfg: SurfaceConfig,
) -> tuple[float, float, tuple[float, float, float, float]]:
    """Saturated position feedback for one cell, tilting about its midlines.

    Returns (dz1, dz2, (Z1, Z2, Z3, Z4)).  Negative feedback: an error east
    of the target (e_x > 0) lowers the west side so the object slides back.
    """
    gains.validate(cfg)
    sat_x = gains.sat_x if gains.sat_x is not None else cfg.W
    sat_y = gains.sat_y if gains.sat_y is not None else cfg.L
    dz1 = -gains.kx * _saturate(e_x, sat_x)
    dz2 = -gains.ky * _saturate(e_y, sat_y)
    half = cfg.stroke / 2.0
    z1 = half + dz1 / 2.0 + dz2 / 2.0
    z2 = half - dz1 / 2.0 + dz2 / 2.0
    z3 = half - dz1 / 2.0 - dz2 / 2.0
    z4 = half + dz1 / 2.0 - dz2 / 2.0
    return dz1, dz2, (z1, z2, z3, z4)


def split_fractions(
    objects: list[ObjectState], params: ControllerParams, cfg: SurfaceConfig
) -> tuple[float, float]:
    """Per-tick stroke split; all-or-nothing when hardware_split is on."""
    if not params.hardware_split:
        return params.frac_x, params.frac_y
    xc = (cfg.ref_col - 0.5) * cfg.W
    yc = (cfg.ref_row - 0.5) * cfg.L
    err_x = sum(abs(o.x - xc) for o in objects)
    err_y = sum(abs(o.y - yc) for o in objects)
    return (1.0, 0.0) if err_x >= err_y else (0.0, 1.0)


def control_input(
    objects: list[ObjectState],
    mode: str,
    params: ControllerParams,
    cfg: SurfaceConfig,
) -> ControlInput:
    """ControlInput commanded by the chosen multi-cell controller this tick."""
    if mode == "funnel":
        # The funnel never reacts to the objects, so the per-tick hardware
        # split does not apply either.
        return static_funnel(params.frac_x, params.frac_y, cfg)
    a, b = split_fractions(objects, params, cfg)
    sets = occupancy_sets(objects, cfg)
    if mode == "distributed":
        return distributed_allocation(sets, a, b, cfg)
    if mode == "wave":
        return wave(sets, a, b, cfg)
    raise ValueError(f"unknown controller mode {mode!r}")


def command(
    objects: list[ObjectState],
    mode: str,
    params: ControllerParams,
    cfg: SurfaceConfig,
) -> tuple[ControlInput, ActuatorGrid]:
    """Commanded (input, grid) pair for this tick.

    Multi-cell modes compose occupancy sets, the chosen allocation and grid
    reconstruction.  single_cell runs the saturated feedback law on a 1x1
    surface, driving the first object to the cell center; its grid tilts
    about the cell midlines instead of leveling the reference actuators, and
    the stroke split carried in the input is a placeholder.
    """
    if mode == "single_cell":
        if cfg.n != 1 or cfg.m != 1:
            raise ValueError("single_cell mode requires a 1x1 surface")
        if not objects:
            raise ValueError("single_cell mode needs an object to regulate")
        gains = params.gains
        if gains is None:
            gains = SingleCellGains(
                kx=cfg.stroke / (2 * cfg.W), ky=cfg.stroke / (2 * cfg.L)
            )
        o = objects[0]
        dz1, dz2, _ = single_cell_feedback(
            o.x - cfg.W / 2.0, o.y - cfg.L / 2.0, gains, cfg
        )
        quarter = cfg.stroke / 4.0
        grid = ActuatorGrid(
            (quarter + dz1 / 2.0, quarter - dz1 / 2.0),
            (quarter + dz2 / 2.0, quarter - dz2 / 2.0),
        )
        return ControlInput((dz1,), (dz2,), 0.5, 0.5), grid
    u = control_input(objects, mode, params, cfg)
    return u, reconstruct_actuator_grid(u, cfg)


def control_tick(
    objects: list[ObjectState],
    mode: str,
    params: ControllerParams,
    cfg: SurfaceConfig,
) -> ActuatorGrid:
    """Commanded actuator grid for this tick."""
    return command(objects, mode, params, cfg)[1]
