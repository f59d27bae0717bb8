"""Run orchestration: control ticks, dynamics substeps, traces and metrics.

A run alternates controller updates at the control rate with dynamics
substeps at the physics step.  Commanded actuator heights pass through the
first-order actuator response once per tick (exact over the control period),
and the orientation field derived from the *actual* grid is held for the
tick.  Everything is deterministic given the scenario seed.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import control
from .control import ControllerParams
from .dynamics import ObjectState, PhysicsParams, first_order_lag, gravity_field, advance
from .surface import ActuatorGrid, ControlInput, SurfaceConfig, cell_orientation

DEFAULT_CONTROL_RATE = 10.0  # Hz
DEFAULT_SETTLE_SPEED = 1e-3  # m/s; "at rest" threshold for the stop rule

THREADS_ENV = "MORPHSURF_THREADS"


@dataclass(frozen=True)
class Scenario:
    """Everything needed to reproduce one run."""

    cfg: SurfaceConfig
    physics: PhysicsParams
    mode: str
    params: ControllerParams = field(default_factory=ControllerParams)
    objects: tuple[ObjectState, ...] | None = None  # explicit initial states
    random_count: int = 0  # used when objects is None
    control_rate: float = DEFAULT_CONTROL_RATE
    t_max: float = 300.0
    seed: int = 0
    reference_schedule: tuple[tuple[float, int, int], ...] = ()
    settle_speed: float = DEFAULT_SETTLE_SPEED

    def __post_init__(self):
        if self.control_rate <= 0 or self.t_max <= 0:
            raise ValueError("control_rate and t_max must be positive")
        if self.mode not in control.MODES:
            raise ValueError(f"unknown controller mode {self.mode!r}")
        if self.objects is None and self.random_count <= 0:
            raise ValueError("scenario needs explicit objects or a random count")
        period = 1.0 / self.control_rate
        substeps = round(period / self.physics.dt)
        if substeps < 1 or abs(substeps * self.physics.dt - period) > 1e-6 * period:
            raise ValueError(
                f"physics step {self.physics.dt} does not divide the control "
                f"period {period}"
            )

    @property
    def control_period(self) -> float:
        return 1.0 / self.control_rate

    @property
    def substeps(self) -> int:
        return round(self.control_period / self.physics.dt)


@dataclass
class SimTrace:
    """Tick-cadence record of one run.

    states has shape (rows, objects, 4) storing x, y, vx, vy.  dz_col/dz_row
    are the commanded height differences active from each row's time until
    the next row; col/row_heights are the actual (post-response) grid.
    """

    t: np.ndarray
    states: np.ndarray
    dz_col: np.ndarray
    dz_row: np.ndarray
    col_heights: np.ndarray
    row_heights: np.ndarray
    masses: np.ndarray

    @property
    def n_objects(self) -> int:
        return self.states.shape[1]


@dataclass
class RunMetrics:
    """Outcome of one run.

    convergence_time is trace-based: the earliest time after which every
    object stays inside the reference cell through the end of the trace
    (None if containment never holds for a settle window).  converged
    reports whether the run stopped on the settle rule before t_max.
    """

    convergence_time: float | None
    converged: bool
    arrival_times: list[float | None]
    path_lengths: list[float]
    wall_clock: float


def initial_objects(sc: Scenario) -> list[ObjectState]:
    """Explicit initial states, or seeded uniform placement over the workspace."""
    if sc.objects is not None:
        return [replace(o) for o in sc.objects]
    rng = np.random.default_rng(sc.seed)
    xs = rng.uniform(0.0, sc.cfg.width, sc.random_count)
    ys = rng.uniform(0.0, sc.cfg.length, sc.random_count)
    return [ObjectState(float(x), float(y)) for x, y in zip(xs, ys)]


def _reference_at(sc: Scenario, t: float) -> SurfaceConfig:
    cfg = sc.cfg
    for when, col, row in sc.reference_schedule:
        if t >= when - 1e-12:
            cfg = replace(sc.cfg, ref_col=col, ref_row=row)
    return cfg


def final_reference(sc: Scenario) -> SurfaceConfig:
    """Surface config with the last scheduled reference applied."""
    return _reference_at(sc, float("inf"))


def _grid_orientation_terms(
    grid_col: np.ndarray, grid_row: np.ndarray, cfg: SurfaceConfig, gravity: float
) -> tuple[np.ndarray, np.ndarray]:
    dz_col = grid_col[:-1] - grid_col[1:]
    dz_row = grid_row[:-1] - grid_row[1:]
    field = [
        [cell_orientation(dz_col[i], dz_row[j], cfg) for j in range(cfg.m)]
        for i in range(cfg.n)
    ]
    return gravity_field(field, gravity)


def run(sc: Scenario) -> tuple[SimTrace, RunMetrics]:
    """Simulate one scenario until the settle rule holds or t_max is reached."""
    start = time.perf_counter()
    cfg = sc.cfg
    p = sc.physics
    period = sc.control_period
    substeps = sc.substeps
    n_ticks = int(round(sc.t_max / period))

    objs = initial_objects(sc)
    n_obj = len(objs)
    x = np.array([o.x for o in objs])
    y = np.array([o.y for o in objs])
    vx = np.array([o.vx for o in objs])
    vy = np.array([o.vy for o in objs])
    masses = np.array([o.mass for o in objs])

    grid_col = np.zeros(cfg.n + 1)  # actual (post-response) heights
    grid_row = np.zeros(cfg.m + 1)

    rows_t: list[float] = []
    rows_state: list[np.ndarray] = []
    rows_dz_col: list[np.ndarray] = []
    rows_dz_row: list[np.ndarray] = []
    rows_grid_col: list[np.ndarray] = []
    rows_grid_row: list[np.ndarray] = []

    settle_streak = 0
    converged = False

    for tick in range(n_ticks + 1):
        t = tick * period
        ref_cfg = _reference_at(sc, t)

        # Stop once containment + rest has held for one full control period.
        if _settled(x, y, vx, vy, ref_cfg, sc.settle_speed):
            settle_streak += 1
        else:
            settle_streak = 0

        states = [
            ObjectState(float(x[k]), float(y[k]), float(vx[k]), float(vy[k]))
            for k in range(n_obj)
        ]
        u, commanded = control.command(states, sc.mode, sc.params, ref_cfg)
        grid_col = _lag(grid_col, np.asarray(commanded.col_heights), p.tau, period)
        grid_row = _lag(grid_row, np.asarray(commanded.row_heights), p.tau, period)

        rows_t.append(t)
        rows_state.append(np.column_stack([x, y, vx, vy]).copy())
        rows_dz_col.append(np.asarray(u.dz_col, dtype=float))
        rows_dz_row.append(np.asarray(u.dz_row, dtype=float))
        rows_grid_col.append(grid_col.copy())
        rows_grid_row.append(grid_row.copy())

        if settle_streak >= 2:
            converged = True
            break
        if tick == n_ticks:
            break

        gx, gy = _grid_orientation_terms(grid_col, grid_row, cfg, p.gravity)
        advance(x, y, vx, vy, gx, gy, cfg, p.friction, p.dt, substeps)

    trace = SimTrace(
        t=np.array(rows_t),
        states=np.stack(rows_state),
        dz_col=np.stack(rows_dz_col),
        dz_row=np.stack(rows_dz_row),
        col_heights=np.stack(rows_grid_col),
        row_heights=np.stack(rows_grid_row),
        masses=masses,
    )
    metrics = compute_metrics(
        trace,
        final_reference(sc),
        settle=period,
        converged=converged,
        wall_clock=time.perf_counter() - start,
    )
    return trace, metrics


def _lag(actual: np.ndarray, commanded: np.ndarray, tau: float, dt: float) -> np.ndarray:
    if tau == 0.0:
        return commanded.astype(float)
    k = 1.0 - math.exp(-dt / tau)
    return actual + (commanded - actual) * k


def _settled(
    x: np.ndarray,
    y: np.ndarray,
    vx: np.ndarray,
    vy: np.ndarray,
    cfg: SurfaceConfig,
    speed_tol: float,
) -> bool:
    if (vx * vx + vy * vy > speed_tol * speed_tol).any():
        return False
    return bool(_contained(x, y, cfg).all())


def _contained(x: np.ndarray, y: np.ndarray, cfg: SurfaceConfig) -> np.ndarray:
    ci = np.minimum(np.floor(x / cfg.W).astype(int) + 1, cfg.n)
    cj = np.minimum(np.floor(y / cfg.L).astype(int) + 1, cfg.m)
    return (ci == cfg.ref_col) & (cj == cfg.ref_row)


def convergence_time(
    trace: SimTrace, cfg: SurfaceConfig, settle: float
) -> float | None:
    """Earliest time after which every object stays in the reference cell.

    Containment must persist from that time to the end of the trace and
    cover at least the settle window; otherwise None.  Containment is
    checked at the trace cadence.
    """
    arrivals = arrival_times(trace, cfg)
    if any(a is None for a in arrivals):
        return None
    worst = max(arrivals)  # type: ignore[type-var]
    if trace.t[-1] - worst < settle - 1e-12:
        return None
    return float(worst)


def arrival_times(trace: SimTrace, cfg: SurfaceConfig) -> list[float | None]:
    """Per-object earliest time after which it never leaves the reference cell."""
    out: list[float | None] = []
    for k in range(trace.n_objects):
        inside = _contained(trace.states[:, k, 0], trace.states[:, k, 1], cfg)
        if inside.all():
            out.append(0.0)
            continue
        last_out = int(np.nonzero(~inside)[0][-1])
        if last_out == len(trace.t) - 1:
            out.append(None)
        else:
            out.append(float(trace.t[last_out + 1]))
    return out


def compute_metrics(
    trace: SimTrace,
    cfg: SurfaceConfig,
    settle: float,
    converged: bool,
    wall_clock: float,
) -> RunMetrics:
    steps = np.diff(trace.states[:, :, :2], axis=0)
    lengths = np.sqrt((steps**2).sum(axis=2)).sum(axis=0)
    return RunMetrics(
        convergence_time=convergence_time(trace, cfg, settle),
        converged=converged,
        arrival_times=arrival_times(trace, cfg),
        path_lengths=[float(v) for v in lengths],
        wall_clock=wall_clock,
    )


def _run_metrics_only(sc: Scenario) -> RunMetrics:
    return run(sc)[1]


@dataclass
class BatchEntry:
    """One batch slot: either metrics or the error that aborted that run."""

    scenario: Scenario
    metrics: RunMetrics | None
    error: str | None = None


def batch(scenarios: list[Scenario], workers: int | None = None) -> list[BatchEntry]:
    """Run scenarios independently; failures are reported per entry.

    Parallelism defaults to the CPU count and is capped by the
    MORPHSURF_THREADS environment variable.
    """
    if not scenarios:
        return []
    if workers is None:
        workers = os.cpu_count() or 1
        env = os.environ.get(THREADS_ENV)
        if env:
            workers = max(1, int(env))
    workers = min(workers, len(scenarios))

    results: list[BatchEntry] = []
    if workers <= 1:
        for sc in scenarios:
            results.append(_safe_entry(sc))
        return results

    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_run_metrics_only, sc) for sc in scenarios]
        for sc, fut in zip(scenarios, futures):
            try:
                results.append(BatchEntry(sc, fut.result()))
            except Exception as exc:  # noqa: BLE001 - reported, not raised
                results.append(BatchEntry(sc, None, error=str(exc)))
    return results


def _safe_entry(sc: Scenario) -> BatchEntry:
    try:
        return BatchEntry(sc, _run_metrics_only(sc))
    except Exception as exc:  # noqa: BLE001
        return BatchEntry(sc, None, error=str(exc))


def seed_sweep(sc: Scenario, seeds: list[int]) -> list[Scenario]:
    """The same scenario under different placement seeds."""
    return [replace(sc, seed=s) for s in seeds]
