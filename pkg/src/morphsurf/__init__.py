"""Morphing-surface conveyance: grid kinematics, object dynamics, controllers."""

from .control import (
    ControllerParams,
    OccupancySets,
    SingleCellGains,
    control_tick,
    distributed_allocation,
    occupancy_sets,
    single_cell_feedback,
    static_funnel,
    wave,
)
from .dynamics import (
    ObjectState,
    PhysicsParams,
    acceleration,
    actuator_response,
    height_at,
    locate_cell,
    steady_speed,
    step,
)
from .engine import (
    RunMetrics,
    Scenario,
    SimTrace,
    batch,
    convergence_time,
    run,
    seed_sweep,
)
from .surface import (
    ActuatorGrid,
    CellOrientation,
    ConstraintReport,
    ControlInput,
    InfeasibleControlError,
    SurfaceConfig,
    cell_orientation,
    dof_count,
    planar_completion,
    reconstruct_actuator_grid,
    rotation_matrix,
    surface_orientation_field,
    validate_grid,
)

__all__ = [
    "ActuatorGrid",
    "CellOrientation",
    "ConstraintReport",
    "ControlInput",
    "ControllerParams",
    "InfeasibleControlError",
    "ObjectState",
    "OccupancySets",
    "PhysicsParams",
    "RunMetrics",
    "Scenario",
    "SimTrace",
    "SingleCellGains",
    "SurfaceConfig",
    "acceleration",
    "actuator_response",
    "batch",
    "cell_orientation",
    "control_tick",
    "convergence_time",
    "distributed_allocation",
    "dof_count",
    "height_at",
    "locate_cell",
    "occupancy_sets",
    "planar_completion",
    "reconstruct_actuator_grid",
    "rotation_matrix",
    "run",
    "seed_sweep",
    "single_cell_feedback",
    "static_funnel",
    "steady_speed",
    "step",
    "surface_orientation_field",
    "validate_grid",
    "wave",
]
