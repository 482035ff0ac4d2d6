"""Object-aware barrier navigation in semi-static scenes.

A desk-scale closed loop: a simulated box world is depth-sensed, mapped into
per-object truncated signed distance grids, monitored by a Bayesian
consistency filter, distilled into a semantics-aware control barrier field,
and navigated by a linearized receding-horizon controller.
"""

from .barrier import CbfField, CbfParams
from .consistency import ConsistencyParams, GaussianBetaState, beta_from_moments, update_consistency
from .mapping import MapParams, ObjectLibrary, ObjectRecord
from .mpc import ControllerParams, PredictedTrajectory, mpc_step
from .qp import QpProblem, QpSolution, solve_qp
from .runner import Metrics, RunRecord, compute_metrics, run_closed_loop
from .scenario import Scenario, load_scenario, save_scenario
from .world import ControlInput, DepthCamera, RobotState, SceneEvent, WorldObject

__version__ = "0.1.0"

__all__ = [
    "CbfField",
    "CbfParams",
    "ConsistencyParams",
    "ControlInput",
    "ControllerParams",
    "DepthCamera",
    "GaussianBetaState",
    "MapParams",
    "Metrics",
    "ObjectLibrary",
    "ObjectRecord",
    "PredictedTrajectory",
    "QpProblem",
    "QpSolution",
    "RobotState",
    "RunRecord",
    "Scenario",
    "SceneEvent",
    "WorldObject",
    "beta_from_moments",
    "compute_metrics",
    "load_scenario",
    "mpc_step",
    "run_closed_loop",
    "save_scenario",
    "solve_qp",
    "update_consistency",
]
