"""Receding-horizon controller with linearized discrete barrier constraints.

Dynamics and the per-step barrier decay condition are linearized about the
previous predicted trajectory, giving a quadratic program in deviation
variables. Barrier rows are softened by heavily penalized slack so the
program stays solvable under noise while violations remain observable; the
classic baseline instead imposes hard barrier-positivity state constraints.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .barrier import CbfField
from .geometry import wrap_angle
from .qp import QpProblem, QpSolution, solve_qp
from .world import ControlInput

MODE_CBF = "cbf"
MODE_CLASSIC = "classic"

FALLBACK_HOLD = "hold"
FALLBACK_BRAKE = "brake"


@dataclass(frozen=True)
class ControllerParams:
    horizon: int = 10
    dt: float = 0.2
    gamma_bar: float = 0.03  # barrier decay rate, in (0, 1]
    q_diag: tuple[float, float, float] = (1.0, 1.0, 0.1)
    r_diag: tuple[float, float, float] = (0.1, 0.1, 0.1)
    p_diag: tuple[float, float, float] = (10.0, 10.0, 1.0)
    v_max: float = 0.5
    omega_max: float = 1.0
    rho_slack: float = 1.0e4
    workspace: tuple[float, float, float, float] = (-10.0, -10.0, 10.0, 10.0)  # xmin, ymin, xmax, ymax
    classic_epsilon: float = 1.0e-3

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not 0.0 < self.gamma_bar <= 1.0:
            raise ValueError("gamma_bar must lie in (0, 1]")
        if min(self.r_diag) <= 0.0 or min(self.q_diag) < 0.0 or min(self.p_diag) < 0.0:
            raise ValueError("R must be positive definite, Q and P positive semidefinite")

    @property
    def input_bounds(self) -> np.ndarray:
        return np.array([self.v_max, self.v_max, self.omega_max])


@dataclass
class PredictedTrajectory:
    """Controller prediction: absolute states/inputs plus solve diagnostics."""

    states: np.ndarray  # (T+1, 3)
    inputs: np.ndarray  # (T, 3)
    slack: np.ndarray  # (T,)
    status: str
    objective: float
    h_values: np.ndarray  # (T+1,) barrier at the predicted states
    iterations: int = 0
    residuals: dict = field(default_factory=dict)

    @property
    def max_slack(self) -> float:
        return float(self.slack.max()) if self.slack.size else 0.0


def hold_trajectory(x_t: np.ndarray, horizon: int) -> PredictedTrajectory:
    """Bootstrap operating trajectory: stay at the current state, zero input."""
    states = np.tile(np.asarray(x_t, dtype=float), (horizon + 1, 1))
    return PredictedTrajectory(
        states=states,
        inputs=np.zeros((horizon, 3)),
        slack=np.zeros(horizon),
        status="hold",
        objective=0.0,
        h_values=np.zeros(horizon + 1),
    )


def _grad3(field_: CbfField, state: np.ndarray) -> np.ndarray:
    gx, gy = field_.query_grad(state[0], state[1])
    return np.array([gx, gy, 0.0])  # heading never changes the barrier


def linearize_cbf_constraint(
    field_: CbfField,
    x_op: np.ndarray,
    u_op: np.ndarray,
    dt: float,
    gamma_bar: float,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Affine coefficients (C, D, c) of the linearized decay condition.

    About the operating point, the requirement that the barrier shrink no
    faster than the configured geometric rate becomes
    C . dx + D . du + c >= 0 in the deviation variables.
    """
    x_op = np.asarray(x_op, dtype=float)
    u_op = np.asarray(u_op, dtype=float)
    if not (np.all(np.isfinite(x_op)) and np.all(np.isfinite(u_op))):
        raise ValueError("operating point must be finite")
    x_plus = x_op + dt * u_op
    g_plus = _grad3(field_, x_plus)
    g_now = _grad3(field_, x_op)
    c_coef = g_plus - (1.0 - gamma_bar) * g_now
    d_coef = dt * g_plus
    const = field_.query_h(x_plus[0], x_plus[1]) - (1.0 - gamma_bar) * field_.query_h(x_op[0], x_op[1])
    return c_coef, d_coef, float(const)


def build_qp(
    params: ControllerParams,
    x_t: np.ndarray,
    prev_traj: PredictedTrajectory,
    field_: CbfField,
    goal: np.ndarray,
    mode: str = MODE_CBF,
) -> QpProblem:
    qp, _ = _build_qp_internal(params, x_t, prev_traj, field_, goal, mode)
    return qp


def _build_qp_internal(params, x_t, prev_traj, field_, goal, mode):
    T = params.horizon
    dt = params.dt
    op_s = np.asarray(prev_traj.states, dtype=float)
    op_u = np.asarray(prev_traj.inputs, dtype=float)
    x_t = np.asarray(x_t, dtype=float)
    goal = np.asarray(goal, dtype=float)

    n_x = 3 * (T + 1)
    n_u = 3 * T
    n_slack = T if mode == MODE_CBF else 0
    n = n_x + n_u + n_slack

    def ix(k):
        return slice(3 * k, 3 * k + 3)

    def iu(k):
        return slice(n_x + 3 * k, n_x + 3 * k + 3)

    def isl(k):
        return n_x + n_u + k

    q = np.diag(params.q_diag)
    r = np.diag(params.r_diag)
    p = np.diag(params.p_diag)

    H = np.zeros((n, n))
    g = np.zeros(n)
    offset = 0.0
    for k in range(T + 1):
        w = p if k == T else q
        err = op_s[k] - goal
        err[2] = wrap_angle(err[2])
        H[ix(k), ix(k)] = 2.0 * w
        g[ix(k)] = 2.0 * w @ err
        offset += float(err @ w @ err)
    for k in range(T):
        H[iu(k), iu(k)] = 2.0 * r
        g[iu(k)] = 2.0 * r @ op_u[k]
        offset += float(op_u[k] @ r @ op_u[k])
    if n_slack:
        g[n_x + n_u :] = params.rho_slack

    me = 3 * (T + 1)
    A = np.zeros((me, n))
    b = np.zeros(me)
    A[0:3, ix(0)] = np.eye(3)
    init_err = x_t - op_s[0]
    init_err[2] = wrap_angle(init_err[2])
    b[0:3] = init_err
    for k in range(T):
        rows = slice(3 * (k + 1), 3 * (k + 2))
        A[rows, ix(k + 1)] = np.eye(3)
        A[rows, ix(k)] = -np.eye(3)
        A[rows, iu(k)] = -dt * np.eye(3)
        b[rows] = op_s[k] + dt * op_u[k] - op_s[k + 1]  # defect of the operating trajectory

    rows_g = []
    rows_h = []
    bounds = params.input_bounds
    for k in range(T):
        for a in range(3):
            row = np.zeros(n)
            row[n_x + 3 * k + a] = 1.0
            rows_g.append(row)
            rows_h.append(bounds[a] - op_u[k, a])
            row = np.zeros(n)
            row[n_x + 3 * k + a] = -1.0
            rows_g.append(row)
            rows_h.append(bounds[a] + op_u[k, a])
    xmin, ymin, xmax, ymax = params.workspace
    for k in range(T + 1):
        for a, (lo, hi) in enumerate(((xmin, xmax), (ymin, ymax))):
            row = np.zeros(n)
            row[3 * k + a] = 1.0
            rows_g.append(row)
            rows_h.append(hi - op_s[k, a])
            row = np.zeros(n)
            row[3 * k + a] = -1.0
            rows_g.append(row)
            rows_h.append(op_s[k, a] - lo)

    if mode == MODE_CBF:
        for k in range(T):
            c_coef, d_coef, const = linearize_cbf_constraint(field_, op_s[k], op_u[k], dt, params.gamma_bar)
            row = np.zeros(n)
            row[ix(k)] = -c_coef
            row[iu(k)] = -d_coef
            row[isl(k)] = -1.0
            rows_g.append(row)
            rows_h.append(const)
        for k in range(T):
            row = np.zeros(n)
            row[isl(k)] = -1.0
            rows_g.append(row)
            rows_h.append(0.0)
    elif mode == MODE_CLASSIC:
        for k in range(T):
            grad = _grad3(field_, op_s[k])
            h_op = field_.query_h(op_s[k][0], op_s[k][1])
            row = np.zeros(n)
            row[ix(k)] = -grad
            rows_g.append(row)
            rows_h.append(h_op - params.classic_epsilon)
    else:
        raise ValueError(f"unknown controller mode {mode!r}")

    qp = QpProblem(
        H=H,
        g=g,
        A_eq=A,
        b_eq=b,
        G_in=np.array(rows_g),
        h_in=np.array(rows_h),
        cost_offset=offset,
    )
    layout = {"n_x": n_x, "n_u": n_u, "n_slack": n_slack, "op_s": op_s, "op_u": op_u}
    return qp, layout


def _reconstruct(
    params: ControllerParams,
    x_t: np.ndarray,
    layout: dict,
    sol: QpSolution,
    field_: CbfField,
) -> PredictedTrajectory:
    T = params.horizon
    du = sol.x[layout["n_x"] : layout["n_x"] + layout["n_u"]].reshape(T, 3)
    inputs = layout["op_u"] + du
    states = np.zeros((T + 1, 3))
    states[0] = x_t
    for k in range(T):
        states[k + 1] = states[k] + params.dt * inputs[k]
    slack = sol.x[layout["n_x"] + layout["n_u"] :].copy() if layout["n_slack"] else np.zeros(T)
    h_vals = np.array([field_.query_h(s[0], s[1]) for s in states])
    return PredictedTrajectory(
        states=states,
        inputs=inputs,
        slack=slack,
        status="ok",
        objective=sol.objective,
        h_values=h_vals,
        iterations=sol.iterations,
        residuals=sol.residuals,
    )


def mpc_step(
    params: ControllerParams,
    x_t: np.ndarray,
    prev_traj: PredictedTrajectory | None,
    field_: CbfField,
    goal: np.ndarray,
    mode: str = MODE_CBF,
    degraded_fallback: str = FALLBACK_HOLD,
) -> tuple[ControlInput, PredictedTrajectory]:
    """Solve one receding-horizon step and return the first input.

    A degraded solve (iteration cap, typically an infeasible hard-constrained
    program) falls back to the previous applied input clipped to the input
    box, or to braking, and re-bootstraps the operating trajectory.
    """
    x_t = np.asarray(x_t, dtype=float)
    if prev_traj is None:
        prev_traj = hold_trajectory(x_t, params.horizon)

    qp, layout = _build_qp_internal(params, x_t, prev_traj, field_, goal, mode)
    sol = solve_qp(qp)

    if sol.degraded:
        if degraded_fallback == FALLBACK_BRAKE:
            u = np.zeros(3)
        else:
            u = np.clip(prev_traj.inputs[0], -params.input_bounds, params.input_bounds)
        traj = hold_trajectory(x_t, params.horizon)
        traj.status = "degraded"
        traj.iterations = sol.iterations
        traj.residuals = sol.residuals
        traj.h_values = np.full(params.horizon + 1, field_.query_h(x_t[0], x_t[1]))
        return ControlInput(*u), traj

    traj = _reconstruct(params, x_t, layout, sol, field_)
    u = traj.inputs[0]
    return ControlInput(*u), traj
