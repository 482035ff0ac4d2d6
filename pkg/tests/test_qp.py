import itertools

import numpy as np
import pytest

from semnav.qp import QpProblem, kkt_residuals, solve_qp


def box_qp(H, g, lo, hi):
    n = len(g)
    G = np.vstack([np.eye(n), -np.eye(n)])
    h = np.concatenate([hi, -lo])
    return QpProblem(H=H, g=g, A_eq=np.zeros((0, n)), b_eq=np.zeros(0), G_in=G, h_in=h)


def enumerate_box_qp(H, g, lo, hi):
    """Optimal solution by enumerating every bound-activity pattern."""
    n = len(g)
    best, best_f = None, np.inf
    for pattern in itertools.product((-1, 0, 1), repeat=n):
        x = np.zeros(n)
        fixed = [i for i, p in enumerate(pattern) if p != 0]
        free = [i for i, p in enumerate(pattern) if p == 0]
        for i, p in enumerate(pattern):
            x[i] = hi[i] if p > 0 else lo[i] if p < 0 else 0.0
        if free:
            rhs = -(g[free] + (H[np.ix_(free, fixed)] @ x[fixed] if fixed else 0.0))
            x[np.array(free)] = np.linalg.solve(H[np.ix_(free, free)], rhs)
        if np.all(x >= lo - 1e-10) and np.all(x <= hi + 1e-10):
            f = 0.5 * x @ H @ x + g @ x
            if f < best_f:
                best_f, best = f, x.copy()
    return best


class TestSolveQp:
    def test_scalar_bound(self):
        qp = QpProblem(H=np.array([[2.0]]), g=np.zeros(1), A_eq=np.zeros((0, 1)), b_eq=np.zeros(0),
                       G_in=np.array([[-1.0]]), h_in=np.array([-1.0]))
        sol = solve_qp(qp)
        assert sol.status == "optimal"
        assert sol.x[0] == pytest.approx(1.0, abs=1e-8)

    def test_random_box_qps_match_enumeration(self):
        rng = np.random.default_rng(0)
        for trial in range(20):
            n = 5
            m = rng.normal(size=(n, n))
            H = m @ m.T + n * np.eye(n)
            g = rng.normal(size=n) * rng.uniform(1, 10)
            lo = -rng.uniform(0.1, 1.0, size=n)
            hi = rng.uniform(0.1, 1.0, size=n)
            sol = solve_qp(box_qp(H, g, lo, hi))
            expected = enumerate_box_qp(H, g, lo, hi)
            assert sol.status == "optimal"
            np.testing.assert_allclose(sol.x, expected, atol=1e-6)

    def test_equality_constrained(self):
        H = np.diag([2.0, 4.0])
        g = np.array([-2.0, -4.0])
        A = np.array([[1.0, 1.0]])
        b = np.array([3.0])
        qp = QpProblem(H=H, g=g, A_eq=A, b_eq=b, G_in=np.zeros((0, 2)), h_in=np.zeros(0))
        sol = solve_qp(qp)
        # analytic: minimize (x-1)^2 + 2(y-1)^2 on x + y = 3
        assert sol.x == pytest.approx([5.0 / 3.0, 4.0 / 3.0], abs=1e-9)
        assert max(sol.residuals.values()) <= 1e-8

    def test_mixed_equality_inequality(self):
        H = np.eye(3) * 2
        g = np.zeros(3)
        A = np.array([[1.0, 1.0, 1.0]])
        b = np.array([1.0])
        G = -np.eye(3)
        h = np.zeros(3)
        sol = solve_qp(QpProblem(H=H, g=g, A_eq=A, b_eq=b, G_in=G, h_in=h))
        assert sol.x == pytest.approx([1 / 3, 1 / 3, 1 / 3], abs=1e-8)

    def test_slacked_row_absorbs_infeasibility(self):
        # min x^2 s.t. x >= 1 and x <= 0 is infeasible; slack sigma on the second
        # row restores feasibility and at the optimum equals the violation of the
        # unslacked optimum (x* = 1 violates x <= 0 by exactly 1)
        rho = 1.0e4
        H = np.diag([2.0, 0.0])
        g = np.array([0.0, rho])
        G = np.array([[-1.0, 0.0], [1.0, -1.0], [0.0, -1.0]])
        h = np.array([-1.0, 0.0, 0.0])
        sol = solve_qp(QpProblem(H=H, g=g, A_eq=np.zeros((0, 2)), b_eq=np.zeros(0), G_in=G, h_in=h))
        assert sol.status == "optimal"
        assert sol.x[0] == pytest.approx(1.0, abs=1e-6)
        assert sol.x[1] == pytest.approx(1.0, abs=1e-6)

    def test_infeasible_problem_flagged(self):
        qp = QpProblem(H=np.array([[2.0]]), g=np.zeros(1), A_eq=np.zeros((0, 1)), b_eq=np.zeros(0),
                       G_in=np.array([[1.0], [-1.0]]), h_in=np.array([-1.0, -1.0]))  # x <= -1 and x >= 1
        sol = solve_qp(qp)
        assert sol.status == "max_iter"
        assert sol.degraded

    def test_residual_reporting(self):
        rng = np.random.default_rng(4)
        m = rng.normal(size=(4, 4))
        H = m @ m.T + 4 * np.eye(4)
        g = rng.normal(size=4)
        qp = box_qp(H, g, -np.ones(4), np.ones(4))
        sol = solve_qp(qp)
        recomputed = kkt_residuals(qp, sol.x, sol.y, sol.z)
        assert sol.residuals == recomputed
        assert all(v <= 1e-6 for v in recomputed.values())

    def test_rejects_asymmetric_hessian(self):
        with pytest.raises(ValueError):
            QpProblem(H=np.array([[1.0, 0.5], [0.0, 1.0]]), g=np.zeros(2),
                      A_eq=np.zeros((0, 2)), b_eq=np.zeros(0), G_in=np.zeros((0, 2)), h_in=np.zeros(0))
