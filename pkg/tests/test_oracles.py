import numpy as np
import pytest

from alicectl.bench.config import LAPLACIAN_A
from alicectl.oracles import NotStabilizableError, baseline_policy, riccati_residual, solve_dare
from oracles import scalar_dare


def test_scalar_closed_form():
    sol = solve_dare(np.array([[0.5]]), np.array([[1.0]]), 1.0, 1.0)
    p, k = scalar_dare(0.5, 1.0, 1.0, 1.0)
    assert p == pytest.approx((0.25 + np.sqrt(4.0625)) / 2, abs=1e-14)
    assert sol.P[0, 0] == pytest.approx(p, abs=1e-10)
    assert sol.K_star[0, 0] == pytest.approx(k, abs=1e-10)
    assert sol.P[0, 0] == pytest.approx(1.13278, abs=1e-4)
    assert sol.K_star[0, 0] == pytest.approx(-0.26556, abs=1e-4)


@pytest.mark.parametrize("a,b,q,r", [(0.5, 1.0, 1.0, 1.0), (2.0, 0.3, 3.0, 0.7), (1.2, -1.0, 0.2, 5.0)])
def test_scalar_quadratic_formula(a, b, q, r):
    sol = solve_dare(np.array([[a]]), np.array([[b]]), q, r)
    p, k = scalar_dare(a, b, q, r)
    assert sol.P[0, 0] == pytest.approx(p, rel=1e-10)
    assert sol.K_star[0, 0] == pytest.approx(k, rel=1e-9)


def test_zero_dynamics():
    sol = solve_dare(np.zeros((2, 2)), np.eye(2), 3.0, 1.0)
    np.testing.assert_allclose(sol.P, 3.0 * np.eye(2), atol=1e-14)
    np.testing.assert_allclose(sol.K_star, 0.0, atol=1e-14)


def test_experiment_system_certified():
    sol = solve_dare(LAPLACIAN_A, np.eye(3), 10.0, 1.0)
    assert sol.residual <= 1e-10
    assert sol.closed_loop_radius < 1.0
    Q, R = 10.0 * np.eye(3), np.eye(3)
    assert riccati_residual(LAPLACIAN_A, np.eye(3), Q, R, sol.P) == pytest.approx(sol.residual)
    assert np.all(np.linalg.eigvalsh(sol.P) > 0)


def test_joint_scaling_invariance():
    K1 = solve_dare(LAPLACIAN_A, np.eye(3), 10.0, 1.0).K_star
    K2 = solve_dare(LAPLACIAN_A, np.eye(3), 70.0, 7.0).K_star
    np.testing.assert_allclose(K1, K2, atol=1e-8)


def test_not_stabilizable():
    A = np.diag([2.0, 0.5])
    B = np.array([[0.0], [1.0]])
    with pytest.raises(NotStabilizableError):
        solve_dare(A, B, 1.0, 1.0, max_iters=2000)


def _lyap_cost(A, B, K, Q, R):
    """trace of P_K = sum_k (A+BK)^T^k (Q + K^T R K) (A+BK)^k, i.e. E[x0^T P_K x0] for x0 ~ N(0, I)."""
    n = A.shape[0]
    Acl = A + B @ K
    if np.max(np.abs(np.linalg.eigvals(Acl))) >= 1:
        return np.inf
    M = Q + K.T @ R @ K
    vecP = np.linalg.solve(np.eye(n * n) - np.kron(Acl.T, Acl.T), M.ravel())
    return float(np.trace(vecP.reshape(n, n)))


@pytest.mark.parametrize("seed", range(5))
def test_lqr_is_optimal_against_perturbations(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    m = int(rng.integers(1, n + 1))
    A = rng.standard_normal((n, n)) * 0.8
    B = rng.standard_normal((n, m))
    eta, beta = 10.0, 1.0
    sol = solve_dare(A, B, eta, beta)
    Q, R = eta * np.eye(n), beta * np.eye(m)
    base = _lyap_cost(A, B, sol.K_star, Q, R)
    wins = 0
    for _ in range(100):
        dK = rng.standard_normal((m, n))
        dK *= 1e-2 / np.linalg.norm(dK)
        wins += _lyap_cost(A, B, sol.K_star + dK, Q, R) > base
    assert wins >= 95


def test_baselines():
    sol = solve_dare(np.array([[0.5]]), np.array([[1.0]]), 1.0, 1.0)
    pol = baseline_policy("lqr_oracle", 1, lqr=sol)
    assert pol(np.array([2.0]))[0] == pytest.approx(-0.53112, abs=1e-4)
    assert np.array_equal(baseline_policy("zero", 3)(np.ones(3)), np.zeros(3))
    r1 = baseline_policy("random", 3, seed=4)
    r2 = baseline_policy("random", 3, seed=4)
    a, b = r1(None), r2(None)
    assert np.array_equal(a, b) and not np.array_equal(a, r1(None))
    with pytest.raises(ValueError):
        baseline_policy("lqr_oracle", 1)
    with pytest.raises(ValueError):
        baseline_policy("magic", 1)
