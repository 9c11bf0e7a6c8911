"""Compiled kernels agree with their plain-numpy sources."""
import numpy as np
import pytest

from alicectl import kernels
from alicectl._jit import USE_NUMBA
from alicectl.bench.config import LAPLACIAN_A
from oracles import random_problem

pytestmark = pytest.mark.skipif(not USE_NUMBA, reason="numba disabled")


def py(f):
    return f.py_func


@pytest.mark.parametrize("seed", range(5))
def test_pg_solve_parity(seed):
    rng = np.random.default_rng(seed)
    p, _ = random_problem(rng, 3, 2, lam=0.05)
    args = (p.S, p.C, float(p.q), np.zeros((3, 3)), p.G_prev, p.P_B, p.c, p.x, float(p.radius), True,
            0.05, 1e-12, p.eta, p.beta, 1e-9, 3000)
    G1, f1, it1, ok1, tr1 = kernels.pg_solve(*args)
    G2, f2, it2, ok2, tr2 = py(kernels.pg_solve)(*args)
    np.testing.assert_allclose(G1, G2, atol=1e-9)
    assert f1 == pytest.approx(f2, rel=1e-10)
    assert ok1 == ok2


def test_project_parity():
    rng = np.random.default_rng(7)
    for _ in range(50):
        G = rng.standard_normal((3, 3))
        c, x = rng.standard_normal(3), rng.standard_normal(3)
        r = rng.uniform(0.1, 3)
        a, sa = kernels.project_ball(G, np.eye(3), c, x, r)
        b, sb = py(kernels.project_ball)(G, np.eye(3), c, x, r)
        assert sa == sb
        np.testing.assert_allclose(a, b, atol=1e-13)


def test_dare_parity():
    Q, R = 10.0 * np.eye(3), np.eye(3)
    P1, i1, ok1 = kernels.dare_iterate(LAPLACIAN_A, np.eye(3), Q, R, 1e-12, 100000)
    P2, i2, ok2 = py(kernels.dare_iterate)(LAPLACIAN_A, np.eye(3), Q, R, 1e-12, 100000)
    assert ok1 and ok2 and i1 == i2
    np.testing.assert_allclose(P1, P2, rtol=1e-12)


def test_objective_parity():
    rng = np.random.default_rng(8)
    S = rng.standard_normal((3, 3))
    S = S @ S.T
    C, G, Gp = rng.standard_normal((3, 3, 3))
    for name, args in [
        ("smoothed_objective", (S, C, 2.0, G, Gp, 0.1, 1e-12, 10.0, 1.0)),
        ("smoothed_gradient", (S, C, G, Gp, 0.1, 1e-12, 10.0, 1.0)),
        ("exact_objective", (S, C, 2.0, G, Gp, 0.1, 10.0, 1.0)),
    ]:
        f = getattr(kernels, name)
        np.testing.assert_allclose(f(*args), py(f)(*args), rtol=1e-13)
