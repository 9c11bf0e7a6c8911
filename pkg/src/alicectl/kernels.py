"""Hot numeric kernels.

Everything here is written in the subset of numpy that numba understands, so the
same source runs either compiled (default) or as plain numpy when
``ALICECTL_NUMBA=0``. Arrays must be C-contiguous float64.

The decision variable is the n-by-n matrix G = B K. The quadratic part of the
objective is stored through the Gram statistics

    S = sum x_{i-1} x_{i-1}^T,   C = sum c_i x_{i-1}^T,   q = sum |c_i|^2

so that J(G) = eta/2 q + eta <G, C> + (eta+beta)/2 <G, G S>.
"""
import numpy as np

from ._jit import njit

# projection status codes
FEASIBLE = 0
PROJECTED = 1
INFEASIBLE = -1


@njit
def quad_objective(S, C, q, G, eta, beta):
    return 0.5 * eta * q + eta * np.sum(G * C) + 0.5 * (eta + beta) * np.sum(G * (G @ S))


@njit
def quad_gradient(S, C, G, eta, beta):
    return eta * C + (eta + beta) * (G @ S)


@njit
def smoothed_objective(S, C, q, G, G_prev, lam, eps, eta, beta):
    val = quad_objective(S, C, q, G, eta, beta)
    if lam > 0.0:
        D = G - G_prev
        val += lam * np.sqrt(np.sum(D * D) + eps)
    return val


@njit
def smoothed_gradient(S, C, G, G_prev, lam, eps, eta, beta):
    g = quad_gradient(S, C, G, eta, beta)
    if lam > 0.0:
        D = G - G_prev
        g = g + (lam / np.sqrt(np.sum(D * D) + eps)) * D
    return g


@njit
def exact_objective(S, C, q, G, G_prev, lam, eta, beta):
    val = quad_objective(S, C, q, G, eta, beta)
    if lam > 0.0:
        D = G - G_prev
        val += lam * np.sqrt(np.sum(D * D))
    return val


@njit
def project_ball(G, P, c, x, r):
    """Frobenius projection of G (already in range(P)) onto |c + G x| <= r.

    Returns (G_new, status). The correction is d x^T / |x|^2 with d in range(P),
    so the result stays in the subspace.
    """
    v = c + G @ x
    v_par = P @ v
    v_perp = v - v_par
    pp = np.sum(v_perp * v_perp)
    if pp > r * r:
        return G.copy(), INFEASIBLE
    if np.sum(v * v) <= r * r:
        return G.copy(), FEASIBLE
    rho = np.sqrt(r * r - pp)
    npar = np.sqrt(np.sum(v_par * v_par))
    d = (rho / npar - 1.0) * v_par
    return G + np.outer(d, x) / np.sum(x * x), PROJECTED


@njit
def pg_solve(S, C, q, G0, G_prev, P, c, x, r, use_con, lam, eps, eta, beta, tol, max_iters):
    """Accelerated projected gradient on the smoothed objective.

    G0 must be feasible and lie in range(P). Momentum restarts whenever the
    extrapolated step would increase the objective, so the accepted iterates
    are monotone. Returns (G, f, iters, converged, trace) where trace holds the
    accepted smoothed objective values.
    """
    L = (eta + beta) * np.sqrt(np.sum(S * S))
    s_max = 1.0 / L if L > 0.0 else 1.0
    s = s_max
    g0 = P @ (eta * C)
    stop = tol * (1.0 + np.sqrt(np.sum(g0 * g0)))

    xk = G0.copy()
    fk = smoothed_objective(S, C, q, xk, G_prev, lam, eps, eta, beta)
    trace = np.empty(max_iters + 1)
    trace[0] = fk
    ntr = 1

    y = xk.copy()
    theta = 1.0
    momentum = False
    stall = 0
    converged = False
    it = 0
    while it < max_iters:
        it += 1
        gy = P @ smoothed_gradient(S, C, y, G_prev, lam, eps, eta, beta)
        fy = smoothed_objective(S, C, q, y, G_prev, lam, eps, eta, beta)
        while True:
            z = y - s * gy
            if use_con:
                z, _ = project_ball(z, P, c, x, r)
            d = z - y
            fz = smoothed_objective(S, C, q, z, G_prev, lam, eps, eta, beta)
            if fz <= fy + np.sum(gy * d) + np.sum(d * d) / (2.0 * s) + 1e-15 * abs(fy):
                break
            s *= 0.5
            if s < 1e-300:
                break
        gmap = np.sqrt(np.sum(d * d)) / s

        if fz > fk:
            if momentum:
                y = xk.copy()
                theta = 1.0
                momentum = False
                continue
            # plain step cannot descend: rounding floor at the optimum
            converged = gmap <= stop or fz - fk <= 1e-12 * (1.0 + abs(fk))
            break

        x_old = xk
        f_old = fk
        xk = z
        fk = fz
        trace[ntr] = fk
        ntr += 1

        if gmap <= stop:
            converged = True
            break
        if f_old - fk <= 1e-12 * max(1.0, abs(fk)):
            stall += 1
            if stall >= 10:
                converged = True
                break
        else:
            stall = 0

        theta_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta * theta))
        y = xk + ((theta - 1.0) / theta_new) * (xk - x_old)
        theta = theta_new
        momentum = True
        s = min(1.5 * s, s_max) if s < s_max else s
    return xk, fk, it, converged, trace[:ntr].copy()


@njit
def riccati_map(A, B, Q, R, P):
    """One value-iteration sweep of the discrete Riccati recursion."""
    BtP = B.T @ P
    M = R + BtP @ B
    return Q + A.T @ P @ A - A.T @ P @ B @ np.linalg.solve(M, BtP @ A)


@njit
def dare_iterate(A, B, Q, R, rtol, max_iters):
    P = Q.copy()
    for k in range(max_iters):
        P_new = riccati_map(A, B, Q, R, P)
        P_new = 0.5 * (P_new + P_new.T)
        # unbounded growth: the pair is not stabilizable
        if not np.max(np.abs(P_new)) < 1e150:
            return P_new, k + 1, False
        diff = np.sqrt(np.sum((P_new - P) ** 2))
        P = P_new
        if not np.isfinite(diff):
            return P, k + 1, False
        if diff <= rtol * np.sqrt(np.sum(P * P)):
            return P, k + 1, True
    return P, max_iters, False
