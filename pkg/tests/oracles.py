"""Independent reference computations shared by the unit and acceptance tests."""

import numpy as np
from scipy.optimize import minimize


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def brute_objective(phi, W, A, base, G, sv2, sx2):
    # per-user loop written out, no shared code with the package
    K = W.shape[0]
    total = 0.0
    for i in range(K):
        e = np.zeros(K)
        e[i] = 1.0
        r = e - W @ (base[:, i] + A[i] @ phi)
        total += np.vdot(r, r).real
    total += sv2 / sx2 * np.linalg.norm(W @ G @ phi) ** 2
    return total


def numeric_minimum(W, A, base, G, sv2, sx2, starts=3, seed=0):
    """Minimize the reflection objective over real/imag parts with BFGS."""
    N = A.shape[2]
    r = np.random.default_rng(seed)
    f = lambda x: brute_objective(x[:N] + 1j * x[N:], W, A, base, G, sv2, sx2)
    best = None
    for _ in range(starts):
        res = minimize(f, r.standard_normal(2 * N), method="BFGS", options={"gtol": 1e-12, "maxiter": 10_000})
        if best is None or res.fun < best.fun:
            best = res
    return best.x[:N] + 1j * best.x[N:], best.fun
