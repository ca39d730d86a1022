"""Shared test helpers."""

from __future__ import annotations

import numpy as np


def random_direction_model(rng, p, K):
    """Random valid (rho, B, Gamma) for model inversion with q = K."""
    rho = np.sort(rng.uniform(0.05, 0.95, size=K))[::-1]
    while np.any(np.diff(rho) > -1e-3):
        rho = np.sort(rng.uniform(0.05, 0.95, size=K))[::-1]
    B = rng.standard_normal((p, K))
    # keep B well conditioned so round-off stays far below the test tolerances
    while np.linalg.cond(B) > 100:
        B = rng.standard_normal((p, K))
    G = rng.standard_normal((K, K)) + 2 * np.eye(K)
    return rho, B, G


def correlated_data(rng, n, p, q, strength=1.0):
    Z = rng.standard_normal((n, max(p, q)))
    X = rng.standard_normal((n, p)) + strength * Z[:, :p]
    Y = rng.standard_normal((n, q)) + strength * Z[:, :q]
    return X, Y


def match_up_to_sign(A, B):
    """Flip the columns of B to best match A; return the flipped copy."""
    s = np.sign(np.sum(A * B, axis=0))
    s[s == 0] = 1
    return B * s
