"""Oracles and random instance builders shared by the test modules."""

import itertools
import math

import numpy as np

from jane.graph import build_graph


def random_connected_graph(n, p, rng):
    """G(n, p) plus a random spanning tree, so the result is always connected."""
    order = rng.permutation(n)
    edges = [(int(order[i]), int(order[rng.integers(0, i)])) for i in range(1, n)]
    for i, j in itertools.combinations(range(n), 2):
        if rng.random() < p:
            edges.append((i, j))
    return build_graph(edges, n)


def random_graph(n, p, rng):
    edges = [(i, j) for i, j in itertools.combinations(range(n), 2) if rng.random() < p]
    return build_graph(edges, n, warn=False)


def brute_loglik(g, U, s2):
    """``log Pr[A | U]`` as an explicit product over all unordered pairs."""
    A = g.dense()
    total = 0.0
    for i, j in itertools.combinations(range(g.n), 2):
        p = math.exp(-float(np.sum((U[i] - U[j]) ** 2)) / s2)
        if A[i, j]:
            total += math.log(p)
        else:
            if p == 1.0:
                return -math.inf
            total += math.log(1.0 - p)
    return total


def brute_surrogate(g, U, s2):
    A = g.dense()
    total = 0.0
    for i, j in itertools.combinations(range(g.n), 2):
        d2 = float(np.sum((U[i] - U[j]) ** 2))
        total += d2 / s2 if A[i, j] else math.exp(-d2 / s2)
    return total


def central_diff(f, x, h=1e-5):
    """Central finite-difference gradient of scalar ``f`` at array ``x``."""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        orig = x[idx]
        x[idx] = orig + h
        fp = f(x)
        x[idx] = orig - h
        fm = f(x)
        x[idx] = orig
        grad[idx] = (fp - fm) / (2.0 * h)
    return grad


def rel_error(a, b):
    """Max-norm relative error, guarded for gradients that are near zero."""
    a, b = np.asarray(a), np.asarray(b)
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-8)
    return float(np.max(np.abs(a - b)) / scale)


def max_principal_angle(A, B):
    """Largest principal angle (radians) between the column spans of A and B.

    Uses the sine form ``|(I - Qa Qa^T) Qb|_2``, which stays accurate for tiny
    angles where ``arccos`` of the cosines does not.
    """
    qa, _ = np.linalg.qr(A)
    qb, _ = np.linalg.qr(B)
    resid = qb - qa @ (qa.T @ qb)
    return float(np.arcsin(min(1.0, np.linalg.norm(resid, 2))))
