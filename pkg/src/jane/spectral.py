"""Smallest nontrivial Laplacian eigenpairs (the spectral initial embedding).

The constant vector spans the null space of a connected graph's Laplacian and
is excluded: the embedding columns must be centred. Both solvers work in the
orthogonal complement of the constant vector, so returned columns are centred
to rounding error by construction.

Small problems (``n <= DENSE_SOLVER_LIMIT``) use a dense symmetric solve of
the deflated matrix; larger ones use Lanczos with full reorthogonalisation.
``dense_eig_oracle`` is an independent in-repo Householder + implicit QL
solver used to check both paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal

from .errors import KTooLarge, NotConnected, ShapeMismatch, TooLarge
from .graph import DENSE_LIMIT, Laplacian

DENSE_SOLVER_LIMIT = 512


@dataclass(frozen=True)
class SpectralBasis:
    eigenvalues: np.ndarray  # (k,) ascending
    eigenvectors: np.ndarray  # (n, k)

    @property
    def k(self) -> int:
        return int(self.eigenvalues.shape[0])


def _fix_signs(V: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    V = V.copy()
    for c in range(V.shape[1]):
        col = V[:, c]
        nz = np.flatnonzero(np.abs(col) > tol * max(1.0, np.abs(col).max()))
        if nz.size and col[nz[0]] < 0:
            V[:, c] = -col
    return V


def _n_components(lap: Laplacian) -> int:
    from scipy.sparse.csgraph import connected_components

    count, _ = connected_components(lap.L, directed=False)
    return int(count)


def _householder_vector(n: int) -> np.ndarray:
    # H = I - 2 v v^T maps the unit constant vector onto e_0, so columns
    # 1..n-1 of H are an orthonormal basis of its complement.
    v = np.full(n, 1.0 / math.sqrt(n))
    v[0] += 1.0
    return v / np.linalg.norm(v)


def _deflated_dense(Ld: np.ndarray):
    n = Ld.shape[0]
    v = _householder_vector(n)
    Lv = Ld @ v
    vLv = v @ Lv
    HLH = Ld - 2.0 * np.outer(v, Lv) - 2.0 * np.outer(Lv, v) + 4.0 * vLv * np.outer(v, v)
    B = HLH[1:, 1:]
    B = 0.5 * (B + B.T)
    w, Y = np.linalg.eigh(B)
    # Lift back: x = H [0; y] = [0; y] - 2 v (v[1:] . y)
    X = np.zeros((n, Y.shape[1]))
    X[1:] = Y
    X -= 2.0 * np.outer(v, v[1:] @ Y)
    return w, X


def _center(x: np.ndarray) -> np.ndarray:
    return x - x.mean(axis=0)


def _lanczos(L: sp.csr_matrix, k: int, seed: int = 0, tol: float = 1e-10, max_dim: int | None = None):
    """Lanczos on ``P L P`` with P the projector off the constant vector.

    Full reorthogonalisation against every stored Lanczos vector; on breakdown
    (an invariant subspace was found) the iteration restarts from a fresh
    random vector orthogonal to everything so far, which is how repeated
    eigenvalues are recovered.
    """
    n = L.shape[0]
    dim = n - 1 if max_dim is None else min(max_dim, n - 1)
    rng = np.random.default_rng(seed)

    Q = np.zeros((n, dim))
    alphas = np.zeros(dim)
    betas = np.zeros(dim)  # betas[j] couples q_j and q_{j+1}; 0 marks a restart
    m = 0
    check_every = max(10, 2 * k)
    next_check = min(dim, max(2 * k + 20, 40))

    def fresh():
        for _ in range(5):
            q = _center(rng.standard_normal(n))
            if m:
                Qm = Q[:, :m]
                q -= Qm @ (Qm.T @ q)
                q -= Qm @ (Qm.T @ q)
            nrm = np.linalg.norm(q)
            if nrm > 1e-8:
                return q / nrm
        return None

    q = fresh()
    while True:
        Q[:, m] = q
        w = L @ q
        w = _center(w)
        a = q @ w
        alphas[m] = a
        w -= a * q
        if m:
            w -= betas[m - 1] * Q[:, m - 1]
        Qm = Q[:, :m + 1]
        w -= Qm @ (Qm.T @ w)
        w -= Qm @ (Qm.T @ w)
        w = _center(w)
        b = np.linalg.norm(w)
        m += 1
        if m >= dim:
            break
        scale = max(1.0, abs(a))
        if b <= 1e-10 * scale:
            betas[m - 1] = 0.0
            q = fresh()
            if q is None:
                break
            # an invariant block is exact but may hide repeated eigenvalues;
            # let the restarted block grow before testing convergence again
            next_check = max(next_check, m + check_every)
            continue
        else:
            betas[m - 1] = b
            q = w / b
        if m >= next_check and m >= k:
            vals, S = eigh_tridiagonal(alphas[:m], betas[:m - 1], select="i", select_range=(0, k - 1))
            # Ritz residual: |beta_m * last component|, only meaningful inside
            # the current Krylov block.
            resid = np.abs(betas[m - 1] * S[m - 1, :])
            if np.all(resid <= tol * np.maximum(1.0, np.abs(vals))):
                break
            next_check = m + check_every

    vals, S = eigh_tridiagonal(alphas[:m], betas[:m - 1], select="i", select_range=(0, k - 1))
    V = Q[:, :m] @ S
    return vals, V


def smallest_nontrivial_eigs(lap: Laplacian, k: int, method: str = "auto", seed: int = 0) -> SpectralBasis:
    """The ``k`` smallest Laplacian eigenpairs, excluding the constant vector.

    Columns are unit-norm, centred and sign-fixed (first nonzero entry
    positive). ``method`` is ``"auto"``, ``"dense"`` or ``"lanczos"``.
    """
    n = lap.n
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n - 1:
        raise KTooLarge(f"k={k} exceeds n-1={n - 1}")
    if _n_components(lap) > 1:
        raise NotConnected("Laplacian has a null space of dimension > 1")
    if method == "auto":
        method = "dense" if n <= DENSE_SOLVER_LIMIT else "lanczos"

    if method == "dense":
        w, X = _deflated_dense(lap.L.toarray())
        vals, V = w[:k], X[:, :k]
    elif method == "lanczos":
        vals, V = _lanczos(lap.L, k, seed=seed)
    else:
        raise ValueError(f"unknown method {method!r}")

    V = _center(V)
    V /= np.linalg.norm(V, axis=0)
    V = _fix_signs(V)
    # Rayleigh quotients are at least as accurate as the solver's values.
    vals = np.einsum("ij,ij->j", V, lap.L @ V)
    order = np.argsort(vals, kind="stable")
    return SpectralBasis(eigenvalues=vals[order], eigenvectors=np.ascontiguousarray(V[:, order]))


def embedding_energy(U: np.ndarray, lap: Laplacian, check: bool = True, tol: float = 1e-8) -> float:
    """``tr(U^T L U)``, the sum over edges of squared embedding distances.

    With ``check`` the columns must be centred and unit-norm.
    """
    U = np.asarray(U, dtype=np.float64)
    if U.ndim == 1:
        U = U[:, None]
    if U.ndim != 2 or U.shape[0] != lap.n:
        raise ShapeMismatch(f"U has shape {U.shape}, expected ({lap.n}, k)")
    if check:
        sums = np.abs(U.sum(axis=0))
        norms = np.linalg.norm(U, axis=0)
        if np.any(sums > tol * max(1.0, math.sqrt(lap.n))):
            raise ValueError("columns of U must be centred")
        if np.any(np.abs(norms - 1.0) > tol):
            raise ValueError("columns of U must have unit norm")
    return float(np.einsum("ij,ij->", U, lap.L @ U))


# -- dense oracle -----------------------------------------------------------
# Householder tridiagonalisation followed by the implicit QL algorithm,
# after the EISPACK tred2/tql2 pair (JAMA formulation).

def _tred2(V: np.ndarray):
    n = V.shape[0]
    d = V[n - 1].copy()
    e = np.zeros(n)
    for i in range(n - 1, 0, -1):
        scale = np.abs(d[:i]).sum()
        h = 0.0
        if scale == 0.0:
            e[i] = d[i - 1]
            d[:i] = V[i - 1, :i]
            V[i, :i] = 0.0
            V[:i, i] = 0.0
        else:
            d[:i] /= scale
            h = float(d[:i] @ d[:i])
            f = d[i - 1]
            g = math.sqrt(h)
            if f > 0:
                g = -g
            e[i] = scale * g
            h -= f * g
            d[i - 1] = f - g
            e[:i] = 0.0
            for j in range(i):
                f = d[j]
                V[j, i] = f
                g = e[j] + V[j, j] * f
                if j + 1 < i:
                    col = V[j + 1:i, j]
                    g += col @ d[j + 1:i]
                    e[j + 1:i] += col * f
                e[j] = g
            e[:i] /= h
            f = float(e[:i] @ d[:i])
            hh = f / (h + h)
            e[:i] -= hh * d[:i]
            for j in range(i):
                f = d[j]
                g = e[j]
                V[j:i, j] -= f * e[j:i] + g * d[j:i]
                d[j] = V[i - 1, j]
                V[i, j] = 0.0
        d[i] = h

    for i in range(n - 1):
        V[n - 1, i] = V[i, i]
        V[i, i] = 1.0
        h = d[i + 1]
        if h != 0.0:
            d[:i + 1] = V[:i + 1, i + 1] / h
            g = V[:i + 1, i + 1] @ V[:i + 1, :i + 1]
            V[:i + 1, :i + 1] -= np.outer(d[:i + 1], g)
        V[:i + 1, i + 1] = 0.0
    d[:] = V[n - 1]
    V[n - 1] = 0.0
    V[n - 1, n - 1] = 1.0
    e[0] = 0.0
    return d, e


def _tql2(d: np.ndarray, e: np.ndarray, V: np.ndarray, max_iter: int = 60):
    n = d.shape[0]
    e[:-1] = e[1:]
    e[-1] = 0.0
    f = 0.0
    tst1 = 0.0
    eps = 2.0 ** -52
    for l in range(n):
        tst1 = max(tst1, abs(d[l]) + abs(e[l]))
        m = l
        while m < n - 1 and abs(e[m]) > eps * tst1:
            m += 1
        if m > l:
            it = 0
            while True:
                it += 1
                if it > max_iter:
                    raise RuntimeError("QL iteration did not converge")
                g = d[l]
                p = (d[l + 1] - g) / (2.0 * e[l])
                r = math.hypot(p, 1.0)
                if p < 0:
                    r = -r
                d[l] = e[l] / (p + r)
                d[l + 1] = e[l] * (p + r)
                dl1 = d[l + 1]
                h = g - d[l]
                d[l + 2:] -= h
                f += h

                p = d[m]
                c = c2 = c3 = 1.0
                el1 = e[l + 1]
                s = s2 = 0.0
                for i in range(m - 1, l - 1, -1):
                    c3 = c2
                    c2 = c
                    s2 = s
                    g = c * e[i]
                    h = c * p
                    r = math.hypot(p, e[i])
                    e[i + 1] = s * r
                    s = e[i] / r
                    c = p / r
                    p = c * d[i] - s * g
                    d[i + 1] = h + s * (c * g + s * d[i])
                    left = V[:, i].copy()
                    right = V[:, i + 1].copy()
                    V[:, i + 1] = s * left + c * right
                    V[:, i] = c * left - s * right
                p = -s * s2 * c3 * el1 * e[l] / dl1
                e[l] = s * p
                d[l] = c * p
                if abs(e[l]) <= eps * tst1:
                    break
        d[l] += f
        e[l] = 0.0
    order = np.argsort(d, kind="stable")
    return d[order], V[:, order]


def symmetric_eig(A: np.ndarray):
    """All eigenpairs of a dense symmetric matrix, ascending."""
    A = np.array(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeMismatch("expected a square matrix")
    n = A.shape[0]
    if n == 1:
        return A[0].copy(), np.ones((1, 1))
    V = A.copy()
    d, e = _tred2(V)
    return _tql2(d, e, V)


def dense_eig_oracle(lap: Laplacian):
    """Full spectrum ``(eigenvalues, eigenvectors)`` of a Laplacian, ascending."""
    if lap.n > DENSE_LIMIT:
        raise TooLarge(f"dense oracle refused for n={lap.n} > {DENSE_LIMIT}")
    return symmetric_eig(lap.L.toarray())
