"""Latent-distance graph model and the synthetic attributed-graph generator.

An edge between nodes i and j appears independently with probability
``exp(-|u_i - u_j|^2 / s^2)``. The synthetic generator draws gaussian
observed features ``X`` and latent features ``U``, and lets the influence
parameter ``alpha`` decide which block carries the label signal: at 0 only
``U`` does, at 1 only ``X`` does, and in between the label bits are split
between the two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from . import kernels
from .errors import InvalidConfig, InvalidFraction, NonPositiveScale, ShapeMismatch
from .graph import Graph, build_graph, largest_component

UNKNOWN = -1


@dataclass(frozen=True)
class LatentState:
    U: np.ndarray
    scale_sq: float

    def __post_init__(self):
        U = np.asarray(self.U, dtype=np.float64)
        if U.ndim != 2:
            raise ShapeMismatch(f"U must be 2-D, got shape {U.shape}")
        object.__setattr__(self, "U", U)
        if not (np.isfinite(self.scale_sq) and self.scale_sq > 0):
            raise NonPositiveScale(f"scale_sq must be positive and finite, got {self.scale_sq}")
        if not np.all(np.isfinite(U)):
            raise ValueError("U contains NaN or Inf")


@dataclass(frozen=True)
class SynthConfig:
    n: int = 200
    d: int = 2
    k: int = 2
    M: int = 4
    alpha: float = 0.0
    scale_sq_gen: float = 1.0
    seed: int = 0
    class_sep: float = 3.0
    latent_class_sep: float = 2.25
    train_frac: float = 0.1
    val_frac: float = 0.2

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidConfig(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.M < 2 or self.n < self.M:
            raise InvalidConfig(f"need n >= M >= 2, got n={self.n}, M={self.M}")
        if self.d < 1 or self.k < 1:
            raise InvalidConfig("d and k must be >= 1")
        if not (self.scale_sq_gen > 0 and math.isfinite(self.scale_sq_gen)):
            raise InvalidConfig("scale_sq_gen must be positive")
        if self.class_sep <= 0 or self.latent_class_sep <= 0:
            raise InvalidConfig("class separations must be positive")
        bits = label_bits(self.M)
        n_x, n_u = informative_split(self.alpha, bits)
        if n_x > self.d or n_u > self.k:
            raise InvalidConfig(
                f"alpha={self.alpha} needs {n_x} informative X and {n_u} informative U "
                f"coordinates but d={self.d}, k={self.k}")

    def to_dict(self):
        return asdict(self)


@dataclass(eq=False)
class Dataset:
    X: np.ndarray
    y: np.ndarray  # class index per node, UNKNOWN (-1) when unobserved
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    U_true: np.ndarray | None = None
    label_names: list | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        self.train = np.asarray(self.train, dtype=np.int64)
        self.val = np.asarray(self.val, dtype=np.int64)
        self.test = np.asarray(self.test, dtype=np.int64)
        n = self.X.shape[0]
        if self.y.shape != (n,):
            raise ShapeMismatch(f"y has shape {self.y.shape}, expected ({n},)")
        parts = [self.train, self.val, self.test]
        allidx = np.concatenate(parts)
        if allidx.size and (allidx.min() < 0 or allidx.max() >= n):
            raise ValueError("split index out of range")
        if np.unique(allidx).size != allidx.size:
            raise ValueError("train/val/test splits overlap")
        known = np.concatenate([self.train, self.val])
        if known.size and np.any(self.y[known] == UNKNOWN):
            raise ValueError("train and val nodes must have known labels")

    @property
    def n(self) -> int:
        return int(self.X.shape[0])

    @property
    def d(self) -> int:
        return int(self.X.shape[1])

    @property
    def num_classes(self) -> int:
        if self.label_names is not None:
            return len(self.label_names)
        return int(self.y.max()) + 1 if self.y.size else 0


def edge_prob(u_i, u_j, scale_sq: float) -> float:
    if not scale_sq > 0:
        raise NonPositiveScale(f"scale_sq must be positive, got {scale_sq}")
    u_i = np.asarray(u_i, dtype=np.float64)
    u_j = np.asarray(u_j, dtype=np.float64)
    if u_i.shape != u_j.shape:
        raise ShapeMismatch("latent vectors differ in length")
    diff = u_i - u_j
    return float(np.exp(-(diff @ diff) / scale_sq))


def edge_probabilities(U: np.ndarray, scale_sq: float) -> np.ndarray:
    """Dense matrix of pairwise edge probabilities (diagonal set to zero)."""
    sq = np.sum(U * U, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * U @ U.T, 0.0)
    P = np.exp(-d2 / scale_sq)
    np.fill_diagonal(P, 0.0)
    return P


def sample_graph(state: LatentState, rng: np.random.Generator, warn: bool = True) -> Graph:
    """Draw each unordered pair independently with its edge probability.

    Randomness is consumed row by row (one uniform per pair ``j > i``), so a
    given seed always yields the same edge set.
    """
    U = state.U
    n = U.shape[0]
    rows = []
    for i in range(n - 1):
        diff = U[i + 1:] - U[i]
        p = np.exp(-np.einsum("jc,jc->j", diff, diff) / state.scale_sq)
        hit = np.flatnonzero(rng.random(n - i - 1) < p)
        if hit.size:
            rows.append(np.column_stack([np.full(hit.size, i), hit + i + 1]))
    edges = np.concatenate(rows) if rows else np.zeros((0, 2), dtype=np.int64)
    return build_graph(edges, n, warn=warn)


def _check_shapes(g: Graph, state: LatentState):
    if g.n != state.U.shape[0]:
        raise ShapeMismatch(f"graph has {g.n} nodes but U has {state.U.shape[0]} rows")


def log_likelihood_adjacency(g: Graph, state: LatentState) -> float:
    """Exact ``log Pr[A | U]``; ``-inf`` if a non-edge has probability one."""
    _check_shapes(g, state)
    return kernels.adjacency_sums(g, state.U, state.scale_sq)[2]


def surrogate_adjacency_nll(g: Graph, state: LatentState) -> float:
    """Surrogate for ``-log Pr[A | U]`` used as the training term.

    ``sum_edges |du|^2 / s^2 + sum_non_edges exp(-|du|^2 / s^2)``. Since
    ``log(1 - p) <= -p`` it never exceeds the exact negative log-likelihood.
    """
    _check_shapes(g, state)
    edge_term, nonedge_term, _ = kernels.adjacency_sums(g, state.U, state.scale_sq)
    return edge_term + nonedge_term


def label_bits(M: int) -> int:
    return max(1, math.ceil(math.log2(M)))


def informative_split(alpha: float, bits: int):
    """Number of label bits carried by ``X`` and by ``U``."""
    n_x = min(bits, math.ceil(alpha * bits - 1e-12))
    return n_x, bits - n_x


def balanced_labels(n: int, M: int, rng: np.random.Generator) -> np.ndarray:
    return rng.permutation(np.arange(n) % M)


def generate_synthetic(cfg: SynthConfig, rng: np.random.Generator | None = None):
    """Generate ``(Dataset, Graph)`` following the latent-distance model.

    Each class is coded by the binary digits of its index; bit ``b`` of the
    code sets the mean of one informative coordinate to ``+class_sep`` or
    ``-class_sep``. The first ``ceil(alpha * bits)`` bits live in the leading
    coordinates of ``X`` and the rest in the leading coordinates of ``U``.
    Every other coordinate is standard normal noise, independent of the label.
    The graph is sampled from ``U`` with ``scale_sq_gen``; if it comes out
    disconnected the largest component is kept and splits are drawn on it.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    n, M = cfg.n, cfg.M
    y = balanced_labels(n, M, rng)

    bits = label_bits(M)
    n_x, n_u = informative_split(cfg.alpha, bits)
    codes = ((np.arange(M)[:, None] >> np.arange(bits)[None, :]) & 1) * 2.0 - 1.0
    signs = codes[y]  # (n, bits)

    X = rng.standard_normal((n, cfg.d))
    U = rng.standard_normal((n, cfg.k))
    X[:, :n_x] += cfg.class_sep * signs[:, :n_x]
    U[:, :n_u] += cfg.latent_class_sep * signs[:, n_x:]

    g = sample_graph(LatentState(U, cfg.scale_sq_gen), rng, warn=False)
    dropped = []
    if not g.connected:
        g, kept = largest_component(g)
        dropped = sorted(set(range(n)) - set(kept.tolist()))
        X, U, y = X[kept], U[kept], y[kept]

    meta = {"synth": cfg.to_dict(), "dropped_nodes": dropped,
            "informative_x": n_x, "informative_u": n_u}
    ds = Dataset(X=X, y=y, train=[], val=[], test=np.arange(g.n), U_true=U,
                 label_names=[str(c) for c in range(M)], meta=meta)
    ds = make_splits(ds, cfg.train_frac, cfg.val_frac, rng)
    return ds, g


def _quota(counts: np.ndarray, frac: float, rng: np.random.Generator) -> np.ndarray:
    """Largest-remainder allocation of ``round(frac * total)`` over classes."""
    total = int(math.floor(frac * counts.sum() + 0.5))
    raw = frac * counts
    base = np.floor(raw).astype(np.int64)
    extra = total - int(base.sum())
    if extra > 0:
        rem = raw - base
        # random tie-break among equal remainders, largest remainder first
        order = np.lexsort((rng.random(counts.size), -rem))
        for c in order:
            if extra == 0:
                break
            if base[c] < counts[c]:
                base[c] += 1
                extra -= 1
    return base


def make_splits(ds: Dataset, train_frac: float, val_frac: float, rng: np.random.Generator) -> Dataset:
    """Stratified train/val/test split over the labelled nodes.

    Train and validation sizes are ``round(frac * n_labelled)`` distributed
    over classes by largest remainder. Every node not in train or val,
    including unlabelled ones, goes to test.
    """
    if not 0.0 < train_frac < 1.0:
        raise InvalidFraction(f"train_frac must be in (0, 1), got {train_frac}")
    if not 0.0 <= val_frac < 1.0 or train_frac + val_frac >= 1.0:
        raise InvalidFraction(f"need val_frac >= 0 and train_frac + val_frac < 1, got {train_frac}, {val_frac}")

    y = ds.y
    known = y != UNKNOWN
    M = max(ds.num_classes, int(y.max()) + 1 if known.any() else 0)
    counts = np.bincount(y[known], minlength=M)
    q_train = _quota(counts, train_frac, rng)
    q_val = _quota(counts, val_frac, rng)

    train, val = [], []
    for c in range(M):
        members = rng.permutation(np.flatnonzero(y == c))
        t = q_train[c]
        v = min(q_val[c], members.size - t)
        train.append(members[:t])
        val.append(members[t:t + v])
    train = np.sort(np.concatenate(train)) if train else np.zeros(0, np.int64)
    val = np.sort(np.concatenate(val)) if val else np.zeros(0, np.int64)
    used = np.zeros(ds.n, dtype=bool)
    used[train] = True
    used[val] = True
    test = np.flatnonzero(~used)
    return Dataset(X=ds.X, y=ds.y, train=train, val=val, test=test, U_true=ds.U_true,
                   label_names=ds.label_names, meta=dict(ds.meta))
