"""Undirected graph storage, Laplacian construction and connectivity checks.

Graphs are stored as a sorted upper-triangular edge list plus symmetric CSR
rows (``indptr``/``indices``) with column indices sorted within each row, so
the all-pairs kernels can walk neighbours with a single moving pointer.
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import IndexOutOfRange, SelfLoop, TooLarge

DENSE_LIMIT = 2000


class DisconnectedGraphWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class Graph:
    n: int
    edges: np.ndarray  # (m, 2) int64, i < j, lexicographically sorted
    indptr: np.ndarray
    indices: np.ndarray
    connected: bool = field(default=True)

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def adjacency(self) -> sp.csr_matrix:
        data = np.ones(self.indices.shape[0], dtype=np.float64)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def dense(self) -> np.ndarray:
        if self.n > DENSE_LIMIT:
            raise TooLarge(f"dense adjacency refused for n={self.n} > {DENSE_LIMIT}")
        A = np.zeros((self.n, self.n))
        if self.num_edges:
            A[self.edges[:, 0], self.edges[:, 1]] = 1.0
            A[self.edges[:, 1], self.edges[:, 0]] = 1.0
        return A

    def has_edge(self, i: int, j: int) -> bool:
        row = self.neighbors(i)
        pos = np.searchsorted(row, j)
        return bool(pos < row.shape[0] and row[pos] == j)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.edges, other.edges)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Laplacian:
    L: sp.csr_matrix
    degrees: np.ndarray

    @property
    def n(self) -> int:
        return self.L.shape[0]

    def toarray(self) -> np.ndarray:
        if self.n > DENSE_LIMIT:
            raise TooLarge(f"dense Laplacian refused for n={self.n} > {DENSE_LIMIT}")
        return self.L.toarray()

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.L @ x


def _from_upper(n: int, upper: np.ndarray, warn: bool = True) -> Graph:
    if upper.shape[0]:
        order = np.lexsort((upper[:, 1], upper[:, 0]))
        upper = upper[order]
        keep = np.ones(upper.shape[0], dtype=bool)
        keep[1:] = np.any(upper[1:] != upper[:-1], axis=1)
        upper = upper[keep]
    upper = np.ascontiguousarray(upper, dtype=np.int64).reshape(-1, 2)

    rows = np.concatenate([upper[:, 0], upper[:, 1]])
    cols = np.concatenate([upper[:, 1], upper[:, 0]])
    order = np.lexsort((cols, rows))
    indices = cols[order].astype(np.int64)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    indptr = np.cumsum(indptr)

    g = Graph(n=n, edges=upper, indptr=indptr, indices=indices, connected=True)
    connected = validate_connected(g)
    if not connected:
        object.__setattr__(g, "connected", False)
        if warn:
            warnings.warn(f"graph with n={n} is disconnected", DisconnectedGraphWarning, stacklevel=3)
    return g


def build_graph(edge_list, n: int, warn: bool = True) -> Graph:
    """Build a simple undirected graph from node pairs.

    Pairs may appear in either orientation and repeat; they are symmetrised
    and deduplicated. A disconnected result is flagged via ``connected=False``
    and a ``DisconnectedGraphWarning`` rather than an error.
    """
    pairs = np.asarray(list(edge_list) if not isinstance(edge_list, np.ndarray) else edge_list,
                       dtype=np.int64).reshape(-1, 2)
    if n < 0:
        raise ValueError("n must be non-negative")
    if pairs.size:
        bad = (pairs < 0) | (pairs >= n)
        if bad.any():
            row = int(np.argmax(bad.any(axis=1)))
            raise IndexOutOfRange(f"edge {tuple(pairs[row])} has endpoint outside [0, {n})")
        loops = pairs[:, 0] == pairs[:, 1]
        if loops.any():
            row = int(np.argmax(loops))
            raise SelfLoop(f"self-loop at node {pairs[row, 0]}")
    upper = np.sort(pairs, axis=1)
    return _from_upper(n, upper, warn=warn)


def laplacian(g: Graph) -> Laplacian:
    """Unnormalised Laplacian ``D - A``.

    Built from integer counts and cast once, so every row sums to exactly zero.
    """
    deg = g.degrees.astype(np.int64)
    A = sp.csr_matrix((np.ones(g.indices.shape[0], dtype=np.int64), g.indices, g.indptr),
                      shape=(g.n, g.n))
    L = (sp.diags(deg, format="csr") - A).astype(np.float64).tocsr()
    L.sort_indices()
    return Laplacian(L=L, degrees=deg)


def validate_connected(g: Graph) -> bool:
    if g.n == 0:
        return True
    seen = np.zeros(g.n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    count = 1
    indptr, indices = g.indptr, g.indices
    while queue:
        i = queue.popleft()
        for j in indices[indptr[i]:indptr[i + 1]]:
            if not seen[j]:
                seen[j] = True
                count += 1
                queue.append(j)
    return count == g.n


def components(g: Graph) -> np.ndarray:
    """Component label per node (labels ordered by smallest member)."""
    labels = np.full(g.n, -1, dtype=np.int64)
    current = 0
    for start in range(g.n):
        if labels[start] >= 0:
            continue
        labels[start] = current
        queue = deque([start])
        while queue:
            i = queue.popleft()
            for j in g.indices[g.indptr[i]:g.indptr[i + 1]]:
                if labels[j] < 0:
                    labels[j] = current
                    queue.append(j)
        current += 1
    return labels


def largest_component(g: Graph):
    """Return ``(subgraph, kept)`` where ``kept[new_id] = old_id``.

    Ties between equally large components go to the one containing the
    smallest node id. The subgraph keeps the relative node order.
    """
    if g.connected:
        return g, np.arange(g.n, dtype=np.int64)
    labels = components(g)
    sizes = np.bincount(labels)
    best = int(np.argmax(sizes))
    kept = np.flatnonzero(labels == best).astype(np.int64)
    remap = np.full(g.n, -1, dtype=np.int64)
    remap[kept] = np.arange(kept.shape[0])
    mask = (remap[g.edges[:, 0]] >= 0) & (remap[g.edges[:, 1]] >= 0)
    sub = remap[g.edges[mask]]
    return _from_upper(int(kept.shape[0]), sub, warn=False), kept


def induced_subgraph(g: Graph, nodes) -> Graph:
    nodes = np.asarray(nodes, dtype=np.int64)
    remap = np.full(g.n, -1, dtype=np.int64)
    remap[nodes] = np.arange(nodes.shape[0])
    mask = (remap[g.edges[:, 0]] >= 0) & (remap[g.edges[:, 1]] >= 0)
    return build_graph(remap[g.edges[mask]], int(nodes.shape[0]), warn=False)


def permute(g: Graph, perm) -> Graph:
    """Relabel node ``i`` as ``perm[i]``."""
    perm = np.asarray(perm, dtype=np.int64)
    return build_graph(perm[g.edges], g.n, warn=False)


def read_edge_list(path, n: int | None = None):
    """Parse an edge-list file into an ``(m, 2)`` int array.

    One edge per line, two whitespace-separated integer tokens; blank lines and
    lines starting with ``#`` are ignored.
    """
    from .errors import ParseError

    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            tokens = stripped.split()
            if len(tokens) != 2:
                raise ParseError(str(path), lineno, 1, f"expected 2 tokens, got {len(tokens)}")
            row = []
            col = 1
            for tok in tokens:
                col = line.index(tok, col - 1) + 1
                try:
                    row.append(int(tok))
                except ValueError:
                    raise ParseError(str(path), lineno, col, f"not an integer: {tok!r}") from None
                col += len(tok)
            pairs.append(row)
    arr = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    return arr


def write_edge_list(g: Graph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# n={g.n} m={g.num_edges}\n")
        for i, j in g.edges:
            fh.write(f"{i} {j}\n")


def load_edge_list(path, n: int | None = None) -> Graph:
    pairs = read_edge_list(path)
    if n is None:
        n = int(pairs.max()) + 1 if pairs.size else 0
    return build_graph(pairs, n)
