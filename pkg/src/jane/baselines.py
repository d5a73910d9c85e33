"""Label propagation over the row-stochastic transition matrix ``D^-1 A``."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InvalidConfig, NoLabels
from .graph import Graph, components


class UnlabelledComponentWarning(UserWarning):
    pass


@dataclass(frozen=True)
class LPConfig:
    max_iters: int = 1000
    tol: float = 1e-6

    def __post_init__(self):
        if self.max_iters < 1:
            raise InvalidConfig("max_iters must be >= 1")
        if not self.tol > 0:
            raise InvalidConfig("tol must be positive")


@dataclass
class LPResult:
    labels: np.ndarray
    F: np.ndarray  # (n, M) label distribution per node
    iterations: int
    converged: bool


def _transition(g: Graph) -> sp.csr_matrix:
    deg = g.degrees.astype(np.float64)
    inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
    return sp.diags(inv) @ g.adjacency()


def propagate(g: Graph, labels, labelled, n_classes: int | None = None,
              cfg: LPConfig = LPConfig(), F0: np.ndarray | None = None) -> LPResult:
    """Iterate ``F <- D^-1 A F`` with labelled rows clamped to one-hot.

    ``labels`` holds a class index per node (only entries in ``labelled`` are
    read). Unlabelled rows start uniform. Isolated unlabelled nodes keep the
    uniform row. Stops when the largest absolute entry change drops below
    ``cfg.tol``.
    """
    labelled = np.asarray(labelled, dtype=np.int64)
    if labelled.size == 0:
        raise NoLabels("label propagation needs at least one labelled node")
    labels = np.asarray(labels, dtype=np.int64)
    known = labels[labelled]
    if np.any(known < 0):
        raise ValueError("labelled nodes must carry a class index")
    M = int(n_classes) if n_classes is not None else int(known.max()) + 1
    n = g.n

    comp = components(g)
    has_label = np.zeros(comp.max() + 1 if n else 0, dtype=bool)
    has_label[comp[labelled]] = True
    bare = np.flatnonzero(~has_label)
    if bare.size:
        warnings.warn(f"{bare.size} connected component(s) contain no labelled node; "
                      "their nodes default to class 0", UnlabelledComponentWarning, stacklevel=2)

    clamp = np.zeros((labelled.size, M))
    clamp[np.arange(labelled.size), known] = 1.0
    F = np.full((n, M), 1.0 / M) if F0 is None else np.array(F0, dtype=np.float64)
    F[labelled] = clamp
    P = _transition(g)
    isolated = g.degrees == 0

    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        new = P @ F
        new[isolated] = F[isolated]
        new[labelled] = clamp
        change = float(np.max(np.abs(new - F))) if n else 0.0
        F = new
        if change < cfg.tol:
            converged = True
            break
    return LPResult(labels=np.argmax(F, axis=1), F=F, iterations=it, converged=converged)


def label_propagation(g: Graph, labels, labelled, n_classes: int | None = None,
                      cfg: LPConfig = LPConfig()) -> np.ndarray:
    """Predicted class per node; ties go to the lowest class index."""
    return propagate(g, labels, labelled, n_classes, cfg).labels
