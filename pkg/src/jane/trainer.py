"""Alternating maximum-likelihood training of the classifier weights and ``U``.

Each epoch takes an optimiser step on the weights ``(W0, W1)`` with ``U``
held fixed, then (for the variants that update it) a gradient step on ``U``
with the weights held fixed. ``U`` starts from the spectral embedding, or
from a random centred unit-norm matrix for the ``jane-r`` variant.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import classifier as clf
from .errors import DivergenceDetected, InvalidConfig
from .genmodel import Dataset, LatentState, surrogate_adjacency_nll
from .graph import Graph, laplacian
from .spectral import smallest_nontrivial_eigs

log = logging.getLogger(__name__)

VARIANTS = ("jane", "jane-nu", "jane-r")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    lr_w: float = 0.005
    lr_u: float = 1e-4
    dropout: float = 0.2
    weight_decay: float = 5e-2
    k: int = 2
    scale_sq: float = 0.01
    variant: str = "jane"
    seed: int = 0
    early_stop_patience: int | None = None
    hidden: int = 16
    u_update_every: int = 1
    optimizer: str = "adam"
    u_gain: float = 2.0
    project_u: bool = False

    def __post_init__(self):
        if self.epochs < 1:
            raise InvalidConfig("epochs must be >= 1")
        if not (self.lr_w > 0):
            raise InvalidConfig("lr_w must be positive")
        if not (self.lr_u >= 0):
            raise InvalidConfig("lr_u must be non-negative")
        if not 0.0 <= self.dropout < 1.0:
            raise InvalidConfig("dropout must be in [0, 1)")
        if self.variant not in VARIANTS:
            raise InvalidConfig(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.optimizer not in ("adam", "sgd"):
            raise InvalidConfig("optimizer must be 'adam' or 'sgd'")
        if self.k < 1 or self.hidden < 1 or self.u_update_every < 1:
            raise InvalidConfig("k, hidden and u_update_every must be >= 1")
        if not self.scale_sq > 0:
            raise InvalidConfig("scale_sq must be positive")
        if not (self.u_gain > 0 and math.isfinite(self.u_gain)):
            raise InvalidConfig("u_gain must be positive")

    def to_dict(self):
        return asdict(self)


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    adj_nll: float
    obj: float
    train_acc: float
    val_acc: float


@dataclass
class TrainReport:
    config: TrainConfig
    records: list = field(default_factory=list)
    params: clf.ClassifierParams | None = None
    U: np.ndarray | None = None
    U_init: np.ndarray | None = None
    epochs_run: int = 0
    duration_ms: float = 0.0
    test_acc: float = float("nan")

    def predictions(self, ds: Dataset) -> np.ndarray:
        return clf.predict(ds.X, input_scale(self.config, ds.n) * self.U, self.params)

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "epochs": [asdict(r) for r in self.records],
            "test_acc": self.test_acc,
            "duration_ms": self.duration_ms,
        }

    def same_trajectory(self, other: "TrainReport") -> bool:
        """Equality of everything except wall-clock time."""
        same_acc = self.test_acc == other.test_acc or (
            math.isnan(self.test_acc) and math.isnan(other.test_acc))
        return (self.config == other.config
                and [asdict(r) for r in self.records] == [asdict(r) for r in other.records]
                and np.array_equal(self.U, other.U)
                and np.array_equal(self.params.W0, other.params.W0)
                and np.array_equal(self.params.W1, other.params.W1)
                and same_acc)


class Adam:
    def __init__(self, shapes, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class SGD:
    def __init__(self, lr):
        self.lr = lr

    def step(self, params, grads):
        for p, g in zip(params, grads):
            p -= self.lr * g


def random_embedding(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    U = rng.standard_normal((n, k)) / math.sqrt(n)
    U -= U.mean(axis=0)
    U /= np.linalg.norm(U, axis=0)
    return U


def project_embedding(U: np.ndarray) -> np.ndarray:
    """Centre each column and scale it to unit norm."""
    U = U - U.mean(axis=0)
    return U / np.linalg.norm(U, axis=0)


def init_U(g: Graph, cfg: TrainConfig, rng: np.random.Generator | None = None) -> LatentState:
    """Initial latent estimate: spectral for jane/jane-nu, random for jane-r."""
    if cfg.variant == "jane-r":
        if rng is None:
            rng = np.random.default_rng(cfg.seed)
        U = random_embedding(g.n, cfg.k, rng)
    else:
        U = smallest_nontrivial_eigs(laplacian(g), cfg.k).eigenvectors
    return LatentState(U, cfg.scale_sq)


def objective(ds: Dataset, g: Graph, state: LatentState, params: clf.ClassifierParams,
              cfg: TrainConfig | None = None) -> float:
    """Training NLL (dropout off) plus the surrogate adjacency NLL.

    The classifier sees ``c * U`` with ``c = input_scale(cfg, n)``; without a
    config ``c = 1``.
    """
    c = 1.0 if cfg is None else input_scale(cfg, ds.n)
    trace = clf.forward(ds.X, c * state.U, params)
    return clf.nll_loss(trace, ds.y, ds.train) + surrogate_adjacency_nll(g, state)


def input_scale(cfg: TrainConfig, n: int) -> float:
    """Factor applied to ``U`` before it enters the classifier.

    Unit-norm columns have entries of size about ``1/sqrt(n)``, far below the
    scale of ``X``; ``u_gain * sqrt(n)`` brings them to RMS ``u_gain``.
    """
    return cfg.u_gain * math.sqrt(n)


def _split_rngs(seed: int):
    ss = np.random.SeedSequence(seed)
    init_ss, u_ss, drop_ss = ss.spawn(3)
    return (np.random.default_rng(init_ss), np.random.default_rng(u_ss), np.random.default_rng(drop_ss))


def train(ds: Dataset, g: Graph, cfg: TrainConfig, rng: np.random.Generator | None = None,
          U0: np.ndarray | None = None, params0: clf.ClassifierParams | None = None) -> TrainReport:
    """Run the alternating optimisation and return a full report.

    Randomness (weight init, random ``U`` init, dropout masks) derives from
    ``cfg.seed`` unless ``rng`` is given. ``U0``/``params0`` override the
    initial embedding and weights.
    """
    if ds.train.size == 0:
        raise ValueError("training split is empty")
    if g.n != ds.n:
        raise ValueError(f"graph has {g.n} nodes but dataset has {ds.n}")
    if rng is None:
        init_rng, u_rng, drop_rng = _split_rngs(cfg.seed)
    else:
        init_rng = u_rng = drop_rng = rng

    start = time.perf_counter()
    n_classes = ds.num_classes
    params = params0.copy() if params0 is not None else clf.init_params(ds.d + cfg.k, cfg.hidden, n_classes, init_rng)
    if U0 is not None:
        state = LatentState(np.array(U0, dtype=np.float64), cfg.scale_sq)
    else:
        state = init_U(g, cfg, u_rng)
    if state.U.shape[1] != cfg.k:
        raise ValueError(f"U has {state.U.shape[1]} columns but k={cfg.k}")
    U = state.U.copy()
    report = TrainReport(config=cfg, U_init=U.copy())

    if cfg.optimizer == "adam":
        opt = Adam([params.W0.shape, params.W1.shape], cfg.lr_w)
    else:
        opt = SGD(cfg.lr_w)
    c = input_scale(cfg, ds.n)
    update_u = cfg.variant != "jane-nu" and cfg.lr_u > 0

    best_val = -math.inf
    since_best = 0
    for epoch in range(1, cfg.epochs + 1):
        trace = clf.forward(ds.X, c * U, params, cfg.dropout, drop_rng)
        dW0, dW1, _ = clf.backward(trace, ds.y, ds.train, params, cfg.weight_decay)
        opt.step([params.W0, params.W1], [dW0, dW1])

        if update_u and epoch % cfg.u_update_every == 0:
            trace_u = clf.forward(ds.X, c * U, params, cfg.dropout, drop_rng)
            _, _, dH = clf.backward(trace_u, ds.y, ds.train, params, 0.0)
            dU = c * dH[:, ds.d:] + clf.grad_U_adjacency(g, LatentState(U, cfg.scale_sq))
            U = U - cfg.lr_u * dU
            if cfg.project_u:
                U = project_embedding(U)

        # the record describes the state after both steps, dropout off
        finite = np.all(np.isfinite(U)) and np.all(np.isfinite(params.W0)) and np.all(np.isfinite(params.W1))
        if finite:
            adj = surrogate_adjacency_nll(g, LatentState(U, cfg.scale_sq))
            clean = clf.forward(ds.X, c * U, params)
            loss = clf.nll_loss(clean, ds.y, ds.train)
            pred = np.argmax(clean.a1, axis=1)
        else:
            adj = loss = math.nan
            pred = np.zeros(ds.n, dtype=np.int64)
        rec = EpochRecord(
            epoch=epoch,
            loss=loss,
            adj_nll=adj,
            obj=loss + adj,
            train_acc=clf.accuracy(pred, ds.y, ds.train),
            val_acc=clf.accuracy(pred, ds.y, ds.val) if ds.val.size else float("nan"),
        )
        report.records.append(rec)
        report.epochs_run = epoch
        if not math.isfinite(rec.obj):
            report.params, report.U = params, U
            report.duration_ms = (time.perf_counter() - start) * 1e3
            raise DivergenceDetected(f"objective became {rec.obj} at epoch {epoch}", report)

        if cfg.early_stop_patience is not None and ds.val.size:
            if rec.val_acc > best_val:
                best_val = rec.val_acc
                since_best = 0
            else:
                since_best += 1
                if since_best >= cfg.early_stop_patience:
                    log.info("early stop at epoch %d (best val acc %.4f)", epoch, best_val)
                    break

    report.params = params
    report.U = U
    pred = clf.predict(ds.X, c * U, params)
    report.test_acc = clf.accuracy(pred, ds.y, ds.test) if ds.test.size else float("nan")
    report.duration_ms = (time.perf_counter() - start) * 1e3
    return report
