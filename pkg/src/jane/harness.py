"""Synthetic sweeps over (alpha, train fraction, method, repeat) and outputs.

Every cell derives its own seeds from the sweep's base seed, so cells can run
in any order or in isolation and still reproduce the same numbers. The data
seed ignores the method, which means all methods in a repeat see the same
graph and split.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .baselines import LPConfig, label_propagation
from .errors import EmptyTable, InvalidConfig, JaneError
from .genmodel import SynthConfig, generate_synthetic
from .trainer import VARIANTS, TrainConfig, train

log = logging.getLogger(__name__)

METHODS = VARIANTS + ("lp",)
CSV_COLUMNS = ("alpha", "frac", "method", "k", "seed", "accuracy")


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from the ``repr`` of ``parts``."""
    digest = hashlib.sha256("|".join(repr(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1


@dataclass(frozen=True)
class SweepSpec:
    alphas: tuple = (0.0, 0.5, 1.0)
    train_fracs: tuple = (0.05, 0.10, 0.20, 0.30)
    methods: tuple = ("jane", "jane-nu", "jane-r", "lp")
    repeats: int = 5
    base_seed: int = 0
    synth: SynthConfig = field(default_factory=lambda: SynthConfig())
    train: TrainConfig = field(default_factory=lambda: TrainConfig())
    lp: LPConfig = field(default_factory=lambda: LPConfig())
    workers: int = 1

    def __post_init__(self):
        for name in ("alphas", "train_fracs", "methods"):
            value = tuple(getattr(self, name))
            if not value:
                raise InvalidConfig(f"{name} must be non-empty")
            object.__setattr__(self, name, value)
        for a in self.alphas:
            if not 0.0 <= a <= 1.0:
                raise InvalidConfig(f"alpha {a} outside [0, 1]")
        for f in self.train_fracs:
            if not 0.0 < f < 1.0:
                raise InvalidConfig(f"train fraction {f} outside (0, 1)")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise InvalidConfig(f"unknown methods {sorted(unknown)}; choose from {METHODS}")
        if self.repeats < 1:
            raise InvalidConfig("repeats must be >= 1")
        if self.workers < 1:
            raise InvalidConfig("workers must be >= 1")

    def to_dict(self) -> dict:
        return {
            "alphas": list(self.alphas),
            "train_fracs": list(self.train_fracs),
            "methods": list(self.methods),
            "repeats": self.repeats,
            "base_seed": self.base_seed,
            "synth": self.synth.to_dict(),
            "train": self.train.to_dict(),
            "lp": asdict(self.lp),
            "workers": self.workers,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "SweepSpec":
        raw = dict(raw)
        known = {"alphas", "train_fracs", "methods", "repeats", "base_seed", "synth", "train", "lp", "workers"}
        extra = set(raw) - known
        if extra:
            raise InvalidConfig(f"unknown sweep spec fields {sorted(extra)}")
        try:
            if "synth" in raw:
                raw["synth"] = SynthConfig(**raw["synth"])
            if "train" in raw:
                raw["train"] = TrainConfig(**raw["train"])
            if "lp" in raw:
                raw["lp"] = LPConfig(**raw["lp"])
            return cls(**raw)
        except TypeError as exc:
            raise InvalidConfig(str(exc)) from None

    def cells(self):
        for alpha in self.alphas:
            for frac in self.train_fracs:
                for method in self.methods:
                    for repeat in range(self.repeats):
                        yield alpha, frac, method, repeat


@dataclass(frozen=True)
class ResultRow:
    alpha: float
    frac: float
    method: str
    k: int  # 0 for methods without an embedding
    seed: int
    accuracy: float


@dataclass
class ResultTable:
    rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def __eq__(self, other):
        return isinstance(other, ResultTable) and self.rows == other.rows

    def aggregate(self) -> list:
        """Mean and sample standard deviation of accuracy per (alpha, frac, method, k)."""
        groups = {}
        for r in self.rows:
            groups.setdefault((r.alpha, r.frac, r.method, r.k), []).append(r.accuracy)
        out = []
        for (alpha, frac, method, k), accs in sorted(groups.items()):
            arr = np.asarray(accs, dtype=np.float64)
            out.append({
                "alpha": alpha, "frac": frac, "method": method, "k": k,
                "count": int(arr.size),
                "mean": float(arr.mean()),
                "std": float(arr.std(ddof=1)) if arr.size > 1 else None,
            })
        return out

    def mean(self, **where) -> float:
        accs = [r.accuracy for r in self.rows if all(getattr(r, key) == v for key, v in where.items())]
        return float(np.mean(accs)) if accs else math.nan


def cell_seeds(spec: SweepSpec, alpha, frac, method, repeat):
    data_seed = derive_seed(spec.base_seed, "data", float(alpha), float(frac), repeat)
    train_seed = derive_seed(spec.base_seed, "train", float(alpha), float(frac), method, repeat)
    return data_seed, train_seed


def run_cell(spec: SweepSpec, alpha, frac, method, repeat) -> ResultRow:
    """Generate the cell's dataset, fit ``method`` and score it on the test split."""
    data_seed, train_seed = cell_seeds(spec, alpha, frac, method, repeat)
    synth = replace(spec.synth, alpha=float(alpha), train_frac=float(frac), seed=data_seed)
    ds, g = generate_synthetic(synth)
    if method == "lp":
        pred = label_propagation(g, ds.y, ds.train, ds.num_classes, spec.lp)
        known = ds.test[ds.y[ds.test] >= 0]
        acc = float(np.mean(pred[known] == ds.y[known]))
        k = 0
    else:
        cfg = replace(spec.train, variant=method, seed=train_seed)
        acc = train(ds, g, cfg).test_acc
        k = cfg.k
    return ResultRow(alpha=float(alpha), frac=float(frac), method=method, k=k, seed=data_seed, accuracy=acc)


def run_sweep(spec: SweepSpec) -> ResultTable:
    """Run every cell; a failing cell is logged in ``table.failures`` and skipped."""
    cells = list(spec.cells())

    def work(cell):
        try:
            return run_cell(spec, *cell), None
        except (JaneError, ValueError, FloatingPointError) as exc:
            alpha, frac, method, repeat = cell
            log.warning("cell alpha=%s frac=%s method=%s repeat=%s failed: %s", alpha, frac, method, repeat, exc)
            return None, {"alpha": alpha, "frac": frac, "method": method, "repeat": repeat,
                          "error": type(exc).__name__, "message": str(exc)}

    if spec.workers == 1:
        outcomes = [work(c) for c in cells]
    else:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            outcomes = list(pool.map(work, cells))
    table = ResultTable()
    for row, failure in outcomes:
        if row is not None:
            table.rows.append(row)
        else:
            table.failures.append(failure)
    return table


def run_eig_sensitivity(data, ks, cfg: TrainConfig, seeds=(0, 1, 2, 3, 4)) -> ResultTable:
    """Train once per (dataset, k, seed) and tabulate test accuracy against k.

    ``data`` is a ``(Dataset, Graph)`` pair or a list of them.
    """
    pairs = [data] if isinstance(data, tuple) else list(data)
    table = ResultTable()
    for ds, g in pairs:
        alpha = float(ds.meta.get("synth", {}).get("alpha", math.nan))
        frac = ds.train.size / max(1, int(np.sum(ds.y >= 0)))
        for k in ks:
            for seed in seeds:
                rep = train(ds, g, replace(cfg, k=int(k), seed=int(seed)))
                table.rows.append(ResultRow(alpha=alpha, frac=frac, method=cfg.variant, k=int(k),
                                            seed=int(seed), accuracy=rep.test_acc))
    return table


# -- output files ------------------------------------------------------------

def write_results_csv(table: ResultTable, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in table.rows:
            w.writerow([repr(r.alpha), repr(r.frac), r.method, r.k, r.seed, repr(r.accuracy)])


def read_results_csv(path) -> ResultTable:
    table = ResultTable()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        for row in reader:
            table.rows.append(ResultRow(alpha=float(row[0]), frac=float(row[1]), method=row[2],
                                        k=int(row[3]), seed=int(row[4]), accuracy=float(row[5])))
    return table


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def line_chart_svg(series: dict, title: str, xlabel: str, ylabel: str,
                   width: int = 480, height: int = 320) -> str:
    """Minimal SVG line chart. ``series`` maps a name to ``[(x, y), ...]``."""
    left, right, top, bottom = 56, 120, 32, 44
    pw, ph = width - left - right, height - top - bottom
    xs = [x for pts in series.values() for x, _ in pts]
    x0, x1 = (min(xs), max(xs)) if xs else (0.0, 1.0)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    y0, y1 = 0.0, 1.0

    def sx(x):
        return left + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return top + (1.0 - (y - y0) / (y1 - y0)) * ph

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">{title}</text>',
             f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
             f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>']
    for t in np.linspace(0.0, 1.0, 6):
        y = sy(t)
        parts.append(f'<line x1="{left - 4}" y1="{y:.1f}" x2="{left + pw}" y2="{y:.1f}" stroke="#ddd"/>')
        parts.append(f'<text x="{left - 6}" y="{y + 4:.1f}" text-anchor="end">{t:.1f}</text>')
    for x in sorted(set(xs)):
        parts.append(f'<text x="{sx(x):.1f}" y="{top + ph + 16}" text-anchor="middle">{x:g}</text>')
    parts.append(f'<text x="{left + pw / 2:.1f}" y="{height - 8}" text-anchor="middle">{xlabel}</text>')
    parts.append(f'<text x="14" y="{top + ph / 2:.1f}" text-anchor="middle" '
                 f'transform="rotate(-90 14 {top + ph / 2:.1f})">{ylabel}</text>')
    for idx, (name, pts) in enumerate(series.items()):
        color = _PALETTE[idx % len(_PALETTE)]
        pts = sorted(pts)
        coords = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in pts)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>')
        for x, y in pts:
            parts.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3" fill="{color}"/>')
        ly = top + 14 * idx + 8
        parts.append(f'<line x1="{left + pw + 10}" y1="{ly}" x2="{left + pw + 28}" y2="{ly}" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{left + pw + 32}" y="{ly + 4}">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_outputs(table: ResultTable, out_dir) -> list:
    """Write results.csv, summary.json and one SVG per alpha; return the paths."""
    if len(table) == 0:
        raise EmptyTable("result table is empty; nothing written")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [out / "results.csv", out / "summary.json"]
    write_results_csv(table, written[0])
    summary = {"cells": table.aggregate(), "failures": table.failures}
    written[1].write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")

    for alpha in sorted({r.alpha for r in table.rows}):
        series = {}
        for cell in summary["cells"]:
            if cell["alpha"] == alpha:
                series.setdefault(cell["method"], []).append((cell["frac"], cell["mean"]))
        path = out / f"accuracy_alpha_{alpha:g}.svg"
        path.write_text(line_chart_svg(series, f"alpha = {alpha:g}", "train fraction", "test accuracy"),
                        encoding="utf-8")
        written.append(path)
    return written
