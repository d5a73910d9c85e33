"""Canonical on-disk dataset directories.

A dataset directory holds

* ``edges.txt``: one undirected edge per line, two whitespace-separated node
  ids; ``#`` lines are comments.
* ``X.csv``: one row per node, ``d`` comma-separated reals, no header.
* ``y.csv``: header ``node,label`` then one ``node,label`` line per node in
  the same order as ``X.csv``; ``?`` marks an unknown label.
* ``splits.json``: ``{"train": [...], "val": [...], "test": [...]}``.
* ``meta.json``: free-form metadata (the generator config for synthetic data).
* ``manifest.json``: ``n``, ``d``, ``M``, ``label_names``, ``id_remap`` and a
  sha256 digest per file. Optional when loading.

Node ids in ``edges.txt`` and ``splits.json`` refer to the ``node`` column of
``y.csv``, which may hold arbitrary tokens. Internally nodes are renumbered
``0..n-1`` in file order; ``id_remap[i]`` is the external id of node ``i``.
"""

from __future__ import annotations

import hashlib
import json
import re
from pathlib import Path

import numpy as np

from .errors import ChecksumMismatch, DimensionMismatch, ParseError, UnknownLabelValue
from .genmodel import UNKNOWN, Dataset
from .graph import Graph, build_graph, largest_component

FILES = ("edges.txt", "X.csv", "y.csv", "splits.json", "meta.json")
UNKNOWN_TOKEN = "?"
FORMAT_VERSION = 1
_TOKEN = re.compile(r"\S+")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def save_dataset(ds: Dataset, g: Graph, directory) -> dict:
    """Write ``ds`` and ``g`` in canonical form and return the manifest."""
    if g.n != ds.n:
        raise DimensionMismatch(f"graph has {g.n} nodes but dataset has {ds.n}")
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    names = ds.label_names if ds.label_names is not None else [str(c) for c in range(ds.num_classes)]

    with open(out / "edges.txt", "w", encoding="utf-8") as fh:
        fh.write(f"# n={g.n} m={g.num_edges}\n")
        fh.write("".join(f"{i} {j}\n" for i, j in g.edges.tolist()))
    with open(out / "X.csv", "w", encoding="utf-8") as fh:
        # repr gives the shortest string that parses back to the same double
        fh.write("".join(",".join(map(repr, row)) + "\n" for row in ds.X.tolist()))
    with open(out / "y.csv", "w", encoding="utf-8") as fh:
        fh.write("node,label\n")
        fh.write("".join(f"{i},{UNKNOWN_TOKEN if c == UNKNOWN else names[c]}\n"
                         for i, c in enumerate(ds.y.tolist())))
    splits = {"train": ds.train.tolist(), "val": ds.val.tolist(), "test": ds.test.tolist()}
    (out / "splits.json").write_text(json.dumps(splits) + "\n", encoding="utf-8")
    (out / "meta.json").write_text(json.dumps(_jsonable(ds.meta), indent=2, sort_keys=True) + "\n",
                                   encoding="utf-8")

    id_remap = ds.meta.get("id_remap")
    manifest = {
        "format_version": FORMAT_VERSION,
        "n": ds.n,
        "d": ds.d,
        "M": len(names),
        "label_names": list(names),
        "id_remap": list(id_remap) if id_remap is not None else list(range(ds.n)),
        "sha256": {name: sha256_file(out / name) for name in FILES},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return manifest


# -- loading -----------------------------------------------------------------

def _locate_bad_row(path, d_expected):
    """Slow scan used only to report where the fast parser failed."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            body = line.rstrip("\r\n")
            if not body.strip():
                raise ParseError(str(path), lineno, 1, "empty row")
            fields = body.split(",")
            if d_expected is not None and len(fields) != d_expected:
                raise ParseError(str(path), lineno, 1,
                                 f"expected {d_expected} fields, got {len(fields)}")
            col = 1
            for tok in fields:
                try:
                    float(tok)
                except ValueError:
                    raise ParseError(str(path), lineno, col, f"not a real number: {tok!r}") from None
                col += len(tok) + 1
            if d_expected is None:
                d_expected = len(fields)
    raise ParseError(str(path), None, None, "unparseable feature file")


def read_features(path) -> np.ndarray:
    try:
        X = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2, comments=None)
    except ValueError:
        _locate_bad_row(path, None)
        raise
    return X


def read_labels(path):
    """Return ``(node_tokens, label_tokens)``; ``None`` marks an unknown label."""
    nodes, labels = [], []
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    start = 1 if lines and lines[0].replace(" ", "") == "node,label" else 0
    for lineno, line in enumerate(lines[start:], start=start + 1):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(str(path), lineno, 1, f"expected 'node,label', got {len(parts)} fields")
        node, label = parts[0].strip(), parts[1].strip()
        if not node:
            raise ParseError(str(path), lineno, 1, "empty node id")
        if not label:
            raise ParseError(str(path), lineno, len(parts[0]) + 2, "empty label")
        nodes.append(node)
        labels.append(None if label == UNKNOWN_TOKEN else label)
    return nodes, labels


def read_edges(path, index: dict):
    """Edge endpoints mapped through ``index`` (external token -> dense id)."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            tokens = [(m.group(), m.start() + 1) for m in _TOKEN.finditer(line)]
            if len(tokens) != 2:
                raise ParseError(str(path), lineno, 1, f"expected 2 tokens, got {len(tokens)}")
            ends = [index.get(tok) for tok, _ in tokens]
            for (tok, col), i in zip(tokens, ends):
                if i is None:
                    raise ParseError(str(path), lineno, col, f"unknown node id {tok!r}")
            a, b = ends
            if a == b:
                raise ParseError(str(path), lineno, 1, f"self-loop on node {tokens[0][0]!r}")
            rows.append((a, b))
    return np.asarray(rows, dtype=np.int64).reshape(-1, 2)


def _read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(str(path), exc.lineno, exc.colno, exc.msg) from None


def _verify_checksums(directory: Path, manifest: dict):
    for name, digest in manifest.get("sha256", {}).items():
        path = directory / name
        if not path.exists():
            raise ChecksumMismatch(f"{path}: listed in manifest but missing")
        actual = sha256_file(path)
        if actual != digest:
            raise ChecksumMismatch(f"{path}: sha256 {actual} does not match manifest {digest}")


def load_dataset(directory, verify: bool = True):
    """Load and validate a dataset directory, returning ``(Dataset, Graph)``.

    If the graph is disconnected only its largest component is kept; the
    dropped external ids are listed in ``meta["dropped_nodes"]`` and
    ``meta["id_remap"]`` maps the new dense ids back to external ids.
    """
    root = Path(directory)
    manifest = _read_json(root / "manifest.json") if (root / "manifest.json").exists() else None
    if manifest is not None and verify:
        _verify_checksums(root, manifest)

    nodes, raw_labels = read_labels(root / "y.csv")
    X = read_features(root / "X.csv")
    n = len(nodes)
    if manifest is not None and manifest.get("n") is not None and manifest["n"] != n:
        raise DimensionMismatch(f"y.csv lists {n} nodes but manifest declares n={manifest['n']}")
    if X.shape[0] != n:
        raise DimensionMismatch(f"X.csv has {X.shape[0]} rows but there are {n} nodes")
    if manifest is not None and manifest.get("d") is not None and X.shape[1] != manifest["d"]:
        raise DimensionMismatch(f"X.csv has {X.shape[1]} columns but manifest declares d={manifest['d']}")

    index = {}
    for i, tok in enumerate(nodes):
        if tok in index:
            raise ParseError(str(root / "y.csv"), i + 2, 1, f"node {tok!r} listed twice")
        index[tok] = i

    if manifest is not None and manifest.get("label_names") is not None:
        names = [str(x) for x in manifest["label_names"]]
        if manifest.get("M") is not None and manifest["M"] != len(names):
            raise DimensionMismatch(f"manifest declares M={manifest['M']} but lists {len(names)} labels")
        lookup = {name: c for c, name in enumerate(names)}
        y = np.empty(n, dtype=np.int64)
        for i, lab in enumerate(raw_labels):
            if lab is None:
                y[i] = UNKNOWN
            elif lab in lookup:
                y[i] = lookup[lab]
            else:
                raise UnknownLabelValue(f"{root / 'y.csv'}: node {nodes[i]!r} has label {lab!r} "
                                        f"not among {names}")
    else:
        names, lookup = [], {}
        y = np.empty(n, dtype=np.int64)
        for i, lab in enumerate(raw_labels):
            if lab is None:
                y[i] = UNKNOWN
                continue
            if lab not in lookup:
                lookup[lab] = len(names)
                names.append(lab)
            y[i] = lookup[lab]

    edges = read_edges(root / "edges.txt", index)
    g = build_graph(edges, n, warn=False)

    raw_splits = _read_json(root / "splits.json")
    splits = {}
    for key in ("train", "val", "test"):
        ids = []
        for tok in raw_splits.get(key, []):
            i = index.get(str(tok))
            if i is None:
                raise ParseError(str(root / "splits.json"), None, None, f"{key}: unknown node id {tok!r}")
            ids.append(i)
        splits[key] = np.asarray(ids, dtype=np.int64)

    meta = _read_json(root / "meta.json") if (root / "meta.json").exists() else {}
    external = list(manifest["id_remap"]) if manifest and manifest.get("id_remap") is not None else nodes
    if len(external) != n:
        raise DimensionMismatch(f"manifest id_remap has {len(external)} entries for {n} nodes")

    if not g.connected:
        g, kept = largest_component(g)
        remap = np.full(n, -1, dtype=np.int64)
        remap[kept] = np.arange(kept.size)
        dropped = np.flatnonzero(remap < 0)
        meta = dict(meta)
        meta["dropped_nodes"] = [external[i] for i in dropped.tolist()]
        X, y = X[kept], y[kept]
        external = [external[i] for i in kept.tolist()]
        splits = {k: remap[v][remap[v] >= 0] for k, v in splits.items()}

    meta = dict(meta)
    if external != list(range(len(external))):
        meta["id_remap"] = external
    ds = Dataset(X=X, y=y, train=splits["train"], val=splits["val"], test=splits["test"],
                 label_names=names, meta=meta)
    return ds, g


def dataset_equal(a: Dataset, b: Dataset) -> bool:
    return (np.array_equal(a.X, b.X) and np.array_equal(a.y, b.y)
            and np.array_equal(a.train, b.train) and np.array_equal(a.val, b.val)
            and np.array_equal(a.test, b.test))


__all__ = ["save_dataset", "load_dataset", "read_features", "read_labels", "read_edges",
           "sha256_file", "dataset_equal", "FILES"]
