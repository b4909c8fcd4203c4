"""Reading graphs and matrices, writing results.

Graphs come as Matrix Market coordinate files (``.mtx``) or as edge-list CSV with one
``i,j`` pair of 0-based node indices per line (``#`` comments and an optional header line).
Covariate matrices are header-less numeric CSV. All parse errors name the offending line.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from ..linalg import SparseSymGraph


class InputError(ValueError):
    """Malformed or inconsistent input file."""


def _err(path, lineno, msg) -> InputError:
    return InputError(f"{path}: line {lineno}: {msg}")


def _read_mtx(path):
    """Returns ``(n, edges, symmetric)`` with edges as ``(i, j, lineno)`` 0-based."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].lower().startswith("%%matrixmarket"):
        raise _err(path, 1, "missing %%MatrixMarket header")
    head = lines[0].lower().split()
    if len(head) != 5 or head[1] != "matrix" or head[2] != "coordinate":
        raise _err(path, 1, "only 'matrix coordinate' Matrix Market files are supported")
    field, symmetry = head[3], head[4]
    if field not in ("pattern", "real", "integer"):
        raise _err(path, 1, f"unsupported field {field!r}")
    if symmetry not in ("general", "symmetric"):
        raise _err(path, 1, f"unsupported symmetry {symmetry!r}")
    size = None
    edges = []
    for lineno, line in enumerate(lines[1:], start=2):
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        tok = s.split()
        if size is None:
            try:
                size = tuple(int(t) for t in tok)
            except ValueError:
                raise _err(path, lineno, "bad size line") from None
            if len(size) != 3 or size[0] != size[1] or min(size) < 0:
                raise _err(path, lineno, "size line must be 'n n nnz' for a square matrix")
            continue
        want = 2 if field == "pattern" else 3
        if len(tok) != want:
            raise _err(path, lineno, f"expected {want} fields, got {len(tok)}")
        try:
            i, j = int(tok[0]) - 1, int(tok[1]) - 1
            w = 1.0 if field == "pattern" else float(tok[2])
        except ValueError:
            raise _err(path, lineno, "non-numeric entry") from None
        if not (0 <= i < size[0] and 0 <= j < size[0]):
            raise _err(path, lineno, f"index out of range 1..{size[0]}")
        if w == 0:
            continue
        if w != 1.0:
            raise _err(path, lineno, f"edge weight {w} is not 0/1")
        edges.append((i, j, lineno))
    if size is None:
        raise _err(path, len(lines), "missing size line")
    return size[0], edges, symmetry == "symmetric"


def _read_edge_csv(path):
    edges = []
    n = 0
    with open(path, newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or not "".join(rec).strip() or rec[0].lstrip().startswith("#"):
                continue
            if len(rec) != 2:
                raise _err(path, lineno, f"expected 2 fields, got {len(rec)}")
            try:
                i, j = int(rec[0]), int(rec[1])
            except ValueError:
                if not edges and lineno == 1:
                    continue  # header
                raise _err(path, lineno, "node indices must be integers") from None
            if i < 0 or j < 0:
                raise _err(path, lineno, "node indices must be >= 0")
            edges.append((i, j, lineno))
            n = max(n, i + 1, j + 1)
    return n, edges


def load_graph(path, n_nodes: int | None = None, directed: bool = False):
    """Read a network.

    Undirected graphs are returned as :class:`SparseSymGraph`; self-loops and repeated edges
    (in either orientation) are errors. With ``directed=True`` a 0/1 ``csr_matrix`` is
    returned. A general (non-symmetric) Matrix Market file read as undirected must list every
    edge in both directions.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    if path.suffix.lower() == ".mtx":
        n, edges, symmetric = _read_mtx(path)
    else:
        n, edges = _read_edge_csv(path)
        symmetric = not directed
    if n_nodes is not None:
        if n_nodes < n:
            raise InputError(f"{path}: node index {n - 1} exceeds n_nodes={n_nodes}")
        n = n_nodes
    if n == 0:
        raise InputError(f"{path}: graph has no nodes")

    if directed:
        seen = set()
        for i, j, lineno in edges:
            if (i, j) in seen:
                raise _err(path, lineno, f"duplicate edge ({i}, {j})")
            seen.add((i, j))
            if symmetric and i != j:
                seen.add((j, i))
        if not seen:
            return sp.csr_matrix((n, n))
        r, c = np.array(sorted(seen)).T
        return sp.csr_matrix((np.ones(r.size), (r, c)), shape=(n, n))

    general_mtx = path.suffix.lower() == ".mtx" and not symmetric
    if general_mtx:
        # every edge must be listed in both orientations
        seen = {}
        for i, j, lineno in edges:
            if (i, j) in seen:
                raise _err(path, lineno, f"duplicate edge ({i}, {j}) (first on line {seen[(i, j)]})")
            seen[(i, j)] = lineno
        for (i, j), lineno in seen.items():
            if (j, i) not in seen:
                raise _err(path, lineno, f"edge ({i}, {j}) has no reverse; the graph is directed, "
                                         "use the directed SVD basis")
        edges = [(i, j, ln) for (i, j), ln in seen.items() if i <= j]

    pairs = {}
    for i, j, lineno in edges:
        if i == j:
            raise _err(path, lineno, f"self-loop at node {i}")
        key = (min(i, j), max(i, j))
        if key in pairs:
            raise _err(path, lineno, f"duplicate edge {key} (first on line {pairs[key]})")
        pairs[key] = lineno
    keys = sorted(pairs)
    rows = np.array([k[0] for k in keys], dtype=np.int64)
    cols = np.array([k[1] for k in keys], dtype=np.int64)
    return SparseSymGraph(n, rows, cols)


def save_graph_mtx(path, graph: SparseSymGraph) -> None:
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate pattern symmetric\n")
        fh.write(f"{graph.n} {graph.n} {graph.n_edges}\n")
        for i, j in zip(graph.rows, graph.cols):
            fh.write(f"{j + 1} {i + 1}\n")


def load_matrix(path, min_cols: int = 1) -> np.ndarray:
    """Header-less numeric CSV into a 2-D float array."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or not "".join(rec).strip():
                continue
            try:
                vals = [float(x) for x in rec]
            except ValueError:
                raise _err(path, lineno, "non-numeric value") from None
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise _err(path, lineno, f"expected {width} columns, got {len(vals)}")
            if not all(np.isfinite(vals)):
                raise _err(path, lineno, "non-finite value")
            rows.append(vals)
    if not rows:
        raise InputError(f"{path}: no data")
    if width < min_cols:
        raise InputError(f"{path}: need at least {min_cols} columns")
    return np.array(rows, dtype=float)


def load_vector(path) -> np.ndarray:
    M = load_matrix(path)
    if M.shape[1] != 1 and M.shape[0] != 1:
        raise InputError(f"{path}: expected a single column")
    return M.ravel()


def save_matrix(path, X) -> None:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    np.savetxt(path, X, delimiter=",", fmt="%.17g")


def save_results(table, config, out_dir, stem: str = "results") -> tuple:
    """``<stem>.csv`` (17 significant digits) and ``<stem>.json`` holding config and rows."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = out / f"{stem}.csv", out / f"{stem}.json"
    table.write_csv(csv_path)
    cfg = config.to_dict() if hasattr(config, "to_dict") else config
    doc = {"config": cfg, "rows": table.to_records(),
           "failures": [{"scenario": k[0], "mu": k[1], "method": k[2], "metric": k[3],
                         "count": v} for k, v in table.failures.items()]}
    json_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return csv_path, json_path
