"""Instance files, fixed-pair files, run configurations and report writers.

Edge list (``.txt``/``.edges``/anything not ``.csv``/``.json``)::

    # directed: true          optional directives, as "# key: value"
    # weighted: false
    # self-loops: false
    # vertices: a b c d       fixes vertex order and declares isolated vertices
    a c
    b d 2                     src dst [weight]

Matrix CSV: a square adjacency matrix or an ``I x J`` contingency table, with
optional header row and/or leading label column.

Fixed-pair file: ``src dst status`` per line, ``status`` being ``present``,
``absent`` or an integer weight.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .diagnostics import ChainConfig
from .errors import ConfigError, DomainError, ParseError
from .graph import FixedSet, Graph, effective_fixed, table_instance

_TRUE = {"true", "yes", "1", "on"}
_FALSE = {"false", "no", "0", "off"}
DIRECTIVES = ("directed", "weighted", "self-loops", "vertices", "table")


def _flag(value: str, path, line) -> bool:
    v = value.strip().lower()
    if v in _TRUE:
        return True
    if v in _FALSE:
        return False
    raise ParseError(f"expected true/false, got {value!r}", path, line)


def _int(token: str, path, line, what="weight") -> int:
    try:
        x = int(token)
    except ValueError:
        raise ParseError(f"{what} {token!r} is not an integer", path, line) from None
    if x < 0:
        raise ParseError(f"negative {what} {x}", path, line)
    return x


def read_edge_list(path) -> Graph:
    path = Path(path)
    opts: dict = {}
    labels: list[str] = []
    index: dict[str, int] = {}
    edges: list[tuple[int, int, int, int]] = []
    any_weight = False

    def vid(name):
        if name not in index:
            index[name] = len(labels)
            labels.append(name)
        return index[name]

    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                key, sep, value = body.partition(":")
                key = key.strip().lower()
                if sep and key in DIRECTIVES:
                    if key == "vertices":
                        for name in value.split():
                            vid(name)
                    else:
                        opts[key] = _flag(value, path, lineno)
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise ParseError(f"expected 'src dst [weight]', got {len(parts)} fields", path,
                                 lineno)
            w = 1
            if len(parts) == 3:
                w = _int(parts[2], path, lineno)
                any_weight = True
            edges.append((vid(parts[0]), vid(parts[1]), w, lineno))

    directed = opts.get("directed", True)
    weighted = opts.get("weighted", any_weight)
    loops = opts.get("self-loops", False)
    n = len(labels)
    wmat = np.zeros((n, n), dtype=np.int64)
    for u, v, w, lineno in edges:
        if wmat[u, v]:
            raise ParseError(f"duplicate pair {labels[u]} {labels[v]}", path, lineno)
        if u == v and not loops:
            raise ParseError(f"self-loop at {labels[u]} but self-loops are disabled", path, lineno)
        if not weighted and w > 1:
            raise ParseError(f"weight {w} in an unweighted graph", path, lineno)
        wmat[u, v] = w
        if not directed:
            if u != v and wmat[v, u] and wmat[v, u] != w:
                raise ParseError(f"conflicting weights for {labels[u]} {labels[v]}", path, lineno)
            wmat[v, u] = w
    try:
        return Graph(wmat, directed, weighted, loops, labels)
    except DomainError as exc:
        raise ParseError(str(exc), path) from None


def read_matrix_csv(path) -> tuple[np.ndarray, list[str] | None, list[str] | None]:
    """Integer matrix with optional column header and row labels."""
    path = Path(path)
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError("empty matrix file", path)

    def numeric(c):
        try:
            int(c)
            return True
        except ValueError:
            return False

    col_labels = None
    start = 0
    if not all(numeric(c) for c in rows[0][1:]) or not rows[0][0].strip():
        col_labels = [c.strip() for c in rows[0]]
        start = 1
    body = rows[start:]
    has_row_labels = any(not numeric(r[0]) for r in body)
    if col_labels is not None and has_row_labels:
        col_labels = col_labels[1:]
    row_labels = [r[0].strip() for r in body] if has_row_labels else None
    values = []
    width = None
    for k, r in enumerate(body, start + 1):
        cells = r[1:] if has_row_labels else r
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise ParseError(f"row has {len(cells)} entries, expected {width}", path, k)
        values.append([_int(c.strip(), path, k, "entry") for c in cells])
    if col_labels is not None and len(col_labels) != width:
        raise ParseError(f"{len(col_labels)} column labels for {width} columns", path, 1)
    return np.array(values, dtype=np.int64), row_labels, col_labels


def read_fixed(path, g: Graph) -> tuple[FixedSet, dict[tuple[int, int], int]]:
    """Fixed pairs and their declared weights; vertices are matched by label
    (row/column labels for tables), or by 0-based index for unlabelled graphs."""
    path = Path(path)
    if g.table_shape is not None:
        rows, cols = g.table_shape
        names = g.labels or [f"r{i + 1}" for i in range(rows)] + [f"c{j + 1}" for j in range(cols)]
    else:
        names = g.labels or [str(i) for i in range(g.n)]
    index = {name: k for k, name in enumerate(names)}
    pairs = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ParseError("expected 'src dst status'", path, lineno)
            a, b, status = parts
            for name in (a, b):
                if name not in index:
                    raise ParseError(f"unknown vertex {name!r}", path, lineno)
            u, v = index[a], index[b]
            if g.table_shape is not None and not (u < g.table_shape[0] <= v):
                raise ParseError(f"{a} {b} is not a row -> column cell", path, lineno)
            s = status.lower()
            actual = int(g.weights[u, v])
            if s == "present":
                ok = actual > 0
            elif s == "absent":
                ok = actual == 0
            else:
                ok = _int(status, path, lineno, "status") == actual
            if not ok:
                raise ParseError(f"pair {a} {b} declared {status} but the graph has weight {actual}",
                                 path, lineno)
            pairs[(u, v)] = actual
    if g.table_shape is not None:
        rows = g.table_shape[0]
        _, f = table_instance(g.table(), [(u, v - rows) for u, v in pairs])
        return f, pairs
    return effective_fixed(g, FixedSet(g.n, pairs, g.directed)), pairs


def parse_instance(path, fixed_path=None, *, table: bool | None = None, directed: bool = True,
                   weighted: bool | None = None) -> tuple[Graph, FixedSet]:
    """Read an instance and its optional fixed-pair file.

    CSV input is a table when ``table`` is true, when it is not square, or
    when its row and column labels differ; otherwise an adjacency matrix.
    """
    path = Path(path)
    if not path.exists():
        raise ParseError("file not found", path)
    if path.suffix.lower() == ".csv":
        m, rl, cl = read_matrix_csv(path)
        square = m.shape[0] == m.shape[1]
        if table is None:
            table = not square or (rl is not None and cl is not None and rl != cl)
        try:
            if table:
                g, f = table_instance(m, (), rl, cl)
            else:
                wflag = bool((m > 1).any()) if weighted is None else weighted
                g = Graph(m, directed, wflag, bool(np.diagonal(m).any()), rl or cl)
                f = effective_fixed(g, None)
        except DomainError as exc:
            raise ParseError(str(exc), path) from None
    else:
        g = read_edge_list(path)
        if table:
            raise ParseError("tables must be given as CSV", path)
        f = effective_fixed(g, None)
    if fixed_path is not None:
        f, _ = read_fixed(fixed_path, g)
    return g, f


def write_edge_list(g: Graph, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"# directed: {str(g.directed).lower()}\n")
        fh.write(f"# weighted: {str(g.weighted).lower()}\n")
        fh.write(f"# self-loops: {str(g.allow_self_loops).lower()}\n")
        fh.write("# vertices: " + " ".join(g.label(u) for u in range(g.n)) + "\n")
        for u, v, w in g.edges():
            if g.weighted:
                fh.write(f"{g.label(u)} {g.label(v)} {w}\n")
            else:
                fh.write(f"{g.label(u)} {g.label(v)}\n")


def write_matrix_csv(g: Graph, path) -> None:
    if g.table_shape is not None:
        rows, cols = g.table_shape
        m = g.table()
        rl = g.labels[:rows] if g.labels else [f"r{i + 1}" for i in range(rows)]
        cl = g.labels[rows:] if g.labels else [f"c{j + 1}" for j in range(cols)]
    else:
        m = g.weights
        rl = cl = [g.label(u) for u in range(g.n)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([""] + list(cl))
        for label, row in zip(rl, m):
            w.writerow([label] + [int(x) for x in row])


def write_fixed(g: Graph, f: FixedSet, path, include_structural: bool = False) -> None:
    """Fixed pairs as ``src dst status``; the diagonal and (for tables) the
    non-cell pairs are omitted unless ``include_structural``."""
    names = [g.label(u) for u in range(g.n)]
    if g.table_shape is not None and g.labels is None:
        rows, cols = g.table_shape
        names = [f"r{i + 1}" for i in range(rows)] + [f"c{j + 1}" for j in range(cols)]
    with open(path, "w") as fh:
        for u, v in sorted(f.pairs):
            if not include_structural:
                if u == v and not g.allow_self_loops:
                    continue
                if g.table_shape is not None and not (u < g.table_shape[0] <= v):
                    continue
            w = int(g.weights[u, v])
            status = str(w) if g.weighted else ("present" if w else "absent")
            fh.write(f"{names[u]} {names[v]} {status}\n")


CONFIG_KEYS = {"method", "steps", "samples", "burn_in", "burn_in_frac", "thin", "seed",
               "statistic", "tail", "target"}


def read_config(path) -> ChainConfig:
    """JSON run configuration.

    ``steps`` counts post-burn-in transitions (``samples = steps // thin``);
    ``samples`` may be given instead.
    """
    path = Path(path)
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", path, exc.lineno) from None
    return config_from_dict(data, path)


def config_from_dict(data: dict, source=None) -> ChainConfig:
    if not isinstance(data, dict):
        raise ConfigError("run configuration must be a JSON object")
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    d = dict(data)
    thin = int(d.pop("thin", 1))
    steps = d.pop("steps", None)
    if steps is not None and "samples" in d:
        raise ConfigError("give either steps or samples, not both")
    if steps is not None:
        d["samples"] = int(steps) // max(thin, 1)
    try:
        return ChainConfig(thin=thin, **d)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def config_to_dict(cfg: ChainConfig) -> dict:
    d = asdict(cfg)
    d["burn_in"] = cfg.burn_in_steps
    d.pop("chain_id")
    return d


def write_json(obj, path=None) -> str:
    text = json.dumps(obj, indent=2, default=_json_default)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


def _json_default(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialise {type(x).__name__}")
