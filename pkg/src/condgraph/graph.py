"""Graph representation, fixed pair sets and degree/strength sequences.

Graphs are stored as a dense ``(n, n)`` integer weight matrix.  Unweighted
graphs hold 0/1 entries, undirected graphs keep the matrix symmetric.  A
contingency table with ``I`` rows and ``J`` columns is the bipartite digraph on
``I + J`` vertices whose only free pairs are row -> column.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .errors import DomainError, ViabilityError

Pair = tuple[int, int]


class DegreeSequence(NamedTuple):
    """In/out degree (or strength) vectors. Equal vectors for undirected graphs."""

    in_deg: np.ndarray
    out_deg: np.ndarray

    def __eq__(self, other):
        return (
            isinstance(other, DegreeSequence)
            and np.array_equal(self.in_deg, other.in_deg)
            and np.array_equal(self.out_deg, other.out_deg)
        )

    def __ne__(self, other):
        return not self == other

    __hash__ = None


@dataclass(eq=False)
class Graph:
    weights: np.ndarray
    directed: bool = True
    weighted: bool = False
    allow_self_loops: bool = False
    labels: list[str] | None = None
    # (rows, cols) when the graph encodes a contingency table
    table_shape: tuple[int, int] | None = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.int64, copy=True)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise DomainError(f"weight matrix must be square, got shape {w.shape}")
        if (w < 0).any():
            raise DomainError("weights must be non-negative")
        if not self.weighted and (w > 1).any():
            raise DomainError("unweighted graph has a weight above 1")
        if not self.directed and not np.array_equal(w, w.T):
            raise DomainError("undirected graph needs a symmetric weight matrix")
        if not self.allow_self_loops and np.diagonal(w).any():
            raise DomainError("self-loop present but allow_self_loops is false")
        n = w.shape[0]
        if self.labels is not None:
            self.labels = [str(x) for x in self.labels]
            if len(self.labels) != n:
                raise DomainError(f"{len(self.labels)} labels for {n} vertices")
            if len(set(self.labels)) != n:
                raise DomainError("vertex labels must be unique")
        if self.table_shape is not None:
            rows, cols = self.table_shape
            if rows + cols != n or not self.directed:
                raise DomainError("table_shape needs a directed graph on rows + cols vertices")
            outside = w.copy()
            outside[:rows, rows:] = 0
            if outside.any():
                raise DomainError("table graph has weight outside the row -> column block")
            self.table_shape = (int(rows), int(cols))
        self.weights = w

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def copy(self) -> Graph:
        return Graph(
            self.weights, self.directed, self.weighted, self.allow_self_loops,
            None if self.labels is None else list(self.labels), self.table_shape,
        )

    def with_weights(self, weights) -> Graph:
        g = self.copy()
        g.weights = np.array(weights, dtype=np.int64)
        g.__post_init__()
        return g

    def label(self, u: int) -> str:
        return self.labels[u] if self.labels is not None else str(u)

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.weights[u, v] > 0)

    def edges(self) -> list[tuple[int, int, int]]:
        """Edges as ``(u, v, weight)``; undirected edges listed once with u <= v."""
        w = self.weights if self.directed else np.triu(self.weights)
        us, vs = np.nonzero(w)
        return [(int(u), int(v), int(w[u, v])) for u, v in zip(us, vs)]

    def table(self) -> np.ndarray:
        """Writable view of the contingency table block."""
        if self.table_shape is None:
            raise DomainError("graph does not encode a table")
        rows = self.table_shape[0]
        return self.weights[:rows, rows:]

    @classmethod
    def from_edges(cls, n, edges: Iterable, directed=True, weighted=False,
                   allow_self_loops=False, labels=None) -> Graph:
        w = np.zeros((n, n), dtype=np.int64)
        for e in edges:
            u, v = int(e[0]), int(e[1])
            c = int(e[2]) if len(e) > 2 else 1
            w[u, v] = c
            if not directed:
                w[v, u] = c
        return cls(w, directed, weighted, allow_self_loops, labels)

    @classmethod
    def from_table(cls, table, row_labels=None, col_labels=None) -> Graph:
        t = np.asarray(table, dtype=np.int64)
        rows, cols = t.shape
        w = np.zeros((rows + cols, rows + cols), dtype=np.int64)
        w[:rows, rows:] = t
        labels = None
        if row_labels is not None or col_labels is not None:
            row_labels = row_labels or [f"r{i + 1}" for i in range(rows)]
            col_labels = col_labels or [f"c{j + 1}" for j in range(cols)]
            labels = list(row_labels) + list(col_labels)
        return cls(w, True, True, False, labels, (rows, cols))

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.directed == other.directed
            and self.weighted == other.weighted
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = None

    def __repr__(self):
        kind = "table" if self.table_shape else ("digraph" if self.directed else "graph")
        return f"Graph({kind}, n={self.n}, edges={len(self.edges())}, weighted={self.weighted})"


class FixedSet:
    """Set of vertex pairs whose edge status is held fixed.

    Stored as a boolean ``(n, n)`` mask.  For undirected graphs the mask is
    symmetric and ``pairs`` reports each pair once as ``(min, max)``.
    """

    def __init__(self, n: int, pairs: Iterable[Pair] = (), directed: bool = True):
        self.directed = directed
        self.mask = np.zeros((n, n), dtype=bool)
        for u, v in pairs:
            if not (0 <= u < n and 0 <= v < n):
                raise DomainError(f"pair {(u, v)} outside vertex range 0..{n - 1}")
            self.mask[u, v] = True
            if not directed:
                self.mask[v, u] = True

    @classmethod
    def from_mask(cls, mask, directed=True) -> FixedSet:
        m = np.array(mask, dtype=bool)
        if not directed:
            m = m | m.T
        f = cls(m.shape[0], directed=directed)
        f.mask = m
        return f

    @classmethod
    def self_pairs(cls, n, directed=True) -> FixedSet:
        return cls.from_mask(np.eye(n, dtype=bool), directed)

    @classmethod
    def all_pairs(cls, n, directed=True) -> FixedSet:
        return cls.from_mask(np.ones((n, n), dtype=bool), directed)

    @property
    def n(self) -> int:
        return self.mask.shape[0]

    @property
    def pairs(self) -> set[Pair]:
        m = self.mask if self.directed else np.triu(self.mask)
        return {(int(u), int(v)) for u, v in zip(*np.nonzero(m))}

    def __contains__(self, pair) -> bool:
        u, v = pair
        return bool(self.mask[u, v])

    def __len__(self):
        m = self.mask if self.directed else np.triu(self.mask)
        return int(m.sum())

    def __iter__(self):
        return iter(sorted(self.pairs))

    def __or__(self, other: FixedSet) -> FixedSet:
        return FixedSet.from_mask(self.mask | other.mask, self.directed)

    def __eq__(self, other):
        if not isinstance(other, FixedSet):
            return NotImplemented
        return self.directed == other.directed and np.array_equal(self.mask, other.mask)

    __hash__ = None

    def issubset(self, other: FixedSet) -> bool:
        return not (self.mask & ~other.mask).any()

    def copy(self) -> FixedSet:
        return FixedSet.from_mask(self.mask.copy(), self.directed)

    def __repr__(self):
        return f"FixedSet(n={self.n}, pairs={len(self)}, directed={self.directed})"


def effective_fixed(g: Graph, f: FixedSet | None) -> FixedSet:
    """``f`` plus the structurally absent pairs: the diagonal when self-loops
    are disallowed, and every non-cell pair of a table."""
    if f is None:
        f = FixedSet(g.n, directed=g.directed)
    if f.n != g.n:
        raise DomainError(f"fixed set on {f.n} vertices, graph has {g.n}")
    mask = f.mask.copy()
    if not g.allow_self_loops:
        mask |= np.eye(g.n, dtype=bool)
    if g.table_shape is not None:
        rows = g.table_shape[0]
        cells = mask[:rows, rows:].copy()
        mask[:] = True
        mask[:rows, rows:] = cells
    return FixedSet.from_mask(mask, g.directed)


def table_instance(table, fixed_cells: Iterable[Pair] = (),
                   row_labels=None, col_labels=None) -> tuple[Graph, FixedSet]:
    """Bipartite graph for a contingency table plus its structural fixed set.

    ``fixed_cells`` are ``(row, col)`` table coordinates.  Every pair that is not
    a row -> column cell is fixed (at zero) as well.
    """
    g = Graph.from_table(table, row_labels, col_labels)
    rows, cols = g.table_shape
    mask = np.ones((g.n, g.n), dtype=bool)
    mask[:rows, rows:] = False
    for i, j in fixed_cells:
        if not (0 <= i < rows and 0 <= j < cols):
            raise DomainError(f"fixed cell {(i, j)} outside the {rows}x{cols} table")
        mask[i, rows + j] = True
    return g, FixedSet.from_mask(mask, True)


def table_fixed_cells(g: Graph, f: FixedSet) -> np.ndarray:
    """Boolean ``(rows, cols)`` mask of structurally fixed table cells."""
    rows = g.table_shape[0]
    return f.mask[:rows, rows:].copy()


def degree_sequence(g: Graph) -> DegreeSequence:
    if g.weighted:
        raise DomainError("degree_sequence expects an unweighted graph; use strength_sequence")
    w = g.weights
    return DegreeSequence(w.sum(axis=0), w.sum(axis=1))


def strength_sequence(g: Graph) -> DegreeSequence:
    w = g.weights
    return DegreeSequence(w.sum(axis=0), w.sum(axis=1))


def apply_swap(g: Graph, remove: Pair, add: Pair, fixed: FixedSet | None = None) -> Graph:
    """Replace the edge ``remove`` by the non-edge ``add`` in a copy of ``g``.

    Degrees are unchanged only when both pairs share their source vertex.
    """
    if g.weighted:
        raise DomainError("apply_swap is defined on unweighted graphs")
    (a1, b1), (a2, b2) = remove, add
    w = g.weights
    if w[a1, b1] == 0:
        raise ViabilityError(f"swap removes {remove}, which is not an edge")
    if w[a2, b2] != 0:
        raise ViabilityError(f"swap adds {add}, which is already an edge")
    if (a2, b2) == (a1, b1) or (not g.directed and (a2, b2) == (b1, a1)):
        raise ViabilityError("swap removes and adds the same pair")
    if fixed is not None and (remove in fixed or add in fixed):
        raise ViabilityError("swap touches a fixed pair")
    if not g.allow_self_loops and a2 == b2:
        raise ViabilityError("swap would add a self-loop")
    out = g.copy()
    out.weights[a1, b1] = 0
    out.weights[a2, b2] = 1
    if not g.directed:
        out.weights[b1, a1] = 0
        out.weights[b2, a2] = 1
    return out
