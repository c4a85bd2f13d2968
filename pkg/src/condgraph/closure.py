"""Structurally fixed pairs implied by the fixed set and the degree sequence.

Every graph in the reference set maps to an auxiliary bipartite digraph with
one "left" copy ``u_i`` and one "right" copy ``v_j`` of each vertex.  A free
pair ``ij`` becomes the arc ``v_j -> u_i`` when it is an edge and ``u_i -> v_j``
otherwise.  Sampler moves reverse the arcs along closed alternating walks, so a
free pair can change status exactly when both of its endpoints lie in the same
strongly connected component.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .graph import FixedSet, Graph, effective_fixed


@dataclass
class AuxiliaryDigraph:
    """Vertices ``0..n-1`` are the left copies ``u_i``, ``n..2n-1`` the right copies ``v_j``."""

    n: int
    succ: list[list[int]]

    @property
    def num_vertices(self) -> int:
        return 2 * self.n

    def arcs(self) -> list[tuple[int, int]]:
        return [(a, b) for a in range(2 * self.n) for b in self.succ[a]]

    def name(self, x: int) -> str:
        return f"u{x + 1}" if x < self.n else f"v{x - self.n + 1}"

    def named_arcs(self) -> set[tuple[str, str]]:
        return {(self.name(a), self.name(b)) for a, b in self.arcs()}


def build_auxiliary(g: Graph, f: FixedSet | None = None) -> AuxiliaryDigraph:
    if g.weighted:
        raise DomainError("the auxiliary digraph is defined for unweighted graphs")
    n = g.n
    fixed = effective_fixed(g, f).mask
    succ: list[list[int]] = [[] for _ in range(2 * n)]
    for i in range(n):
        for j in range(n):
            if fixed[i, j]:
                continue
            if g.weights[i, j]:
                succ[n + j].append(i)
            else:
                succ[i].append(n + j)
    return AuxiliaryDigraph(n, succ)


def strongly_connected_components(b: AuxiliaryDigraph | list[list[int]]) -> list[list[int]]:
    """Tarjan's algorithm, iterative so deep graphs do not hit the recursion limit.

    Accepts an auxiliary digraph or a plain successor list.  Components come
    out in reverse topological order, each sorted.
    """
    succ = b.succ if isinstance(b, AuxiliaryDigraph) else b
    size = len(succ)
    index = [-1] * size
    low = [0] * size
    on_stack = [False] * size
    stack: list[int] = []
    components: list[list[int]] = []
    counter = 0

    for root in range(size):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, k = work[-1]
            nbrs = succ[v]
            if k < len(nbrs):
                work[-1] = (v, k + 1)
                w = nbrs[k]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                components.append(sorted(comp))
    return components


def component_labels(components: list[list[int]], size: int) -> np.ndarray:
    labels = np.full(size, -1, dtype=np.int64)
    for k, comp in enumerate(components):
        labels[comp] = k
    return labels


def compute_closure(g: Graph, f: FixedSet | None = None) -> FixedSet:
    """All pairs whose status is the same in every graph of the reference set.

    The result always contains ``f`` (and the diagonal when self-loops are
    disallowed).  It does not depend on which member of the reference set is
    passed as ``g``.
    """
    fixed = effective_fixed(g, f)
    b = build_auxiliary(g, fixed)
    labels = component_labels(strongly_connected_components(b), b.num_vertices)
    n = g.n
    across = labels[:n, None] != labels[None, n:]
    return FixedSet.from_mask(fixed.mask | across, g.directed)


def fixed_status(g: Graph, f: FixedSet) -> dict[tuple[int, int], int]:
    """Weight of each fixed pair in ``g``; 0 marks a known non-edge."""
    return {(u, v): int(g.weights[u, v]) for u, v in f.pairs}
