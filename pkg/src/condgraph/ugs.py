"""Uniform sampler for unweighted graphs with a fixed degree sequence.

One iteration walks ``origin w1 w2 ...``: ``w_{n+1}`` is a free in-neighbour of
``w_n`` (never the vertex just left), ``w_{n+2}`` a free non-out-neighbour of
``w_{n+1}``, and the edge ``w_{n+1} w_n`` is swapped for ``w_{n+1} w_{n+2}``
on the spot.  The walk stops on returning to ``origin``, at which point every
degree is restored.  The sampler must be given the closure of the fixed set
(see :func:`condgraph.closure.compute_closure`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from . import _kernel as K
from .closure import compute_closure
from .errors import DomainError, FrozenStateError, InvariantViolation, ViabilityError
from .graph import FixedSet, Graph, apply_swap, effective_fixed
from .rng import make_rng


@dataclass(frozen=True)
class UgsWalk:
    vertices: tuple[int, ...]

    @property
    def swaps(self) -> list[tuple[tuple[int, int], tuple[int, int]]]:
        return walk_swaps(self.vertices)

    def __len__(self):
        return len(self.vertices)


def walk_swaps(vertices) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    """``(removed, added)`` pairs: ``w1w0 -> w1w2``, ``w3w2 -> w3w4``, ..."""
    w = list(vertices)
    return [((w[i + 1], w[i]), (w[i + 1], w[i + 2])) for i in range(0, len(w) - 2, 2)]


def apply_walk(g: Graph, vertices, fixed: FixedSet | None = None) -> Graph:
    """Perform the swaps of a closed walk in order; raises if any is not viable."""
    out = g
    for removed, added in walk_swaps(vertices):
        out = apply_swap(out, removed, added, fixed)
    return out


def kernel_move(g: Graph, vertices, fixed: FixedSet | None = None) -> Graph:
    """Deterministic move attached to a walk and its reverse.

    Applies the walk's swaps if viable, otherwise those of the reversed walk,
    otherwise leaves the graph unchanged.
    """
    for seq in (list(vertices), list(vertices)[::-1]):
        try:
            return apply_walk(g, seq, fixed)
        except ViabilityError:
            continue
    return g.copy()


def neighborhoods_unweighted(g: Graph, closed: FixedSet, u: int) -> tuple[set[int], set[int]]:
    """Free in-neighbours of ``u`` and free non-out-neighbours of ``u``."""
    w, fixed = g.weights, closed.mask
    N = {v for v in range(g.n) if w[v, u] and not fixed[v, u]}
    M = {v for v in range(g.n) if not w[u, v] and not fixed[u, v]}
    return N, M


# Set ids in the packed (3, n, n) structure: free in-neighbours N(u), free
# non-out-neighbours M(u), and the start set (owner 0) of vertices with N != {}.
# Kernel calls with array arguments are expensive, so set updates are written
# out inline in the step loop.
N_SET, M_SET, S_SET = 0, 1, 2


@njit(cache=True, nogil=True)
def _build_sets(W, free):
    n = W.shape[0]
    lst = np.zeros((3, n, n), dtype=np.int64)
    size = np.zeros((3, n), dtype=np.int64)
    pos = np.full((3, n, n), -1, dtype=np.int64)
    for u in range(n):
        for v in range(n):
            if free[v, u] and W[v, u] > 0:
                K.set_add(lst[N_SET], size[N_SET], pos[N_SET], u, v)
            if free[u, v] and W[u, v] == 0:
                K.set_add(lst[M_SET], size[M_SET], pos[M_SET], u, v)
    for v in range(n):
        if size[N_SET, v] > 0:
            K.set_add(lst[S_SET], size[S_SET], pos[S_SET], 0, v)
    return lst, size, pos


@njit(cache=True, nogil=True)
def _ugs_run(W, directed, lst, size, pos, net, walk, max_walk, rng,
             nsteps, changed, code_idx, code_mult, codes_out, verify, ref_out, ref_in,
             fixed, W_ref, max_weight, thin, stat_code, stat_r0, stat_par, stat_free, trace):
    violations = 0
    record = codes_out.shape[0] > 0 or verify
    # steps between statistic evaluations; -1 disables them
    every = thin if stat_code != 0 else -1
    tick = 0
    L = 0
    ndir = 1 if directed else 2
    for step in range(nsteps):
        changed[step] = False
        status = K.MOVED
        L = 0
        if size[S_SET, 0] == 0:
            tick += 1
            if record or tick == every:
                if tick == every:
                    tick = 0
                violations += K.observe(W, step, code_idx, code_mult, codes_out, verify, ref_out,
                                        ref_in, fixed, W_ref, max_weight, thin, stat_code,
                                        stat_r0, stat_par, stat_free, trace)
            continue
        i = np.int64(rng.random() * size[S_SET, 0])
        origin = lst[S_SET, 0, min(i, size[S_SET, 0] - 1)]
        walk[0] = origin
        L = 1
        prev = -1
        cur = origin
        while True:
            # a ~ U(N(cur) minus prev)
            k = size[N_SET, cur]
            p = pos[N_SET, cur, prev] if prev >= 0 else -1
            m = k - 1 if p >= 0 else k
            if m <= 0:
                status = K.EMPTY_CANDIDATES
                break
            i = min(np.int64(rng.random() * m), m - 1)
            if p >= 0 and i >= p:
                i += 1
            a = lst[N_SET, cur, i]
            if L + 2 > walk.shape[0]:
                walk = K.grow(walk, L + 2)
            walk[L] = a
            L += 1
            # b ~ U(M(a)); the edge a->cur is still present so cur is not in M(a)
            m = size[M_SET, a]
            if m == 0:
                status = K.EMPTY_CANDIDATES
                break
            b = lst[M_SET, a, min(np.int64(rng.random() * m), m - 1)]
            walk[L] = b
            L += 1
            # swap a->cur for a->b, updating N, M and the start set in place
            for t in range(2):
                y0 = cur if t == 0 else b
                val = 0 if t == 0 else 1
                for d in range(ndir):
                    x = a if d == 0 else y0
                    y = y0 if d == 0 else a
                    W[x, y] = val
                    for sid in range(3):
                        if sid == N_SET:
                            u, v, flag = y, x, val == 1
                        elif sid == M_SET:
                            u, v, flag = x, y, val == 0
                        else:
                            u, v, flag = 0, y, size[N_SET, y] > 0
                        q = pos[sid, u, v]
                        if flag and q < 0:
                            q = size[sid, u]
                            lst[sid, u, q] = v
                            pos[sid, u, v] = q
                            size[sid, u] = q + 1
                        elif not flag and q >= 0:
                            last = size[sid, u] - 1
                            z = lst[sid, u, last]
                            lst[sid, u, q] = z
                            pos[sid, u, z] = q
                            pos[sid, u, v] = -1
                            size[sid, u] = last
            prev = a
            cur = b
            if cur == origin:
                break
            if L > max_walk:
                status = K.CAP_EXCEEDED
                break
        if status != K.MOVED:
            return status, step, L, walk, violations
        # net effect of the swaps; a long walk can undo its own moves
        for i in range(0, L - 2, 2):
            c, a, b = walk[i], walk[i + 1], walk[i + 2]
            if directed:
                net[a, c] -= 1
                net[a, b] += 1
            else:
                net[min(a, c), max(a, c)] -= 1
                net[min(a, b), max(a, b)] += 1
        ch = False
        for i in range(0, L - 2, 2):
            c, a, b = walk[i], walk[i + 1], walk[i + 2]
            for t in range(2):
                x = a
                y = c if t == 0 else b
                if not directed and x > y:
                    x, y = y, x
                if net[x, y] != 0:
                    ch = True
                net[x, y] = 0
        changed[step] = ch
        tick += 1
        if record or tick == every:
            if tick == every:
                tick = 0
            violations += K.observe(W, step, code_idx, code_mult, codes_out, verify, ref_out,
                                    ref_in, fixed, W_ref, max_weight, thin, stat_code,
                                    stat_r0, stat_par, stat_free, trace)
    return K.MOVED, nsteps, L, walk, violations


class UgsSampler(K.SamplerBase):
    """Chain state for the unweighted sampler.

    By default the closure of ``fixed`` is computed here; pass
    ``closure=False`` only when ``fixed`` already is a closure.
    """

    method = "ugs"

    def __init__(self, g: Graph, fixed: FixedSet | None = None, rng=None, *,
                 closure: bool = True, max_walk: int = 1_000_000):
        if g.weighted:
            raise DomainError("UGS samples unweighted graphs; use WGS for weighted ones")
        closed = compute_closure(g, fixed) if closure else effective_fixed(g, fixed)
        super().__init__(g, closed, make_rng(rng))
        self.free = ~closed.mask
        self.directed = g.directed
        self.max_walk = int(max_walk)
        self._sets = _build_sets(self.W, self.free)
        self._net = np.zeros_like(self.W)
        self._walk = np.zeros(max(16, 4 * g.n), dtype=np.int64)
        self.last_walk: UgsWalk | None = None

    @property
    def frozen(self) -> bool:
        return self._sets[1][S_SET, 0] == 0

    def start_vertices(self) -> list[int]:
        lst, size, _ = self._sets
        return sorted(int(v) for v in lst[S_SET, 0, : size[S_SET, 0]])

    def _run(self, nsteps, changed, obs):
        status, done, L, self._walk, violations = _ugs_run(
            self.W, self.directed, *self._sets, self._net, self._walk, self.max_walk,
            self.rng, nsteps, changed, *obs.args())
        self.last_walk = UgsWalk(tuple(int(x) for x in self._walk[:L])) if L else None
        if status == K.EMPTY_CANDIDATES:
            raise InvariantViolation(
                f"ugs: empty candidate set mid-walk at step {done}; "
                f"walk so far {[int(x) for x in self._walk[:L]]}. Is the fixed set a closure?")
        if status == K.CAP_EXCEEDED:
            raise InvariantViolation(f"ugs: walk exceeded {self.max_walk} vertices at step {done}")
        return violations

    def step(self) -> UgsWalk | None:
        """One iteration; returns the walk, or ``None`` for a frozen state."""
        self.advance(1)
        return self.last_walk


def ugs_step(g: Graph, closed: FixedSet, rng=None) -> tuple[Graph, UgsWalk | None]:
    """One iteration on a copy of ``g``.

    ``closed`` must be a closure.  A frozen state returns ``(copy of g, None)``.
    """
    sampler = UgsSampler(g, closed, rng, closure=False)
    if sampler.frozen:
        return g.copy(), None
    walk = sampler.step()
    return sampler.graph, walk


def require_unfrozen(sampler) -> None:
    if sampler.frozen:
        raise FrozenStateError("no vertex can start a walk: the reference set is a single graph")
