"""Sampler for integer-weighted graphs and contingency tables with fixed strengths.

A closed alternating walk is drawn on the current graph without modifying it:
``w_{n+1}`` is a free in-neighbour of ``w_n`` other than ``w_{n-1}`` and
``w_{n+2}`` a free out-pair of ``w_{n+1}`` other than ``w_n``, except that the
walk closes at once whenever ``origin`` is available as ``w_{n+2}``.  Each pair
``w_{n+1} w_n`` gains one visit and each ``w_{n+1} w_{n+2}`` loses one, and the
move adds ``visits * delta`` to every touched weight.  ``delta`` is drawn from
the admissible range with mass proportional to the probability of selecting
the walk (or its reverse) from the graph it leads to, which makes the chain
reversible for the uniform distribution.  The same kernel can target the
hypergeometric distribution (mass proportional to ``1 / prod(c!)``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numba import njit

from . import _kernel as K
from .errors import DomainError
from .graph import FixedSet, Graph, effective_fixed
from .rng import make_rng

TARGETS = {"uniform": 0, "hypergeometric": 1}


@dataclass
class WgsWalk:
    vertices: tuple[int, ...]
    visits: dict[tuple[int, int], int]
    delta_low: int = 0
    delta_up: int = 0
    directed: bool = True

    @property
    def touched_edges(self) -> set[tuple[int, int]]:
        return {e for e, k in self.visits.items() if k != 0}

    @property
    def reversed_vertices(self) -> tuple[int, ...]:
        return tuple(reversed(self.vertices))

    def visits_matrix(self, n: int) -> np.ndarray:
        m = np.zeros((n, n), dtype=np.int64)
        for (u, v), k in self.visits.items():
            m[u, v] += k
            if not self.directed and u != v:
                m[v, u] += k
        return m

    def __len__(self):
        return len(self.vertices)


@dataclass
class DeltaMeasure:
    """Mass of ``delta`` over ``[low, up]``: ``weight_low`` at ``low``,
    ``weight_up`` at ``up`` and ``weight_interior`` at each point in between."""

    low: int
    up: int
    weight_low: Fraction
    weight_up: Fraction
    weight_interior: Fraction = Fraction(0)

    @property
    def normalizer(self) -> Fraction:
        return (self.weight_low + self.weight_up
                + self.weight_interior * max(self.up - self.low - 1, 0))

    def probabilities(self) -> dict[int, Fraction]:
        if self.low == self.up:
            return {self.low: Fraction(1)}
        d = self.normalizer
        out = {self.low: self.weight_low / d, self.up: self.weight_up / d}
        for x in range(self.low + 1, self.up):
            out[x] = self.weight_interior / d
        return out

    def probability(self, delta: int) -> Fraction:
        return self.probabilities().get(delta, Fraction(0))


def _canon(u, v, directed):
    return (u, v) if directed or u <= v else (v, u)


def _free_mask(g: Graph, f: FixedSet | None) -> np.ndarray:
    return ~effective_fixed(g, f).mask


def neighborhoods_weighted(g: Graph, f: FixedSet | None, u: int) -> tuple[set[int], set[int]]:
    """Free in-neighbours with positive weight, and all free out-pairs, of ``u``."""
    free = _free_mask(g, f)
    w = g.weights
    N = {v for v in range(g.n) if free[v, u] and w[v, u] > 0}
    M = {v for v in range(g.n) if free[u, v]}
    return N, M


def walk_visits(vertices, directed=True) -> dict[tuple[int, int], int]:
    w = list(vertices)
    visits: dict[tuple[int, int], int] = {}
    for i in range(0, len(w) - 2, 2):
        for pair, k in ((_canon(w[i + 1], w[i], directed), 1),
                        (_canon(w[i + 1], w[i + 2], directed), -1)):
            visits[pair] = visits.get(pair, 0) + k
    return visits


def wgs_select_walk(g: Graph, f: FixedSet | None, rng=None) -> WgsWalk | None:
    """Draw a walk from ``g`` (unchanged); ``None`` means the identity move.

    Reference implementation; :class:`WgsSampler` runs the same procedure
    in compiled code.
    """
    rng = make_rng(rng)
    free = _free_mask(g, f)
    w = g.weights
    n = g.n
    N = [[v for v in range(n) if free[v, u] and w[v, u] > 0] for u in range(n)]
    M = [[v for v in range(n) if free[u, v]] for u in range(n)]
    start = [v for v in range(n) if N[v]]
    if not start:
        return None
    origin = start[rng.integers(len(start))]
    seq = [origin]
    prev, cur = None, origin
    while True:
        cand = [v for v in N[cur] if v != prev]
        if not cand:
            return None
        a = cand[rng.integers(len(cand))]
        cand = [v for v in M[a] if v != cur]
        if origin in cand:
            b = origin
        elif not cand:
            return None
        else:
            b = cand[rng.integers(len(cand))]
        seq += [a, b]
        if b == origin:
            break
        prev, cur = a, b
    visits = walk_visits(seq, g.directed)
    walk = WgsWalk(tuple(seq), visits, directed=g.directed)
    walk.delta_low, walk.delta_up = delta_bounds(g, walk)
    return walk


def delta_bounds(g: Graph, walk: WgsWalk) -> tuple[int, int]:
    """Admissible range: the integers ``delta`` keeping every weight non-negative.

    An all-zero visit pattern gives ``(0, 0)``.
    """
    low, up = None, None
    for (u, v), k in walk.visits.items():
        c = int(g.weights[u, v])
        if k > 0:
            b = -(c // k)
            low = b if low is None else max(low, b)
        elif k < 0:
            b = c // (-k)
            up = b if up is None else min(up, b)
    if low is None or up is None:
        return 0, 0
    return low, up


def shifted(g: Graph, walk: WgsWalk, delta: int) -> Graph:
    """``g`` with ``visits * delta`` added to each touched pair."""
    w = g.weights + walk.visits_matrix(g.n) * int(delta)
    if (w < 0).any():
        raise DomainError(f"delta={delta} is outside the admissible range")
    return g.with_weights(w)


def _sequence_probability(free, w, seq) -> Fraction:
    n = w.shape[0]
    start = sum(1 for v in range(n) if any(free[x, v] and w[x, v] > 0 for x in range(n)))
    if start == 0:
        return Fraction(0)
    origin = seq[0]
    p = Fraction(1, start)
    prev = None
    for i in range(0, len(seq) - 1, 2):
        cur, a, b = seq[i], seq[i + 1], seq[i + 2]
        cand = [x for x in range(n) if free[x, cur] and w[x, cur] > 0 and x != prev]
        if a not in cand:
            return Fraction(0)
        p /= len(cand)
        cand = [x for x in range(n) if free[a, x] and x != cur]
        if origin in cand:
            if b != origin:
                return Fraction(0)
        else:
            if b not in cand:
                return Fraction(0)
            p /= len(cand)
        if b == origin and i + 2 != len(seq) - 1:
            return Fraction(0)
        prev = a
    return p


def walk_probability(g: Graph, vertices, f: FixedSet | None = None) -> Fraction:
    """Probability that the walk or its reverse is drawn from ``g``, exactly."""
    free = _free_mask(g, f)
    seq = list(vertices)
    return (_sequence_probability(free, g.weights, seq)
            + _sequence_probability(free, g.weights, seq[::-1]))


def delta_measure(g: Graph, walk: WgsWalk, f: FixedSet | None = None) -> DeltaMeasure:
    """Exact distribution of ``delta`` for ``walk`` drawn at ``g``.

    The interior weight is evaluated at ``low + 1``; it is 0 when there is no
    interior point.
    """
    low, up = delta_bounds(g, walk)
    p_low = walk_probability(shifted(g, walk, low), walk.vertices, f)
    p_up = walk_probability(shifted(g, walk, up), walk.vertices, f)
    p_mid = Fraction(0)
    if up - low >= 2:
        p_mid = walk_probability(shifted(g, walk, low + 1), walk.vertices, f)
    return DeltaMeasure(low, up, p_low, p_up, p_mid)


def interior_weights(g: Graph, walk: WgsWalk, f: FixedSet | None = None) -> list[Fraction]:
    """Selection probability at every interior point; all equal in theory."""
    low, up = delta_bounds(g, walk)
    return [walk_probability(shifted(g, walk, d), walk.vertices, f) for d in range(low + 1, up)]


def hypergeometric_measure(g: Graph, walk: WgsWalk, f: FixedSet | None = None) -> dict[int, float]:
    """``delta`` distribution for the hypergeometric target (floating point)."""
    m = delta_measure(g, walk, f)
    logw = {}
    for d, p in m.probabilities().items():
        if p == 0:
            continue
        h = shifted(g, walk, d).weights
        logw[d] = math.log(p) - sum(math.lgamma(int(h[u, v]) + 1) for (u, v) in walk.visits)
    top = max(logw.values())
    z = sum(math.exp(x - top) for x in logw.values())
    return {d: math.exp(x - top) / z for d, x in logw.items()}


def wgs_step(g: Graph, f: FixedSet | None, rng=None) -> tuple[Graph, WgsWalk | None]:
    """One iteration on a copy of ``g`` (exact reference path).

    Returns the new graph and the walk, or ``None`` for an identity move.
    """
    rng = make_rng(rng)
    walk = wgs_select_walk(g, f, rng)
    if walk is None or not walk.touched_edges:
        return g.copy(), walk
    probs = delta_measure(g, walk, f).probabilities()
    u = Fraction(rng.random())
    acc = Fraction(0)
    choice = walk.delta_up
    for d in sorted(probs):
        acc += probs[d]
        if u < acc:
            choice = d
            break
    return shifted(g, walk, choice), walk


# ---------------------------------------------------------------------------
# compiled sampler

@njit(cache=True, nogil=True)
def _build_sets(W, free):
    n = W.shape[0]
    Nl = np.zeros((n, n), dtype=np.int64)
    Ns = np.zeros(n, dtype=np.int64)
    Np = np.full((n, n), -1, dtype=np.int64)
    Ml = np.zeros((n, n), dtype=np.int64)
    Ms = np.zeros(n, dtype=np.int64)
    Mp = np.full((n, n), -1, dtype=np.int64)
    Sl = np.zeros(n, dtype=np.int64)
    Ss = np.zeros(1, dtype=np.int64)
    Sp = np.full(n, -1, dtype=np.int64)
    for u in range(n):
        for v in range(n):
            if free[v, u] and W[v, u] > 0:
                Nl[u, Ns[u]] = v
                Np[u, v] = Ns[u]
                Ns[u] += 1
            if free[u, v]:
                Ml[u, Ms[u]] = v
                Mp[u, v] = Ms[u]
                Ms[u] += 1
    for v in range(n):
        if Ns[v] > 0:
            Sl[Ss[0]] = v
            Sp[v] = Ss[0]
            Ss[0] += 1
    return Nl, Ns, Np, Ml, Ms, Mp, Sl, Ss, Sp


@njit(cache=True, nogil=True)
def _wgs_run(W, free, directed, Nl, Ns, Np, Ml, Ms, Mp, Sl, Ss, Sp, visits, tmark, touched,
             ndelta, mark, walk, info_i, info_f, target, max_walk, rng, nsteps, changed,
             code_idx, code_mult, codes_out, verify, ref_out, ref_in, fixed, W_ref, max_weight,
             thin, stat_code, stat_r0, stat_par, stat_free, trace):
    violations = 0
    record = codes_out.shape[0] > 0 or verify
    # steps between statistic evaluations; -1 disables them
    every = thin if stat_code != 0 else -1
    tick = 0
    identities = 0
    L = 0
    for step in range(nsteps):
        changed[step] = False
        status = K.MOVED
        L = 0
        nt = 0
        dchoice = 0
        low = 0
        up = 0
        p_low = 0.0
        p_up = 0.0
        p_mid = 0.0
        if Ss[0] == 0:
            status = K.FROZEN
        else:
            origin = Sl[min(np.int64(rng.random() * Ss[0]), Ss[0] - 1)]
            walk[0] = origin
            L = 1
            prev = -1
            cur = origin
            while True:
                k = Ns[cur]
                p = Np[cur, prev] if prev >= 0 else -1
                m = k - 1 if p >= 0 else k
                if m <= 0:
                    status = K.EMPTY_CANDIDATES
                    break
                i = min(np.int64(rng.random() * m), m - 1)
                if p >= 0 and i >= p:
                    i += 1
                a = Nl[cur, i]
                if free[a, origin] and origin != cur:
                    b = origin
                else:
                    k = Ms[a]
                    p = Mp[a, cur]
                    m = k - 1 if p >= 0 else k
                    if m <= 0:
                        status = K.EMPTY_CANDIDATES
                        break
                    i = min(np.int64(rng.random() * m), m - 1)
                    if p >= 0 and i >= p:
                        i += 1
                    b = Ml[a, i]
                if L + 2 > walk.shape[0]:
                    walk = K.grow(walk, L + 2)
                walk[L] = a
                walk[L + 1] = b
                L += 2
                for e in range(2):
                    y = cur if e == 0 else b
                    x, y = (a, y) if directed or a <= y else (y, a)
                    visits[x, y] += 1 if e == 0 else -1
                    if not tmark[x, y]:
                        tmark[x, y] = True
                        touched[nt, 0] = x
                        touched[nt, 1] = y
                        nt += 1
                if b == origin:
                    break
                if L > max_walk:
                    status = K.CAP_EXCEEDED
                    break
                prev = a
                cur = b
            # keep only pairs with a non-zero net visit count
            m = 0
            for t in range(nt):
                x = touched[t, 0]
                y = touched[t, 1]
                tmark[x, y] = False
                if visits[x, y] != 0:
                    touched[m, 0] = x
                    touched[m, 1] = y
                    m += 1
                else:
                    visits[x, y] = 0
            nt = m
            if status == K.MOVED and nt == 0:
                status = K.IDENTITY
        if status == K.MOVED:
            low = -(1 << 62)
            up = 1 << 62
            for t in range(nt):
                x = touched[t, 0]
                y = touched[t, 1]
                v = visits[x, y]
                if v > 0:
                    low = max(low, -(W[x, y] // v))
                else:
                    up = min(up, W[x, y] // (-v))
            # selection probability of the walk or its reverse at the graphs
            # for delta = low, up and one interior point (the same at all of them)
            origin = walk[0]
            for which in range(3 if up - low >= 2 else 2):
                dlt = low if which == 0 else (up if which == 1 else low + 1)
                # in-neighbour set sizes and start-set size at the shifted graph
                for t in range(nt):
                    x = touched[t, 0]
                    y = touched[t, 1]
                    d = np.int64(W[x, y] + visits[x, y] * dlt > 0) - np.int64(W[x, y] > 0)
                    ndelta[y] += d
                    if not directed and x != y:
                        ndelta[x] += d
                s = Ss[0]
                for t in range(nt):
                    for e in range(1 if directed else 2):
                        z = touched[t, 1] if e == 0 else touched[t, 0]
                        if not mark[z]:
                            mark[z] = True
                            s += np.int64(Ns[z] + ndelta[z] > 0) - np.int64(Ns[z] > 0)
                total = 0.0
                if s > 0:
                    for rev in range(2):
                        # product of candidate-set sizes; 0 marks an impossible walk
                        den = np.float64(s)
                        prev = -1
                        for i in range(0, L - 1, 2):
                            if rev == 0:
                                cur, a, b = walk[i], walk[i + 1], walk[i + 2]
                            else:
                                cur, a, b = walk[L - 1 - i], walk[L - 2 - i], walk[L - 3 - i]
                            # a must be a positive free in-neighbour of cur, other than prev
                            x, y = (a, cur) if directed or a <= cur else (cur, a)
                            if a == prev or not free[a, cur] or W[a, cur] + visits[x, y] * dlt <= 0:
                                den = 0.0
                                break
                            k = Ns[cur] + ndelta[cur]
                            if prev >= 0 and free[prev, cur]:
                                x, y = (prev, cur) if directed or prev <= cur else (cur, prev)
                                if W[prev, cur] + visits[x, y] * dlt > 0:
                                    k -= 1
                            den *= k
                            if free[a, origin] and origin != cur:
                                if b != origin:
                                    den = 0.0
                                    break
                            else:
                                if b == origin or b == cur or not free[a, b]:
                                    den = 0.0
                                    break
                                den *= Ms[a] - (1 if free[a, cur] else 0)
                            prev = a
                        if den > 0:
                            total += 1.0 / den
                for t in range(nt):
                    x = touched[t, 0]
                    y = touched[t, 1]
                    ndelta[x] = 0
                    ndelta[y] = 0
                    mark[x] = False
                    mark[y] = False
                if which == 0:
                    p_low = total
                elif which == 1:
                    p_up = total
                else:
                    p_mid = total
            if low == up:
                dchoice = low
            elif target == 0:
                d = p_low + p_up + p_mid * (up - low - 1)
                u = rng.random() * d
                if u < p_low:
                    dchoice = low
                elif u < p_low + p_up or p_mid == 0.0:
                    dchoice = up
                else:
                    dchoice = low + 1 + min(np.int64((u - p_low - p_up) / p_mid), up - low - 2)
            else:
                # hypergeometric: weight * prod 1/c! over the touched pairs
                top = -np.inf
                for dd in range(low, up + 1):
                    top = max(top, _hyper_logw(W, visits, touched, nt, dd, low, up, p_low, p_up,
                                               p_mid))
                tot = 0.0
                for dd in range(low, up + 1):
                    tot += np.exp(_hyper_logw(W, visits, touched, nt, dd, low, up, p_low, p_up,
                                              p_mid) - top)
                u = rng.random() * tot
                acc = 0.0
                dchoice = up
                for dd in range(low, up + 1):
                    acc += np.exp(_hyper_logw(W, visits, touched, nt, dd, low, up, p_low, p_up,
                                              p_mid) - top)
                    if u < acc:
                        dchoice = dd
                        break
            if dchoice != 0:
                changed[step] = True
                for t in range(nt):
                    x = touched[t, 0]
                    y = touched[t, 1]
                    W[x, y] += visits[x, y] * dchoice
                    if not directed:
                        W[y, x] = W[x, y]
                    for e in range(1 if directed or x == y else 2):
                        src = x if e == 0 else y
                        dst = y if e == 0 else x
                        q = Np[dst, src]
                        if W[src, dst] > 0:
                            if q < 0:
                                q = Ns[dst]
                                Nl[dst, q] = src
                                Np[dst, src] = q
                                Ns[dst] = q + 1
                                if q == 0:
                                    Sl[Ss[0]] = dst
                                    Sp[dst] = Ss[0]
                                    Ss[0] += 1
                        elif q >= 0:
                            last = Ns[dst] - 1
                            z = Nl[dst, last]
                            Nl[dst, q] = z
                            Np[dst, z] = q
                            Np[dst, src] = -1
                            Ns[dst] = last
                            if last == 0:
                                q = Sp[dst]
                                last = Ss[0] - 1
                                z = Sl[last]
                                Sl[q] = z
                                Sp[z] = q
                                Sp[dst] = -1
                                Ss[0] = last
        else:
            identities += 1
        for t in range(nt):
            visits[touched[t, 0], touched[t, 1]] = 0
        info_i[0] = status
        info_i[1] = L
        info_i[2] = low
        info_i[3] = up
        info_i[4] = dchoice
        info_f[0] = p_low
        info_f[1] = p_up
        info_f[2] = p_mid
        tick += 1
        if record or tick == every:
            if tick == every:
                tick = 0
            violations += K.observe(W, step, code_idx, code_mult, codes_out, verify, ref_out, ref_in,
                                    fixed, W_ref, max_weight, thin, stat_code, stat_r0,
                                    stat_par, stat_free, trace)
        if status == K.CAP_EXCEEDED:
            return status, step, walk, violations, identities
    return K.MOVED, nsteps, walk, violations, identities


@njit(cache=True, nogil=True)
def _hyper_logw(W, visits, touched, nt, dd, low, up, p_low, p_up, p_mid):
    vw = p_low if dd == low else (p_up if dd == up else p_mid)
    if vw <= 0:
        return -np.inf
    lw = np.log(vw)
    for t in range(nt):
        x = touched[t, 0]
        y = touched[t, 1]
        lw -= math.lgamma(W[x, y] + visits[x, y] * dd + 1)
    return lw


@dataclass
class WgsStepInfo:
    """What the compiled kernel did in its most recent step."""

    status: int
    walk: WgsWalk | None
    delta_low: int
    delta_up: int
    delta: int
    weight_low: float
    weight_up: float
    weight_interior: float


class WgsSampler(K.SamplerBase):
    """Chain state for the weighted sampler; ``target`` is ``"uniform"`` or
    ``"hypergeometric"``."""

    method = "wgs"

    def __init__(self, g: Graph, fixed: FixedSet | None = None, rng=None, *,
                 target: str = "uniform", max_walk: int = 1_000_000):
        if target not in TARGETS:
            raise DomainError(f"unknown target {target!r}; choose from {sorted(TARGETS)}")
        f = effective_fixed(g, fixed)
        super().__init__(g, f, make_rng(rng))
        self.free = ~f.mask
        self.directed = g.directed
        self.target = target
        self.max_walk = int(max_walk)
        n = g.n
        self._sets = _build_sets(self.W, self.free)
        self._visits = np.zeros((n, n), dtype=np.int64)
        self._tmark = np.zeros((n, n), dtype=np.bool_)
        # every pair appears at most once, so this never needs to grow
        self._touched = np.zeros((n * n, 2), dtype=np.int64)
        self._ndelta = np.zeros(n, dtype=np.int64)
        self._mark = np.zeros(n, dtype=np.bool_)
        self._walk = np.zeros(max(16, 4 * n), dtype=np.int64)
        self._info_i = np.zeros(5, dtype=np.int64)
        self._info_f = np.zeros(3, dtype=np.float64)
        self.identities = 0

    @property
    def frozen(self) -> bool:
        return self._sets[7][0] == 0

    def _run(self, nsteps, changed, obs):
        status, done, self._walk, violations, ids = _wgs_run(
            self.W, self.free, self.directed, *self._sets, self._visits, self._tmark,
            self._touched, self._ndelta, self._mark, self._walk, self._info_i, self._info_f,
            TARGETS[self.target], self.max_walk, self.rng, nsteps, changed, *obs.args())
        self.identities += ids
        if status == K.CAP_EXCEEDED:
            from .errors import InvariantViolation
            raise InvariantViolation(f"wgs: walk exceeded {self.max_walk} vertices at step {done}")
        return violations

    @property
    def last_step(self) -> WgsStepInfo:
        status, L, low, up, delta = (int(x) for x in self._info_i)
        walk = None
        if L and status not in (K.FROZEN, K.EMPTY_CANDIDATES):
            seq = tuple(int(x) for x in self._walk[:L])
            walk = WgsWalk(seq, walk_visits(seq, self.directed), low, up, self.directed)
        return WgsStepInfo(status, walk, low, up, delta, *(float(x) for x in self._info_f))

    def step(self) -> WgsStepInfo:
        self.advance(1)
        return self.last_step
