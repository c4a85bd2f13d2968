"""Brute-force enumeration of small reference sets, used as ground truth for
closure, uniformity and detailed-balance checks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from .errors import CapExceededError, DomainError, UndersampledError
from .graph import DegreeSequence, FixedSet, Graph, effective_fixed

MAX_FREE_PAIRS = 40
MAX_STATES = 500_000


@dataclass
class StateSpace:
    """All graphs in a reference set, as row-major weight vectors in sorted order."""

    n: int
    directed: bool
    weighted: bool
    states: np.ndarray  # (count, n*n)
    index: dict[bytes, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=np.int64).reshape(-1, self.n * self.n)
        order = np.lexsort(self.states.T[::-1]) if len(self.states) else np.zeros(0, dtype=int)
        self.states = self.states[order]
        self.index = {s.tobytes(): i for i, s in enumerate(self.states)}
        if len(self.index) != len(self.states):
            raise DomainError("duplicate states in state space")

    @property
    def count(self) -> int:
        return len(self.states)

    def __len__(self):
        return self.count

    def matrix(self, k: int) -> np.ndarray:
        return self.states[k].reshape(self.n, self.n).copy()

    def graphs(self, template: Graph) -> list[Graph]:
        return [template.with_weights(self.matrix(k)) for k in range(self.count)]

    def index_of(self, weights) -> int:
        return self.index[np.ascontiguousarray(weights, dtype=np.int64).ravel().tobytes()]

    def encoder(self) -> tuple[np.ndarray, np.ndarray]:
        """``(flat_indices, multipliers)`` giving each state a distinct integer code.

        Only positions that vary across the space are encoded, in mixed radix.
        """
        if self.count == 0:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        varying = np.flatnonzero((self.states != self.states[0]).any(axis=0))
        radix = self.states[:, varying].max(axis=0) + 1
        mult = np.ones(len(varying), dtype=np.int64)
        for k in range(1, len(varying)):
            mult[k] = mult[k - 1] * radix[k - 1]
        return varying.astype(np.int64), mult

    def codes(self) -> np.ndarray:
        idx, mult = self.encoder()
        return self.states[:, idx] @ mult if len(idx) else np.zeros(self.count, dtype=np.int64)

    def code_lookup(self) -> dict[int, int]:
        return {int(c): k for k, c in enumerate(self.codes())}

    def visit_counts(self, codes) -> np.ndarray:
        """Histogram of recorded state codes over the space's ordering."""
        lookup = self.code_lookup()
        uniq, cnt = np.unique(np.asarray(codes), return_counts=True)
        out = np.zeros(self.count, dtype=np.int64)
        for c, k in zip(uniq, cnt):
            if int(c) not in lookup:
                raise DomainError(f"state code {int(c)} is not in the space")
            out[lookup[int(c)]] = k
        return out


def _pairs(n, directed, allow_self_loops):
    for i in range(n):
        for j in range(n) if directed else range(i, n):
            if i == j and not allow_self_loops:
                continue
            yield i, j


def _enumerate(n, out_deg, in_deg, free_pairs, base, directed, cap_value):
    """Backtracking over the free pairs; ``base`` holds the fixed weights."""
    if len(free_pairs) > MAX_FREE_PAIRS:
        raise CapExceededError(f"{len(free_pairs)} free pairs exceed the cap of {MAX_FREE_PAIRS}")
    w = base.copy()
    rem_out = np.asarray(out_deg, dtype=np.int64) - w.sum(axis=1)
    rem_in = np.asarray(in_deg, dtype=np.int64) - w.sum(axis=0)
    if (rem_out < 0).any() or (rem_in < 0).any():
        return []
    # remaining free capacity per row/column, for pruning
    cap_out = np.zeros(n, dtype=np.int64)
    cap_in = np.zeros(n, dtype=np.int64)
    for i, j in free_pairs:
        cap_out[i] += 1
        cap_in[j] += 1
        if not directed and i != j:
            cap_out[j] += 1
            cap_in[i] += 1
    found: list[np.ndarray] = []

    def touch(i, j, x):
        w[i, j] += x
        rem_out[i] -= x
        rem_in[j] -= x
        if not directed and i != j:
            w[j, i] += x
            rem_out[j] -= x
            rem_in[i] -= x

    def bump_cap(i, j, d):
        cap_out[i] += d
        cap_in[j] += d
        if not directed and i != j:
            cap_out[j] += d
            cap_in[i] += d

    def rec(k):
        if k == len(free_pairs):
            if not rem_out.any() and not rem_in.any():
                found.append(w.ravel().copy())
                if len(found) > MAX_STATES:
                    raise CapExceededError(f"more than {MAX_STATES} states")
            return
        i, j = free_pairs[k]
        hi = min(rem_out[i], rem_in[j])
        if not directed and i != j:
            hi = min(hi, rem_out[j], rem_in[i])
        if cap_value is not None:
            hi = min(hi, cap_value)
        bump_cap(i, j, -1)
        for x in range(hi + 1):
            touch(i, j, x)
            ok = True
            if cap_value is not None:
                ok = (rem_out[i] <= cap_out[i] * cap_value and rem_in[j] <= cap_in[j] * cap_value
                      and rem_out[j] <= cap_out[j] * cap_value and rem_in[i] <= cap_in[i] * cap_value)
            elif cap_out[i] == 0 and rem_out[i] or cap_in[j] == 0 and rem_in[j]:
                ok = False
            if ok:
                rec(k + 1)
            touch(i, j, -x)
        bump_cap(i, j, 1)

    rec(0)
    return found


def _base_weights(n, f: FixedSet, fixed_status: dict, directed):
    base = np.zeros((n, n), dtype=np.int64)
    for (u, v), c in (fixed_status or {}).items():
        if not f.mask[u, v]:
            raise DomainError(f"status given for pair {(u, v)}, which is not fixed")
        base[u, v] = int(c)
        if not directed:
            base[v, u] = int(c)
    return base


def enumerate_unweighted(deg: DegreeSequence, f: FixedSet, fixed_status: dict | None = None,
                         directed: bool = True, allow_self_loops: bool = False) -> StateSpace:
    """Every 0/1 graph with the given degrees and fixed statuses.

    ``fixed_status`` maps fixed pairs to 0/1; unlisted fixed pairs are absent.
    """
    n = len(deg.out_deg)
    template = Graph(np.zeros((n, n), dtype=np.int64), directed, False, allow_self_loops)
    f = effective_fixed(template, f)
    base = _base_weights(n, f, fixed_status, directed)
    if (base > 1).any():
        raise DomainError("unweighted fixed status must be 0 or 1")
    free = [(i, j) for i, j in _pairs(n, directed, allow_self_loops) if not f.mask[i, j]]
    states = _enumerate(n, deg.out_deg, deg.in_deg, free, base, directed, 1)
    return StateSpace(n, directed, False, np.array(states).reshape(-1, n * n))


def enumerate_weighted(strengths: DegreeSequence, f: FixedSet, fixed_weights: dict | None = None,
                       directed: bool = True, allow_self_loops: bool = False) -> StateSpace:
    """Every non-negative integer graph with the given strengths and fixed weights."""
    n = len(strengths.out_deg)
    template = Graph(np.zeros((n, n), dtype=np.int64), directed, True, allow_self_loops)
    f = effective_fixed(template, f)
    base = _base_weights(n, f, fixed_weights, directed)
    free = [(i, j) for i, j in _pairs(n, directed, allow_self_loops) if not f.mask[i, j]]
    states = _enumerate(n, strengths.out_deg, strengths.in_deg, free, base, directed, None)
    return StateSpace(n, directed, True, np.array(states).reshape(-1, n * n))


def state_space(g: Graph, f: FixedSet | None = None) -> StateSpace:
    """Reference set of ``g``: same degrees/strengths, same weights on ``f``."""
    f = effective_fixed(g, f)
    w = g.weights
    status = {(u, v): int(w[u, v]) for u, v in f.pairs if w[u, v]}
    seq = DegreeSequence(w.sum(axis=0), w.sum(axis=1))
    fn = enumerate_weighted if g.weighted else enumerate_unweighted
    return fn(seq, f, status, g.directed, g.allow_self_loops)


def closure_oracle(space: StateSpace) -> FixedSet:
    """Pairs whose presence is the same in every member of the space."""
    if space.count == 0:
        raise DomainError("closure of an empty state space is undefined")
    present = space.states > 0
    constant = (present == present[0]).all(axis=0).reshape(space.n, space.n)
    return FixedSet.from_mask(constant, space.directed)


def uniformity_test(space: StateSpace | int, visit_counts) -> tuple[float, float]:
    """Chi-squared goodness of fit of visit counts against the uniform distribution."""
    k = space if isinstance(space, int) else space.count
    counts = np.asarray(visit_counts, dtype=float)
    if len(counts) != k:
        raise DomainError(f"{len(counts)} counts for a space of {k} states")
    if counts.sum() < 10 * k:
        raise UndersampledError(f"{int(counts.sum())} visits is fewer than 10 per state")
    if k == 1:
        return 0.0, 1.0
    res = sps.chisquare(counts)
    return float(res.statistic), float(res.pvalue)


def transition_counts(codes, space: StateSpace, start_code: int | None = None) -> np.ndarray:
    """``counts[x, y]`` = number of recorded transitions from state x to y."""
    lookup = space.code_lookup()
    seq = np.array([lookup[int(c)] for c in codes], dtype=np.int64)
    if start_code is not None:
        seq = np.concatenate([[lookup[int(start_code)]], seq])
    counts = np.zeros((space.count, space.count), dtype=np.int64)
    np.add.at(counts, (seq[:-1], seq[1:]), 1)
    return counts


@dataclass
class BalanceReport:
    max_z: float
    worst_pair: tuple[int, int] | None
    pairs_checked: int
    z: np.ndarray = field(default_factory=lambda: np.zeros(0))


def detailed_balance(counts) -> BalanceReport:
    """Compare estimated ``Q(x, y)`` with ``Q(y, x)``.

    For a chain that is reversible for the uniform distribution the transition
    matrix is symmetric.  Each off-diagonal pair is scored as
    ``|Q(x,y) - Q(y,x)|`` over the pooled binomial standard error; pairs never
    observed in either direction score 0.
    """
    counts = np.asarray(counts, dtype=float)
    rows = counts.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(rows[:, None] > 0, counts / rows[:, None], 0.0)
        var = np.where(rows[:, None] > 0, q * (1 - q) / rows[:, None], 0.0)
    worst, where, checked, zs = 0.0, None, 0, []
    k = len(counts)
    for x in range(k):
        for y in range(x + 1, k):
            if counts[x, y] == 0 and counts[y, x] == 0:
                continue
            checked += 1
            se = np.sqrt(var[x, y] + var[y, x])
            diff = abs(q[x, y] - q[y, x])
            z = diff / se if se > 0 else (0.0 if diff == 0 else np.inf)
            zs.append(z)
            if z > worst:
                worst, where = float(z), (x, y)
    return BalanceReport(worst, where, checked, np.array(zs))
