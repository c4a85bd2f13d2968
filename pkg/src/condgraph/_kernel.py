"""Numba building blocks shared by the samplers.

Per-vertex sets are stored as three arrays: ``lst[u, :size[u]]`` holds the
members, ``pos[u, v]`` is the slot of ``v`` in ``lst[u]`` or -1.  Insertion,
removal and uniform sampling are O(1).
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .errors import InvariantViolation
from .stats import evaluate_statistic

# step status codes returned by the kernels
MOVED = 0
FROZEN = 1
EMPTY_CANDIDATES = 2
IDENTITY = 3
CAP_EXCEEDED = 4


@njit(cache=True, nogil=True, inline="always")
def randbelow(rng, k):
    # Generator.integers is ~10x slower inside numba; k is always small here
    i = np.int64(rng.random() * k)
    return i if i < k else k - 1


@njit(cache=True, nogil=True, inline="always")
def set_add(lst, size, pos, u, v):
    if pos[u, v] >= 0:
        return
    k = size[u]
    lst[u, k] = v
    pos[u, v] = k
    size[u] = k + 1


@njit(cache=True, nogil=True, inline="always")
def set_remove(lst, size, pos, u, v):
    k = pos[u, v]
    if k < 0:
        return
    last = size[u] - 1
    x = lst[u, last]
    lst[u, k] = x
    pos[u, x] = k
    pos[u, v] = -1
    size[u] = last


@njit(cache=True, nogil=True, inline="always")
def pick_excluding(lst, size, pos, u, excl, rng):
    """Uniform member of set ``u`` other than ``excl``; -1 when none is left."""
    k = size[u]
    p = -1
    if excl >= 0:
        p = pos[u, excl]
    if p >= 0:
        if k <= 1:
            return -1
        i = randbelow(rng, k - 1)
        if i >= p:
            i += 1
        return lst[u, i]
    if k == 0:
        return -1
    return lst[u, randbelow(rng, k)]


@njit(cache=True, nogil=True)
def grow(buf, needed):
    if needed <= buf.shape[0]:
        return buf
    new = np.empty(max(2 * buf.shape[0], needed), dtype=buf.dtype)
    new[: buf.shape[0]] = buf
    return new


@njit(cache=True, nogil=True)
def observe(W, step, code_idx, code_mult, codes_out, verify, ref_out, ref_in, fixed, W_ref,
            max_weight, thin, stat_code, stat_r0, stat_par, stat_free, trace):
    """Per-step bookkeeping after ``step``.

    Records the state code, evaluates the statistic every ``thin`` steps,
    and returns 1 on a conservation violation.
    """
    n = W.shape[0]
    if stat_code != 0 and (step + 1) % thin == 0:
        trace[(step + 1) // thin - 1] = evaluate_statistic(W, stat_code, stat_r0, stat_par,
                                                           stat_free)
    if codes_out.shape[0] > 0:
        code = 0
        for k in range(code_idx.shape[0]):
            idx = code_idx[k]
            code += W[idx // n, idx % n] * code_mult[k]
        codes_out[step] = code
    if not verify:
        return 0
    for u in range(n):
        s_out = 0
        s_in = 0
        for v in range(n):
            if W[u, v] < 0 or W[u, v] > max_weight:
                return 1
            s_out += W[u, v]
            s_in += W[v, u]
            if fixed[u, v] and W[u, v] != W_ref[u, v]:
                return 1
        if s_out != ref_out[u] or s_in != ref_in[u]:
            return 1
    return 0


_NO_PAR = np.zeros((0, 0))
_NO_FREE = np.zeros((0, 0), dtype=np.bool_)


class Observer:
    """Optional per-step recording: state codes, a thinned statistic trace,
    and conservation checks."""

    def __init__(self, W, fixed_mask, nsteps, encoder=None, verify=False,
                 max_weight=np.iinfo(np.int64).max, statistic=None, thin=1):
        if encoder is not None:
            self.code_idx, self.code_mult = encoder
            self.codes = np.empty(nsteps, dtype=np.int64)
        else:
            self.code_idx = np.zeros(0, dtype=np.int64)
            self.code_mult = np.zeros(0, dtype=np.int64)
            self.codes = np.zeros(0, dtype=np.int64)
        self.verify = verify
        if verify:
            self.ref_out = W.sum(axis=1)
            self.ref_in = W.sum(axis=0)
            self.W_ref = W.copy()
        else:
            self.ref_out = self.ref_in = np.zeros(0, dtype=np.int64)
            self.W_ref = np.zeros((0, 0), dtype=np.int64)
        self.fixed = fixed_mask
        self.max_weight = max_weight
        self.thin = int(thin)
        if statistic is not None:
            self.stat = (statistic.code, statistic.r0, statistic.par, statistic.free)
            self.trace = np.zeros(nsteps // self.thin)
        else:
            self.stat = (0, 0, _NO_PAR, _NO_FREE)
            self.trace = np.zeros(0)

    def args(self):
        return (self.code_idx, self.code_mult, self.codes, self.verify,
                self.ref_out, self.ref_in, self.fixed, self.W_ref, self.max_weight,
                self.thin, *self.stat, self.trace)


class SamplerBase:
    """Common surface of the chain samplers.

    Subclasses implement ``_run(nsteps, changed, observer)`` returning
    the number of conservation violations.
    """

    method = ""

    def __init__(self, graph, fixed, rng):
        self._template = graph
        self.fixed = fixed
        self.rng = rng
        self.W = graph.weights.copy()
        self.steps_taken = 0

    @property
    def weights(self) -> np.ndarray:
        return self.W

    @property
    def graph(self):
        return self._template.with_weights(self.W)

    def advance(self, nsteps, changed=None, verify=False) -> int:
        """Run ``nsteps`` transitions and return how many changed the state.

        ``changed`` (bool array of length ``nsteps``) receives per-step flags.
        With ``verify`` the kernel re-checks degrees/strengths and fixed pairs
        after every step and raises on any violation.
        """
        nsteps = int(nsteps)
        if changed is None:
            changed = np.zeros(nsteps, dtype=np.bool_)
        self._advance(nsteps, changed, self._observer(nsteps, None, verify))
        return int(changed.sum())

    def record_states(self, nsteps, encoder, verify=False) -> np.ndarray:
        """Run ``nsteps`` transitions, returning the integer state code after each.

        ``encoder`` is a ``(flat_indices, multipliers)`` pair, see
        :meth:`condgraph.oracle.StateSpace.encoder`.
        """
        nsteps = int(nsteps)
        changed = np.zeros(nsteps, dtype=np.bool_)
        obs = self._observer(nsteps, encoder, verify)
        self._advance(nsteps, changed, obs)
        return obs.codes

    def sample(self, samples, thin, statistic, changed=None, verify=False) -> np.ndarray:
        """Run ``samples * thin`` transitions, evaluating ``statistic`` (see
        :func:`condgraph.stats.make_statistic`) after every ``thin``-th one."""
        nsteps = int(samples) * int(thin)
        if changed is None:
            changed = np.zeros(nsteps, dtype=np.bool_)
        obs = self._observer(nsteps, None, verify, statistic, thin)
        self._advance(nsteps, changed, obs)
        return obs.trace

    def _observer(self, nsteps, encoder, verify, statistic=None, thin=1):
        cap = np.iinfo(np.int64).max if self._template.weighted else 1
        return Observer(self.W, self.fixed.mask, nsteps, encoder, verify, cap, statistic, thin)

    def _advance(self, nsteps, changed, obs):
        violations = self._run(nsteps, changed, obs)
        self.steps_taken += nsteps
        if violations:
            raise InvariantViolation(
                f"{self.method}: {violations} conservation violation(s) in {nsteps} steps")
