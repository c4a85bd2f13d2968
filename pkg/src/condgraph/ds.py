"""Baseline 2x2 subtable chain for contingency tables with fixed margins.

Each step picks two rows and two columns uniformly, then adds
``+d, -d / -d, +d`` to the subtable with ``d`` uniform over the integers that
keep it non-negative.  No structural zeros are supported.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from . import _kernel as K
from .errors import DomainError
from .graph import FixedSet, Graph, table_instance
from .rng import make_rng


def ds_delta_range(t: np.ndarray, i: int, i2: int, j: int, j2: int) -> tuple[int, int]:
    """Admissible ``d`` for the update ``t[i,j] += d, t[i,j2] -= d, t[i2,j] -= d, t[i2,j2] += d``."""
    return -int(min(t[i, j], t[i2, j2])), int(min(t[i, j2], t[i2, j]))


def ds_step(t, rng=None) -> np.ndarray:
    """One step on a copy of the table ``t``."""
    rng = make_rng(rng)
    t = np.array(t, dtype=np.int64)
    rows, cols = t.shape
    if rows < 2 or cols < 2:
        return t
    i, i2 = sorted(rng.choice(rows, 2, replace=False))
    j, j2 = sorted(rng.choice(cols, 2, replace=False))
    low, up = ds_delta_range(t, i, i2, j, j2)
    d = int(rng.integers(low, up + 1))
    t[i, j] += d
    t[i2, j2] += d
    t[i, j2] -= d
    t[i2, j] -= d
    return t


@njit(cache=True, nogil=True)
def _ds_run(W, rows, cols, rng, nsteps, changed, code_idx, code_mult, codes_out, verify,
            ref_out, ref_in, fixed, W_ref, max_weight, thin, stat_code, stat_r0, stat_par, stat_free,
            trace):
    violations = 0
    record = codes_out.shape[0] > 0 or verify
    # steps between statistic evaluations; -1 disables them
    every = thin if stat_code != 0 else -1
    tick = 0
    for step in range(nsteps):
        changed[step] = False
        if rows >= 2 and cols >= 2:
            i = min(np.int64(rng.random() * rows), rows - 1)
            i2 = min(np.int64(rng.random() * (rows - 1)), rows - 2)
            if i2 >= i:
                i2 += 1
            j = rows + min(np.int64(rng.random() * cols), cols - 1)
            j2 = rows + min(np.int64(rng.random() * (cols - 1)), cols - 2)
            if j2 >= j:
                j2 += 1
            low = -min(W[i, j], W[i2, j2])
            up = min(W[i, j2], W[i2, j])
            d = low + min(np.int64(rng.random() * (up - low + 1)), up - low)
            if d != 0:
                W[i, j] += d
                W[i2, j2] += d
                W[i, j2] -= d
                W[i2, j] -= d
                changed[step] = True
        tick += 1
        if record or tick == every:
            if tick == every:
                tick = 0
            violations += K.observe(W, step, code_idx, code_mult, codes_out, verify, ref_out, ref_in,
                                    fixed, W_ref, max_weight, thin, stat_code, stat_r0,
                                    stat_par, stat_free, trace)
    return violations


class DsSampler(K.SamplerBase):
    """Chain state for the subtable baseline on a table-shaped graph."""

    method = "ds"

    def __init__(self, g: Graph, fixed: FixedSet | None = None, rng=None):
        if g.table_shape is None:
            raise DomainError("the subtable chain needs a contingency table")
        _, structural = table_instance(g.table())
        if fixed is not None and not np.array_equal(fixed.mask, structural.mask):
            raise DomainError("the subtable chain does not support fixed table cells")
        super().__init__(g, structural, make_rng(rng))
        self.rows, self.cols = g.table_shape

    @property
    def frozen(self) -> bool:
        return False

    def _run(self, nsteps, changed, obs):
        return _ds_run(self.W, self.rows, self.cols, self.rng, nsteps, changed, *obs.args())
