"""Test statistics: food-web compartmentalization, Pearson chi-squared and the
likelihood-ratio statistic for (quasi-)independence fitted by IPFP."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import ConvergenceError, DomainError
from .graph import FixedSet, Graph


def compartmentalization(g: Graph) -> float:
    """Mean pairwise predator overlap of a food web.

    An edge ``A -> B`` means B eats A, so the predators of ``i`` are its
    out-neighbours.  ``c_ij`` is |shared| / |union| (0 when both are empty).
    """
    if g.n < 2:
        raise DomainError("compartmentalization needs at least two species")
    if g.weighted or not g.directed:
        raise DomainError("compartmentalization is defined on unweighted directed graphs")
    return float(_mean_overlap(g.weights))


@njit(cache=True, nogil=True)
def _mean_overlap(W):
    n = W.shape[0]
    deg = np.zeros(n, dtype=np.int64)
    for i in range(n):
        for k in range(n):
            deg[i] += W[i, k] > 0
    total = 0.0
    for i in range(n):
        if deg[i] == 0:
            continue
        for j in range(i + 1, n):
            if deg[j] == 0:
                continue
            shared = 0
            for k in range(n):
                if W[i, k] > 0 and W[j, k] > 0:
                    shared += 1
            total += 2.0 * shared / (deg[i] + deg[j] - shared)
    return total / (n * (n - 1))


def _cell_mask(t: np.ndarray, fixed) -> np.ndarray:
    if fixed is None:
        return np.zeros(t.shape, dtype=bool)
    if isinstance(fixed, FixedSet):
        fixed = fixed.mask
    fixed = np.asarray(fixed)
    if fixed.dtype == bool:
        if fixed.shape != t.shape:
            raise DomainError(f"fixed mask shape {fixed.shape} != table shape {t.shape}")
        return fixed.copy()
    mask = np.zeros(t.shape, dtype=bool)
    for i, j in fixed.reshape(-1, 2) if fixed.size else []:
        mask[int(i), int(j)] = True
    return mask


@dataclass
class ExpectedCounts:
    """Fitted cell means.  Fixed cells carry their observed count and are
    ignored by the statistics."""

    fitted: np.ndarray
    fixed_mask: np.ndarray
    row_margins: np.ndarray
    col_margins: np.ndarray
    iterations: int = 0
    discrepancy: float = 0.0

    @property
    def free_mask(self) -> np.ndarray:
        return ~self.fixed_mask


def ipfp(t, fixed=None, tol: float = 1e-10, max_iter: int = 10_000) -> ExpectedCounts:
    """Quasi-independence fit over the free cells by iterative proportional scaling.

    ``fixed`` is a boolean cell mask, a list of ``(row, col)`` cells, or a
    FixedSet over cells.  Iterates until the largest absolute difference
    between fitted and observed free-cell margins drops below ``tol``.
    """
    t = np.asarray(t, dtype=float)
    if (t < 0).any():
        raise DomainError("table has negative entries")
    mask = _cell_mask(t, fixed)
    free = ~mask
    obs = np.where(free, t, 0.0)
    rows, cols = obs.sum(axis=1), obs.sum(axis=0)
    m = free.astype(float)
    disc = np.inf
    it = 0
    with np.errstate(divide="ignore", invalid="ignore"):
        for it in range(1, max_iter + 1):
            r = m.sum(axis=1)
            m *= np.where(r > 0, rows / r, 0.0)[:, None]
            c = m.sum(axis=0)
            m *= np.where(c > 0, cols / c, 0.0)[None, :]
            disc = max(np.abs(m.sum(axis=1) - rows).max(initial=0.0),
                       np.abs(m.sum(axis=0) - cols).max(initial=0.0))
            if disc < tol:
                break
        else:
            raise ConvergenceError(f"IPFP did not converge in {max_iter} iterations", disc)
    fitted = np.where(free, m, t)
    return ExpectedCounts(fitted, mask, rows, cols, it, float(disc))


def _check_support(t, m: ExpectedCounts):
    bad = m.free_mask & (m.fitted <= 0) & (t > 0)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise DomainError(f"fitted mean is zero at free cell ({i}, {j}) with a positive count")


def chi_squared(t, m: ExpectedCounts) -> float:
    """Pearson statistic over the free cells."""
    t = np.asarray(t, dtype=float)
    _check_support(t, m)
    use = m.free_mask & (m.fitted > 0)
    return float((((t - m.fitted) ** 2)[use] / m.fitted[use]).sum())


def likelihood_ratio(t, m: ExpectedCounts) -> float:
    """``G^2 = 2 sum t log(t / m)`` over the free cells, with ``0 log 0 = 0``."""
    t = np.asarray(t, dtype=float)
    _check_support(t, m)
    use = m.free_mask & (t > 0)
    return float(2.0 * (t[use] * np.log(t[use] / m.fitted[use])).sum())


# ---------------------------------------------------------------------------
# per-state statistics for chain traces; they take the full weight matrix

@njit(cache=True, nogil=True)
def _g2_table(W, r0, logm, free):
    total = 0.0
    rows, cols = logm.shape
    for i in range(rows):
        for j in range(cols):
            x = W[i, r0 + j]
            if x > 0 and free[i, j]:
                total += x * (np.log(x) - logm[i, j])
    return 2.0 * total


@njit(cache=True, nogil=True)
def _chi2_table(W, r0, m, free):
    total = 0.0
    rows, cols = m.shape
    for i in range(rows):
        for j in range(cols):
            if free[i, j] and m[i, j] > 0:
                d = W[i, r0 + j] - m[i, j]
                total += d * d / m[i, j]
    return total


STATISTICS = {"compartmentalization": 1, "g2": 2, "chi2": 3}


@njit(cache=True, nogil=True)
def evaluate_statistic(W, code, r0, par, free):
    if code == 1:
        return _mean_overlap(W)
    if code == 2:
        return _g2_table(W, r0, par, free)
    if code == 3:
        return _chi2_table(W, r0, par, free)
    return np.nan


@dataclass
class CompiledStatistic:
    """A statistic the sampling kernels can evaluate in place.

    ``par`` holds log fitted means (``g2``) or fitted means (``chi2``) for the
    table block starting at column ``r0``.  Calling it on a weight
    matrix evaluates it directly.
    """

    name: str
    code: int
    r0: int = 0
    par: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    free: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=np.bool_))

    def __call__(self, W) -> float:
        return float(evaluate_statistic(np.asarray(W, dtype=np.int64), self.code, self.r0,
                                        self.par, self.free))


def make_statistic(name: str, g: Graph, fixed: FixedSet | None = None) -> CompiledStatistic:
    """Statistic for chain traces over the reference set of ``g``.

    For tables the fitted means depend only on the margins and the fixed
    cells, which every state shares, so they are computed once here.
    """
    if name not in STATISTICS:
        raise DomainError(f"unknown statistic {name!r}; choose from {', '.join(STATISTICS)}")
    if name == "compartmentalization":
        if g.weighted or not g.directed:
            raise DomainError("compartmentalization needs an unweighted directed graph")
        return CompiledStatistic(name, STATISTICS[name])
    if g.table_shape is None:
        raise DomainError(f"{name} needs a contingency table")
    rows = g.table_shape[0]
    cells = np.zeros(g.table_shape, dtype=bool)
    if fixed is not None:
        cells = fixed.mask[:rows, rows:].copy()
    fit = ipfp(g.table(), cells)
    par = fit.fitted
    if name == "g2":
        with np.errstate(divide="ignore"):
            par = np.log(fit.fitted)
    return CompiledStatistic(name, STATISTICS[name], rows, np.ascontiguousarray(par),
                         np.ascontiguousarray(fit.free_mask))
