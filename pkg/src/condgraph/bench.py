"""Sparse-table benchmark: mixing rate and ESS per second of the weighted
sampler against the subtable baseline as the number of levels grows."""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass

import numpy as np

from .diagnostics import ChainConfig, run_chain, summarize
from .graph import table_instance
from .rng import make_rng

BENCH_FIELDS = ("L", "method", "mixing_rate", "ess", "wall_seconds", "ess_per_second")


@dataclass
class BenchRow:
    L: int
    method: str
    mixing_rate: float
    ess: float
    wall_seconds: float
    ess_per_second: float


def categorical_table(levels: int, draws: int, rng) -> np.ndarray:
    """Cross-tabulation of ``draws`` pairs of independent uniform categorical
    variables with ``levels`` levels each (empty rows/columns kept)."""
    rng = make_rng(rng)
    a = rng.integers(levels, size=draws)
    b = rng.integers(levels, size=draws)
    t = np.zeros((levels, levels), dtype=np.int64)
    np.add.at(t, (a, b), 1)
    return t


def _warm_up():
    # compile the kernels outside the timed region
    g, f = table_instance([[1, 1], [1, 1]])
    for m in ("wgs", "ds"):
        run_chain(m, g, f, ChainConfig(method=m, samples=10, thin=1, seed=0, statistic="g2"))


def bench_sweep(L_values, samples_per_L: int = 200, steps: int = 10_000, rng=None,
                methods=("wgs", "ds"), thin=None) -> list[BenchRow]:
    """One row per ``(L, method)``.

    ``steps`` retained samples of the likelihood-ratio statistic are drawn
    with thinning ``L`` (or ``thin``) after a 20% burn-in.  Both methods run
    on the same table and the same seed.
    """
    L_values = list(L_values)
    if L_values != sorted(L_values):
        raise ValueError("L_values must be sorted ascending")
    rng = make_rng(rng)
    rows: list[BenchRow] = []
    if not L_values:
        return rows
    _warm_up()
    for L in L_values:
        g, f = table_instance(categorical_table(L, samples_per_L, rng))
        seed = int(rng.integers(2**63))
        for method in methods:
            cfg = ChainConfig(method=method, samples=steps, thin=thin or L, seed=seed,
                              statistic="g2")
            rep = summarize(run_chain(method, g, f, cfg))
            rows.append(BenchRow(L, method, rep.mixing_rate, rep.ess, rep.wall_time,
                                 rep.ess_per_second))
    return rows


def write_bench_csv(rows, fh) -> None:
    w = csv.DictWriter(fh, fieldnames=BENCH_FIELDS)
    w.writeheader()
    for r in rows:
        w.writerow(asdict(r))
