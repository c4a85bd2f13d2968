"""Chain orchestration (burn-in, thinning, seeding) and MCMC diagnostics:
mixing rate, effective sample size, Monte Carlo p-values and their errors."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .ds import DsSampler
from .errors import ConfigError, DomainError
from .graph import FixedSet, Graph
from .rng import make_rng
from .stats import CompiledStatistic, make_statistic
from .ugs import UgsSampler
from .wgs import WgsSampler

METHODS = ("ugs", "wgs", "ds")
TAILS = ("upper", "lower", "two-sided")


def make_sampler(method: str, g: Graph, f: FixedSet | None, rng, **kwargs):
    if method == "ugs":
        return UgsSampler(g, f, rng, **kwargs)
    if method == "wgs":
        return WgsSampler(g, f, rng, **kwargs)
    if method == "ds":
        return DsSampler(g, f, rng)
    raise ConfigError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")


@dataclass
class ChainConfig:
    """``samples`` retained states, one every ``thin`` steps after ``burn_in`` steps.

    Leaving ``burn_in`` as ``None`` uses ``burn_in_frac`` of the post-burn-in length.
    """

    method: str = "ugs"
    samples: int = 1000
    thin: int = 1
    burn_in: int | None = None
    burn_in_frac: float = 0.2
    seed: int | None = None
    chain_id: int = 0
    statistic: str | None = None
    tail: str = "upper"
    target: str = "uniform"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}")
        if self.samples < 0 or self.thin < 1:
            raise ConfigError("samples must be >= 0 and thin >= 1")
        if self.burn_in is not None and self.burn_in < 0:
            raise ConfigError("burn_in must be >= 0")
        if not 0 <= self.burn_in_frac:
            raise ConfigError("burn_in_frac must be non-negative")
        if self.tail not in TAILS:
            raise ConfigError(f"tail must be one of {', '.join(TAILS)}")

    @classmethod
    def from_total(cls, total_steps: int, burn_in: int, thin: int = 1, **kw) -> ChainConfig:
        return cls(samples=(total_steps - burn_in) // thin, thin=thin, burn_in=burn_in, **kw)

    @property
    def burn_in_steps(self) -> int:
        if self.burn_in is not None:
            return int(self.burn_in)
        return int(round(self.burn_in_frac * self.samples * self.thin))

    @property
    def total_steps(self) -> int:
        return self.burn_in_steps + self.samples * self.thin


@dataclass
class ChainRun:
    method: str
    seed: int | None
    chain_id: int
    total_steps: int
    burn_in: int
    thin: int
    statistic: str | None
    trace: np.ndarray
    changed: np.ndarray  # one flag per post-burn-in step
    wall_time: float
    identities: int = 0
    final: np.ndarray | None = None  # weight matrix after the last step

    def export_lines(self):
        """One ``step statistic changed`` record per retained sample."""
        for k, x in enumerate(self.trace):
            step = self.burn_in + (k + 1) * self.thin
            moved = int(self.changed[k * self.thin:(k + 1) * self.thin].any())
            yield f"{step} {x:.17g} {moved}"


def run_chain(sampler, start: Graph | None = None, f: FixedSet | None = None,
              cfg: ChainConfig | None = None,
              statistic: Callable[[np.ndarray], float] | None = None) -> ChainRun:
    """Run one chain.  ``sampler`` is a sampler instance or a method name.

    With a method name the chain starts from ``start`` and its generator is
    derived from ``(cfg.seed, cfg.chain_id)``.  ``statistic`` maps the weight
    matrix to a float; by default ``cfg.statistic`` is looked up by name.
    """
    cfg = cfg or ChainConfig()
    if isinstance(sampler, str):
        kw = {"target": cfg.target} if sampler == "wgs" else {}
        sampler = make_sampler(sampler, start, f, make_rng(cfg.seed, cfg.chain_id), **kw)
    if statistic is None and cfg.statistic is not None:
        statistic = make_statistic(cfg.statistic, sampler.graph, sampler.fixed)
    burn = cfg.burn_in_steps
    post = cfg.samples * cfg.thin
    changed = np.zeros(post, dtype=np.bool_)
    trace = np.zeros(cfg.samples if statistic is not None else 0)
    t0 = time.perf_counter()
    ids0 = getattr(sampler, "identities", 0)
    if burn:
        sampler.advance(burn)
    if statistic is None:
        sampler.advance(post, changed)
    elif isinstance(statistic, CompiledStatistic):
        trace = sampler.sample(cfg.samples, cfg.thin, statistic, changed)
    else:
        for k in range(cfg.samples):
            sampler.advance(cfg.thin, changed[k * cfg.thin:(k + 1) * cfg.thin])
            trace[k] = statistic(sampler.W)
    wall = time.perf_counter() - t0
    return ChainRun(cfg.method if isinstance(cfg.method, str) else sampler.method, cfg.seed,
                    cfg.chain_id, burn + post, burn, cfg.thin, cfg.statistic, trace, changed, wall,
                    getattr(sampler, "identities", 0) - ids0, sampler.W.copy())


def mixing_rate(run: ChainRun | np.ndarray) -> float:
    """Fraction of post-burn-in steps that changed the state."""
    changed = run.changed if isinstance(run, ChainRun) else np.asarray(run)
    if len(changed) == 0:
        raise DomainError("mixing rate of an empty run")
    return float(np.mean(changed))


def autocorrelation(x) -> np.ndarray:
    """Sample autocorrelation at all lags (biased autocovariance, via FFT)."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    x = x - x.mean()
    size = 1 << int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(x, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:n] / n
    if acov[0] <= 0:
        return np.zeros(n)
    return acov / acov[0]


def integrated_time(x) -> float:
    """``1 + 2 sum rho_k``, truncated at the first non-positive pair sum ``rho_2m + rho_2m+1``."""
    rho = autocorrelation(x)
    n = len(rho)
    total = 0.0
    for m in range(n // 2):
        pair = rho[2 * m] + rho[2 * m + 1]
        if pair <= 0:
            break
        total += pair
    return 2.0 * total - 1.0


@dataclass
class EssResult:
    ess: float
    constant: bool = False


def ess_details(trace) -> EssResult:
    x = np.asarray(trace, dtype=float)
    n = len(x)
    if n < 10:
        raise DomainError("ESS needs at least 10 trace values")
    if np.ptp(x) == 0:
        return EssResult(float(n), True)
    tau = integrated_time(x)
    if tau <= 0:
        return EssResult(float(n))
    return EssResult(float(min(n, n / tau)))


def ess(trace) -> float:
    """Effective sample size, clamped to ``(0, N]``; a constant trace gives ``N``."""
    return ess_details(trace).ess


def _exceed(trace, observed, tail):
    x = np.asarray(trace, dtype=float)
    # statistics recomputed by different code paths can differ in the last bits
    tol = 1e-9 * max(1.0, abs(observed))
    if tail == "upper":
        return x >= observed - tol
    if tail == "lower":
        return x <= observed + tol
    raise DomainError(f"unknown tail {tail!r}")


def batch_means_se(x, n_batches: int | None = None) -> float:
    x = np.asarray(x, dtype=float)
    n = len(x)
    b = n_batches or max(2, int(np.sqrt(n)))
    size = n // b
    if size < 1:
        return float("nan")
    means = x[: size * b].reshape(b, size).mean(axis=1)
    return float(means.std(ddof=1) / np.sqrt(b))


def _indicator_se(ind) -> float:
    ind = np.asarray(ind, dtype=float)
    n = len(ind)
    var = ind.var()
    if var == 0 or n < 2:
        return 0.0
    tau = integrated_time(ind) if n >= 4 else 1.0
    return float(np.sqrt(var * max(tau, 1.0 / n) / n))


def p_value(trace, observed: float, tail: str = "upper", plus_one: bool = False) -> tuple[float, float]:
    """Monte Carlo p-value and its standard error.

    The error is the square root of the indicator series' long-run variance
    over N, with the autocorrelation sum truncated as in :func:`ess`.
    ``plus_one`` applies the ``(k + 1) / (N + 1)`` correction.
    """
    x = np.asarray(trace, dtype=float)
    if len(x) == 0:
        raise DomainError("p-value of an empty trace")
    if tail == "two-sided":
        pu, su = p_value(x, observed, "upper", plus_one)
        pl, sl = p_value(x, observed, "lower", plus_one)
        return (min(1.0, 2 * pu), 2 * su) if pu <= pl else (min(1.0, 2 * pl), 2 * sl)
    ind = _exceed(x, observed, tail)
    n = len(ind)
    p = (ind.sum() + 1) / (n + 1) if plus_one else ind.mean()
    return float(p), _indicator_se(ind)


@dataclass
class StatReport:
    statistic: str | None
    observed: float | None
    p_value: float | None
    p_se: float | None
    p_se_batch: float | None
    ess: float | None
    ess_per_second: float | None
    mixing_rate: float
    wall_time: float
    samples: int
    identities: int = 0
    ess_constant: bool = False
    chains: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def summarize(run: ChainRun, observed: float | None = None, tail: str = "upper",
              plus_one: bool = False) -> StatReport:
    e, p, se, seb, flag = None, None, None, None, False
    if len(run.trace) >= 10:
        d = ess_details(run.trace)
        e, flag = d.ess, d.constant
    if observed is not None and len(run.trace):
        p, se = p_value(run.trace, observed, tail, plus_one)
        if tail != "two-sided":
            seb = batch_means_se(_exceed(run.trace, observed, tail))
    eps = e / run.wall_time if e is not None and run.wall_time > 0 else None
    return StatReport(run.statistic, observed, p, se, seb, e, eps, mixing_rate(run),
                      run.wall_time, len(run.trace), run.identities, flag)


def run_chains(method: str, start: Graph, f: FixedSet | None, cfg: ChainConfig, chains: int = 1,
               threads: int | None = None, statistic=None) -> list[ChainRun]:
    """Independent chains with ids ``0..chains-1`` sharing ``cfg.seed``.

    The compiled kernels release the GIL, so chains run in parallel threads.
    """
    cfgs = [ChainConfig(**{**asdict(cfg), "method": method, "chain_id": k}) for k in range(chains)]
    if chains == 1:
        return [run_chain(method, start, f, cfgs[0], statistic)]
    with ThreadPoolExecutor(max_workers=threads or chains) as pool:
        return list(pool.map(lambda c: run_chain(method, start, f, c, statistic), cfgs))


def _chain_dict(rep: StatReport) -> dict:
    d = rep.to_dict()
    d.pop("chains")
    return d


def pooled_report(runs: list[ChainRun], observed: float | None = None, tail: str = "upper",
                  plus_one: bool = False) -> StatReport:
    """Combine per-chain diagnostics: ESS adds up, p-values are sample-weighted."""
    per = [summarize(r, observed, tail, plus_one) for r in runs]
    n = np.array([p.samples for p in per], dtype=float)
    wall = max(r.wall_time for r in runs)
    mix = float(np.mean(np.concatenate([r.changed for r in runs])))
    e = sum(p.ess for p in per) if all(p.ess is not None for p in per) else None
    p = se = seb = None
    if observed is not None and n.sum() > 0:
        p = float((n * [q.p_value for q in per]).sum() / n.sum())
        se = float(np.sqrt((n ** 2 * np.array([q.p_se for q in per]) ** 2).sum()) / n.sum())
        if all(q.p_se_batch is not None for q in per):
            seb = float(np.sqrt((n ** 2 * np.array([q.p_se_batch for q in per]) ** 2).sum())
                        / n.sum())
    eps = e / wall if e is not None and wall > 0 else None
    return StatReport(runs[0].statistic, observed, p, se, seb, e, eps, mix, wall, int(n.sum()),
                      sum(r.identities for r in runs), all(q.ess_constant for q in per),
                      [_chain_dict(q) for q in per] if len(per) > 1 else [])
