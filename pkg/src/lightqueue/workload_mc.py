"""Monte Carlo ground truth for the scalar workload process.

Each path carries a virtual backlog that drains at rate v, sticks at
zero, and receives exponential(lam) jumps at Poisson(a) arrival epochs.
The defective part of the jump kernel (mass beta/lam < 1) is handled by
weight bookkeeping: every arrival multiplies the path weight by
beta/lam, which keeps the estimator variance bounded for small masses
instead of killing paths outright.

Paths are simulated in fixed-size chunks, each chunk on its own
counter-based stream keyed by (seed, chunk index), so results are
bit-reproducible and independent of worker count: partial histograms
are merged in chunk order, never in completion order.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import ConfigError, GridError
from .fields import FLOAT_FMT, SpaceTimeField, _read_csv_rows

_CHUNK = 1 << 16

InitialSpec = Union[float, Callable[[np.random.Generator, int], np.ndarray]]


@dataclass(frozen=True)
class SimConfig:
    """Path count, horizon, rates, and the jump kernel of one MC run.

    ``initial`` is either a fixed starting backlog or a sampler
    ``f(rng, n) -> n values`` drawn once per path before the arrivals.
    """

    n_paths: int = 100_000
    t_end: float = 10.0
    seed: int = 0
    initial: InitialSpec = 0.0
    v: float = 1.0
    a: float = 1.0
    lam: float = 1.5
    beta: float = 1.5

    def __post_init__(self):
        if self.n_paths < 1:
            raise ConfigError("n_paths must be at least 1")
        if self.t_end < 0:
            raise ConfigError("t_end must be nonnegative")
        if not (self.v > 0):
            raise ConfigError("drain rate v must be positive")
        if self.a < 0:
            raise ConfigError("arrival rate a must be nonnegative")
        if not (self.lam > 0):
            raise ConfigError("jump rate lam must be positive")
        if not (0.0 <= self.beta <= self.lam * (1 + 1e-12)):
            raise ConfigError("jump amplitude beta must lie in [0, lam]")


@dataclass(frozen=True)
class EmpiricalCdf:
    """Weighted CDF estimate with per-point binomial standard errors.

    ``cdf[i]`` estimates the weighted probability of the backlog lying
    at or below ``x[i]``; ``total_weight`` is the surviving weight per
    path (the defective kernel makes it decay below one as t grows).
    """

    x: np.ndarray
    cdf: np.ndarray
    stderr: np.ndarray
    total_weight: float

    def __post_init__(self):
        if not (self.x.shape == self.cdf.shape == self.stderr.shape):
            raise GridError("x, cdf, stderr must share one shape")

    def to_csv(self) -> str:
        lines = ["x,cdf,stderr"]
        for xi, ci, si in zip(self.x, self.cdf, self.stderr):
            lines.append(",".join(FLOAT_FMT % u for u in (xi, ci, si)))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "EmpiricalCdf":
        rows = _read_csv_rows(text, ("x", "cdf", "stderr"))
        x, cdf, se = (np.array(col) for col in zip(*rows))
        total = float(cdf[-1]) if cdf.size else 0.0
        return cls(x=x, cdf=cdf, stderr=se, total_weight=total)


def stationary_workload_sampler(a: float, v: float, lam: float) -> Callable:
    """Sampler of the stationary backlog for the full-mass kernel.

    Mass 1 - rho at zero, exponential(lam - a/v) tail otherwise; valid
    for rho = a / (lam v) < 1.
    """
    rho = a / (lam * v)
    if not (0 <= rho < 1):
        raise ConfigError("stationary regime requires a < lam * v")
    eta = lam - a / v

    def sample(rng: np.random.Generator, n: int) -> np.ndarray:
        at_zero = rng.random(n) < 1.0 - rho
        tail = rng.exponential(1.0 / eta, n)
        return np.where(at_zero, 0.0, tail)

    return sample


def _simulate_chunk(cfg: SimConfig, chunk_idx: int, m: int, x_grid: np.ndarray):
    """Weighted first/second-moment histograms for one chunk of paths."""
    rng = np.random.Generator(np.random.Philox(key=[cfg.seed, chunk_idx]))
    if callable(cfg.initial):
        w = np.asarray(cfg.initial(rng, m), dtype=float)
    else:
        w = np.full(m, float(cfg.initial))
    n_arr = rng.poisson(cfg.a * cfg.t_end, m)
    max_n = int(n_arr.max()) if m else 0
    if max_n > 0:
        times = rng.random((m, max_n)) * cfg.t_end
        times[np.arange(max_n) >= n_arr[:, None]] = np.inf
        times.sort(axis=1)
        jumps = rng.exponential(1.0 / cfg.lam, (m, max_n))
        t_prev = np.zeros(m)
        for j in range(max_n):
            live = times[:, j] < np.inf
            if not live.any():
                break
            drain = cfg.v * (times[live, j] - t_prev[live])
            w[live] = np.maximum(0.0, w[live] - drain) + jumps[live, j]
            t_prev[live] = times[live, j]
        w = np.maximum(0.0, w - cfg.v * (cfg.t_end - t_prev))
    else:
        w = np.maximum(0.0, w - cfg.v * cfg.t_end)

    q = cfg.beta / cfg.lam
    weight = np.power(q, n_arr, dtype=float)
    slot = np.searchsorted(x_grid, w, side="left")
    inside = slot < x_grid.size
    h1 = np.bincount(slot[inside], weights=weight[inside], minlength=x_grid.size)
    h2 = np.bincount(
        slot[inside], weights=weight[inside] ** 2, minlength=x_grid.size
    )
    return h1, h2, weight.sum()


def simulate_workload(
    cfg: SimConfig, x_grid: np.ndarray | None = None, n_workers: int = 1
) -> EmpiricalCdf:
    """Weighted empirical CDF of the backlog at cfg.t_end.

    The estimate is normalized by the path count, not the surviving
    weight, so it targets the defective (mass-losing) distribution that
    the direct solver evolves.  Standard errors are the weighted
    binomial ones, sqrt((m2 - p^2) / n).
    """
    if x_grid is None:
        x_grid = np.round(np.arange(0, 401)) * 0.05
    x_grid = np.asarray(x_grid, dtype=float)
    if x_grid.ndim != 1 or x_grid.size < 2 or np.any(np.diff(x_grid) <= 0):
        raise GridError("x_grid must be a 1-d strictly increasing array")

    n = cfg.n_paths
    sizes = [_CHUNK] * (n // _CHUNK)
    if n % _CHUNK:
        sizes.append(n % _CHUNK)
    tasks = list(enumerate(sizes))
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            parts = list(
                pool.map(lambda it: _simulate_chunk(cfg, it[0], it[1], x_grid), tasks)
            )
    else:
        parts = [_simulate_chunk(cfg, i, m, x_grid) for i, m in tasks]

    h1 = np.zeros(x_grid.size)
    h2 = np.zeros(x_grid.size)
    total = 0.0
    for p1, p2, tw in parts:  # chunk order, never completion order
        h1 += p1
        h2 += p2
        total += tw
    cdf = np.cumsum(h1) / n
    m2 = np.cumsum(h2) / n
    var = np.maximum(m2 - cdf**2, 0.0) / n
    return EmpiricalCdf(
        x=x_grid, cdf=cdf, stderr=np.sqrt(var), total_weight=total / n
    )


@dataclass(frozen=True)
class CdfComparison:
    """Deterministic distance report between an MC estimate and a field."""

    x: np.ndarray
    sup_distance: float
    l2_distance: float
    z_scores: np.ndarray
    flagged: np.ndarray  # |z| > 4

    @property
    def n_flagged(self) -> int:
        return int(self.flagged.sum())


def compare_cdf(emp: EmpiricalCdf, field: SpaceTimeField, t: float) -> CdfComparison:
    """Compare an empirical CDF against the first field component at time t.

    The field is linearly interpolated onto the empirical grid restricted
    to the overlap of the two x-ranges; points whose deviation exceeds
    four standard errors are flagged.
    """
    j = field.time_index(t)
    lo = max(emp.x[0], field.x[0])
    hi = min(emp.x[-1], field.x[-1])
    if not (hi > lo):
        raise GridError("empirical and field x-ranges do not overlap")
    keep = (emp.x >= lo) & (emp.x <= hi)
    x = emp.x[keep]
    ref = np.interp(x, field.x, field.p1[j])
    diff = emp.cdf[keep] - ref
    se = emp.stderr[keep]
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, diff / se, np.where(diff == 0, 0.0, np.inf))
    return CdfComparison(
        x=x,
        sup_distance=float(np.max(np.abs(diff))),
        l2_distance=float(np.sqrt(np.trapezoid(diff**2, x))),
        z_scores=z,
        flagged=np.abs(z) > 4.0,
    )
