"""Seeded Monte-Carlo expectations over i.i.d. channel gain vectors.

Samples are generated in fixed-size chunks, each with its own child seed
spawned from one ``numpy.random.SeedSequence``. Chunk statistics are merged
in chunk order, so the result depends only on ``(seed, n)``; the worker
count changes wall time, not the bits of the mean.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import MIN_GAIN, FadingModel, sample_gains
from .errors import DomainError, SolverFailureRateError, WpcError

DEFAULT_SAMPLES = 100_000
DEFAULT_SEED = 42
CHUNK = 8192
MAX_FAILURE_RATE = 1e-3


@dataclass(frozen=True)
class DelayStats:
    """Average delay (seconds) with its error: quadrature bound or MC standard error."""

    mean: float
    std_error: float
    samples: int
    method: str
    failures: int = 0

    def __post_init__(self):
        if self.std_error < 0:
            raise DomainError("std_error must be non-negative")
        if self.method not in ("quadrature", "monte-carlo"):
            raise DomainError(f"unknown method {self.method!r}")
        if self.method == "monte-carlo" and self.samples < 1:
            raise DomainError("monte-carlo estimate needs at least one sample")


def chunk_sizes(n: int, chunk: int = CHUNK):
    full, rest = divmod(n, chunk)
    return [chunk] * full + ([rest] if rest else [])


def gain_panel(fading: FadingModel, k_nodes: int, n: int, seed: int, chunk: int = CHUNK):
    """The (n, k_nodes) gain draws that :func:`estimate` would use for this seed."""
    sizes = chunk_sizes(n, chunk)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    return np.concatenate([
        sample_gains(fading, np.random.default_rng(ss), (size, k_nodes), floor=MIN_GAIN)
        for ss, size in zip(children, sizes)
    ])


def _apply(f, h, vectorized):
    if vectorized:
        try:
            out = np.asarray(f(h), dtype=float).reshape(h.shape[0])
        except WpcError:
            # a single bad realisation poisons the batch; fall back to rows
            return _apply(f, h, False)
        return out
    out = np.empty(h.shape[0])
    for i, row in enumerate(h):
        try:
            out[i] = float(np.asarray(f(row[None, :]), dtype=float).ravel()[0])
        except WpcError:
            out[i] = np.nan
    return out


def _chunk_stats(f, fading, k_nodes, seed_seq, size, vectorized):
    h = sample_gains(fading, np.random.default_rng(seed_seq), (size, k_nodes), floor=MIN_GAIN)
    vals = _apply(f, h, vectorized)
    ok = np.isfinite(vals)
    good = vals[ok]
    count = good.size
    mean = float(good.mean()) if count else 0.0
    m2 = float(((good - mean) ** 2).sum()) if count else 0.0
    return count, mean, m2, size - count


def _merge(a, b):
    """Chan et al. pairwise combination of (count, mean, M2)."""
    na, ma, sa = a
    nb, mb, sb = b
    n = na + nb
    if n == 0:
        return 0, 0.0, 0.0
    delta = mb - ma
    return n, ma + delta * nb / n, sa + sb + delta * delta * na * nb / n


def estimate(f, fading: FadingModel, k_nodes: int = 1, n: int = DEFAULT_SAMPLES,
             seed: int = DEFAULT_SEED, workers: int = 1, vectorized: bool = True,
             chunk: int = CHUNK) -> DelayStats:
    """Sample mean and standard error of ``f`` over ``n`` gain vectors.

    ``f`` receives an ``(rows, k_nodes)`` array of gains and returns one
    value per row (``vectorized=False`` feeds it one row at a time). Rows
    that come back non-finite, or that raise a solver error, count as
    failures; more than 0.1% failures aborts the run.
    """
    if n < 2:
        raise DomainError("Monte-Carlo estimate needs n >= 2")
    if k_nodes < 1:
        raise DomainError("k_nodes must be at least 1")
    sizes = chunk_sizes(n, chunk)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = list(zip(children, sizes))

    def run(job):
        return _chunk_stats(f, fading, k_nodes, job[0], job[1], vectorized)

    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(job) for job in jobs]

    acc = (0, 0.0, 0.0)
    failures = 0
    for count, mean, m2, bad in results:
        acc = _merge(acc, (count, mean, m2))
        failures += bad
    if failures > MAX_FAILURE_RATE * n:
        raise SolverFailureRateError(
            f"{failures} of {n} realisations failed (limit {MAX_FAILURE_RATE:.1%})",
            failures=failures, samples=n)
    count, mean, m2 = acc
    if count < 2:
        raise SolverFailureRateError("fewer than two usable realisations",
                                     failures=failures, samples=n)
    var = m2 / (count - 1)
    return DelayStats(mean=float(mean), std_error=float(math.sqrt(max(var, 0.0) / count)),
                      samples=int(count), method="monte-carlo", failures=int(failures))
