"""Monte Carlo estimates of coverage and load, minimum forwarding probability
search, and redundancy sweeps.

Every trial draws its uniforms from ``(seed, trial)``, and every probe of a
search or sweep reuses them (common random numbers). The estimated coverage
is then exactly monotone in ``p`` and in the packet count, which is what makes
bisection over ``p`` sound.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from codedgossip.engine import CodingConfig, ProtocolParams, coded_count, trial_counts, trial_uniforms
from codedgossip.graph import Graph, default_source, largest_component

log = logging.getLogger(__name__)

DEFAULT_SEED = 20190704
DEFAULT_TRIALS = 500
DEFAULT_P_TOLERANCE = 0.01


class InfeasibleError(Exception):
    """Coverage 1 - delta is out of reach even with flooding (p = 1)."""


@dataclass(frozen=True)
class Estimate:
    mean: float
    std_error: float
    trials: int

    @classmethod
    def from_samples(cls, samples: Sequence[float] | np.ndarray) -> "Estimate":
        x = np.asarray(samples, dtype=float)
        if x.size == 0:
            raise ValueError("need at least one sample")
        se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
        return cls(float(x.mean()), se, int(x.size))


@dataclass(frozen=True)
class SweepPoint:
    rho: float
    n: int
    p_min: float | None
    tau: float | None
    delta: float
    tau_std_error: float | None = None

    @property
    def feasible(self) -> bool:
        return self.p_min is not None


@dataclass(frozen=True)
class SimulatedCurves:
    """Per-trial counts on a grid of (packet count, p) values.

    ``receivers[t, i, g]`` / ``transmissions[t, i, g]`` belong to trial ``t``
    with ``packet_counts[i]`` packets at ``p_grid[g]``.
    """

    node_count: int
    packet_counts: np.ndarray
    p_grid: np.ndarray
    receivers: np.ndarray
    transmissions: np.ndarray

    def coverage(self, i: int) -> np.ndarray:
        """Estimated E[R/N] along the p grid for packet count index ``i``."""
        return self.receivers[:, i, :].mean(axis=0) / self.node_count


def simulate_curves(
    g: Graph,
    source: int,
    k: int,
    packet_counts: Sequence[int],
    p_grid: Sequence[float],
    trials: int,
    seed: int,
    workers: int | None = None,
) -> SimulatedCurves:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    order = sorted(set(int(n) for n in packet_counts))
    grid = np.asarray(p_grid, dtype=float)
    n_max = order[-1]

    def one(trial: int) -> tuple[np.ndarray, np.ndarray]:
        u = trial_uniforms(seed, trial, n_max, g.node_count)
        return trial_counts(g, source, k, order, grid, u)

    workers = workers or os.cpu_count() or 1
    if workers > 1 and trials > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(trials)))
    else:
        results = [one(t) for t in range(trials)]
    return SimulatedCurves(
        node_count=g.node_count,
        packet_counts=np.array(order),
        p_grid=grid,
        receivers=np.stack([r for r, _ in results]),
        transmissions=np.stack([t for _, t in results]),
    )


def estimate(
    g: Graph,
    coding: CodingConfig,
    proto: ProtocolParams,
    trials: int = DEFAULT_TRIALS,
    seed: int = DEFAULT_SEED,
    workers: int | None = None,
) -> tuple[Estimate, Estimate]:
    """Estimates of E[R/N] (coverage) and E[T] (load) at ``proto.p``."""
    if not 0 <= proto.source < g.node_count:
        raise ValueError(f"source {proto.source} out of range")
    curves = simulate_curves(g, proto.source, coding.k, [coding.n], [proto.p], trials, seed, workers)
    coverage = Estimate.from_samples(curves.receivers[:, 0, 0] / g.node_count)
    load = Estimate.from_samples(curves.transmissions[:, 0, 0])
    return coverage, load


def probe_grid(p_tolerance: float = DEFAULT_P_TOLERANCE, mode: str = "bisect", step: float | None = None) -> np.ndarray:
    """Ascending probe points of a minimum-p search.

    Bisection on [0, 1] halves down to the dyadic grid ``i / 2**m`` with
    ``2**-m <= p_tolerance``; the linear mode walks down from 1 by ``step``.
    """
    if mode == "bisect":
        if p_tolerance <= 0:
            raise ValueError("p_tolerance must be positive")
        m = max(1, math.ceil(math.log2(1.0 / p_tolerance)))
        return np.arange(2**m + 1) / 2**m
    if mode == "linear":
        step = p_tolerance if step is None else step
        if step <= 0:
            raise ValueError("step must be positive")
        count = int(math.floor(1.0 / step + 1e-9))
        pts = {0.0, 1.0} | {round(1.0 - i * step, 12) for i in range(count + 1)}
        return np.array(sorted(p for p in pts if p >= 0.0))
    raise ValueError(f"unknown search mode {mode!r}")


def search_min_p(coverage: np.ndarray, grid: np.ndarray, target: float, mode: str = "bisect") -> float:
    """Least probed ``p`` whose coverage reaches ``target``.

    ``coverage[g]`` is the coverage at ``grid[g]``. Raises InfeasibleError if
    even ``p = 1`` falls short.
    """
    if coverage[-1] < target:
        raise InfeasibleError(f"coverage {coverage[-1]:.4f} at p=1 is below {target:.4f}")
    if mode == "linear":
        # descending walk from p = 1, stop at the first miss
        best = len(grid) - 1
        for g in range(len(grid) - 2, -1, -1):
            if coverage[g] < target:
                break
            best = g
        return float(grid[best])
    if coverage[0] >= target:
        return float(grid[0])
    lo, hi = 0, len(grid) - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if coverage[mid] >= target:
            hi = mid
        else:
            lo = mid
    return float(grid[hi])


def _check_delta(delta: float) -> None:
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")


def _component_feasible(g: Graph, source: int, delta: float) -> bool:
    size, _ = largest_component(g, source)
    return size >= (1.0 - delta) * g.node_count


def min_forwarding_probability(
    g: Graph,
    coding: CodingConfig,
    delta: float,
    trials: int = DEFAULT_TRIALS,
    p_tolerance: float = DEFAULT_P_TOLERANCE,
    seed: int = DEFAULT_SEED,
    source: int | None = None,
    mode: str = "bisect",
    step: float | None = None,
    workers: int | None = None,
) -> float:
    """Minimum forwarding probability whose estimated coverage is >= 1 - delta.

    Bisection returns the upper end of a bracket no wider than ``p_tolerance``.
    Raises InfeasibleError when the target is unreachable.
    """
    _check_delta(delta)
    source = default_source(g, seed) if source is None else source
    if not _component_feasible(g, source, delta):
        raise InfeasibleError("source component is smaller than (1 - delta) N")
    grid = probe_grid(p_tolerance, mode, step)
    curves = simulate_curves(g, source, coding.k, [coding.n], grid, trials, seed, workers)
    return search_min_p(curves.coverage(0), grid, 1.0 - delta, mode)


def sweep_redundancy(
    g: Graph,
    k: int,
    rho_list: Sequence[float],
    delta: float,
    trials: int = DEFAULT_TRIALS,
    p_tolerance: float = DEFAULT_P_TOLERANCE,
    seed: int = DEFAULT_SEED,
    source: int | None = None,
    mode: str = "bisect",
    step: float | None = None,
    workers: int | None = None,
) -> list[SweepPoint]:
    """One :class:`SweepPoint` per redundancy, in input order.

    All rows share the same trials: packet ``j`` sees the same uniforms
    whatever ``n`` is. Infeasible rows carry ``p_min = tau = None``.
    """
    _check_delta(delta)
    if any(r < 0 for r in rho_list):
        raise ValueError("redundancy values must be non-negative")
    if not rho_list:
        return []
    source = default_source(g, seed) if source is None else source
    ns = [coded_count(k, r) for r in rho_list]
    if not _component_feasible(g, source, delta):
        log.info("source component too small; every row infeasible")
        return [SweepPoint(r, n, None, None, delta) for r, n in zip(rho_list, ns)]
    if trials == 1:
        log.warning("a single trial gives no statistical confidence")
    grid = probe_grid(p_tolerance, mode, step)
    curves = simulate_curves(g, source, k, ns, grid, trials, seed, workers)
    index = {int(n): i for i, n in enumerate(curves.packet_counts)}
    points = []
    for rho, n in zip(rho_list, ns):
        i = index[n]
        try:
            p_min = search_min_p(curves.coverage(i), grid, 1.0 - delta, mode)
        except InfeasibleError:
            points.append(SweepPoint(rho, n, None, None, delta))
            continue
        g_idx = int(np.searchsorted(grid, p_min))
        load = Estimate.from_samples(curves.transmissions[:, i, g_idx])
        points.append(SweepPoint(rho, n, p_min, load.mean, delta, load.std_error))
    return points
