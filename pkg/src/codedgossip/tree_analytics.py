"""Exact and approximate expressions for probabilistic forwarding on complete
``d``-ary trees rooted at the source, with leaves barred from forwarding.

A node at level ``l >= 1`` receives a given packet iff all ``l - 1`` relays on
its root path forward it, so its packet count is ``Binomial(n, p**(l-1))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

# |d*p - 1| below this uses the limit n*H of the geometric series
_SERIES_EPS = 1e-9


@dataclass(frozen=True)
class TreeAnalysisInput:
    H: int
    k: int
    n: int
    delta: float
    degree: int = 2

    def __post_init__(self) -> None:
        if self.H < 1:
            raise ValueError("tree height must be >= 1")
        if not 1 <= self.k <= self.n:
            raise ValueError("need 1 <= k <= n")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.degree < 2:
            raise ValueError("degree must be >= 2")

    @property
    def rho(self) -> float:
        return (self.n - self.k) / self.k

    @property
    def node_count(self) -> int:
        return (self.degree ** (self.H + 1) - 1) // (self.degree - 1)


@lru_cache(maxsize=64)
def _log_factorials(n: int) -> np.ndarray:
    out = np.zeros(n + 1)
    if n > 0:
        out[1:] = np.cumsum(np.log(np.arange(1, n + 1, dtype=float)))
    return out


def binomial_tail(n: int, p: float, k: int) -> float:
    """``P(Binomial(n, p) >= k)``, summed in log space."""
    if k <= 0:
        return 1.0
    if k > n:
        return 0.0
    if p <= 0.0:
        return 0.0
    if p >= 1.0:
        return 1.0
    lf = _log_factorials(n)
    i = np.arange(k, n + 1)
    logs = lf[n] - lf[i] - lf[n - i] + i * math.log(p) + (n - i) * math.log1p(-p)
    top = logs.max()
    return float(min(1.0, math.exp(top) * np.exp(logs - top).sum()))


def tree_expected_receivers(inp: TreeAnalysisInput, p: float) -> float:
    """Expected number of nodes (source included) holding at least k packets."""
    d = inp.degree
    return 1.0 + sum(d**level * binomial_tail(inp.n, p ** (level - 1), inp.k) for level in range(1, inp.H + 1))


def tree_coverage(inp: TreeAnalysisInput, p: float) -> float:
    return tree_expected_receivers(inp, p) / inp.node_count


def tree_expected_transmissions(inp: TreeAnalysisInput, p: float) -> float:
    x = inp.degree * p
    if abs(x - 1.0) < _SERIES_EPS:
        return float(inp.n * inp.H)
    return inp.n * (x**inp.H - 1.0) / (x - 1.0)


def tree_min_p_exact(inp: TreeAnalysisInput, tol: float = 1e-9) -> float:
    """Least ``p`` with expected decoding fraction >= 1 - delta.

    The coverage is continuous and non-decreasing in ``p`` and reaches 1 at
    ``p = 1``, so plain bisection finds the crossing.
    """
    target = 1.0 - inp.delta
    if tree_coverage(inp, 0.0) >= target:
        return 0.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if tree_coverage(inp, mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi


def tree_min_p_closedform(H: int, rho: float) -> float:
    """Large-k approximation ``(1 / (1 + rho)) ** (1 / (H - 1))``."""
    if H < 2:
        raise ValueError("closed form needs H >= 2")
    if rho < 0:
        raise ValueError("rho must be non-negative")
    return (1.0 / (1.0 + rho)) ** (1.0 / (H - 1))


def tree_tau_closedform(H: int, k: int, rho: float, degree: int = 2) -> float:
    """Expected transmissions evaluated at :func:`tree_min_p_closedform`.

    Raises ValueError when the denominator ``d*a - 1`` is not positive, which
    puts the approximation outside its range of validity.
    """
    a = tree_min_p_closedform(H, rho)
    denom = degree * a - 1.0
    if denom <= 0.0:
        raise ValueError(f"closed form out of range for H={H}, rho={rho}")
    return k * (degree**H * a - (1.0 + rho)) / denom


def relative_entropy(r: float, s: float) -> float:
    """Binary relative entropy ``D(r || s)`` in nats."""
    if not 0.0 <= r <= 1.0 or not 0.0 <= s <= 1.0:
        raise ValueError("arguments must be probabilities")
    total = 0.0
    for a, b in ((r, s), (1.0 - r, 1.0 - s)):
        if a == 0.0:
            continue
        if b == 0.0:
            return math.inf
        total += a * math.log(a / b)
    return max(total, 0.0)


def threshold_level(p: float, rho: float) -> float:
    """``floor(log(1/(1+rho)) / log p)``: the last level whose mean packet
    count ``n * p**l`` still exceeds ``k``. Infinite at ``p = 1``."""
    if not 0.0 < p <= 1.0:
        raise ValueError("p must lie in (0, 1]")
    if p == 1.0:
        return math.inf
    return float(math.floor(math.log(1.0 / (1.0 + rho)) / math.log(p)))


class TailBounds(NamedTuple):
    lower: float
    upper: float


def chernoff_tail_bounds(inp: TreeAnalysisInput, p: float, level: int) -> TailBounds:
    """Chernoff bounds on ``P(Z >= k)`` for ``Z ~ Binomial(n, p**level)``.

    Levels at or below :func:`threshold_level` get the lower bound (the upper
    side is the trivial 1); deeper levels get the upper bound (lower side 0).
    A level whose mean is exactly ``k`` has no applicable bound and raises
    ValueError.
    """
    ratio = inp.k / inp.n
    s = p**level
    if math.isclose(s, ratio, rel_tol=1e-12, abs_tol=0.0):
        raise ValueError(f"boundary level {level}: mean packet count equals k, tail is about 1/2")
    exponent = math.exp(-inp.n * relative_entropy(ratio, s))
    # s > ratio is the same case split as level <= threshold_level(p, rho),
    # decided on the probabilities directly so float rounding cannot misfile it
    if s > ratio:
        return TailBounds(max(0.0, 1.0 - exponent), 1.0)
    return TailBounds(0.0, min(1.0, exponent))
