"""Decomposition of the critical orbit into returns to nested central intervals.

For a time k the orbit f(0), ..., f^k(0) is cut at the last visits
k_m <= ... <= k_0 to the central intervals U_{n0+m} inside ... inside U_{n0},
leaving a tail of length r = k - k_0 that avoids U_{n0}.  The derivative
Df^k(f(0)) factors along these cuts by the chain rule, and the pair
(r, s) with s the per-level return counts determines k uniquely.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cascade import CentralCascade, critical_orbit
from .errors import CascadeTooShallow, CriticalHit, DomainError
from .maps import UnimodalMap

CRITICAL_TOL = 1e-14


@dataclass(frozen=True)
class TelemannDecomposition:
    k: int
    n0: int
    m: Optional[int]
    k_list: tuple
    """(k_0, k_1, ..., k_m); nonincreasing."""
    r: int
    s_list: tuple
    """(s_0, ..., s_m); s_i counts visits to U_{n0+i} in (k_{i+1}, k_i], 0 when k_i = k_{i+1}."""
    degenerate: bool

    @property
    def signature(self) -> tuple:
        return (self.r,) + tuple(self.s_list)

    def to_dict(self, residual: Optional[float] = None) -> dict:
        d = {"k": self.k, "n0": self.n0, "m": self.m, "k_list": list(self.k_list),
             "r": self.r, "s_list": list(self.s_list), "degenerate": self.degenerate}
        if residual is not None:
            d["residual"] = residual
        return d


class VisitTable:
    """Depth of every point of the critical orbit in the cascade, up to kmax.

    ``level[i]`` is the largest j with |f^i(0)| < u_j (0 if none), and
    ``times[j]`` lists the i in [1, kmax] with level[i] >= j.
    """

    def __init__(self, m: UnimodalMap, cascade: CentralCascade, kmax: int):
        if kmax < 1:
            raise DomainError("kmax must be at least 1")
        self.kmax = int(kmax)
        self.points = critical_orbit(m, self.kmax + 1)
        depth = len(cascade.u)
        radii = np.asarray(cascade.u, dtype=float)
        ax = np.abs(self.points[: self.kmax + 1])
        # radii are decreasing, so the count of radii above |x| is the level
        level = np.searchsorted(-radii, -ax, side="left")
        level[0] = 0
        self.level = level.astype(np.int64)
        self.depth = depth
        bound = cascade.u_bound
        deepest = np.nonzero(self.level == depth)[0] if depth else np.array([], dtype=int)
        self.unresolved = [int(i) for i in deepest
                           if bound is None or ax[i] < bound]
        self.times = {j: np.nonzero(self.level >= j)[0].tolist() for j in range(1, depth + 1)}

    def first_unresolved(self, k: int) -> Optional[int]:
        pos = bisect.bisect_right(self.unresolved, k)
        return self.unresolved[0] if pos else None


def _last_visit(times: list, hi: int) -> int:
    """Largest entry <= hi, or 0."""
    pos = bisect.bisect_right(times, hi)
    return times[pos - 1] if pos else 0


def _count(times: list, lo: int, hi: int) -> int:
    """Entries in (lo, hi]."""
    return bisect.bisect_right(times, hi) - bisect.bisect_right(times, lo)


def decompose_with(table: VisitTable, k: int, n0: int) -> TelemannDecomposition:
    if not 1 <= k <= table.kmax:
        raise DomainError(f"k must lie in [1, {table.kmax}], got {k}")
    if n0 < 1:
        raise DomainError("n0 must be at least 1")
    hit = table.first_unresolved(k)
    if hit is not None:
        raise CascadeTooShallow(
            f"f^{hit}(0) lies in the deepest recorded interval U_{table.depth} "
            f"and its depth beyond it is unknown")
    deepest = int(table.level[1: k + 1].max())
    if deepest < n0:
        return TelemannDecomposition(k=k, n0=n0, m=None, k_list=(), r=k, s_list=(),
                                     degenerate=True)
    m = deepest - n0
    ks = [0] * (m + 1)
    ss = [0] * (m + 1)
    top = table.times[n0 + m]
    ks[m] = _last_visit(top, k)
    ss[m] = _count(top, 0, ks[m])
    for i in range(m, 0, -1):
        times = table.times[n0 + i - 1]
        last = _last_visit(times, k)
        ks[i - 1] = last if last > ks[i] else ks[i]
        ss[i - 1] = _count(times, ks[i], ks[i - 1])
    return TelemannDecomposition(k=k, n0=n0, m=m, k_list=tuple(ks), r=k - ks[0],
                                 s_list=tuple(ss), degenerate=False)


def decompose(m: UnimodalMap, cascade: CentralCascade, k: int, n0: int = 2) -> TelemannDecomposition:
    return decompose_with(VisitTable(m, cascade, k), k, n0)


def chain_rule_residual(m: UnimodalMap, dec: TelemannDecomposition) -> float:
    """|ln|Df^k(f(0))| - sum of the logs of the factors of the decomposition|.

    Both sides are built from the per-step terms ln|Df(f^j(0))|, so the
    residual checks that the factors tile the times 1..k exactly once.
    """
    k = dec.k
    pts = critical_orbit(m, k + 1)
    if np.abs(pts[1: k + 1]).min() < CRITICAL_TOL:
        raise CriticalHit("the critical orbit returns to within 1e-14 of 0")
    steps = np.log(np.abs(m.df_array(pts[1: k + 1])))
    total = math.fsum(steps)

    def factor(start, length):
        """ln|Df^length(f^(start+1)(0))|."""
        return math.fsum(steps[start: start + length])

    if dec.degenerate:
        parts = [total]
    else:
        ks = list(dec.k_list)
        parts = [factor(ks[0], dec.r), factor(0, ks[-1])]
        for i in range(len(ks) - 1):
            parts.append(factor(ks[i + 1], ks[i] - ks[i + 1]))
    return abs(total - math.fsum(parts))


@dataclass
class InjectivityReport:
    pairs_checked: int
    collisions: list = field(default_factory=list)
    """Entries ``(k, k_prime, signature)``."""

    def to_dict(self) -> dict:
        return {"pairs_checked": self.pairs_checked,
                "collisions": [[a, b, list(s)] for a, b, s in self.collisions]}


def signature_injectivity(m: UnimodalMap, cascade: CentralCascade, kmax: int,
                          n0: int = 2) -> InjectivityReport:
    """Decompose every k <= kmax and report any two sharing a signature."""
    if kmax < 1:
        raise DomainError("kmax must be at least 1")
    table = VisitTable(m, cascade, kmax)
    seen = {}
    collisions = []
    for k in range(1, kmax + 1):
        sig = decompose_with(table, k, n0).signature
        if sig in seen:
            collisions.append((seen[sig], k, sig))
        else:
            seen[sig] = k
    return InjectivityReport(pairs_checked=kmax * (kmax - 1) // 2, collisions=collisions)
