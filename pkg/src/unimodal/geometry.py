"""Intervals, hyperbolic length and numeric Koebe / expansion certificates."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CriticalHit, DegenerateConfiguration, DomainError, NotMonotone
from .maps import UnimodalMap

CRITICAL_TOL = 1e-14
MONOTONE_FLOOR = 1e-300
EXPANSION_TOL = 1e-10


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise DomainError(f"empty interval ({self.lo}, {self.hi})")
        if self.lo < -1.0 - 1e-12 or self.hi > 1.0 + 1e-12:
            raise DomainError(f"interval ({self.lo}, {self.hi}) leaves [-1, 1]")

    @classmethod
    def hull(cls, a: float, b: float) -> "Interval":
        return cls(min(a, b), max(a, b))

    @classmethod
    def symmetric(cls, u: float) -> "Interval":
        return cls(-u, u)

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def contains(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def overlaps(self, other: "Interval") -> bool:
        return self.lo < other.hi and other.lo < self.hi

    def to_list(self) -> list:
        return [self.lo, self.hi]


def hyp_length(inner: Interval, outer: Interval) -> float:
    """Hyperbolic length of ``inner`` within ``outer``.

    ``ln((|L|+|I|)(|R|+|I|) / (|L||R|))`` with L, R the components of
    outer minus inner, written with log1p so that tiny intervals keep their
    digits.
    """
    left = inner.lo - outer.lo
    right = outer.hi - inner.hi
    if not (left > 0.0 and right > 0.0):
        raise DegenerateConfiguration("inner interval touches the boundary of the outer one")
    n = inner.length
    return math.log1p(n / left) + math.log1p(n / right)


def koebe_bound(tau: float) -> float:
    """Classical Koebe distortion bound ``((1 + tau) / tau)**2``.

    ``tau`` is the space on each side of the image, relative to the image of
    the inner interval.
    """
    if not tau > 0.0:
        raise DomainError(f"tau must be positive, got {tau}")
    return ((1.0 + tau) / tau) ** 2


def _is_monotone_on(m: UnimodalMap, a: float, b: float, n: int) -> bool:
    return bool(m.kernels.monotone_ok(float(a), float(b), int(n)))


def image(m: UnimodalMap, iv: Interval, n: int) -> Interval:
    """Image of ``iv`` under a map f^n assumed monotone on it."""
    a = m.kernels.iterate(iv.lo, n)[-1]
    b = m.kernels.iterate(iv.hi, n)[-1]
    return Interval.hull(a, b)


def measured_distortion(m: UnimodalMap, n: int, iv: Interval, grid: int = 64) -> float:
    """Largest ratio |Df^n(x)| / |Df^n(y)| over a uniform grid on ``iv``."""
    if grid < 8:
        raise DomainError("grid must have at least 8 points")
    if n == 0:
        return 1.0
    xs = np.linspace(iv.lo, iv.hi, grid)
    logs, signs, closest = m.kernels.log_dfn_many(xs, int(n))
    if closest.min() < CRITICAL_TOL:
        raise CriticalHit("an orbit point lands on the critical point")
    if np.any(logs < math.log(MONOTONE_FLOOR)) or np.unique(signs).size != 1:
        raise NotMonotone(f"Df^{n} changes sign or vanishes on {iv}")
    return math.exp(logs.max() - logs.min())


@dataclass(frozen=True)
class ExpansionReport:
    hyp_before: float
    hyp_after: float
    ok: bool


def expansion_check(m: UnimodalMap, n: int, inner: Interval, outer: Interval) -> ExpansionReport:
    before = hyp_length(inner, outer)
    if not _is_monotone_on(m, outer.lo, outer.hi, n):
        raise NotMonotone(f"f^{n} is not monotone on {outer}")
    after = hyp_length(image(m, inner, n), image(m, outer, n))
    return ExpansionReport(before, after, after >= before - EXPANSION_TOL)


def monotone_extension(m: UnimodalMap, a: float, b: float, n: int) -> Interval:
    """Maximal interval containing [a, b] on which f^n is monotone."""
    if not _is_monotone_on(m, a, b, n):
        raise NotMonotone(f"f^{n} is not monotone on [{a}, {b}]")
    lo, hi = m.kernels.monotone_extend(float(a), float(b), int(n))
    return Interval(lo, hi)


def koebe_space(m: UnimodalMap, n: int, inner: Interval, outer: Interval) -> float:
    """Space around f^n(inner) inside f^n(outer), relative to |f^n(inner)|."""
    im_in = image(m, inner, n)
    im_out = image(m, outer, n)
    return min(im_in.lo - im_out.lo, im_out.hi - im_in.hi) / im_in.length


def random_monotone_configurations(m: UnimodalMap, count: int, seed: int, n_max: int = 10):
    """Random triples ``(n, I, T)`` with f^n monotone on T and I inside T.

    Widths stay above 1e-6 so that endpoint images keep enough digits for a
    1e-10 comparison of hyperbolic lengths.
    """
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        n = int(rng.integers(1, n_max + 1))
        centre = rng.uniform(-1.0, 1.0)
        half = 10.0 ** rng.uniform(-3.0, -0.5)
        lo, hi = max(-1.0, centre - half), min(1.0, centre + half)
        while hi - lo > 1e-6 and not _is_monotone_on(m, lo, hi, n):
            half *= 0.5
            lo, hi = max(-1.0, centre - half), min(1.0, centre + half)
        if hi - lo <= 1e-6:
            continue
        a, b = np.sort(rng.uniform(0.05, 0.95, size=2))
        if b - a < 1e-3:
            continue
        w = hi - lo
        out.append((n, Interval(lo + a * w, lo + b * w), Interval(lo, hi)))
    return out
