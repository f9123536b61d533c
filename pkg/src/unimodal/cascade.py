"""Nice points, first return maps and the cascade of central intervals.

Starting from a nice point u_1 (by default the positive fixed point), each
level replaces U_n = (-u_n, u_n) by the central branch of its first return
map, U_{n+1} = (-u_{n+1}, u_{n+1}).  The ratios sigma_n = u_{n+1} / u_n are
the scaling factors.
"""

from __future__ import annotations

import enum
import functools
import json
import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from typing import Optional

import numpy as np

from .errors import (BisectionFailure, DegenerateConfiguration, NoFixedPoint, NonRecurrent,
                     NotNicePoint)
from .geometry import Interval, hyp_length, monotone_extension
from .maps import UnimodalMap, fixed_point_positive

FOLD_TOL = 1e-10
BRANCH_TOL = 1e-9
TIE_TOL = 1e-12
NICE_TOL = 1e-9


@dataclass(frozen=True)
class Caps:
    depth: int = 12
    return_time: int = 10 ** 6
    nice_check: int = 1000
    grid: int = 4096
    u_floor: float = 1e-12


class Termination(str, enum.Enum):
    DEPTH_REACHED = "DepthReached"
    NON_RECURRENT = "NonRecurrent"
    UNDERFLOW_CAP = "UnderflowCap"
    RETURN_TIME_CAP = "ReturnTimeCap"
    STATIONARY = "Stationary"


@dataclass(frozen=True)
class NoReturn:
    cap: int

    def __bool__(self):
        return False


def first_return_time(m: UnimodalMap, x: float, u: float, cap: int):
    """Smallest j in [1, cap] with |f^j(x)| < u, else ``NoReturn(cap)``."""
    j = int(m.kernels.first_entry(float(x), float(u), int(cap)))
    return j if j > 0 else NoReturn(cap)


def _eventually_periodic(m: UnimodalMap, x: float, n: int, tol: float = 1e-12) -> bool:
    pts = m.kernels.iterate(x, n)
    tail = pts[-1]
    return any(abs(tail - pts[-1 - p]) <= tol for p in range(1, min(64, n) + 1))


def is_nice(m: UnimodalMap, u: float, steps: int, anchors=()) -> bool:
    """Whether the orbit of ``u`` avoids (-u, u) for ``steps`` iterates.

    Landing (within a relative 1e-9) on +-a for a known nice point a >= u,
    or back on +-u, certifies the rest of the orbit; this keeps the check
    meaningful beyond the few dozen iterates a floating-point orbit can
    shadow.
    """
    marks = [a for a in anchors if a >= u] + [u]
    x = u
    for _ in range(steps):
        x = m.f(x)
        ax = abs(x)
        if ax < u * (1.0 - NICE_TOL):
            return False
        if any(abs(ax - a) <= NICE_TOL * a for a in marks):
            return True
    return True


@dataclass(frozen=True)
class PsiStep:
    u_next: float
    q: int
    central: bool
    ambiguous: bool
    stationary: bool
    residual: float
    """``||f^q(u_next)| - u_n|``."""


EXACT_STEPS = 2000
EXACT_STEPS_FRACTIONAL = 200


@functools.lru_cache(maxsize=32)
def _exact_critical_prefix(coeffs: tuple, powers: tuple, n: int) -> np.ndarray:
    """f^i(0), i = 0..n, computed in decimal and rounded once per point.

    Rounding errors grow at most by the factor sup|Df| per step, so carrying
    n * log10(sup|Df|) extra digits keeps every point exact to within half an
    ulp.  Orbit offsets measured against these points then carry no error
    from the base orbit itself.
    """
    lip = sum(abs(c) * e for c, e in zip(coeffs, powers) if e > 0.0)
    digits = 30 + math.ceil(n * math.log10(max(lip, 2.0)))
    cs = [Decimal(c) for c in coeffs]
    es = [int(e) if float(e).is_integer() else Decimal(e) for e in powers]
    one = Decimal(1)
    out = np.empty(n + 1)
    out[0] = 0.0
    with localcontext() as ctx:
        ctx.prec = digits
        x = Decimal(0)
        for i in range(1, n + 1):
            ax = abs(x)
            x = sum(c * (ax ** e if e != 0 else one) for c, e in zip(cs, es))
            x = max(-one, min(one, x))
            out[i] = float(x)
    return out


def critical_orbit(m: UnimodalMap, n: int) -> np.ndarray:
    """``f^i(0)`` for i = 0..n.

    For power-form maps the first few thousand points are the true orbit
    rounded to double; later points (and all points of callable maps)
    continue in floating point.
    """
    n = int(n)
    if not m.is_power_form:
        return m.kernels.iterate(0.0, n)
    integral = all(float(e).is_integer() for e in m.powers)
    k = min(n, EXACT_STEPS if integral else EXACT_STEPS_FRACTIONAL)
    head = _exact_critical_prefix(tuple(m.coeffs), tuple(m.powers), k)
    if k == n:
        return head.copy()
    tail = m.kernels.iterate(float(head[-1]), n - k)
    return np.concatenate([head, tail[1:]])


def _first_visit(crit: np.ndarray, u: float) -> int:
    hits = np.flatnonzero(np.abs(crit[1:]) < u)
    return int(hits[0]) + 1 if hits.size else 0


class BelowFloor(BisectionFailure):
    """The central branch is narrower than the starting bracket."""


def psi_step(m: UnimodalMap, u: float, caps: Caps = Caps(), crit=None) -> PsiStep:
    """Central branch (-u_next, u_next) of the first return map to (-u, u).

    The predicate "[0, y] leaves the central branch" is monotone in y: while
    the iterates of [0, y] miss U the map is monotone on them and their hull
    is exact, and the first failure is either the q-th image reaching the
    boundary or an earlier image touching U.  Doubling from caps.u_floor brackets the
    boundary; bisection runs to full binary64 resolution.  Orbits of y are
    carried as offsets from the critical orbit so that f(y) - f(0) keeps its
    digits for tiny y.
    """
    if crit is None:
        crit = critical_orbit(m, caps.return_time)
    q = _first_visit(crit, u)
    if q == 0:
        err = NonRecurrent(f"critical orbit does not return to (-{u}, {u}) within {crit.size - 1}")
        err.periodic = _eventually_periodic(m, 0.0, min(crit.size - 1, 10 ** 5))
        raise err
    k = m.kernels

    def escaped(y):
        return k.rel_central_escape(crit, y, u, q)

    lo = caps.u_floor
    if escaped(lo):
        raise BelowFloor(f"central branch of (-{u}, {u}) is narrower than {lo}")
    hi = None
    while hi is None:
        y = min(2.0 * lo, u)
        if escaped(y):
            hi = y
        elif y >= u:
            # the whole of U returns centrally: a restrictive interval
            fq = k.rel_values(crit, u, q)[-1]
            return PsiStep(u, q, True, False, True, abs(abs(fq) - u))
        else:
            lo = y
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if escaped(mid):
            hi = mid
        else:
            lo = mid
    v = lo
    vals = k.rel_values(crit, v, q)
    entered = bool(np.any(np.abs(vals[1:q]) < u))
    residual = abs(abs(vals[q]) - u)
    if entered or residual > FOLD_TOL:
        raise BisectionFailure(
            f"central boundary {v} fails validation (intermediate entry={entered}, residual={residual:.3g})")
    stationary = v >= u * (1.0 - NICE_TOL)
    ret = abs(crit[q])
    ambiguous = abs(ret - v) <= TIE_TOL
    return PsiStep(v, q, bool(ret < v or ambiguous), ambiguous, bool(stationary), residual)


@dataclass
class CentralCascade:
    t: Optional[float]
    alpha: float
    u: list
    q: list = field(default_factory=list)
    central_return: list = field(default_factory=list)
    termination: Termination = Termination.DEPTH_REACHED
    ambiguous_levels: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    note: str = ""
    u_bound: Optional[float] = None
    """Known upper bound on the next (unrecorded) u, when the run established one."""

    @property
    def sigma(self) -> list:
        return [b / a for a, b in zip(self.u, self.u[1:])]

    @property
    def depth(self) -> int:
        return len(self.u)

    def interval(self, n: int) -> Interval:
        """U_n for 1-based level ``n``."""
        return Interval.symmetric(self.u[n - 1])

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "alpha": self.alpha,
            "u": list(self.u),
            "q": list(self.q),
            "sigma": self.sigma,
            "central_return": list(self.central_return),
            "termination": self.termination.value,
            "ambiguous_levels": list(self.ambiguous_levels),
            "note": self.note,
            "u_bound": self.u_bound,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CentralCascade":
        return cls(t=d.get("t"), alpha=d["alpha"], u=list(d["u"]), q=list(d["q"]),
                   central_return=list(d["central_return"]),
                   termination=Termination(d["termination"]),
                   ambiguous_levels=list(d.get("ambiguous_levels", [])),
                   note=d.get("note", ""), u_bound=d.get("u_bound"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def build_cascade(m: UnimodalMap, u1: Optional[float] = None, depth: Optional[int] = None,
                  caps: Caps = Caps()) -> CentralCascade:
    depth = caps.depth if depth is None else depth
    p = fixed_point_positive(m) if u1 is None else None
    if u1 is None:
        u1 = p
    anchors = [p] if p is not None else []
    if not is_nice(m, u1, caps.nice_check, anchors):
        raise NotNicePoint(f"{u1} is not a nice point")
    cas = CentralCascade(t=m.t, alpha=m.alpha, u=[u1])
    crit = critical_orbit(m, caps.return_time)
    while len(cas.u) < depth:
        try:
            step = psi_step(m, cas.u[-1], caps, crit)
        except NonRecurrent as err:
            cas.termination = (Termination.NON_RECURRENT if err.periodic
                               else Termination.RETURN_TIME_CAP)
            # no visit to the last level within the orbit budget
            cas.u_bound = 0.0
            return cas
        except BelowFloor:
            cas.termination = Termination.UNDERFLOW_CAP
            cas.u_bound = caps.u_floor
            return cas
        except BisectionFailure as err:
            cas.termination = Termination.UNDERFLOW_CAP
            cas.note = f"binary64 resolution exhausted: {err}"
            return cas
        if step.stationary:
            cas.termination = Termination.STATIONARY
            cas.u_bound = cas.u[-1]
            cas.note = f"U_{len(cas.u)} is restrictive with period {step.q}"
            return cas
        if step.u_next < caps.u_floor:
            cas.termination = Termination.UNDERFLOW_CAP
            cas.u_bound = step.u_next
            return cas
        if step.ambiguous:
            cas.ambiguous_levels.append(len(cas.u))
        cas.q.append(step.q)
        cas.central_return.append(step.central)
        cas.residuals.append(step.residual)
        cas.u.append(step.u_next)
    cas.termination = Termination.DEPTH_REACHED
    return cas


def certify_nice(m: UnimodalMap, cas: CentralCascade, caps: Caps = Caps()) -> list:
    """Nice-point certificate for every level of ``cas``.

    u_1 is checked by iteration.  For n >= 1 the orbit of u_{n+1} must avoid
    U_n for q_n - 1 steps and then land on +-u_n, which is nice by induction.
    """
    p = None
    try:
        p = fixed_point_positive(m)
    except NoFixedPoint:
        pass
    ok = [is_nice(m, cas.u[0], caps.nice_check, [p] if p else [])]
    crit = critical_orbit(m, max(cas.q, default=1))
    for n, q in enumerate(cas.q):
        un = cas.u[n]
        vals = m.kernels.rel_values(crit, cas.u[n + 1], q)
        ok.append(bool(np.all(np.abs(vals[1:q]) >= un)) and abs(abs(vals[q]) - un) <= FOLD_TOL
                  and ok[-1])
    return ok


class BranchKind(str, enum.Enum):
    MONOTONE = "Monotone"
    CENTRAL = "Central"


@dataclass(frozen=True)
class ReturnBranch:
    interval: Interval
    return_time: int
    kind: BranchKind


@dataclass
class BranchSet:
    u: float
    branches: list
    cap_exceeded: bool
    rejected: int = 0
    """Grid runs whose endpoint images could not be resolved to within BRANCH_TOL."""
    central_unresolved: bool = False

    @property
    def central(self) -> Optional[ReturnBranch]:
        for b in self.branches:
            if b.kind is BranchKind.CENTRAL:
                return b
        return None


def return_branches(m: UnimodalMap, u: float, caps: Caps = Caps()) -> BranchSet:
    """Branches of the first return map to (-u, u) with time <= caps.return_time.

    A uniform grid on (0, u) is scanned for return times; consecutive grid
    points share a branch when the hull test accepts the segment between
    them.  Each run is widened by bisection to its maximal branch and then
    mirrored (the map is symmetric).  Branches too small for the grid are missed,
    so the enumeration is partial by design.
    """
    central = None
    v = 0.0
    crit = critical_orbit(m, caps.return_time)
    k = m.kernels
    central_unresolved = False
    try:
        step = psi_step(m, u, caps, crit)
        v = step.u_next
        central = ReturnBranch(Interval.symmetric(v), step.q, BranchKind.CENTRAL)
    except NonRecurrent:
        pass
    except BisectionFailure:
        central_unresolved = True
    xs = (np.arange(caps.grid) + 0.5) * (u / caps.grid)
    xs = xs[xs > v]
    times = k.rel_first_entries(crit, xs, u, caps.return_time)
    cap_exceeded = bool(np.any(times == 0))
    lo, hi, taus, valid = k.rel_scan_branches(crit, xs, times, v, u, BRANCH_TOL)
    found = [(float(a), float(b), int(t)) for a, b, t, ok in zip(lo, hi, taus, valid) if ok]
    rejected = int((~valid).sum())
    branches = []
    for a, b, tau in found:
        branches.append(ReturnBranch(Interval(a, b), tau, BranchKind.MONOTONE))
        branches.append(ReturnBranch(Interval(-b, -a), tau, BranchKind.MONOTONE))
    if central is not None:
        branches.append(central)
    branches.sort(key=lambda br: br.interval.lo)
    return BranchSet(u=u, branches=branches, cap_exceeded=cap_exceeded, rejected=rejected,
                     central_unresolved=central_unresolved)


def branches_disjoint(bs: BranchSet) -> bool:
    ivs = [b.interval for b in bs.branches]
    return all(x.hi <= y.lo for x, y in zip(ivs, ivs[1:]))


@dataclass(frozen=True)
class Extension:
    """Monotone extension of f^(tau-1) around f(I) for a return branch I."""

    domain: Interval
    image: Interval
    inner_image: Interval
    covers_previous: Optional[bool]
    space: float


def branch_extension(m: UnimodalMap, br: ReturnBranch, u_prev: Optional[float] = None) -> Extension:
    n = br.return_time - 1
    fa, fb = m.f(br.interval.lo), m.f(br.interval.hi)
    if br.kind is BranchKind.CENTRAL:
        fa, fb = m.f(0.0), m.f(br.interval.hi)
    lo, hi = min(fa, fb), max(fa, fb)
    if not lo < hi:
        raise DegenerateConfiguration(f"f({br.interval}) is narrower than one ulp")
    dom = monotone_extension(m, lo, hi, n)
    ends = [m.kernels.iterate(x, n)[-1] for x in (dom.lo, dom.hi, lo, hi)]
    img = Interval.hull(ends[0], ends[1])
    inner = Interval.hull(ends[2], ends[3])
    covers = None
    if u_prev is not None:
        slack = 1e-9 * u_prev
        covers = img.lo <= -u_prev + slack and img.hi >= u_prev - slack
    space = min(inner.lo - img.lo, img.hi - inner.hi) / inner.length
    return Extension(dom, img, inner, covers, space)


def max_branch_hyp(bs: BranchSet) -> float:
    """Largest hyperbolic length of a branch inside (-u, u)."""
    outer = Interval.symmetric(bs.u)
    vals = [hyp_length(b.interval, outer) for b in bs.branches
            if b.interval.lo > outer.lo and b.interval.hi < outer.hi]
    return max(vals) if vals else math.nan
