"""Summability criteria, derivative-growth audits, statistics and the classifier."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cascade import Caps, CentralCascade, Termination, build_cascade
from .errors import (CascadeTooShallow, CriticalHit, DomainError, InsufficientReturns,
                     InsufficientSamples, UnimodalError)
from .maps import UnimodalMap, fixed_point_positive

CONVERGENT_TAIL = 0.01
RECURRENCE_TOL = 1e-9
POLISH_TOL = 1e-12


class Verdict(str, enum.Enum):
    CONVERGENT = "ConvergentLooking"
    DIVERGENT = "DivergentLooking"
    INCONCLUSIVE = "Inconclusive"


def _envelope(xs: np.ndarray, ys: np.ndarray) -> tuple:
    """Least-squares slope through (xs, ys), intercept lowered so no point lies below."""
    if xs.size >= 2:
        slope = float(np.polyfit(xs, ys, 1)[0])
    else:
        slope = 0.0
    return float(np.min(ys - slope * xs)), slope


# summability of derivatives along the critical orbit

@dataclass
class SummabilityReport:
    alpha: float
    kmax: int
    partial_sums: np.ndarray
    tail_ratio: float
    verdict: Verdict

    @property
    def total(self) -> float:
        return float(self.partial_sums[-1])

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "kmax": self.kmax, "partial_sum": self.total,
                "tail_ratio": self.tail_ratio, "verdict": self.verdict.value,
                "partial_sums": self.partial_sums.tolist()}


def summability(m: UnimodalMap, kmax: int = 10_000) -> SummabilityReport:
    """Partial sums of |Df^k(f(0))|^(-1/alpha) for k = 1..kmax."""
    if kmax < 10:
        raise DomainError("kmax must be at least 10")
    _, pref, zero = m.kernels.log_deriv_prefix(m.f(0.0), int(kmax))
    if zero >= 0:
        raise CriticalHit(f"the critical orbit returns to 0 at step {zero + 1}")
    terms = np.exp(-pref[1:] / m.alpha)
    sums = np.cumsum(terms)
    half = sums[kmax // 2 - 1]
    tail = max(float(sums[-1] / half - 1.0), 0.0)
    if tail < CONVERGENT_TAIL:
        verdict = Verdict.CONVERGENT
    elif np.all(np.diff(terms[kmax // 2:]) >= 0.0):
        verdict = Verdict.DIVERGENT
    else:
        verdict = Verdict.INCONCLUSIVE
    return SummabilityReport(float(m.alpha), int(kmax), sums, tail, verdict)


# summability of scaling factors

@dataclass
class ScalingReport:
    sum: float
    per_level_terms: list
    tail_estimate: Optional[float]
    rho_sum: float
    """sum over levels n >= 2 of max(sigma_{n-1}, sigma_n)^(1/alpha) = rho_n^(-1/alpha)."""
    verdict: Verdict
    note: str = "tail is a geometric extrapolation heuristic"

    def to_dict(self) -> dict:
        return {"sum": self.sum, "per_level_terms": self.per_level_terms,
                "tail_estimate": self.tail_estimate, "rho_sum": self.rho_sum,
                "verdict": self.verdict.value, "note": self.note}


def scaling_summability(cascade: CentralCascade, alpha: float = 2.0) -> ScalingReport:
    sig = np.asarray(cascade.sigma, dtype=float)
    terms = sig ** (1.0 / alpha)
    total = float(terms.sum())
    rho = float(sum(max(sig[i - 1], sig[i]) ** (1.0 / alpha) for i in range(1, sig.size)))
    tail = None
    if cascade.termination == Termination.NON_RECURRENT:
        # the sequence of levels is finite
        return ScalingReport(total, terms.tolist(), 0.0, rho, Verdict.CONVERGENT)
    if cascade.termination == Termination.UNDERFLOW_CAP and cascade.u_bound is not None:
        # one more factor, known only through its upper bound
        bound = (cascade.u_bound / cascade.u[-1]) ** (1.0 / alpha)
        terms_ext = np.append(terms, bound)
    else:
        terms_ext = terms
    if terms_ext.size < 3:
        return ScalingReport(total, terms.tolist(), None, rho, Verdict.INCONCLUSIVE)
    last = terms_ext[-3:]
    ratios = last[1:] / last[:-1]
    if np.all(ratios >= 1.0):
        verdict = Verdict.DIVERGENT
    elif np.all(ratios < 0.9):
        r = float(ratios[-1])
        tail = float(last[-1] * r / (1.0 - r))
        verdict = Verdict.CONVERGENT
    else:
        verdict = Verdict.INCONCLUSIVE
    return ScalingReport(total, terms.tolist(), tail, rho, verdict)


# derivative growth along returns to a central interval

@dataclass
class Prop31Audit:
    n: int
    samples: int
    seed: int
    sample_index: np.ndarray
    s: np.ndarray
    T: np.ndarray
    log_deriv: np.ndarray
    rho_n: float
    ln_C: float
    ln_inv_theta: float
    min_by_s: dict
    violations: int

    @property
    def growth_confirmed(self) -> bool:
        return self.ln_inv_theta > 0.0

    def min_nondecreasing(self, start: int = 2) -> bool:
        keys = sorted(k for k in self.min_by_s if k >= start)
        vals = [self.min_by_s[k] for k in keys]
        return all(b >= a for a, b in zip(vals, vals[1:]))

    def to_dict(self) -> dict:
        return {"n": self.n, "samples": self.samples, "seed": self.seed,
                "rho_n": self.rho_n, "ln_C": self.ln_C, "ln_inv_theta": self.ln_inv_theta,
                "growth_confirmed": self.growth_confirmed,
                "min_by_s": {str(k): v for k, v in sorted(self.min_by_s.items())},
                "records": len(self.s), "violations": self.violations}


def prop31_audit(m: UnimodalMap, cascade: CentralCascade, n: int = 3, samples: int = 1000,
                 s_max: int = 50, seed: int = 0, cap: int = 100_000,
                 min_bucket: int = 5) -> Prop31Audit:
    """Sample x in U_{n+1} and follow its first returns to U_n.

    Each return R_n^s(x) = f^T(x) outside U_{n+1} gives a record
    (s, T, ln|Df^T(f(x))|).  The lower envelope
    ln|Df^T| >= ln C + ln rho_n + (s - 1) ln(1/theta) is fitted through the
    per-s minima (buckets with at least ``min_bucket`` samples).
    """
    if samples < 100:
        raise DomainError("samples must be at least 100")
    if n < 2 or len(cascade.u) < n + 1:
        raise CascadeTooShallow(f"levels {n - 1}, {n}, {n + 1} are needed, "
                                f"cascade has {len(cascade.u)}")
    u_prev, u_n, u_next = cascade.u[n - 2], cascade.u[n - 1], cascade.u[n]
    rho = min(u_prev / u_n, u_n / u_next)
    rng = np.random.default_rng(seed)
    xs = rng.uniform(-u_next, u_next, size=samples)
    idx, ss, ts, ls = [], [], [], []
    for i, x in enumerate(xs):
        times, logs, count = m.kernels.return_walk(float(x), u_n, u_next, s_max, cap)
        for j in range(count):
            idx.append(i)
            ss.append(j + 1)
            ts.append(int(times[j]))
            ls.append(float(logs[j]))
    s = np.asarray(ss, dtype=np.int64)
    logs = np.asarray(ls)
    if len(set(np.asarray(idx)[s >= 2].tolist())) < 10:
        raise InsufficientReturns("fewer than 10 samples return twice outside U_{n+1}")
    min_by_s = {}
    for k in np.unique(s):
        sel = logs[s == k]
        if sel.size >= min_bucket:
            min_by_s[int(k)] = float(sel.min())
    keys = np.array(sorted(min_by_s), dtype=float)
    mins = np.array([min_by_s[int(k)] for k in keys])
    intercept, slope = _envelope(keys - 1.0, mins)
    ln_c = intercept - math.log(rho)
    envelope = intercept + (s - 1.0) * slope
    bucketed = np.isin(s, keys.astype(np.int64))
    violations = int(np.sum(logs[bucketed] < envelope[bucketed] - 1e-12))
    return Prop31Audit(n=n, samples=samples, seed=seed, sample_index=np.asarray(idx),
                       s=s, T=np.asarray(ts, dtype=np.int64), log_deriv=logs, rho_n=rho,
                       ln_C=ln_c, ln_inv_theta=slope, min_by_s=min_by_s,
                       violations=violations)


# expansion away from a central interval

@dataclass
class ManeEstimate:
    C_hat: float
    lambda_hat: float
    bucket_sizes: list
    """Orbits passing the rejection test at each r, before replenishing."""
    bucket_minima: list
    seed: int

    def to_dict(self) -> dict:
        return {"C_hat": self.C_hat, "lambda_hat": self.lambda_hat,
                "bucket_sizes": self.bucket_sizes, "bucket_minima": self.bucket_minima,
                "seed": self.seed}


def mane_estimate(m: UnimodalMap, u: float, r_max: int = 20, samples: int = 10_000,
                  seed: int = 0) -> ManeEstimate:
    """Lower envelope ln|Df^r(x)| >= ln C + r ln(lambda) over x with
    f^i(x) outside (-u, u) for 0 <= i < r.

    The surviving set shrinks geometrically in r, so the population is kept
    at ``samples`` by cloning survivors with a random jitter of random scale
    and accepting a clone only if its own orbit passes the same rejection
    test.
    """
    if not 0.0 < u < 1.0:
        raise DomainError("u must lie in (0, 1)")
    if r_max < 10:
        raise DomainError("r_max must be at least 10")
    rng = np.random.default_rng(seed)
    k = m.kernels
    pop = rng.uniform(-1.0, 1.0, size=samples)
    sizes, minima = [], []
    for r in range(1, r_max + 1):
        logs, _, closest = k.log_dfn_many(pop, r)
        keep = closest >= u
        n_alive = int(keep.sum())
        if n_alive < 10:
            raise InsufficientSamples(f"only {n_alive} orbits avoid the interval for {r} steps")
        sizes.append(n_alive)
        pop, logs = pop[keep], logs[keep]
        for _ in range(50):
            need = samples - pop.size
            if need <= 0:
                break
            parents = rng.choice(pop, size=need)
            step = 10.0 ** rng.uniform(-14.0, -1.0, size=need)
            cand = np.clip(parents + step * rng.uniform(-1.0, 1.0, size=need), -1.0, 1.0)
            cl, _, cc = k.log_dfn_many(cand, r)
            ok = cc >= u
            pop = np.concatenate([pop, cand[ok]])
            logs = np.concatenate([logs, cl[ok]])
        minima.append(float(logs.min()))
    rs = np.arange(1, r_max + 1, dtype=float)
    intercept, slope = _envelope(rs, np.array(minima))
    return ManeEstimate(math.exp(intercept), math.exp(slope), sizes, minima, seed)


# statistics of typical orbits

def lyapunov(m: UnimodalMap, x0: float = 0.3, iters: int = 1_000_000,
             burn_in: int = 1000) -> float:
    if iters < 10_000:
        raise DomainError("iters must be at least 10^4")
    acc, smallest = m.kernels.lyapunov_sum(float(x0), int(burn_in), int(iters))
    if smallest < 1e-300:
        raise CriticalHit("the orbit hits the critical point")
    return acc / iters


@dataclass
class DensityEstimate:
    bins: int
    edges: np.ndarray
    masses: np.ndarray
    iters: int
    burn_in: int
    x0: float

    @property
    def support(self) -> list:
        """Indices of nonempty bins."""
        return np.nonzero(self.masses)[0].tolist()

    def to_dict(self) -> dict:
        return {"bins": self.bins, "edges": self.edges.tolist(), "masses": self.masses.tolist(),
                "iters": self.iters, "burn_in": self.burn_in, "x0": self.x0,
                "support": self.support}


def invariant_density(m: UnimodalMap, iters: int = 10_000_000, bins: int = 200,
                      burn_in: int = 1000, x0: float = 0.3) -> DensityEstimate:
    if bins < 10:
        raise DomainError("bins must be at least 10")
    if iters < 100_000:
        raise DomainError("iters must be at least 10^5")
    counts = m.kernels.histogram(float(x0), int(burn_in), int(iters), int(bins))
    return DensityEstimate(int(bins), np.linspace(-1.0, 1.0, bins + 1), counts / float(iters),
                           int(iters), int(burn_in), float(x0))


# periodic attractors and renormalization

@dataclass(frozen=True)
class PeriodicAttractor:
    period: int
    multiplier: float
    point: float


def detect_periodic_attractor(m: UnimodalMap, budget: int = 100_000,
                              p_max: int = 64) -> Optional[PeriodicAttractor]:
    if budget < 1000:
        raise DomainError("budget must be at least 10^3")
    orb = m.kernels.iterate(0.0, int(budget))
    end = orb[-1]
    for p in range(1, p_max + 1):
        if abs(orb[-1 - p] - end) >= RECURRENCE_TOL:
            continue
        x = end
        for _ in range(50):
            ld, sgn, y, _ = m.kernels.log_dfn(x, p)
            g = y - x
            if abs(g) < POLISH_TOL:
                break
            dg = sgn * math.exp(ld) - 1.0
            if dg == 0.0:
                break
            x = x - g / dg
        ld, sgn, y, _ = m.kernels.log_dfn(x, p)
        if abs(y - x) >= POLISH_TOL:
            continue
        mult = sgn * math.exp(ld) if sgn != 0.0 else 0.0
        if abs(mult) < 1.0:
            return PeriodicAttractor(p, mult, x)
    return None


def _image(m: UnimodalMap, a: float, b: float) -> tuple:
    fa, fb = m.f(a), m.f(b)
    if a <= 0.0 <= b:
        return min(fa, fb), m.f(0.0)
    return min(fa, fb), max(fa, fb)


def _restrictive(m: UnimodalMap, xh: float, p: int, tol: float) -> bool:
    """Is J = [-xh, xh] restrictive of period p?

    The boundary orbit must repel; an attracting one means J only traps
    orbits on their way to a periodic attractor.
    """
    if m.kernels.log_dfn(xh, p)[0] <= 0.0:
        return False
    orbit = [(-xh, xh)]
    for _ in range(p):
        orbit.append(_image(m, *orbit[-1]))
    lo, hi = orbit[p]
    if lo < -xh - tol or hi > xh + tol:
        return False
    ivs = sorted(orbit[:p])
    return all(ivs[i][1] <= ivs[i + 1][0] + tol for i in range(p - 1))


def _power_roots(m: UnimodalMap, p: int, lo: float, hi: float, grid: int) -> list:
    """Points x in (lo, hi] with f^p(x) = x or f^p(x) = -x, largest first."""
    xs = np.linspace(lo, hi, grid + 1)[1:]
    ys = xs.copy()
    for _ in range(p):
        ys = m.f_array(ys)
    roots = []
    for sign in (1.0, -1.0):
        g = ys - sign * xs
        if abs(g[-1]) <= 1e-11 * hi:
            roots.append(float(hi))
        idx = np.nonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0)[0]
        for i in idx:
            a, b = xs[i], xs[i + 1]
            ga = g[i]
            while True:
                mid = 0.5 * (a + b)
                if mid in (a, b):
                    break
                gm = m.kernels.iterate(mid, p)[-1] - sign * mid
                if (gm < 0) == (ga < 0):
                    a, ga = mid, gm
                else:
                    b = mid
            roots.append(float(0.5 * (a + b)))
    return sorted(set(roots), reverse=True)


def detect_renormalization(m: UnimodalMap, p_max: int = 16, nest_max: int = 8,
                           u1: Optional[float] = None, grid: int = 4096) -> list:
    """Periods of nested restrictive intervals [-x, x] around 0.

    Returns the list of total periods found, outermost first; its length is
    the nesting count.  Each level searches relative periods 2..p_max for the
    widest restrictive interval strictly inside the previous one.
    """
    if p_max < 2:
        raise DomainError("p_max must be at least 2")
    if u1 is None:
        try:
            u1 = fixed_point_positive(m)
        except UnimodalError:
            return []
    crit = np.abs(m.kernels.iterate(0.0, p_max ** min(nest_max, 4) + 1))
    periods = []
    bound = u1
    period = 1
    while len(periods) < nest_max:
        found = None
        for rel in range(2, p_max + 1):
            p = period * rel
            if p + 1 > crit.size:
                crit = np.abs(m.kernels.iterate(0.0, 2 * p + 1))
            # 0 must first come back to J at time p, and inside J
            lo = crit[p]
            hi = min(bound, crit[1:p].min())
            if not lo < hi:
                continue
            tol = 1e-9 * bound
            for xh in _power_roots(m, p, lo, hi, grid):
                if periods and xh >= bound * (1.0 - 1e-9):
                    continue
                if _restrictive(m, xh, p, tol):
                    found = (xh, p)
                    break
            if found:
                break
        if found is None:
            break
        bound, period = found
        periods.append(period)
    return periods


# classifier

class LabelKind(str, enum.Enum):
    P = "P"
    R = "R"
    I_UNKNOWN = "I_unknown"
    M_CANDIDATE = "M_candidate"
    NON_RECURRENT = "NonRecurrent"
    BUDGET = "Budget"


@dataclass(frozen=True)
class Budget:
    iterates: int = 100_000
    summability_kmax: int = 10_000
    depth: int = 12
    return_time: int = 1_000_000
    p_max: int = 16
    nest_max: int = 8
    nest_threshold: int = 3
    lyapunov_iters: int = 100_000
    seed: int = 0


@dataclass
class Classification:
    t: Optional[float]
    label: LabelKind
    period: Optional[int] = None
    multiplier: Optional[float] = None
    renorm_count: int = 0
    cascade: Optional[CentralCascade] = None
    scaling: Optional[ScalingReport] = None
    summability: Optional[SummabilityReport] = None
    lyapunov: Optional[float] = None
    seed: int = 0
    note: str = ""

    def row(self) -> dict:
        """Flat record used for sweep output."""
        cas = self.cascade
        return {
            "t": self.t,
            "class": self.label.value,
            "n_central_returns": int(sum(cas.central_return)) if cas else 0,
            "depth_reached": len(cas.u) if cas else 0,
            "sigma_last": cas.sigma[-1] if cas and cas.sigma else None,
            "scaling_sum": self.scaling.sum if self.scaling else None,
            "summability_partial": self.summability.total if self.summability else None,
            "lyapunov": self.lyapunov,
            "seed": self.seed,
        }

    def to_dict(self) -> dict:
        d = {"label": self.label.value, "period": self.period, "multiplier": self.multiplier,
             "renorm_count": self.renorm_count, "note": self.note}
        d.update(self.row())
        if self.cascade is not None:
            d["termination"] = self.cascade.termination.value
        if self.scaling is not None:
            d["scaling_verdict"] = self.scaling.verdict.value
        if self.summability is not None:
            d["summability_verdict"] = self.summability.verdict.value
        return d


def classify(m: UnimodalMap, budget: Budget = Budget()) -> Classification:
    """Label the map P, R, M_candidate, NonRecurrent, I_unknown or Budget.

    Tests run in that order of precedence: attracting cycle, nested
    restrictive intervals, then the summability criteria on the cascade.
    """
    out = Classification(t=m.t, label=LabelKind.BUDGET, seed=budget.seed)
    try:
        att = detect_periodic_attractor(m, budget.iterates)
        if att is not None:
            out.label, out.period, out.multiplier = LabelKind.P, att.period, att.multiplier
            return out
        periods = detect_renormalization(m, budget.p_max, budget.nest_max)
        out.renorm_count = len(periods)
        if len(periods) >= budget.nest_threshold:
            out.label = LabelKind.R
            out.note = f"restrictive periods {periods}"
            return out
        rng = np.random.default_rng(budget.seed)
        out.lyapunov = lyapunov(m, float(rng.uniform(-1.0, 1.0)), budget.lyapunov_iters)
        caps = Caps(depth=budget.depth, return_time=budget.return_time)
        cas = build_cascade(m, caps=caps)
        out.cascade = cas
        out.summability = summability(m, budget.summability_kmax)
        out.scaling = scaling_summability(cas, m.alpha)
        conv = out.summability.verdict == Verdict.CONVERGENT
        if cas.termination == Termination.NON_RECURRENT:
            out.label = LabelKind.M_CANDIDATE if conv else LabelKind.NON_RECURRENT
        elif cas.termination == Termination.RETURN_TIME_CAP and len(cas.u) == 1:
            out.note = "recurrence undecided within the return-time cap"
        elif conv or out.scaling.verdict == Verdict.CONVERGENT:
            out.label = LabelKind.M_CANDIDATE
        else:
            out.label = LabelKind.I_UNKNOWN
    except UnimodalError as err:
        out.label = LabelKind.BUDGET
        out.note = f"{type(err).__name__}: {err}"
    return out
