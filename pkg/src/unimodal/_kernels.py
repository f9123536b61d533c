"""Orbit loops shared by every module.

Each loop is written once as plain Python taking the map as ``(c, p)``
and is compiled with numba for power-form maps, where ``F(c, p, x)`` evaluates
``sum(c[i] * |x|**p[i])``.  Maps built from arbitrary callables run the same
source uninterpreted, so both paths produce the same algorithm.
"""

import math

import numpy as np
from numba import njit


def _abspow(ax, e):
    if e == 0.0:
        return 1.0
    if e == 1.0:
        return ax
    if e == 2.0:
        return ax * ax
    return ax ** e


_abspow_jit = njit(cache=True)(_abspow)


@njit(cache=True)
def power_f(c, p, x):
    ax = abs(x)
    s = 0.0
    for i in range(c.size):
        s += c[i] * _abspow_jit(ax, p[i])
    # orbits that touch -1 must stay on the fixed point, not drift off it
    if s > 1.0:
        return 1.0
    if s < -1.0:
        return -1.0
    return s


@njit(cache=True)
def power_df(c, p, x):
    if x == 0.0:
        return 0.0
    ax = abs(x)
    s = 0.0
    for i in range(c.size):
        e = p[i]
        if e != 0.0:
            s += c[i] * e * _abspow_jit(ax, e - 1.0)
    return s if x > 0.0 else -s


@njit(cache=True)
def power_diff(c, p, x, d):
    """``f(x + d) - f(x)`` before clamping, accurate when |d| << |x| or x = 0."""
    s = 0.0
    y = x + d
    for i in range(c.size):
        e = p[i]
        if e == 0.0:
            continue
        if e == 2.0:
            s += c[i] * (d * (2.0 * x + d))
        elif e == 1.0:
            s += c[i] * (abs(y) - abs(x))
        elif x != 0.0 and d / x > -0.5:
            s += c[i] * abs(x) ** e * math.expm1(e * math.log1p(d / x))
        else:
            s += c[i] * (abs(y) ** e - abs(x) ** e)
    return s


def iterate(c, p, x0, n):
    out = np.empty(n + 1)
    out[0] = x0
    x = x0
    for j in range(n):
        x = F(c, p, x)
        out[j + 1] = x
    return out


def log_deriv_prefix(c, p, x0, n):
    """Points and running sums of ln|Df| along the orbit of ``x0``.

    A zero derivative yields ``-inf`` from that index on; ``first_zero`` is
    the orbit index where it happened, or -1.
    """
    pts = np.empty(n + 1)
    pref = np.empty(n + 1)
    pts[0] = x0
    pref[0] = 0.0
    x = x0
    acc = 0.0
    first_zero = -1
    for j in range(n):
        d = abs(DF(c, p, x))
        if d == 0.0:
            if first_zero < 0:
                first_zero = j
            acc = -np.inf
        else:
            acc += math.log(d)
        x = F(c, p, x)
        pts[j + 1] = x
        pref[j + 1] = acc
    return pts, pref, first_zero


def first_entry(c, p, x0, u, cap):
    """Smallest j in [1, cap] with |f^j(x0)| < u, else 0."""
    x = x0
    for j in range(1, cap + 1):
        x = F(c, p, x)
        if abs(x) < u:
            return j
    return 0


def first_entries(c, p, xs, u, cap):
    out = np.zeros(xs.size, dtype=np.int64)
    for i in range(xs.size):
        x = xs[i]
        for j in range(1, cap + 1):
            x = F(c, p, x)
            if abs(x) < u:
                out[i] = j
                break
    return out


def interval_orbit(c, p, a, b, u, steps):
    """Push the endpoints of [a, b] forward ``steps`` times.

    Returns ``(hit, fa, fb)`` where ``hit`` is the first i in [1, steps] whose
    endpoint hull overlaps (-u, u), or 0.  With u = 0 the test becomes
    "hull contains 0 in its interior".  Until the first hit the hull equals
    the true image, since each image misses the critical point.
    """
    for i in range(1, steps + 1):
        a = F(c, p, a)
        b = F(c, p, b)
        lo = min(a, b)
        hi = max(a, b)
        if lo < u and hi > -u:
            return i, a, b
    return 0, a, b


def monotone_ok(c, p, a, b, n):
    """f^n is monotone on [a, b]: no image f^i[a, b], i < n, contains 0 inside."""
    if n <= 0:
        return True
    if a < 0.0 < b:
        return False
    return interval_orbit(c, p, a, b, 0.0, n - 1)[0] == 0


def monotone_extend(c, p, a, b, n):
    """Maximal [lo, hi] in [-1, 1] containing [a, b] with f^n monotone on it."""
    lo = -1.0
    if not monotone_ok(c, p, lo, b, n):
        good, bad = a, -1.0
        while True:
            mid = 0.5 * (good + bad)
            if mid == good or mid == bad:
                break
            if monotone_ok(c, p, mid, b, n):
                good = mid
            else:
                bad = mid
        lo = good
    hi = 1.0
    if not monotone_ok(c, p, a, hi, n):
        good, bad = b, 1.0
        while True:
            mid = 0.5 * (good + bad)
            if mid == good or mid == bad:
                break
            if monotone_ok(c, p, a, mid, n):
                good = mid
            else:
                bad = mid
        hi = good
    return lo, hi


def log_dfn(c, p, x, n):
    """``(ln|Df^n(x)|, sign Df^n(x), f^n(x), min_j |f^j(x)|)`` for j < n."""
    acc = 0.0
    sgn = 1.0
    closest = np.inf
    for _ in range(n):
        ax = abs(x)
        if ax < closest:
            closest = ax
        d = DF(c, p, x)
        if d == 0.0:
            acc = -np.inf
            sgn = 0.0
        else:
            if d < 0.0:
                sgn = -sgn
            acc += math.log(abs(d))
        x = F(c, p, x)
    return acc, sgn, x, closest


def log_dfn_many(c, p, xs, n):
    logs = np.empty(xs.size)
    signs = np.empty(xs.size)
    closest = np.empty(xs.size)
    for i in range(xs.size):
        acc, sgn, _, cl = log_dfn(c, p, xs[i], n)
        logs[i] = acc
        signs[i] = sgn
        closest[i] = cl
    return logs, signs, closest


def lyapunov_sum(c, p, x0, burn_in, iters):
    """Sum of ln|Df| over ``iters`` steps after ``burn_in``; also min |Df|."""
    x = x0
    for _ in range(burn_in):
        x = F(c, p, x)
    acc = 0.0
    smallest = np.inf
    for _ in range(iters):
        d = abs(DF(c, p, x))
        if d < smallest:
            smallest = d
        if d == 0.0:
            return acc, 0.0
        acc += math.log(d)
        x = F(c, p, x)
    return acc, smallest


def histogram(c, p, x0, burn_in, iters, bins):
    counts = np.zeros(bins, dtype=np.int64)
    x = x0
    for _ in range(burn_in):
        x = F(c, p, x)
    width = 2.0 / bins
    for _ in range(iters):
        k = int((x + 1.0) / width)
        if k >= bins:
            k = bins - 1
        elif k < 0:
            k = 0
        counts[k] += 1
        x = F(c, p, x)
    return counts


def return_walk(c, p, x, u, v, s_max, cap):
    """Successive first returns of x to (-u, u), stopping on entry into (-v, v).

    For the s-th return f^T(x) (s = 1, 2, ...) that lands outside (-v, v)
    records T and ln|Df^T(f(x))| = sum_{j=1..T} ln|Df(f^j x)|.  Stops after
    s_max records, on entry into (-v, v), or after ``cap`` iterates.
    Returns ``(times, logs, count)``.
    """
    times = np.zeros(s_max, dtype=np.int64)
    logs = np.zeros(s_max)
    count = 0
    acc = 0.0
    y = x
    for step in range(1, cap + 1):
        y = F(c, p, y)
        d = abs(DF(c, p, y))
        if d == 0.0:
            break
        acc += math.log(d)
        if abs(y) < u:
            if abs(y) < v:
                break
            times[count] = step
            logs[count] = acc
            count += 1
            if count == s_max:
                break
    return times, logs, count


# Points near the critical orbit are carried as offsets from a precomputed
# critical orbit ``crit`` (crit[0] = 0): the orbit of y is crit[i] + d[i]
# with d[0] = y and d[i+1] = f(crit[i] + d[i]) - f(crit[i]).  This keeps the
# relative precision of d even when f(y) - f(0) is far below ulp(f(0)).


def rel_values(c, p, crit, y, n):
    out = np.empty(n + 1)
    out[0] = y
    d = y
    for i in range(n):
        d = DIF(c, p, crit[i], d)
        out[i + 1] = crit[i + 1] + d
    return out


def rel_central_escape(c, p, crit, y, u, q):
    """True once [0, y] is no longer inside the central branch of (-u, u)."""
    d = y
    for i in range(1, q):
        d = DIF(c, p, crit[i - 1], d)
        a = crit[i]
        b = a + d
        if min(a, b) < u and max(a, b) > -u:
            return True
    d = DIF(c, p, crit[q - 1], d)
    return abs(crit[q] + d) >= u


def rel_branch_ok(c, p, crit, a, b, u, tau):
    """[a, b] (0 < a < b, both small) sits inside one monotone branch of time tau."""
    da = a
    db = b
    for i in range(1, tau):
        da = DIF(c, p, crit[i - 1], da)
        db = DIF(c, p, crit[i - 1], db)
        xa = crit[i] + da
        xb = crit[i] + db
        if min(xa, xb) < u and max(xa, xb) > -u:
            return False
    da = DIF(c, p, crit[tau - 1], da)
    db = DIF(c, p, crit[tau - 1], db)
    return abs(crit[tau] + da) < u and abs(crit[tau] + db) < u


def _push_left(c, p, crit, good, bad, b, u, tau):
    while True:
        mid = 0.5 * (good + bad)
        if mid == good or mid == bad:
            return good
        if mid > 0.0 and rel_branch_ok(c, p, crit, mid, b, u, tau):
            good = mid
        else:
            bad = mid


def _push_right(c, p, crit, a, good, bad, u, tau):
    while True:
        mid = 0.5 * (good + bad)
        if mid == good or mid == bad:
            return good
        if rel_branch_ok(c, p, crit, a, mid, u, tau):
            good = mid
        else:
            bad = mid


def rel_scan_branches(c, p, crit, xs, times, v, u, tol):
    """Group grid points (sorted, in (v, u)) into maximal monotone branches.

    Consecutive points with equal return time form one run when the segment
    between them passes ``rel_branch_ok``; each run is then widened by
    bisection towards its neighbours.  Returns ``(lo, hi, tau, valid)`` with
    ``valid`` set when both endpoint images are within ``tol`` of +-u.
    """
    n = xs.size
    lo = np.empty(n)
    hi = np.empty(n)
    tau_out = np.zeros(n, dtype=np.int64)
    valid = np.zeros(n, dtype=np.bool_)
    count = 0
    i = 0
    while i < n:
        tau = times[i]
        if tau == 0:
            i += 1
            continue
        j = i
        while j + 1 < n and times[j + 1] == tau and rel_branch_ok(
                c, p, crit, xs[j], xs[j + 1], u, tau):
            j += 1
        left_bad = xs[i - 1] if i > 0 else v
        right_bad = xs[j + 1] if j + 1 < n else u
        a = _push_left(c, p, crit, xs[i], left_bad, xs[j], u, tau)
        b = _push_right(c, p, crit, a, xs[j], right_bad, u, tau)
        fa = rel_values(c, p, crit, a, tau)[tau]
        fb = rel_values(c, p, crit, b, tau)[tau]
        lo[count] = a
        hi[count] = b
        tau_out[count] = tau
        valid[count] = a < b and abs(abs(fa) - u) <= tol and abs(abs(fb) - u) <= tol
        count += 1
        i = j + 1
    return lo[:count], hi[:count], tau_out[:count], valid[:count]


def rel_first_entries(c, p, crit, ys, u, cap):
    out = np.zeros(ys.size, dtype=np.int64)
    for k in range(ys.size):
        d = ys[k]
        for i in range(1, cap + 1):
            d = DIF(c, p, crit[i - 1], d)
            if abs(crit[i] + d) < u:
                out[k] = i
                break
    return out


_NAMES = (
    "monotone_ok",
    "monotone_extend",
    "rel_scan_branches",
    "return_walk",
    "rel_values",
    "rel_central_escape",
    "rel_branch_ok",
    "rel_first_entries",
    "iterate",
    "log_deriv_prefix",
    "first_entry",
    "first_entries",
    "interval_orbit",
    "log_dfn",
    "log_dfn_many",
    "lyapunov_sum",
    "histogram",
)

_HELPERS = ("_push_left", "_push_right")


def specialize(f, df, dif, jit: bool) -> dict:
    """Copies of every loop bound to one map's ``F``, ``DF`` and ``DIF``.

    The copies share one namespace, so loops calling other loops reach the
    copies.  With ``jit`` they are compiled by numba (lazily, cached on disk).
    """
    ns = dict(globals(), F=f, DF=df, DIF=dif)
    names = _NAMES + _HELPERS
    for name in names:
        fn = globals()[name]
        ns[name] = type(fn)(fn.__code__, ns, name)
    if jit:
        for name in names:
            ns[name] = njit(cache=True)(ns[name])
    return {name: ns[name] for name in _NAMES}


POWER = specialize(power_f, power_df, power_diff, jit=True)


class Kernels:
    """Loops bound to one map: ``k.iterate(x0, n)`` etc."""

    def __init__(self, table: dict, c, p):
        self._table = table
        self._args = (c, p)

    def __getattr__(self, name):
        if name not in _NAMES:
            raise AttributeError(name)
        fn = self._table[name]
        c, p = self._args
        return lambda *rest: fn(c, p, *rest)
