"""Unimodal maps of [-1, 1]: the quadratic family and custom S-unimodal maps.

The quadratic family is ``q_t(x) = -2t|x|**alpha + 2t - 1``; for alpha = 2 this
is the usual ``-2tx**2 + 2t - 1``.  Custom maps are either polynomials in |x|
(loadable from JSON, compiled with numba like the quadratic family) or
arbitrary Python callables (library use only, interpreted loops).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import _kernels
from .errors import DomainError, NoFixedPoint, NotUnimodal

BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class UnimodalMap:
    """Immutable map descriptor.

    Power-form maps (``coeffs``/``powers`` set) evaluate
    ``sum(coeffs[i] * |x|**powers[i])``.  Callable maps carry ``func`` and its
    first three derivatives instead.
    """

    kind: str
    alpha: float = 2.0
    t: Optional[float] = None
    coeffs: Optional[tuple] = None
    powers: Optional[tuple] = None
    func: Optional[Callable[[float], float]] = field(default=None, repr=False, compare=False)
    dfunc: Optional[Callable[[float], float]] = field(default=None, repr=False, compare=False)
    d2func: Optional[Callable[[float], float]] = field(default=None, repr=False, compare=False)
    d3func: Optional[Callable[[float], float]] = field(default=None, repr=False, compare=False)
    kernels: _kernels.Kernels = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.alpha > 1.0:
            raise DomainError(f"critical exponent must exceed 1, got {self.alpha}")
        if self.coeffs is not None:
            c = np.asarray(self.coeffs, dtype=float)
            p = np.asarray(self.powers, dtype=float)
            k = _kernels.Kernels(_kernels.POWER, c, p)
        else:
            if self.func is None or self.dfunc is None:
                raise DomainError("custom map needs func and dfunc")
            f, df = self.func, self.dfunc
            dummy = np.zeros(0)
            table = _kernels.specialize(lambda c, p, x: f(x), lambda c, p, x: df(x),
                                        lambda c, p, x, d: f(x + d) - f(x), jit=False)
            k = _kernels.Kernels(table, dummy, dummy)
        object.__setattr__(self, "kernels", k)

    @property
    def is_power_form(self) -> bool:
        return self.coeffs is not None

    # raw (unchecked) evaluation, used by the algorithms

    def f(self, x: float) -> float:
        if self.is_power_form:
            return _kernels.power_f(self.kernels._args[0], self.kernels._args[1], float(x))
        return float(self.func(x))

    def df(self, x: float) -> float:
        if self.is_power_form:
            return _kernels.power_df(self.kernels._args[0], self.kernels._args[1], float(x))
        return float(self.dfunc(x))

    def d2f(self, x: float) -> float:
        if self.is_power_form:
            ax = abs(x)
            return sum(ci * e * (e - 1.0) * ax ** (e - 2.0)
                       for ci, e in zip(self.coeffs, self.powers) if e not in (0.0, 1.0))
        if self.d2func is None:
            raise DomainError("custom map has no second derivative")
        return float(self.d2func(x))

    def d3f(self, x: float) -> float:
        if self.is_power_form:
            ax = abs(x)
            s = sum(ci * e * (e - 1.0) * (e - 2.0) * ax ** (e - 3.0)
                    for ci, e in zip(self.coeffs, self.powers) if e not in (0.0, 1.0, 2.0))
            return s if x > 0 else (-s if x < 0 else 0.0)
        if self.d3func is None:
            raise DomainError("custom map has no third derivative")
        return float(self.d3func(x))

    def f_array(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        if self.is_power_form:
            ax = np.abs(xs)
            out = np.zeros_like(xs)
            for ci, e in zip(self.coeffs, self.powers):
                out += ci * (ax * ax if e == 2.0 else ax ** e)
            return np.clip(out, -1.0, 1.0)
        return np.array([self.func(x) for x in xs.ravel()]).reshape(xs.shape)

    def df_array(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        if self.is_power_form:
            ax = np.abs(xs)
            out = np.zeros_like(xs)
            for ci, e in zip(self.coeffs, self.powers):
                if e != 0.0:
                    out += ci * e * (ax if e == 2.0 else ax ** (e - 1.0))
            return np.sign(xs) * out
        return np.array([self.dfunc(x) for x in xs.ravel()]).reshape(xs.shape)

    def describe(self) -> dict:
        d = {"kind": self.kind, "alpha": self.alpha}
        if self.t is not None:
            d["t"] = self.t
        if self.kind == "custom" and self.is_power_form:
            d["coefficients"] = list(self.coeffs)
            d["powers"] = list(self.powers)
        return d


def quadratic(t: float, alpha: float = 2.0) -> UnimodalMap:
    """Member ``q_t`` of the quadratic family."""
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t must lie in [0, 1], got {t}")
    return UnimodalMap(kind="quadratic", alpha=float(alpha), t=float(t),
                       coeffs=(2.0 * t - 1.0, -2.0 * t), powers=(0.0, float(alpha)))


def polynomial(coefficients: Sequence[float], alpha: Optional[float] = None,
               validate: bool = True) -> UnimodalMap:
    """Map ``x -> sum(coefficients[i] * |x|**i)``.

    ``alpha`` defaults to the lowest positive power with a nonzero coefficient.
    """
    coeffs = tuple(float(c) for c in coefficients)
    powers = tuple(float(i) for i in range(len(coeffs)))
    if alpha is None:
        nz = [i for i, ci in enumerate(coeffs) if i > 0 and ci != 0.0]
        if not nz:
            raise DomainError("polynomial has no nonconstant term")
        alpha = float(nz[0])
    m = UnimodalMap(kind="custom", alpha=float(alpha), coeffs=coeffs, powers=powers)
    if validate:
        check_axioms(m)
    return m


def from_callables(f, df, d2f=None, d3f=None, alpha: float = 2.0,
                   validate: bool = True) -> UnimodalMap:
    m = UnimodalMap(kind="custom", alpha=float(alpha), func=f, dfunc=df, d2func=d2f, d3func=d3f)
    if validate:
        check_axioms(m)
    return m


def from_json(source) -> UnimodalMap:
    """Load ``{"kind": ..., "alpha": ..., "coefficients": [...]}`` (or ``t``)."""
    if isinstance(source, (str, bytes)):
        d = json.loads(source)
    else:
        d = dict(source)
    kind = d.get("kind", "custom")
    if kind == "quadratic":
        return quadratic(d["t"], d.get("alpha", 2.0))
    if kind != "custom" or "coefficients" not in d:
        raise DomainError(f"unsupported map descriptor: {d}")
    return polynomial(d["coefficients"], d.get("alpha"))


def check_axioms(m: UnimodalMap, grid: int = 401) -> None:
    """Sampled check of the S-unimodal axioms; raises NotUnimodal."""
    for x in (-1.0, 1.0):
        if abs(m.f(x) + 1.0) > BOUNDARY_TOL:
            raise NotUnimodal(f"f({x}) = {m.f(x)} != -1")
    if m.df(0.0) != 0.0:
        raise NotUnimodal("Df(0) != 0")
    xs = np.linspace(-1.0, 1.0, grid)
    xs = xs[xs != 0.0]
    for x in xs:
        d = m.df(x)
        if (x < 0 and not d > 0) or (x > 0 and not d < 0):
            raise NotUnimodal(f"Df has the wrong sign at x={x}")
        if not schwarzian(m, x) < 0:
            raise NotUnimodal(f"Schwarzian is not negative at x={x}")


def _check_domain(x: float) -> float:
    x = float(x)
    if not abs(x) <= 1.0 + BOUNDARY_TOL:
        raise DomainError(f"|x| > 1: {x}")
    return x


def evaluate(m: UnimodalMap, x: float) -> float:
    x = _check_domain(x)
    y = m.f(x)
    if abs(y) > 1.0:
        if abs(y) - 1.0 > BOUNDARY_TOL:
            raise DomainError(f"f({x}) = {y} leaves [-1, 1]")
        y = math.copysign(1.0, y)
    return y


def derivative(m: UnimodalMap, x: float) -> float:
    return m.df(_check_domain(x))


def schwarzian(m: UnimodalMap, x: float) -> float:
    """``D3f/Df - 1.5 (D2f/Df)**2``."""
    x = _check_domain(x)
    d1 = m.df(x)
    if x == 0.0 or d1 == 0.0:
        raise DomainError("Schwarzian is undefined where Df vanishes")
    return m.d3f(x) / d1 - 1.5 * (m.d2f(x) / d1) ** 2


@dataclass(frozen=True)
class OrbitRecord:
    points: np.ndarray
    log_deriv_prefix: np.ndarray
    critical_index: Optional[int] = None
    """Orbit index where Df vanished (prefix is -inf after it), if any."""
    sign_prefix: Optional[np.ndarray] = None
    first_entry: Optional[int] = None

    def log_deriv(self, start: int, stop: int) -> float:
        """ln|Df^(stop-start)| at points[start]."""
        return float(self.log_deriv_prefix[stop] - self.log_deriv_prefix[start])


def orbit(m: UnimodalMap, x0: float, k: int, enter: Optional[tuple] = None) -> OrbitRecord:
    """Orbit of ``x0`` of length ``k + 1`` with log-derivative prefix sums.

    ``enter=(lo, hi)`` also records the first index j >= 1 with
    ``lo < points[j] < hi``.
    """
    x0 = _check_domain(x0)
    if k < 0:
        raise DomainError("k must be nonnegative")
    pts, pref, zero = m.kernels.log_deriv_prefix(x0, int(k))
    d = np.sign(m.df_array(pts[:-1]))
    signs = np.concatenate([[1.0], np.cumprod(d)])
    entry = None
    if enter is not None:
        lo, hi = enter
        hits = np.nonzero((pts[1:] > lo) & (pts[1:] < hi))[0]
        entry = int(hits[0]) + 1 if hits.size else None
    return OrbitRecord(points=pts, log_deriv_prefix=pref,
                       critical_index=None if zero < 0 else int(zero),
                       sign_prefix=signs, first_entry=entry)


def fixed_point_positive(m: UnimodalMap) -> float:
    """Fixed point of ``m`` in (0, 1)."""
    if m.kind == "quadratic" and m.alpha == 2.0:
        if m.t <= 0.5:
            raise NoFixedPoint(f"q_t has no fixed point in (0, 1) for t={m.t}")
        return 1.0 - 1.0 / (2.0 * m.t)
    g = lambda x: m.f(x) - x
    lo, hi = 0.0, 1.0
    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        raise NoFixedPoint("fixed point sits at the critical point")
    if not (glo > 0.0 > ghi):
        raise NoFixedPoint("no sign change of f(x) - x on (0, 1)")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return lo if abs(g(lo)) <= abs(g(hi)) else hi
