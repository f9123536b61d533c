"""Tests for map construction, evaluation, orbits and fixed points."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from unimodal import maps
from unimodal.errors import DomainError, InputError, NoFixedPoint, NotUnimodal


class TestEvaluate:
    def test_critical_value(self):
        assert maps.evaluate(maps.quadratic(1.0), 0.0) == 1.0

    def test_boundary(self):
        m = maps.quadratic(1.0)
        assert maps.evaluate(m, 1.0) == -1.0
        assert maps.evaluate(m, -1.0) == -1.0

    def test_fixed_point_value(self):
        assert maps.evaluate(maps.quadratic(0.75), 1.0 / 3.0) == pytest.approx(1.0 / 3.0, abs=1e-15)

    def test_outside_domain(self):
        with pytest.raises(DomainError):
            maps.evaluate(maps.quadratic(1.0), 1.5)

    def test_parameter_range(self):
        with pytest.raises(DomainError):
            maps.quadratic(1.2)
        with pytest.raises(DomainError):
            maps.quadratic(0.9, alpha=1.0)

    @given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    def test_even(self, t, x):
        m = maps.quadratic(t)
        assert maps.evaluate(m, x) == maps.evaluate(m, -x)

    @given(st.floats(0.0, 1.0), st.floats(-1.0, 1.0))
    def test_stays_in_interval(self, t, x):
        assert -1.0 <= maps.evaluate(maps.quadratic(t), x) <= 1.0


class TestDerivatives:
    def test_values(self):
        m = maps.quadratic(1.0)
        assert maps.derivative(m, 0.0) == 0.0
        assert maps.derivative(m, 1.0) == -4.0
        assert maps.derivative(m, -1.0) == 4.0

    @pytest.mark.parametrize("t,x,expected", [(1.0, 0.5, -6.0), (0.7, 0.5, -6.0), (1.0, 1.0, -1.5)])
    def test_schwarzian(self, t, x, expected):
        assert maps.schwarzian(maps.quadratic(t), x) == pytest.approx(expected, rel=1e-14)

    def test_schwarzian_at_critical_point(self):
        with pytest.raises(DomainError):
            maps.schwarzian(maps.quadratic(1.0), 0.0)

    @pytest.mark.parametrize("t", [0.3, 0.8, 1.0])
    def test_schwarzian_scaling(self, t):
        m = maps.quadratic(t)
        for x in np.linspace(-1, 1, 41):
            if x != 0:
                assert maps.schwarzian(m, x) * x * x == pytest.approx(-1.5, rel=1e-12)

    def test_general_exponent_schwarzian(self):
        # for |x|^a the Schwarzian is -(a^2 - 1) / (2 x^2)
        m = maps.quadratic(0.9, alpha=3.0)
        assert maps.schwarzian(m, 0.5) == pytest.approx(-(9 - 1) / (2 * 0.25), rel=1e-12)

    @pytest.mark.parametrize("t", [0.55, 0.9, 1.0])
    def test_finite_difference(self, t):
        m = maps.quadratic(t)
        h = 1e-5
        for x in np.linspace(-0.99, 0.99, 25):
            fd = (m.f(x + h) - m.f(x - h)) / (2 * h)
            assert abs(fd - m.df(x)) < 1e-8


class TestOrbit:
    def test_points(self):
        rec = maps.orbit(maps.quadratic(1.0), 0.0, 3)
        assert rec.points.tolist() == [0.0, 1.0, -1.0, -1.0]
        assert rec.critical_index == 0

    def test_empty(self):
        rec = maps.orbit(maps.quadratic(0.8), 0.3, 0)
        assert rec.points.tolist() == [0.3]

    def test_log_derivative_prefix(self):
        rec = maps.orbit(maps.quadratic(1.0), 1.0, 2)
        assert rec.log_deriv_prefix == pytest.approx([0.0, math.log(4), math.log(16)], abs=1e-15)
        assert rec.log_deriv(1, 2) == pytest.approx(math.log(4))

    def test_points_follow_map(self):
        m = maps.quadratic(0.93)
        rec = maps.orbit(m, 0.123, 200)
        for a, b in zip(rec.points[:-1], rec.points[1:]):
            assert b == m.f(a)

    def test_long_orbit_no_overflow(self):
        rec = maps.orbit(maps.quadratic(1.0), 1.0, 2000)
        assert rec.log_deriv_prefix[-1] == pytest.approx(2000 * math.log(4))

    def test_first_entry(self):
        rec = maps.orbit(maps.quadratic(0.95), 0.0, 20, enter=(-0.4, 0.4))
        x, j = 0.0, 0
        while True:
            j += 1
            x = -1.9 * x * x + 0.9
            if abs(x) < 0.4:
                break
        assert rec.first_entry == j


class TestFixedPoint:
    @pytest.mark.parametrize("t", [0.6, 0.75, 1.0])
    def test_closed_form(self, t):
        assert maps.fixed_point_positive(maps.quadratic(t)) == pytest.approx(1 - 1 / (2 * t), abs=1e-12)

    def test_none(self):
        with pytest.raises(NoFixedPoint):
            maps.fixed_point_positive(maps.quadratic(0.4))

    def test_general_exponent(self):
        m = maps.quadratic(0.9, alpha=4.0)
        x = maps.fixed_point_positive(m)
        assert abs(m.f(x) - x) < 1e-12

    @settings(max_examples=50)
    @given(st.floats(0.51, 1.0))
    def test_is_fixed(self, t):
        m = maps.quadratic(t)
        x = maps.fixed_point_positive(m)
        assert abs(maps.evaluate(m, x) - x) < 1e-12


class TestCustomMaps:
    def test_polynomial_matches_quadratic(self):
        t = 0.9
        p = maps.polynomial([2 * t - 1, 0.0, -2 * t])
        q = maps.quadratic(t)
        for x in np.linspace(-1, 1, 11):
            assert p.f(x) == pytest.approx(q.f(x), abs=1e-15)
        assert p.alpha == 2.0

    def test_json_roundtrip(self):
        desc = {"kind": "custom", "coefficients": [0.8, 0.0, -1.8]}
        m = maps.from_json(json.dumps(desc))
        assert m.describe()["coefficients"] == [0.8, 0.0, -1.8]
        assert maps.from_json({"kind": "quadratic", "t": 0.7}).t == 0.7

    def test_rejects_bad_boundary(self):
        with pytest.raises(NotUnimodal):
            maps.polynomial([0.5, 0.0, -1.0])

    def test_rejects_positive_schwarzian(self):
        # 1 - 0.5 x^2 - 1.5 x^8 has positive Schwarzian near x = 0.4
        c = [1.0, 0.0, -0.5] + [0.0] * 5 + [-1.5]
        with pytest.raises(NotUnimodal):
            maps.polynomial(c)

    def test_bad_descriptor(self):
        with pytest.raises(InputError):
            maps.from_json({"kind": "spline"})

    def test_callable_map(self):
        t = 0.95
        m = maps.from_callables(lambda x: -2 * t * x * x + 2 * t - 1, lambda x: -4 * t * x,
                                lambda x: -4 * t, lambda x: 0.0)
        assert not m.is_power_form
        assert maps.orbit(m, 0.0, 5).points[-1] == pytest.approx(
            maps.orbit(maps.quadratic(t), 0.0, 5).points[-1], abs=1e-14)
        assert maps.schwarzian(m, 0.5) == pytest.approx(-6.0)
