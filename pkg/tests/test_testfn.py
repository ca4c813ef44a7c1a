"""Bump-based test functions: derivatives, rescaling, seminorms, dictionaries."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptdiff import (MultiIndex, bump_monomial, make_dictionary, seminorm,
                    standard_bump)
from ptdiff.cores import UnsupportedOrderError, bump_1d


class TestEvalDeriv:
    def test_bump_value_at_origin(self):
        b = standard_bump(1)
        assert b.eval_deriv(MultiIndex((0,)), [0.0])[0] == pytest.approx(
            math.exp(-1.0), rel=1e-14)

    def test_bump_first_derivative_odd(self):
        b = standard_bump(1)
        assert b.eval_deriv(MultiIndex((1,)), [0.0])[0] == 0.0

    def test_zero_outside_support(self):
        rng = np.random.default_rng(0)
        b = standard_bump(2)
        pts = rng.uniform(1.0, 3.0, size=(100, 2)) * rng.choice([-1, 1], size=(100, 2))
        pts = pts[np.linalg.norm(pts, axis=1) > 1.0]
        for xi in (MultiIndex((0, 0)), MultiIndex((1, 0)), MultiIndex((2, 1))):
            vals = b.eval_deriv(xi, pts)
            assert np.all(vals == 0.0)

    def test_finite_difference_consistency(self):
        # central differences of D^xi reproduce D^{xi+e_j} at interior points
        rng = np.random.default_rng(1)
        b = standard_bump(1)
        pts = rng.uniform(-0.8, 0.8, size=100)
        h = 1e-6
        for order in range(0, 3):
            lo = b.eval_deriv(MultiIndex((order,)), (pts - h)[:, None])[:, 0]
            hi = b.eval_deriv(MultiIndex((order,)), (pts + h)[:, None])[:, 0]
            fd = (hi - lo) / (2 * h)
            exact = b.eval_deriv(MultiIndex((order + 1,)), pts[:, None])[:, 0]
            scale = np.max(np.abs(exact)) + 1.0
            assert np.max(np.abs(fd - exact)) <= 1e-5 * scale

    def test_order_too_high_rejected(self):
        b = standard_bump(1)
        with pytest.raises(UnsupportedOrderError):
            b.eval_deriv(MultiIndex((9,)), [0.0])

    def test_bump_1d_matches(self):
        xs = np.linspace(-0.9, 0.9, 11)
        b = standard_bump(1)
        np.testing.assert_allclose(
            bump_1d(xs), b.eval_deriv(MultiIndex((0,)), xs[:, None])[:, 0],
            rtol=1e-14)


class TestSeminorm:
    def test_nu0_closed_form(self):
        assert seminorm(standard_bump(1), 0) == pytest.approx(math.exp(-1.0), rel=1e-6)

    def test_nu1_grid_value(self):
        # the maximum of |b'| sits near x = 0.755
        assert seminorm(standard_bump(1), 1) == pytest.approx(0.7984296758, rel=1e-4)

    def test_zero_function(self):
        z = standard_bump(1).scaled_by(0.0)
        assert seminorm(z, 0) == 0.0

    def test_rescale_chain_rule(self):
        b = standard_bump(1)
        for r in (0.5, 0.25, 2.0):
            scaled = b.rescale([0.0], r)
            assert seminorm(scaled, 1) == pytest.approx(seminorm(b, 1) / r, rel=1e-3)


class TestRescale:
    def test_identity(self):
        b = standard_bump(1)
        xs = np.linspace(-1.5, 1.5, 13)[:, None]
        np.testing.assert_allclose(b.rescale([0.0], 1.0)(xs), b(xs), rtol=1e-14)

    def test_support_scaling(self):
        b = standard_bump(1).rescale([0.0], 0.5)
        assert b.support_radius == pytest.approx(0.5)
        assert b([[0.6]])[0, 0] == 0.0
        assert b([[0.3]])[0, 0] > 0.0

    def test_derivative_chain_rule_values(self):
        b = standard_bump(1)
        r, a = 0.3, 0.2
        scaled = b.rescale([a], r)
        xs = np.linspace(a - 0.25, a + 0.25, 7)
        inner = ((xs - a) / r)[:, None]
        got = scaled.eval_deriv(MultiIndex((2,)), xs[:, None])[:, 0]
        ref = b.eval_deriv(MultiIndex((2,)), inner)[:, 0] / r ** 2
        np.testing.assert_allclose(got, ref, rtol=1e-12, atol=1e-14)


class TestDictionary:
    def test_size_and_normalization(self):
        d = make_dictionary(1, 1, 0, 8, 7)
        assert len(d.members) == 8
        for m in d.members:
            nu = seminorm(m, 0)
            assert 0.0 < nu <= 1.0 + 1e-9

    def test_determinism(self):
        a = make_dictionary(1, 1, 0, 8, 7)
        b = make_dictionary(1, 1, 0, 8, 7)
        assert [m.label for m in a.members] == [m.label for m in b.members]
        xs = np.linspace(-0.9, 0.9, 5)[:, None]
        for ma, mb in zip(a.members, b.members):
            np.testing.assert_array_equal(ma(xs), mb(xs))

    def test_prefix_stability(self):
        small = make_dictionary(1, 1, 0, 6, 3)
        large = make_dictionary(1, 1, 0, 12, 3)
        assert [m.label for m in small.members] == \
            [m.label for m in large.members[:6]]

    @given(st.integers(0, 2), st.integers(0, 50))
    @settings(max_examples=12, deadline=None)
    def test_scaling_inequality(self, i, seed):
        # sup||D^m phi|| <= r^{i-m} sup||D^i phi|| for rescaled members
        d = make_dictionary(1, 1, i, 6, seed)
        r = 0.5
        for member in d.members[:4]:
            phi = member.rescale([0.0], r)
            for m in range(0, i + 1):
                lhs = seminorm(phi, m)
                rhs = r ** (i - m) * seminorm(phi, i)
                assert lhs <= rhs * (1 + 1e-3)
