"""Constraint-function tests against direct arithmetic."""

import numpy as np
import pytest

from orbitgov import (
    ConstraintLimits,
    FullState,
    SlowElements,
    c1,
    c2,
    c3,
    control,
    reference_admissible_margin,
)

from conftest import random_elements, random_spd_weight, random_state


class TestC1:
    def test_target_orbit_margin(self, limits):
        assert c1(SlowElements(6878.0, 0.02, 1.0, 0, 0), limits) == \
            pytest.approx(112.44, abs=1e-9)

    def test_initial_orbit_margin(self, limits):
        assert c1(SlowElements(21378.0, 0.65, 1.0, 0, 0), limits) == \
            pytest.approx(21378.0 * 0.35 - 6628.0, abs=1e-9)

    def test_boundary(self, limits):
        assert c1(SlowElements(6628.0, 0.0, 1.0, 0, 0), limits) == 0.0

    def test_monotone_in_a_and_e(self, limits):
        rng = np.random.default_rng(0)
        for _ in range(20):
            el = random_elements(rng)
            up_a = SlowElements(el.a + 10.0, el.e, el.i, el.raan, el.argp)
            up_e = SlowElements(el.a, min(el.e + 0.01, 0.99), el.i, el.raan, el.argp)
            assert c1(up_a, limits) > c1(el, limits)
            assert c1(up_e, limits) < c1(el, limits)


class TestC2:
    def test_zero_error_gives_umax_sq(self, limits, p1, const):
        rng = np.random.default_rng(1)
        for _ in range(5):
            x = random_state(rng)
            assert c2(x, x.elements, p1, limits, const) == \
                pytest.approx(1.5625e-6, rel=1e-15)

    def test_equals_umax_for_every_weight(self, limits, const):
        rng = np.random.default_rng(2)
        for _ in range(10):
            p = random_spd_weight(rng)
            x = random_state(rng)
            assert c2(x, x.elements, p, limits, const) == limits.u_max ** 2

    def test_matches_independent_control_evaluation(self, limits, const):
        rng = np.random.default_rng(3)
        for _ in range(25):
            p = random_spd_weight(rng)
            x = random_state(rng)
            ref = random_elements(rng)
            u = control(x, ref, p, const)
            expected = limits.u_max ** 2 - (u.s ** 2 + u.t ** 2 + u.w ** 2)
            assert c2(x, ref, p, limits, const) == pytest.approx(
                expected, abs=1e-15)


class TestC3:
    def test_boundary_and_examples(self, limits):
        assert c3(SlowElements(7000.0, limits.e_min, 1.0, 0, 0), limits) == 0.0
        assert c3(SlowElements(7000.0, 0.02, 1.0, 0, 0), limits) == \
            pytest.approx(0.019999, abs=1e-12)
        assert c3(SlowElements(7000.0, 0.65, 1.0, 0, 0), limits) == \
            pytest.approx(0.649999, abs=1e-12)

    def test_depends_only_on_e(self, limits):
        rng = np.random.default_rng(4)
        for _ in range(10):
            el = random_elements(rng)
            other = SlowElements(el.a * 2, el.e, el.i / 2, el.raan + 1, el.argp + 1)
            assert c3(el, limits) == c3(other, limits)


class TestMarginRule:
    def test_on_c1_boundary_rejected(self, limits):
        ref = SlowElements(6628.0, 0.0, 1.0, 0, 0)
        assert not reference_admissible_margin(ref, limits)

    def test_target_orbit_accepted(self, limits):
        assert reference_admissible_margin(SlowElements(6878.0, 0.02, 1.0, 0, 0),
                                           limits)

    def test_inside_e_margin_band_rejected(self, limits):
        ref = SlowElements(8000.0, limits.e_min + limits.eps_e / 2, 1.0, 0, 0)
        assert not reference_admissible_margin(ref, limits)

    def test_margin_implies_strict_feasibility(self, limits):
        rng = np.random.default_rng(5)
        for _ in range(50):
            el = random_elements(rng, a_lo=6.2e3, e_lo=0.0, e_hi=0.9)
            if reference_admissible_margin(el, limits):
                assert c1(el, limits) > 0.0
                assert c3(el, limits) > 0.0
