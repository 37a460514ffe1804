"""Governor tests: P-set construction, mode selection, stepping logic."""

import math

import numpy as np
import pytest

from orbitgov import (
    Constants,
    ConstraintLimits,
    FullState,
    GovernorConfig,
    GovernorState,
    ModeSet,
    SlowElements,
    build_rotated_p,
    build_rotated_p_set,
    direction_schedule,
    governor_step,
    increment,
    prediction_admissible,
    select_p_des,
)

from conftest import P0_DIAG, R_MIN, ROTATION_A

# Published calibration matrices, upper 2x2 entries, with their printed
# significant-digit counts (the looser entries are printed to 5-6 digits).
PRINTED_UPPER = [
    ((7.7456e-11, 5), (-1.656999999e-6, 10), (0.099999999972544, 15)),
    ((2.61856e-10, 6), (-4.602777768e-6, 10), (0.099999999788144, 15)),
    ((1.066157e-9, 7), (-1.0080463648e-5, 11), (0.099999998983843, 15)),
]


def print_tolerance(value: float, digits: int) -> float:
    """Relative half-ulp of a decimal printed with the given digits."""
    return max(1e-6, 0.51 * 10.0 ** (1 - digits))


class TestRotatedWeightSet:
    def test_reproduces_published_matrices(self):
        mats = build_rotated_p_set(P0_DIAG, ROTATION_A, R_MIN)
        for m, ((p11, d11), (p12, d12), (p22, d22)) in zip(mats, PRINTED_UPPER):
            assert m.p[0, 0] == pytest.approx(p11, rel=print_tolerance(p11, d11))
            assert m.p[0, 1] == pytest.approx(p12, rel=print_tolerance(p12, d12))
            assert m.p[1, 0] == m.p[0, 1]
            assert m.p[1, 1] == pytest.approx(p22, rel=1e-12)
            assert np.allclose(np.diag(m.p)[2:], P0_DIAG[2:])

    def test_first_matrix_single_call(self):
        m = build_rotated_p(P0_DIAG, 2e4, R_MIN)
        assert m.p[0, 0] == pytest.approx(7.7456e-11, rel=7e-6)
        assert m.p[0, 1] == pytest.approx(-1.656999999e-6, rel=1e-6)

    def test_infinite_axis_is_identity_rotation(self):
        m = build_rotated_p(P0_DIAG, 1e30, R_MIN)
        assert np.allclose(m.p, np.diag(P0_DIAG), rtol=0, atol=1e-40)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            build_rotated_p([1.0, -1.0, 1.0, 1.0, 1.0], 2e4, R_MIN)
        with pytest.raises(ValueError):
            build_rotated_p(P0_DIAG, -5.0, R_MIN)


class TestModeSelection:
    def test_band_logic(self, mode_set):
        assert select_p_des(1.6e4, mode_set) == 0
        assert select_p_des(1.2e4, mode_set) == 1
        assert select_p_des(9.0e3, mode_set) == 2

    def test_left_closed_boundaries(self, mode_set):
        assert select_p_des(1.5e4, mode_set) == 0
        assert select_p_des(1.1e4, mode_set) == 1

    def test_modeset_validation(self, mode_set):
        with pytest.raises(ValueError, match="strictly decreasing"):
            ModeSet(mode_set.matrices, (1.1e4, 1.5e4))
        with pytest.raises(ValueError, match="threshold"):
            ModeSet(mode_set.matrices, (1.5e4,))


class TestSchedule:
    def test_identity_every_sixth(self):
        assert np.array_equal(direction_schedule(5), np.eye(5))
        assert np.array_equal(direction_schedule(11), np.eye(5))

    def test_coordinate_cycle(self):
        for k in range(5):
            e = direction_schedule(k)
            assert e[k, k] == 1.0 and e.sum() == 1.0
        assert np.array_equal(direction_schedule(6), direction_schedule(0))

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            direction_schedule(-1)


class TestIncrement:
    def test_fixed_point(self):
        des = SlowElements(12000.0, 0.4, 1.2, 2.0, 1.5)
        assert increment(des, des, 0.01, np.eye(5)) == des

    def test_full_step_reaches_target(self):
        prev = SlowElements(10000.0, 0.3, 1.0, 1.0, 1.0)
        des = SlowElements(12000.0, 0.4, 1.2, 2.0, 1.5)
        out = increment(prev, des, 1.0, np.eye(5))
        assert np.allclose(out.as_array(), des.as_array())

    def test_single_coordinate(self):
        prev = SlowElements(10000.0, 0.3, 1.0, 1.0, 1.0)
        des = SlowElements(12000.0, 0.4, 1.2, 2.0, 1.5)
        e = np.zeros((5, 5))
        e[1, 1] = 1.0
        out = increment(prev, des, 0.01, e)
        assert out.a == prev.a and out.i == prev.i
        assert out.e == pytest.approx(0.3 + 0.01 * 0.1, rel=1e-14)


class _ScriptedBackend:
    """Patchable admissibility: answers from a scripted list, else True."""

    def __init__(self, answers):
        self.answers = list(answers)
        self.calls = []

    def __call__(self, ref, p, x_k, lim, const):
        self.calls.append(ref)
        if self.answers:
            return self.answers.pop(0)
        return True


@pytest.fixture
def scripted(monkeypatch):
    def install(answers):
        backend = _ScriptedBackend(answers)
        monkeypatch.setattr("orbitgov.governor._backend",
                            lambda cfg: backend)
        return backend
    return install


class TestGovernorStep:
    x_des = SlowElements(6878.0, 0.02, np.pi / 2, 3 * np.pi / 2, np.pi)

    def _state(self, mode_set):
        el = SlowElements(21378.0, 0.65, np.pi / 10, 0.0, np.pi)
        return GovernorState(x_tilde=el, p_index=0, k=0), FullState(el, np.pi)

    def test_fixed_point_hold(self, mode_set, limits, const, scripted):
        backend = scripted([])
        cfg = GovernorConfig()
        el = SlowElements(21378.0, 0.65, np.pi / 10, 0.0, np.pi)
        state = GovernorState(x_tilde=el, p_index=0, k=4)  # k=5 next: identity E
        out = governor_step(state, FullState(el, 1.0), el, mode_set, cfg,
                            limits, const)
        assert out.x_tilde is state.x_tilde
        assert out.last_decision.candidates_evaluated == 0
        assert not backend.calls

    def test_all_candidates_accepted_caps_at_n(self, mode_set, limits, const,
                                               scripted):
        backend = scripted([True] * 12)
        cfg = GovernorConfig(n_steps=12)
        state, x = self._state(mode_set)
        out = governor_step(state, x, self.x_des, mode_set, cfg, limits, const)
        d = out.last_decision
        assert d.candidates_evaluated == 12
        assert d.steps_accepted == 12
        assert d.backtracks == 0
        expected = state.x_tilde.as_array()
        e_mat = direction_schedule(1)
        for _ in range(12):
            expected = expected + 0.01 * (e_mat @ (self.x_des.as_array() - expected))
        assert np.allclose(out.x_tilde.as_array(), expected, rtol=1e-15)

    def test_single_backtrack_then_accept(self, mode_set, limits, const, scripted):
        backend = scripted([False, True, True, False])
        cfg = GovernorConfig()
        state, x = self._state(mode_set)
        out = governor_step(state, x, self.x_des, mode_set, cfg, limits, const)
        d = out.last_decision
        assert d.backtracks == 1
        assert d.steps_accepted == 2
        assert d.candidates_evaluated == 4
        assert d.delta_final == pytest.approx(0.002)

    def test_double_failure_holds_bit_for_bit(self, mode_set, limits, const,
                                              scripted):
        scripted([False, False])
        cfg = GovernorConfig()
        state, x = self._state(mode_set)
        out = governor_step(state, x, self.x_des, mode_set, cfg, limits, const)
        assert out.x_tilde is state.x_tilde
        assert not out.last_decision.accepted
        assert out.last_decision.backtracks == 1

    def test_failure_after_accepts_returns_last_admissible(self, mode_set,
                                                           limits, const,
                                                           scripted):
        scripted([True, True, True, False])
        cfg = GovernorConfig()
        state, x = self._state(mode_set)
        out = governor_step(state, x, self.x_des, mode_set, cfg, limits, const)
        d = out.last_decision
        assert d.steps_accepted == 3
        assert d.candidates_evaluated == 4
        assert d.backtracks == 0

    def test_mode_switch_tested_and_applied(self, mode_set, limits, const,
                                            scripted):
        backend = scripted([True])
        cfg = GovernorConfig()
        el = SlowElements(1.2e4, 0.3, 0.8, 1.0, 1.0)  # band of P2, index 1
        state = GovernorState(x_tilde=el, p_index=0, k=0)
        out = governor_step(state, FullState(el, 1.0), el, mode_set, cfg,
                            limits, const)
        assert out.p_index == 1
        assert out.last_decision.mode_switch_tested
        assert out.last_decision.mode_switched
        assert len(backend.calls) == 1  # zero-gap search adds no queries

    def test_mode_switch_rejected_keeps_p(self, mode_set, limits, const,
                                          scripted):
        scripted([False])
        cfg = GovernorConfig()
        el = SlowElements(1.2e4, 0.3, 0.8, 1.0, 1.0)
        state = GovernorState(x_tilde=el, p_index=0, k=0)
        out = governor_step(state, FullState(el, 1.0), el, mode_set, cfg,
                            limits, const)
        assert out.p_index == 0
        assert out.last_decision.mode_switch_tested
        assert not out.last_decision.mode_switched

    def test_bounded_queries(self, mode_set, limits, const, scripted):
        backend = scripted([True])  # mode switch, then all-True stepping
        cfg = GovernorConfig(n_steps=12)
        el = SlowElements(1.2e4, 0.3, 0.8, 1.0, 1.0)
        state = GovernorState(x_tilde=el, p_index=0, k=0)
        governor_step(state, FullState(el, 1.0), self.x_des, mode_set, cfg,
                      limits, const)
        assert len(backend.calls) <= cfg.n_steps + 1

    def test_counter_advances(self, mode_set, limits, const, scripted):
        scripted([])
        cfg = GovernorConfig()
        state, x = self._state(mode_set)
        out = governor_step(state, x, state.x_tilde, mode_set, cfg, limits, const)
        assert out.k == 1


class TestGovernorConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            GovernorConfig(delta=0.0)
        with pytest.raises(ValueError):
            GovernorConfig(gamma=1.0)
        with pytest.raises(ValueError):
            GovernorConfig(n_steps=0)
        with pytest.raises(ValueError):
            GovernorConfig(backend="magic")


class TestPredictionBackend:
    def test_equilibrium_hold_accepted(self, mode_set, limits, const):
        cfg = GovernorConfig(backend="prediction", prediction_horizon=5000.0)
        el = SlowElements(9000.0, 0.2, 1.0, 0.5, 0.5)
        x = FullState(el, 2.0)
        assert prediction_admissible(el, mode_set.matrices[0], x, cfg, limits,
                                     const)

    def test_immediate_thrust_violation_rejected(self, mode_set, limits, const):
        cfg = GovernorConfig(backend="prediction", prediction_horizon=5000.0)
        x = FullState(SlowElements(21378.0, 0.65, np.pi / 10, 0.0, np.pi), np.pi)
        far = SlowElements(6878.0, 0.02, np.pi / 2, 3 * np.pi / 2, np.pi)
        assert not prediction_admissible(far, mode_set.matrices[0], x, cfg,
                                         limits, const)

    def test_margin_rule_applies(self, mode_set, limits, const):
        cfg = GovernorConfig(backend="prediction", prediction_horizon=5000.0)
        ref = SlowElements(limits.r_min + 0.5, 0.0, 1.0, 0.5, 0.5)
        x = FullState(SlowElements(9000.0, 0.2, 1.0, 0.5, 0.5), 2.0)
        assert not prediction_admissible(ref, mode_set.matrices[0], x, cfg,
                                         limits, const)

    def test_accepts_superset_of_sublevel_backend(self, mode_set, limits, const):
        """The sublevel set bounds the whole reachable set, so it is the
        more conservative test on small reference steps."""
        from orbitgov import is_admissible
        rng = np.random.default_rng(12)
        cfg = GovernorConfig(backend="prediction")
        p = mode_set.matrices[0]
        agree, pred_only, lyap_only = 0, 0, 0
        for _ in range(12):
            el = SlowElements(rng.uniform(1.6e4, 2.2e4), rng.uniform(0.4, 0.7),
                              rng.uniform(0.3, 1.2), rng.uniform(0, 2),
                              rng.uniform(0, 6))
            x = FullState(el, rng.uniform(0, 2 * np.pi))
            step = rng.normal(size=5) * np.array([80.0, 4e-3, 4e-3, 4e-3, 4e-3])
            try:
                ref = SlowElements.from_array(el.as_array() + step)
            except ValueError:
                continue
            lyap = is_admissible(ref, p, el, x, limits, const)
            pred = prediction_admissible(ref, p, x, cfg, limits, const)
            if lyap and not pred:
                lyap_only += 1
            elif pred and not lyap:
                pred_only += 1
            else:
                agree += 1
        assert lyap_only == 0, (agree, pred_only, lyap_only)
