import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import exhaustive_argmax
from slasim import policy
from slasim.model import BoundedProportional, Flat, Proportional, ServiceClass, SessionRecord
from slasim.policy import (
    ACCEPT,
    REJECT,
    UNBOUNDED,
    ClassView,
    Controller,
    PolicyConfig,
    ThresholdVector,
    current_state_decide,
    default_threshold_cap,
    estimate_threshold_revenue,
    offered_loads_allocation,
    predict_session_final_wait,
    threshold_decide,
    threshold_revenue_curve,
    threshold_search,
    window_boundary_reconfigure,
)
from slasim.presets import get_preset
from slasim.queueing import TrafficEstimate, erlang_c
from slasim.sim import nominal_estimates


def est(rho=1.0, delta=0.1, b=1.0, ca2=1.0, cs2=1.0, cls=0):
    return TrafficEstimate(cls, lambda_hat=rho / b, b_hat=b, ca2_hat=ca2, cs2_hat=cs2, delta_hat=delta)


def table1_class4(reward=Flat(10, 10)):
    return ServiceClass(4, b=1, gamma=1, k=50, q=1, reward=reward)


class TestAllocation:
    def test_table_loads(self):
        ests = [est(r) for r in (5, 2, 4, 5)]
        assert offered_loads_allocation(ests, [1] * 4, 20) == (6, 3, 5, 6)

    def test_zero_load_even_split(self):
        assert offered_loads_allocation([est(0)] * 4, [1] * 4, 20) == (5, 5, 5, 5)
        assert offered_loads_allocation([est(0)] * 3, [1] * 3, 20) == (7, 7, 6)

    def test_single_class(self):
        assert offered_loads_allocation([est(3.3)], [1], 20) == (20,)

    def test_tiny_class_gets_a_server(self):
        assert offered_loads_allocation([est(100), est(0.01)], [1, 1], 5) == (4, 1)

    @given(
        rhos=st.lists(st.floats(0, 50), min_size=1, max_size=8),
        n=st.integers(1, 64),
        scale=st.floats(0.01, 100),
    )
    def test_sum_and_alpha_scaling(self, rhos, n, scale):
        ests = [est(r) for r in rhos]
        alloc = offered_loads_allocation(ests, [1.0] * len(rhos), n)
        assert sum(alloc) == n
        assert all(x >= 0 for x in alloc)
        scaled = offered_loads_allocation(ests, [scale] * len(rhos), n)
        assert scaled == alloc

    @given(rhos=st.lists(st.floats(0.01, 50), min_size=1, max_size=6), n=st.integers(6, 40))
    def test_positive_weights_served(self, rhos, n):
        alloc = offered_loads_allocation([est(r) for r in rhos], [1.0] * len(rhos), n)
        assert all(x >= 1 for x in alloc)


class TestThresholdEstimator:
    def test_zero_threshold(self):
        assert estimate_threshold_revenue(table1_class4(), est(delta=0.2), 6, 0) == 0

    def test_light_traffic_limit(self):
        cls = table1_class4()
        d = 1e-6
        r = estimate_threshold_revenue(cls, est(delta=d), 6, 10)
        assert r == pytest.approx(d * 10, rel=1e-3)

    @given(
        delta=st.floats(0.001, 0.5),
        n=st.integers(1, 12),
        cap=st.integers(1, 60),
        kind=st.sampled_from(["flat", "prop", "bounded"]),
        ca2=st.floats(0.5, 7),
    )
    @settings(max_examples=60, deadline=None)
    def test_curve_matches_direct_formula(self, delta, n, cap, kind, ca2):
        reward = {
            "flat": Flat(10, 20),
            "prop": Proportional(10, 5),
            "bounded": BoundedProportional(10, 2.5, 2, 10),
        }[kind]
        cls = ServiceClass(1, b=1, gamma=2, k=50, q=1, reward=reward)
        e = est(delta=delta, ca2=ca2)
        curve = threshold_revenue_curve(cls, e, n, cap)
        direct = [estimate_threshold_revenue(cls, e, n, m) for m in range(cap + 1)]
        for a, b in zip(curve, direct):
            if math.isinf(b):
                assert a == b
            else:
                assert a == pytest.approx(b, rel=1e-9, abs=1e-12)

    def test_unstable_states_give_infinite_wait(self):
        cls = table1_class4(Proportional(40, 20))
        # 7 sessions on 6 servers is unstable: the unbounded penalty dominates
        assert estimate_threshold_revenue(cls, est(delta=0.2), 6, 7) == -math.inf


class TestThresholdSearch:
    def test_first_decrease(self, monkeypatch):
        monkeypatch.setattr(policy, "threshold_revenue_curve", lambda *a: np.array([0, 3, 5, 4, 6, 7.0]))
        assert threshold_search(table1_class4(), est(delta=0.2), 6, 0.01, cap=5) == 2

    def test_small_gain_is_unbounded(self, monkeypatch):
        monkeypatch.setattr(policy, "threshold_revenue_curve", lambda *a: np.array([0, 3, 5, 5.001, 5.002]))
        assert threshold_search(table1_class4(), est(delta=0.2), 6, 0.01, cap=4) == UNBOUNDED

    def test_cap_is_unbounded(self, monkeypatch):
        monkeypatch.setattr(policy, "threshold_revenue_curve", lambda *a: np.arange(4.0))
        assert threshold_search(table1_class4(), est(delta=0.2), 6, 0.01, cap=3) == UNBOUNDED

    def test_light_load_unbounded(self):
        cls = ServiceClass(1, b=1, gamma=2, k=50, q=1, reward=Flat(10, 10))
        assert threshold_search(cls, est(delta=0.005), 10) == UNBOUNDED

    def test_table_class4_matches_exhaustive(self):
        cls, e = table1_class4(), est(delta=0.2)
        grid = [estimate_threshold_revenue(cls, e, 6, m) for m in range(201)]
        m_star = threshold_search(cls, e, 6)
        assert m_star == exhaustive_argmax(grid)
        assert m_star == 5

    def test_default_cap(self):
        assert default_threshold_cap(2.5) == 75
        assert default_threshold_cap(0) == 50

    def test_invalid(self):
        with pytest.raises(ValueError):
            threshold_search(table1_class4(), est(), 0)
        with pytest.raises(ValueError):
            ThresholdVector([1], epsilon=0)


class TestThresholdDecide:
    @pytest.mark.parametrize("active,limit,expected", [(2, 3, True), (3, 3, False), (10**6, UNBOUNDED, True)])
    def test_examples(self, active, limit, expected):
        assert threshold_decide(active, limit).accept is expected

    @given(limit=st.integers(0, 50), x=st.integers(0, 60), dx=st.integers(1, 20))
    def test_monotone(self, limit, x, dx):
        if not threshold_decide(x, limit):
            assert not threshold_decide(x + dx, limit)


class TestPrediction:
    def rec(self, d, cum):
        return SessionRecord(0, 0, 0.0, k=50, jobs_completed=d, cumulative_wait=cum)

    def test_fresh(self):
        assert predict_session_final_wait(self.rec(0, 0), 50, 0.4) == pytest.approx(0.4)

    def test_done(self):
        assert predict_session_final_wait(self.rec(50, 20), 50, math.inf) == pytest.approx(0.4)

    def test_blend(self):
        assert predict_session_final_wait(self.rec(25, 50), 50, 1) == pytest.approx(1.5)


def _flat_v(cls, sessions, extra, n, b=1.0):
    """Reference V for a Flat pool: each session pays r times the chance its
    remaining jobs overrun its leftover per-job wait budget."""
    count = len(sessions) + extra
    lam = count * cls.gamma
    if lam * b >= n:
        return count * (cls.reward.c - cls.reward.r)
    c_wait = erlang_c(n, lam * b)
    decay = n / b - lam
    total = 0.0
    for d, cum in [(s.jobs_completed, s.cumulative_wait) for s in sessions] + [(0, 0.0)] * extra:
        budget = (cls.k * cls.q - cum) / (cls.k - d)
        tail = 1.0 if budget < 0 else c_wait * math.exp(-decay * budget)
        total += cls.reward.c - cls.reward.r * tail
    return total


class TestCurrentState:
    def test_empty_system_accepts(self):
        cls = ServiceClass(1, b=1, gamma=2, k=50, q=1, reward=Flat(10, 10))
        state = [ClassView((), 0, 4), ClassView((), 0, 4)]
        assert current_state_decide(state, 0, [est(), est()], [cls, cls]).accept

    def test_certain_violation_rejects(self):
        cls = ServiceClass(1, b=1, gamma=2, k=50, q=1, reward=Flat(1, 100))
        sessions = tuple(SessionRecord(i, 0, 0.0, k=50, jobs_completed=10, cumulative_wait=5) for i in range(2))
        # 3 sessions at gamma 2 need 6 servers; 4 or 5 are never enough
        state = [ClassView(sessions, 0, 4), ClassView((), 0, 2)]
        other = ServiceClass(2, b=1, gamma=2, k=50, q=1, reward=Flat(1, 100))
        assert current_state_decide(state, 0, [est(), est()], [cls, other]) == REJECT

    def test_tie_rejects(self):
        cls = ServiceClass(1, b=1, gamma=2, k=50, q=1, reward=Flat(0, 0))
        assert current_state_decide([ClassView((), 0, 2)], 0, [est()], [cls]) == REJECT

    def test_flip_on_constructed_state(self):
        """Single class, one server, two existing sessions.  The only difference
        between the scenarios is how much wait budget the sessions have left."""
        cls = ServiceClass(1, b=1, gamma=0.3, k=50, q=1, reward=Flat(10, 10))
        outcomes = []
        # 48 jobs done: waits of 0 leave a budget of 25 s per remaining job, 48.5 leave 0.75 s
        for cum in (0.0, 48.5):
            sessions = tuple(SessionRecord(i, 0, 0.0, k=50, jobs_completed=48, cumulative_wait=cum) for i in range(2))
            v_reject = _flat_v(cls, sessions, 0, 1)
            v_accept = _flat_v(cls, sessions, 1, 1)
            decision = current_state_decide([ClassView(sessions, 0, 1)], 0, [est(delta=0.01)], [cls])
            assert decision.accept is (v_accept > v_reject)
            assert decision.donor is None
            outcomes.append(decision.accept)
        assert outcomes == [True, False]

    def test_reallocation_never_empties_donor(self):
        cls = ServiceClass(1, b=1, gamma=1, k=50, q=1, reward=Flat(10, 10))
        busy = tuple(SessionRecord(i, 0, 0.0, k=50, jobs_completed=5, cumulative_wait=1) for i in range(2))
        state = [ClassView(busy, 0, 4), ClassView(busy, 0, 1), ClassView((), 0, 3)]
        decision = current_state_decide(state, 0, [est()] * 3, [cls] * 3)
        assert decision.accept
        assert decision.donor in (None, 2)

    def test_uses_donor_when_short(self):
        cls = ServiceClass(1, b=1, gamma=2, k=50, q=1, reward=Flat(10, 10))
        busy = tuple(SessionRecord(i, 0, 0.0, k=50, jobs_completed=5, cumulative_wait=1) for i in range(2))
        # a third session makes 6 servers unstable, so a server must come from the idle pool
        state = [ClassView(busy, 0, 6), ClassView((), 0, 6)]
        decision = current_state_decide(state, 0, [est(), est()], [cls, cls])
        assert decision == policy.Decision(True, 1)

    @given(
        n0=st.integers(1, 8), n1=st.integers(1, 8), a0=st.integers(0, 4), a1=st.integers(0, 4),
        d=st.integers(0, 49), cum=st.floats(0, 80),
    )
    @settings(max_examples=80, deadline=None)
    def test_deterministic_and_donor_safe(self, n0, n1, a0, a1, d, cum):
        cls = ServiceClass(1, b=1, gamma=1, k=50, q=1, reward=Flat(10, 15))
        mk = lambda cnt: tuple(SessionRecord(i, 0, 0.0, k=50, jobs_completed=d, cumulative_wait=cum) for i in range(cnt))
        state = [ClassView(mk(a0), 0, n0), ClassView(mk(a1), 0, n1)]
        first = current_state_decide(state, 0, [est(), est()], [cls, cls])
        assert first == current_state_decide(state, 0, [est(), est()], [cls, cls])
        if first.donor is not None:
            assert state[first.donor].servers >= 2


class TestController:
    def test_table_allocation(self):
        cfg = get_preset("fig6a").config(0.1, "threshold")
        ctl = Controller(cfg.classes, cfg.servers, cfg.policy)
        alloc, thresholds = window_boundary_reconfigure(ctl, nominal_estimates(cfg))
        assert alloc == (6, 3, 5, 6)
        assert len(thresholds.limits) == 4

    def test_admit_all_keeps_unbounded(self):
        cfg = get_preset("fig6a").config(0.2, "current_state")
        ctl = Controller(cfg.classes, cfg.servers, cfg.policy)
        _, thresholds = ctl.reconfigure(nominal_estimates(cfg))
        assert thresholds.limits == [UNBOUNDED] * 4

    def test_policy_config_validation(self):
        with pytest.raises(ValueError):
            PolicyConfig("nonsense")
        with pytest.raises(ValueError):
            PolicyConfig(ewma_beta=0)

    def test_decision_constants(self):
        assert ACCEPT and not REJECT
