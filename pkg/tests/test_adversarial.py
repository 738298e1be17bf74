import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chainlab import adversarial as adv
from chainlab.bessel import bessel_j, even_order_sum
from chainlab.errors import ConstructionError, DomainError


class TestPhaseFunction:
    def test_endpoints(self):
        assert adv.g_fn(0.0) == 1.0
        assert adv.g_fn(1.0) == 0.0

    def test_derivative(self):
        h = 1e-6
        fd = (adv.g_fn(0.5 + h) - adv.g_fn(0.5 - h)) / (2 * h)
        assert fd == pytest.approx(-math.acos(0.5), abs=1e-6)
        assert adv.g_prime(0.5) == pytest.approx(-math.acos(0.5))

    def test_domain(self):
        with pytest.raises(DomainError):
            adv.g_fn(1.5)


class TestMainTerm:
    def test_ratio_error_shrinks_like_inverse_t(self):
        errs = []
        for t in (1e3, 1e4):
            k = round(0.2 * t)
            errs.append(abs(bessel_j(2 * k, t) / adv.f_main_term(k, t) - 1.0))
            assert errs[-1] <= 1.0 / t
        assert errs[1] < errs[0]

    @pytest.mark.parametrize("t", [1e3, 1e4])
    def test_scaled_error_is_bounded(self, t):
        # t * |J_2k - f_k| / sqrt(2 / (pi t)) stays O(1) across the window
        ks = np.arange(int(0.1 * t), int(0.2 * t), max(1, int(t / 500)))
        err = max(abs(bessel_j(2 * k, t) - adv.f_main_term(k, t)) for k in ks)
        assert err * t / math.sqrt(2 / (math.pi * t)) <= 0.25

    def test_sign_matches_phase(self):
        for k in (100, 250, 333):
            p = adv.phase_point(k, 2000.0)
            assert np.sign(p.f) == np.sign(math.cos(p.x - math.pi / 4))

    def test_amplitude_at_center(self):
        t = 500.0
        assert abs(adv.f_main_term(0, t)) == pytest.approx(
            math.sqrt(2 / (math.pi * t)) * abs(math.cos(t - math.pi / 4)))

    def test_domain(self):
        with pytest.raises(DomainError):
            adv.f_main_term(600, 1000.0)
        with pytest.raises(DomainError):
            adv.f_main_term(1, 0.0)


class TestSupportSet:
    def test_all_terms_positive(self):
        plan = adv.build_support_set(3000.0, 0.5)
        x, f = adv._main_terms(plan.I.astype(float), plan.t)
        assert np.all(f > 0)
        phase = np.mod(x, 2 * np.pi)
        assert np.all((phase > 0) & (phase < np.pi / 2))

    def test_indices_in_window(self):
        plan = adv.build_support_set(1e4, 0.5)
        assert plan.I.min() >= 0.1 * plan.t and plan.I.max() <= 0.2 * plan.t

    def test_size_fraction_stable(self):
        fr = [adv.build_support_set(T, 0.5).I.size / T for T in (1e3, 1e4)]
        assert 0 < min(fr) and max(fr) / min(fr) < 1.1

    def test_phase_decrements(self):
        d = adv.phase_decrements(adv.build_support_set(1e4, 0.5))
        assert d["ok"]
        assert -2 * d["eps"] < d["min_step"] <= d["max_step"] < -d["eps"]

    def test_plan_round_trip(self):
        plan = adv.build_support_set(1e3, 0.5, sign=-1)
        q0 = plan.q0
        assert q0.inf_norm() == 1.0
        assert set(np.unique(q0.values)) <= {-1.0, 0.0}
        rebuilt = np.concatenate([np.arange(lo, hi + 1) for lo, hi in plan.ranges()])
        np.testing.assert_array_equal(rebuilt, plan.I)
        s = plan.summary()
        assert s["size"] == plan.I.size and len(s["sha256"]) == 64

    def test_rejections(self):
        with pytest.raises(DomainError):
            adv.build_support_set(1e3, 0.5, a=0.3, b=0.2)
        with pytest.raises(DomainError):
            adv.build_support_set(1e3, 0.5, sign=0)
        with pytest.raises(DomainError):
            adv.build_support_set(10.0, 0.5)

    def test_empty_support(self):
        with pytest.raises(ConstructionError):
            adv.build_support_set(5.0, 0.5, a=0.1, b=0.11, t_min=1.0)


class TestGrowth:
    def test_main_term_ratio(self):
        rep = adv.measure_growth(adv.build_support_set(1e4, 0.5))
        assert rep.passed
        assert abs(rep.metrics["main_term_ratio"] - 1) <= 5e-4
        assert rep.metrics["lower_ratio"] == pytest.approx(2.0, rel=1e-3)

    def test_exact_value_matches_sum(self):
        plan = adv.build_support_set(2e3, 0.5)
        direct = sum(bessel_j(2 * int(k), plan.t) for k in plan.I)
        rep = adv.measure_growth(plan)
        assert rep.metrics["q0_T"] == pytest.approx(direct, abs=1e-12)

    def test_negative_sign(self):
        rep = adv.measure_growth(adv.build_support_set(1e3, 0.5, sign=-1))
        assert rep.passed and rep.metrics["q0_T"] < 0

    def test_scan(self):
        rep = adv.growth_scan([1e3, 3e3, 1e4, 3e4], 0.5)
        assert rep.passed
        assert rep.metrics["c_spread"] <= 0.25


@pytest.mark.slow
def test_multiscale():
    Ts, multi, rep = adv.build_multiscale(1e3, count=3, omega1=0.5)
    assert rep.passed, [a.name for a in rep.failures()]
    assert Ts[0] < Ts[1] < Ts[2]
    signs = [np.sign(v) for v in multi.values]
    assert signs == [1, -1, 1]
    for T, v in zip(Ts, multi.values):
        assert abs(v) >= 0.5 * multi.c * math.sqrt(T)
    first, second = multi.plans[0], multi.plans[1]
    assert first.I.max() < second.I.min()


def test_multiscale_validation():
    with pytest.raises(DomainError):
        adv.build_multiscale(1e3, count=1)
    with pytest.raises(ConstructionError):
        adv.build_multiscale(1e3, count=3, max_T=2e3)


@settings(max_examples=10, deadline=None)
@given(T=st.floats(500.0, 5000.0))
def test_growth_constant_positive(T):
    plan = adv.build_support_set(T, 0.5)
    value = even_order_sum(plan.t, plan.I)
    assert value > 0
    assert abs(value / plan.main_term - 1) <= 5.0 / T
