import math

import numpy as np
import pytest

from chainlab import adversarial, bounds
from chainlab.errors import DomainError
from chainlab.propagator import LatticeWindow

# root of exp(1/g)/g = 1/e, bisection on [1, 10] cross-checked with 1/W(1/e) at 40 digits
GAMMA = 3.591121476668622


def test_gamma_pinned():
    root = bounds.solve_gamma()
    assert root.gamma == pytest.approx(GAMMA, rel=1e-15)
    assert abs(root.residual) <= 1e-12


def test_gamma_equivalent_forms():
    g = bounds.solve_gamma().gamma
    assert abs(math.exp(1 / g) / g * math.e - 1.0) <= 1e-12
    assert g == pytest.approx(math.exp(1 + 1 / g), rel=1e-12)


def test_gamma_against_lambert():
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 40
    assert float(1 / mpmath.lambertw(mpmath.exp(-1))) == pytest.approx(GAMMA, rel=1e-15)


class TestEnvelope:
    def test_at_rest(self):
        assert bounds.upper_envelope(0.7, 0.0, 1.0) == 2.0

    def test_zero_data(self):
        assert bounds.upper_envelope(1.0, 50.0, 0.0) == 0.0

    def test_value(self):
        assert bounds.upper_envelope(1.0, 100.0, 1.0) == pytest.approx(2 + math.sqrt(200 * GAMMA))

    def test_domain(self):
        with pytest.raises(DomainError):
            bounds.upper_envelope(0.0, 1.0, 1.0)


class TestVerifyUpperBound:
    def test_rejects_no_samples(self):
        with pytest.raises(DomainError):
            bounds.verify_upper_bound(0, 0.5, [1.0], seed=0)

    def test_zero_data_ratio(self):
        q0 = LatticeWindow.zeros(-5, 5)
        assert bounds.envelope_ratio(q0, 1.0, 3.0) == 0.0

    def test_small_run(self):
        rep = bounds.verify_upper_bound(10, 0.5, [1.0, 10.0], seed=4)
        assert rep.passed
        assert 0.0 < rep.metrics["worst_ratio"] <= 1.0

    def test_uniform_distribution(self):
        rep = bounds.verify_upper_bound(5, 1.0, [3.0], seed=1, distribution="uniform")
        assert rep.passed

    def test_seeded(self):
        a = bounds.verify_upper_bound(3, 0.5, [5.0], seed=9)
        b = bounds.verify_upper_bound(3, 0.5, [5.0], seed=9)
        assert a.metrics["worst_ratio"] == b.metrics["worst_ratio"]

    def test_adversarial_bump_ratio(self):
        plan = adversarial.build_support_set(2000.0, 0.5)
        q0 = plan.q0
        ratio = bounds.envelope_ratio(q0, 0.5, plan.target_T, sites=(0, 0))
        assert 0.0 < ratio <= 1.0


class TestCosNormScan:
    def test_rejects_zero_time(self):
        with pytest.raises(DomainError):
            bounds.cos_norm_scan(0.5, [0.0])

    def test_rejects_unsorted(self):
        with pytest.raises(DomainError):
            bounds.cos_norm_scan(0.5, [10.0, 5.0, 20.0])

    def test_slope(self):
        rep = bounds.cos_norm_scan(0.5, [1e2, 1e3, 1e4])
        assert rep.passed
        assert abs(rep.metrics["slope"] - 0.5) <= 0.03
        assert 0 < rep.metrics["a_hat"] <= rep.metrics["b_hat"]


def test_sample_unit_window():
    rng = np.random.default_rng(0)
    w = bounds.sample_unit_window(rng, 10)
    assert set(np.unique(w.values)) <= {-1.0, 1.0}
    assert w.fill == "none"
    with pytest.raises(DomainError):
        bounds.sample_unit_window(rng, 3, "cauchy")
