import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chainlab import finite_oracle as fo
from chainlab.bessel import bessel_j
from chainlab.errors import DomainError
from chainlab.propagator import LatticeWindow
from chainlab.report import ExperimentReport


def _delta_chain(size=64, omega1=1.0, boundary="fixed_zero"):
    return fo.embed(LatticeWindow.delta(0), None, omega1, size, boundary)


def test_zero_state_stays_zero():
    chain = fo.FiniteChain(16, 1.0, "periodic", np.zeros(16), np.zeros(16))
    out = fo.step_verlet(chain, 0.1)
    np.testing.assert_array_equal(out.q, 0.0)
    np.testing.assert_array_equal(out.p, 0.0)


@pytest.mark.parametrize("omega1,dt", [(1.0, 1e-3), (0.5, 0.2), (2.0, 0.1)])
def test_single_step_from_delta(omega1, dt):
    out = fo.step_verlet(_delta_chain(omega1=omega1), dt)
    assert out.q[out.site(0)] == pytest.approx(1.0 - omega1**2 * dt**2, abs=1e-15)
    assert out.q[out.site(1)] == pytest.approx(0.5 * omega1**2 * dt**2, abs=1e-15)


def test_energy_drift_smooth_data():
    x = np.arange(-60, 61)
    q0 = LatticeWindow(-60, np.exp(-(x / 10.0) ** 2))
    rep = ExperimentReport("drift")
    fo.integrate(fo.embed(q0, None, 1.0, 512), 1e-3, 10.0, report=rep)
    assert rep.metrics["energy_drift"] <= 1e-8


def test_integrate_to_zero_is_identity():
    chain = _delta_chain()
    out = fo.integrate(chain, 1e-3, 0.0)
    np.testing.assert_array_equal(out.q, chain.q)
    np.testing.assert_array_equal(out.p, chain.p)


def test_delta_center_matches_bessel():
    out = fo.integrate(_delta_chain(4096, 0.5), 1e-3, 20.0)
    assert abs(out.q[out.site(0)] - bessel_j(0, 20.0)) <= 1e-6


def test_last_step_is_shortened():
    a = fo.integrate(_delta_chain(), 0.1, 1.05)
    b = fo.integrate(_delta_chain(), 0.05, 1.05)
    assert abs(a.q[a.site(0)] - b.q[b.site(0)]) <= 1e-3


def test_time_reversal():
    rng = np.random.default_rng(1)
    chain = fo.FiniteChain(32, 1.0, "periodic", rng.normal(size=32), rng.normal(size=32))
    back = chain
    for _ in range(50):
        back = fo.step_verlet(back, 0.05)
    for _ in range(50):
        back = fo.step_verlet(back, -0.05)
    np.testing.assert_allclose(back.q, chain.q, atol=1e-12)
    np.testing.assert_allclose(back.p, chain.p, atol=1e-12)


def test_boundaries_agree_inside_light_cone():
    fixed = fo.integrate(_delta_chain(256, 1.0, "fixed_zero"), 1e-2, 10.0)
    periodic = fo.integrate(_delta_chain(256, 1.0, "periodic"), 1e-2, 10.0)
    c = fixed.center
    np.testing.assert_allclose(fixed.q[c - 20:c + 21], periodic.q[c - 20:c + 21], atol=1e-14)


def test_periodic_conserves_momentum():
    rng = np.random.default_rng(2)
    chain = fo.FiniteChain(40, 1.3, "periodic", rng.normal(size=40), rng.normal(size=40))
    out = fo.integrate(chain, 0.01, 3.0)
    assert out.p.sum() == pytest.approx(chain.p.sum(), abs=1e-11)


class TestValidation:
    def test_step_limit(self):
        with pytest.raises(DomainError):
            fo.step_verlet(_delta_chain(omega1=1.0), 0.6)
        with pytest.raises(DomainError):
            fo.step_verlet(_delta_chain(), 0.0)

    def test_chain_fields(self):
        with pytest.raises(DomainError):
            fo.FiniteChain(2, 1.0, "periodic", np.zeros(2), np.zeros(2))
        with pytest.raises(DomainError):
            fo.FiniteChain(8, 1.0, "open", np.zeros(8), np.zeros(8))
        with pytest.raises(DomainError):
            fo.FiniteChain(8, 1.0, "periodic", np.zeros(7), np.zeros(8))

    def test_embed_must_fit(self):
        with pytest.raises(DomainError):
            fo.embed(LatticeWindow(-100, np.ones(201)), None, 1.0, 64)

    def test_negative_end_time(self):
        with pytest.raises(DomainError):
            fo.integrate(_delta_chain(), 1e-3, -1.0)


def test_cross_validation_small():
    rng = np.random.default_rng(3)
    q0 = LatticeWindow(-10, rng.uniform(-1, 1, 21))
    rep = fo.cross_validate(q0, 1.0, 4.0, dt=1e-3, size=512)
    assert rep.passed, rep.metrics
    assert rep.metrics["max_abs_diff"] <= 1e-6


@settings(max_examples=15, deadline=None)
@given(values=st.lists(st.floats(-1, 1), min_size=1, max_size=9), t=st.floats(0.5, 3.0))
def test_verlet_tracks_propagator(values, t):
    q0 = LatticeWindow(-(len(values) // 2), values)
    rep = fo.cross_validate(q0, 1.0, t, dt=1e-3, size=256, inner_half_width=20, tol=1e-5)
    assert rep.passed, rep.metrics["max_abs_diff"]
