"""The twelve acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line, printed in the terminal summary.
"""
import filecmp
import math
import subprocess
import sys
import time
from pathlib import Path

import pytest

from chainlab import battery

CFG = battery.BatteryConfig()


def _failed(rep):
    return ", ".join(f"{a.name}={a.observed}" for a in rep.failures())


def _timed(name):
    start = time.perf_counter()
    rep = battery.run_check(name, CFG)
    return rep, time.perf_counter() - start


def test_01_bessel_vs_quadrature(record_criterion):
    rep, secs = _timed("bessel")
    err = rep.metrics["max_abs_error"]
    ok = rep.passed and err <= 1e-11 and secs < 10.0
    record_criterion(1, "Bessel vs quadrature oracle, n<=200, t in {0.1,1,10,100,400}", ok,
                     f"(max err {err:.2e} <= 1e-11, {secs:.1f}s < 10s)")
    assert ok, _failed(rep)


def test_02_identities(record_criterion):
    rep, _ = _timed("identities")
    m = rep.metrics
    record_criterion(2, "sum of squares, addition theorem and uniform bound", rep.passed,
                     f"(residuals {m['sum_sq_residual']:.1e}, {m['addition_residual']:.1e} <= 1e-9;"
                     f" bound excess {m['bound_excess']:.3f} <= 0)")
    assert rep.passed, _failed(rep)


def test_03_oracle_cross_validation(record_criterion):
    rep, secs = _timed("oracle")
    errs = [rep.metrics[f"max_abs_diff_omega1={om}"] for om in CFG.oracle_omegas]
    ok = rep.passed and max(errs) <= 1e-6 and secs < 60.0
    record_criterion(3, "propagator vs velocity Verlet, 4096 sites, t=20", ok,
                     f"(max diff {max(errs):.2e} <= 1e-6, {secs:.1f}s < 60s)")
    assert ok, _failed(rep)


def test_04_l2_bound(record_criterion):
    rep, _ = _timed("l2_bound")
    r = rep.metrics["max_ratio"]
    record_criterion(4, "|q(t)|_inf / |q(0)|_2 over 100 samples, t in {1,5,25,125}", rep.passed,
                     f"(max ratio {r:.4f} <= 1 + 1e-9)")
    assert rep.passed, _failed(rep)


def test_05_upper_envelope(record_criterion):
    rep, _ = _timed("envelope")
    record_criterion(5, "upper envelope (sqrt(2 gamma w t) + 2), 100 Rademacher samples",
                     rep.passed, f"(worst ratio {rep.metrics['worst_ratio']:.4f} <= 1,"
                                 f" gamma {rep.metrics['gamma']:.15f})")
    assert rep.passed, _failed(rep)


def test_06_cos_norm_growth(record_criterion):
    rep, secs = _timed("cos_norm")
    m = rep.metrics
    ok = rep.passed and secs < 120.0
    record_criterion(6, "cos-norm log-log slope over t in {1e2,1e3,1e4}", ok,
                     f"(slope {m['slope']:.4f} in 0.5 +- 0.03, a={m['a_hat']:.3f},"
                     f" b={m['b_hat']:.3f}, {secs:.1f}s < 120s)")
    assert ok, _failed(rep)


def test_07_adversarial(record_criterion):
    rep, _ = _timed("adversarial")
    m = rep.metrics
    record_criterion(7, "adversarial bump growth and 3-time multiscale construction", rep.passed,
                     f"(c in [{m['c_min']:.4f}, {m['c_max']:.4f}], spread {m['c_spread']:.3f}"
                     f" <= 0.25; multiscale q0 {[round(v, 3) for v in m['multiscale_q0']]})")
    assert rep.passed, _failed(rep)


def test_08_covariance(record_criterion):
    rep, _ = _timed("covariance")
    record_criterion(8, "empirical vs exact covariance, 1e4 samples, t in {10,200}", rep.passed,
                     f"(max |z| {rep.metrics['max_z_exact']:.2f} <= 4; limit form at t=200)")
    assert rep.passed, _failed(rep)


def test_09_normality(record_criterion):
    rep, _ = _timed("normality")
    m = rep.metrics
    record_criterion(9, "KS distance at t=500 with failing t=0 control", rep.passed,
                     f"(KS {m['ks_distance']:.4f} <= {m['threshold']:.4f};"
                     f" control {m['control_ks_distance']:.3f} rejected)")
    assert rep.passed, _failed(rep)


def test_10_gaussian_sup(record_criterion):
    rep, _ = _timed("gaussian_sup")
    m = rep.metrics
    record_criterion(10, "Gaussian sup bound on the decorrelated 20-point grid", rep.passed,
                     f"(P_hat {m['empirical_p']:.4f} >= {m['bound']:.4f} - 3 SE;"
                     f" max |J0| off-diagonal {m['max_offdiag_cov']:.1e} <= 0.005)")
    assert rep.passed, _failed(rep)


def test_11_sup_growth(record_criterion):
    rep, _ = _timed("sup_growth")
    a = CFG.sup_threshold
    fr = rep.metrics[f"fractions_a={a}"]
    zs = rep.metrics[f"strict_increase_a={a}"]
    record_criterion(11, "exceedance fraction of 2 sigma strictly increasing over H", rep.passed,
                     f"(fractions {[round(f, 4) for f in fr]}, z {[round(z, 1) for z in zs]} > 3)")
    assert rep.passed, _failed(rep)


def _suite(out: Path) -> subprocess.CompletedProcess:
    return subprocess.run([sys.executable, "-m", "chainlab", "suite", "--out", str(out)],
                          capture_output=True, check=False)


@pytest.mark.slow
def test_12_reproducible_suite(tmp_path, record_criterion):
    first, second = _suite(tmp_path / "a"), _suite(tmp_path / "b")
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    same_files = files == sorted(p.name for p in (tmp_path / "b").iterdir())
    _, mismatch, errors = filecmp.cmpfiles(tmp_path / "a", tmp_path / "b", files, shallow=False)
    ok = (first.returncode == 0 and second.returncode == 0 and same_files and not mismatch
          and not errors and first.stdout == second.stdout)
    record_criterion(12, "two suite runs byte-identical", ok,
                     f"({len(files)} artifacts + stdout compared, exit codes"
                     f" {first.returncode}/{second.returncode})")
    assert ok, (mismatch, errors, first.stderr.decode()[-2000:])
