"""The regression battery behind ``chainlab suite``.

Each ``check_*`` function runs one desk-scale experiment and returns an
:class:`ExperimentReport` whose assertions carry the pass/fail verdicts.
Reports hold no wall-clock data, so two runs with the same configuration are
byte-identical; runtime limits are enforced by the test-suite instead.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import adversarial, bessel, bounds, finite_oracle, gaussian, stochastic
from . import propagator as prop
from .report import ExperimentReport

__all__ = ["BatteryConfig", "CHECKS", "run_check", "run_battery"]


@dataclass(frozen=True)
class BatteryConfig:
    seed: int = 20200217
    # bessel sweep
    bessel_orders: int = 200
    bessel_ts: tuple = (0.1, 1.0, 10.0, 100.0, 400.0)
    bessel_tol: float = 1e-11
    identity_count: int = 50
    identity_tol: float = 1e-9
    # finite-chain oracle
    oracle_omegas: tuple = (0.5, 1.0)
    oracle_t: float = 20.0
    oracle_dt_scale: float = 2.5e-4
    oracle_size: int = 4096
    oracle_support: int = 50
    oracle_tol: float = 1e-6
    # bounds
    l2_samples: int = 100
    l2_ts: tuple = (1.0, 5.0, 25.0, 125.0)
    l2_support: int = 20
    envelope_samples: int = 100
    envelope_omega1: float = 0.5
    envelope_ts: tuple = (1.0, 10.0, 100.0)
    cos_omega1: float = 0.5
    cos_ts: tuple = (1e2, 1e3, 1e4)
    # adversarial
    adv_omega1: float = 0.5
    adv_Ts: tuple = (1e3, 3e3, 1e4, 3e4)
    adv_multiscale_T1: float = 1e3
    adv_multiscale_count: int = 3
    # ensembles; omega1 = 1/2 makes chain time equal to the Bessel argument
    ens_omega1: float = 0.5
    cov_samples: int = 10_000
    cov_ts: tuple = (10.0, 200.0)
    cov_s: tuple = (0.0, 1.0, 2.0, 5.0)
    ks_samples: int = 10_000
    ks_t: float = 500.0
    sup_samples: int = 2000
    sup_horizons: tuple = (10.0, 100.0, 1000.0)
    sup_threshold: float = 2.0
    # gaussian
    gauss_a: float = 1.0
    gauss_delta: float = 0.1
    gauss_N: int = 20
    gauss_samples: int = 5000
    eps: float = prop.DEFAULT_EPS
    skip: tuple = field(default=())


def check_bessel(cfg: BatteryConfig) -> ExperimentReport:
    rep = ExperimentReport("bessel_vs_quadrature", config={
        "orders": cfg.bessel_orders, "ts": list(cfg.bessel_ts), "tol": cfg.bessel_tol})
    rows, worst = [], 0.0
    for t in cfg.bessel_ts:
        for n in range(cfg.bessel_orders + 1):
            v, o = bessel.bessel_j(n, t), bessel.bessel_j_oracle(n, t)
            worst = max(worst, abs(v - o))
        rows.append((t, worst))
    rep.metrics["max_abs_error"] = worst
    rep.check("oracle", f"max |bessel_j - quadrature| <= {cfg.bessel_tol}", worst,
              worst <= cfg.bessel_tol)
    rep.tables["bessel_error"] = (["t", "running_max_abs_error"], rows)
    return rep


def check_identities(cfg: BatteryConfig) -> ExperimentReport:
    rep = ExperimentReport("bessel_identities", config={
        "count": cfg.identity_count, "tol": cfg.identity_tol, "seed": cfg.seed,
        "orders": cfg.bessel_orders, "ts": list(cfg.bessel_ts)})
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 2]))
    t1s = rng.uniform(0.0, 100.0, cfg.identity_count)
    t2s = rng.uniform(0.0, 100.0, cfg.identity_count)
    phis = rng.uniform(0.0, 2.0 * math.pi, cfg.identity_count)
    sq_worst, nm_worst = 0.0, 0.0
    rows = []
    for t1, t2, phi in zip(t1s, t2s, phis):
        n_trunc = math.ceil(max(t1, t2)) + 40
        sq = bessel.neumann_identity_residual(t1, t1, 0.0, n_trunc)
        nm = bessel.neumann_identity_residual(t1, t2, phi, n_trunc)
        ev = stochastic.even_product_identity_residual(t1, t2)
        sq_worst = max(sq_worst, sq)
        nm_worst = max(nm_worst, nm, ev)
        rows.append((t1, t2, phi, sq, nm, ev))
    rep.check("sum_of_squares", f"|sum J_n(t)^2 - 1| <= {cfg.identity_tol}", sq_worst,
              sq_worst <= cfg.identity_tol)
    rep.check("addition", f"addition and even-product residuals <= {cfg.identity_tol}", nm_worst,
              nm_worst <= cfg.identity_tol)
    excess = -math.inf
    for t in cfg.bessel_ts:
        row = bessel.bessel_row(cfg.bessel_orders, t).values
        n = np.arange(row.size, dtype=float)
        with np.errstate(divide="ignore"):
            bound = np.minimum(np.where(n > 0, n ** (-1.0 / 3.0), np.inf), t ** (-1.0 / 3.0))
        excess = max(excess, float(np.max(np.abs(row) - bound)))
    rep.check("uniform_bound", "|J_n(t)| <= min(n^-1/3, t^-1/3) on the sweep", excess, excess <= 0.0)
    rep.metrics.update(sum_sq_residual=sq_worst, addition_residual=nm_worst, bound_excess=excess)
    rep.tables["identities"] = (["t1", "t2", "phi", "sum_sq", "addition", "even_product"], rows)
    return rep


def check_oracle(cfg: BatteryConfig) -> ExperimentReport:
    rep = ExperimentReport("oracle_cross_validation", config={
        "omegas": list(cfg.oracle_omegas), "t": cfg.oracle_t, "dt_scale": cfg.oracle_dt_scale,
        "size": cfg.oracle_size, "support": cfg.oracle_support, "tol": cfg.oracle_tol,
        "seed": cfg.seed})
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 3]))
    w = cfg.oracle_support
    q0 = prop.LatticeWindow(-w, rng.uniform(-1.0, 1.0, 2 * w + 1))
    for om in cfg.oracle_omegas:
        sub = finite_oracle.cross_validate(q0, om, cfg.oracle_t, dt=cfg.oracle_dt_scale / om,
                                           size=cfg.oracle_size, tol=cfg.oracle_tol, eps=cfg.eps)
        err = sub.metrics["max_abs_diff"]
        rep.metrics[f"max_abs_diff_omega1={om}"] = err
        rep.metrics[f"energy_drift_omega1={om}"] = sub.metrics["energy_drift"]
        rep.check(f"omega1={om}", f"max |verlet - bessel| <= {cfg.oracle_tol} on inner sites",
                  err, err <= cfg.oracle_tol)
        rep.tables[f"oracle_omega1_{om}"] = sub.tables["oracle"]
    return rep


def check_l2(cfg: BatteryConfig) -> ExperimentReport:
    rep = ExperimentReport("l2_uniform_bound", config={
        "samples": cfg.l2_samples, "ts": list(cfg.l2_ts), "support": cfg.l2_support,
        "omega1": 1.0, "seed": cfg.seed})
    worst = 0.0
    ok = True
    for i in range(cfg.l2_samples):
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 4, i]))
        w = int(rng.integers(0, cfg.l2_support + 1))
        q0 = prop.LatticeWindow(-w, rng.standard_normal(2 * w + 1))
        sub = prop.l2_uniform_bound_check(q0, 1.0, cfg.l2_ts, cfg.eps, tol=1e-9)
        worst = max(worst, sub.metrics["max_ratio"])
        ok = ok and sub.passed
    rep.metrics["max_ratio"] = worst
    rep.check("l2", "|q(t)|_inf / |q(0)|_2 <= 1 + 1e-9 for every sample and time", worst,
              ok and worst <= 1.0 + 1e-9)
    return rep


def check_envelope(cfg: BatteryConfig) -> ExperimentReport:
    g = bounds.solve_gamma()
    rep = bounds.verify_upper_bound(cfg.envelope_samples, cfg.envelope_omega1, cfg.envelope_ts,
                                    cfg.seed, cfg.eps)
    rep.check("gamma_residual", "|exp(1/g)/g - 1/e| <= 1e-12", g.residual, abs(g.residual) <= 1e-12)
    return rep


def check_cos_norm(cfg: BatteryConfig) -> ExperimentReport:
    return bounds.cos_norm_scan(cfg.cos_omega1, cfg.cos_ts, cfg.eps)


def check_adversarial(cfg: BatteryConfig) -> ExperimentReport:
    rep = adversarial.growth_scan(cfg.adv_Ts, cfg.adv_omega1)
    _, _, multi = adversarial.build_multiscale(cfg.adv_multiscale_T1, cfg.adv_multiscale_count,
                                               cfg.adv_omega1)
    for chk in multi.assertions:
        rep.check(f"multiscale:{chk.name}", chk.relation, chk.observed, chk.passed)
    rep.metrics["multiscale_Ts"] = multi.metrics["Ts"]
    rep.metrics["multiscale_q0"] = multi.metrics["q0_values"]
    rep.metrics["multiscale_c"] = multi.metrics["c"]
    rep.tables["multiscale"] = multi.tables["multiscale"]
    return rep


def _ensemble(cfg: BatteryConfig, n: int, t_max: float, seed_tag: int,
              distribution: str = "rademacher") -> stochastic.EnsembleSpec:
    w = stochastic.required_half_width(cfg.ens_omega1, t_max, cfg.eps)
    return stochastic.EnsembleSpec(distribution, 1.0, n, cfg.seed + seed_tag, w)


def check_covariance(cfg: BatteryConfig) -> ExperimentReport:
    t_max = max(cfg.cov_ts) + max(cfg.cov_s)
    spec = _ensemble(cfg, cfg.cov_samples, t_max, 8)
    return stochastic.covariance_experiment(spec, cfg.ens_omega1, cfg.cov_ts, cfg.cov_s,
                                            limit_from=200.0, eps=cfg.eps)


def check_normality(cfg: BatteryConfig) -> ExperimentReport:
    spec = _ensemble(cfg, cfg.ks_samples, cfg.ks_t, 9)
    rep = stochastic.normality_check(spec, cfg.ks_t, cfg.ens_omega1, cfg.eps)
    control = stochastic.normality_check(spec, 0.0, cfg.ens_omega1, cfg.eps)
    d0 = control.metrics["ks_distance"]
    rep.metrics["control_ks_distance"] = d0
    rep.check("control", "t=0 two-point law is rejected (KS distance above threshold)", d0,
              not control.passed)
    return rep


def check_gaussian(cfg: BatteryConfig) -> ExperimentReport:
    spec = gaussian.GaussianGridSpec.build(cfg.gauss_a, cfg.gauss_delta, cfg.gauss_N)
    return gaussian.sup_probability_mc(spec, cfg.gauss_samples, cfg.seed + 10)


def check_sup_growth(cfg: BatteryConfig) -> ExperimentReport:
    spec = _ensemble(cfg, cfg.sup_samples, max(cfg.sup_horizons), 11)
    a = cfg.sup_threshold * math.sqrt(spec.sigma2)
    rep = stochastic.sup_growth_mc(spec, cfg.ens_omega1, [a], cfg.sup_horizons, eps=cfg.eps)
    zs = rep.metrics[f"strict_increase_a={a}"]
    rep.check("strict_increase", "consecutive fractions increase by more than 3 SE", zs,
              all(z > 3.0 for z in zs))
    return rep


CHECKS: dict[str, Callable[[BatteryConfig], ExperimentReport]] = {
    "bessel": check_bessel,
    "identities": check_identities,
    "oracle": check_oracle,
    "l2_bound": check_l2,
    "envelope": check_envelope,
    "cos_norm": check_cos_norm,
    "adversarial": check_adversarial,
    "covariance": check_covariance,
    "normality": check_normality,
    "gaussian_sup": check_gaussian,
    "sup_growth": check_sup_growth,
}


def run_check(name: str, cfg: BatteryConfig | None = None) -> ExperimentReport:
    return CHECKS[name](cfg or BatteryConfig())


def run_battery(cfg: BatteryConfig | None = None, threads: int = 1) -> ExperimentReport:
    """Run every check not listed in ``cfg.skip`` and merge the verdicts into one report."""
    cfg = cfg or BatteryConfig()
    names = [n for n in CHECKS if n not in cfg.skip]
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        subs = list(pool.map(lambda n: CHECKS[n](cfg), names))
    rep = ExperimentReport("suite", config={k: (list(v) if isinstance(v, tuple) else v)
                                            for k, v in cfg.__dict__.items()})
    for name, sub in zip(names, subs):
        for chk in sub.assertions:
            rep.check(f"{name}:{chk.name}", chk.relation, chk.observed, chk.passed)
        for key, val in sub.metrics.items():
            rep.metrics[f"{name}:{key}"] = val
        for key, tab in sub.tables.items():
            rep.tables[f"{name}_{key}"] = tab
    return rep
