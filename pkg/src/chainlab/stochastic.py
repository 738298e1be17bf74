r"""Chains started from i.i.d. random displacements at rest.

With :math:`\tau = 2\omega_1 t` the central site is

.. math:: q_0(\tau) = \sum_n q_n(0) J_{2n}(\tau),

so second moments follow from the addition theorem:

.. math:: \operatorname{cov}(q_0(\tau+s), q_0(\tau)) =
          \frac{\sigma^2}{2}\bigl(J_0(2\tau+s) + J_0(s)\bigr)
          \xrightarrow[\tau\to\infty]{} \frac{\sigma^2}{2}J_0(s).

All ensemble statistics are dot products of folded samples with cached Bessel
rows.  Site values come from a Philox stream keyed by ``(seed, sample_index)``
and are drawn centre-out (0, +1, -1, +2, ...), so widening the window only
appends sites.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bessel import bessel_j, bessel_row, bessel_rows
from .errors import DomainError, PreconditionError
from .propagator import DEFAULT_EPS, LatticeWindow, light_cone_window
from .report import ExperimentReport

__all__ = [
    "EnsembleSpec",
    "CovarianceReport",
    "required_half_width",
    "sample_initial",
    "sample_matrix",
    "center_paths",
    "exact_covariance",
    "even_product_identity_residual",
    "empirical_covariance",
    "covariance_experiment",
    "normality_check",
    "ks_distance",
    "sup_growth_mc",
]

DISTRIBUTIONS = ("rademacher", "uniform_pm1", "gaussian")
_NEGLIGIBLE = 1e-20


@dataclass(frozen=True)
class EnsembleSpec:
    distribution: str = "rademacher"
    sigma2: float = 1.0
    n_samples: int = 10_000
    seed: int = 0
    window_half_width: int = 1024

    def __post_init__(self):
        if self.distribution not in DISTRIBUTIONS:
            raise DomainError(f"distribution must be one of {DISTRIBUTIONS}")
        if not self.sigma2 > 0:
            raise DomainError(f"sigma2 must be positive, got {self.sigma2}")
        if self.n_samples < 1:
            raise DomainError(f"n_samples must be >= 1, got {self.n_samples}")
        if self.window_half_width < 0:
            raise DomainError("window_half_width must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")


@dataclass
class CovarianceReport:
    """Rows ``(t, s, empirical_cov, standard_error, exact_cov, limit_cov)``."""

    pairs: list[tuple[float, float, float, float, float, float]] = field(default_factory=list)

    def max_z(self) -> float:
        return max(abs(e - x) / se for _, _, e, se, x, _ in self.pairs)

    def within(self, n_se: float = 4.0) -> bool:
        return all(abs(e - x) <= n_se * se for _, _, e, se, x, _ in self.pairs)


def required_half_width(omega1: float, t_max: float, eps: float = DEFAULT_EPS) -> int:
    """Window half-width that makes truncation of i.i.d. data negligible up to ``t_max``."""
    return light_cone_window(omega1, t_max, eps)


def _center_out(values: np.ndarray) -> np.ndarray:
    # values drawn in order 0, +1, -1, +2, -2, ... -> sites -W..W
    w = (values.size - 1) // 2
    out = np.empty(values.size)
    out[w] = values[0]
    out[w + 1:] = values[1::2]
    out[:w][::-1] = values[2::2]
    return out


def _draw(spec: EnsembleSpec, index: int, count: int) -> np.ndarray:
    gen = np.random.Generator(np.random.Philox(key=[spec.seed, index]))
    sd = math.sqrt(spec.sigma2)
    if spec.distribution == "gaussian":
        return sd * gen.standard_normal(count)
    u = gen.random(count)
    if spec.distribution == "rademacher":
        return np.where(u < 0.5, -sd, sd)
    return math.sqrt(3.0) * sd * (2.0 * u - 1.0)


def sample_initial(spec: EnsembleSpec, sample_index: int) -> LatticeWindow:
    """Initial displacements of one ensemble member on ``[-W, W]``, zero outside."""
    if not 0 <= sample_index < spec.n_samples:
        raise DomainError(f"sample_index {sample_index} outside [0, {spec.n_samples})")
    w = spec.window_half_width
    return LatticeWindow(-w, _center_out(_draw(spec, sample_index, 2 * w + 1)))


def sample_matrix(spec: EnsembleSpec) -> np.ndarray:
    """All samples as an ``(n_samples, 2W + 1)`` array, sites ``-W..W``."""
    w = spec.window_half_width
    out = np.empty((spec.n_samples, 2 * w + 1))
    for i in range(spec.n_samples):
        out[i] = _center_out(_draw(spec, i, 2 * w + 1))
    return out


def _fold(samples: np.ndarray) -> np.ndarray:
    # q_0 = sum_{n>=0} (q_n + q_{-n}) J_2n, with n = 0 counted once
    w = (samples.shape[1] - 1) // 2
    folded = samples[:, w:].copy()
    folded[:, 1:] += samples[:, :w][:, ::-1]
    return folded


def center_paths(spec: EnsembleSpec, omega1: float, times: Sequence[float],
                 eps: float = DEFAULT_EPS, samples: np.ndarray | None = None) -> np.ndarray:
    """``q_0(t)`` for every sample and chain time; shape ``(n_samples, len(times))``."""
    times = np.asarray(times, dtype=float)
    need = required_half_width(omega1, float(times.max()), eps)
    w = spec.window_half_width
    if w < need:
        raise PreconditionError(
            f"window_half_width={w} is below the light-cone requirement {need} "
            f"for t={float(times.max())}")
    if samples is None:
        samples = sample_matrix(spec)
    rows = bessel_rows(2 * w, 2.0 * omega1 * times)[:, ::2]
    # orders negligible at every requested time are dropped from the product
    live = np.nonzero(np.max(np.abs(rows), axis=0) >= _NEGLIGIBLE)[0]
    keep = int(live[-1]) + 1 if live.size else 1
    return _fold(samples)[:, :keep] @ rows[:, :keep].T


def exact_covariance(t: float, s: float, sigma2: float) -> float:
    """:math:`\\frac{\\sigma^2}{2}(J_0(2t+s) + J_0(s))` in units where :math:`2\\omega_1 = 1`."""
    if t < 0 or s < 0:
        raise DomainError("t and s must be non-negative")
    return 0.5 * sigma2 * (bessel_j(0, 2.0 * t + s) + bessel_j(0, s))


def even_product_identity_residual(t1: float, t2: float, n_trunc: int | None = None) -> float:
    r"""Residual of :math:`\sum_n J_{2n}(t_1)J_{2n}(t_2) = \frac12(J_0(t_1+t_2) + J_0(t_1-t_2))`."""
    if n_trunc is None:
        n_trunc = math.ceil(max(abs(t1), abs(t2))) + 40
    r1 = bessel_row(2 * n_trunc, t1).values[::2]
    r2 = bessel_row(2 * n_trunc, t2).values[::2]
    lhs = r1[0] * r2[0] + 2.0 * np.dot(r1[1:], r2[1:])
    rhs = 0.5 * (bessel_j(0, t1 + t2) + bessel_j(0, t1 - t2))
    return abs(lhs - rhs)


def _cov_and_se(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    n = x.size
    if n < 2:
        raise DomainError("covariance standard error needs at least 2 samples")
    z = (x - x.mean()) * (y - y.mean())
    return float(z.sum() / (n - 1)), float(z.std(ddof=1) / math.sqrt(n))


def empirical_covariance(spec: EnsembleSpec, omega1: float, t: float, s_grid: Sequence[float],
                         eps: float = DEFAULT_EPS,
                         samples: np.ndarray | None = None) -> CovarianceReport:
    """Monte Carlo :math:`\\operatorname{cov}(q_0(t+s), q_0(t))` against the exact and limit forms.

    Times are chain times; exact values use :math:`\\tau = 2\\omega_1 t`.
    """
    if spec.n_samples < 2:
        raise DomainError("empirical covariance needs n_samples >= 2")
    s_grid = [float(s) for s in s_grid]
    times = [t] + [t + s for s in s_grid]
    paths = center_paths(spec, omega1, times, eps, samples)
    base = paths[:, 0]
    tau = 2.0 * omega1 * t
    rep = CovarianceReport()
    for j, s in enumerate(s_grid, start=1):
        cov, se = _cov_and_se(paths[:, j], base)
        lag = 2.0 * omega1 * s
        rep.pairs.append((t, s, cov, se, exact_covariance(tau, lag, spec.sigma2),
                          0.5 * spec.sigma2 * bessel_j(0, lag)))
    return rep


def covariance_experiment(spec: EnsembleSpec, omega1: float, ts: Sequence[float],
                          s_grid: Sequence[float], n_se: float = 4.0, limit_from: float = 200.0,
                          eps: float = DEFAULT_EPS) -> ExperimentReport:
    """Exact-identity checks for every ``(t, s)``; limit-form checks for ``t >= limit_from``.

    The limit allowance adds the bias bound :math:`\\frac{\\sigma^2}{2}(2\\tau)^{-1/3}`.
    """
    rep = ExperimentReport("ensemble_covariance", config={
        "spec": spec.__dict__, "omega1": omega1, "ts": list(ts), "s_grid": list(s_grid),
        "n_se": n_se, "limit_from": limit_from, "eps": eps})
    samples = sample_matrix(spec)
    rows = []
    for t in ts:
        cr = empirical_covariance(spec, omega1, t, s_grid, eps, samples)
        for (tt, s, emp, se, exact, limit) in cr.pairs:
            rows.append((tt, s, emp, se, exact, limit))
            rep.check(f"exact t={tt} s={s}", f"|emp - exact| <= {n_se} SE",
                      abs(emp - exact) / se, abs(emp - exact) <= n_se * se)
            if tt >= limit_from:
                bias = 0.5 * spec.sigma2 * (2.0 * 2.0 * omega1 * tt) ** (-1.0 / 3.0)
                rep.check(f"limit t={tt} s={s}",
                          f"|emp - limit| <= {n_se} SE + (sigma2/2)(2 tau)^(-1/3)",
                          abs(emp - limit), abs(emp - limit) <= n_se * se + bias)
    rep.metrics["max_z_exact"] = max(abs(r[2] - r[4]) / r[3] for r in rows)
    rep.tables["covariance"] = (["t", "s", "empirical", "se", "exact", "limit"], rows)
    return rep


def _normal_cdf(x: np.ndarray) -> np.ndarray:
    from scipy.special import ndtr

    return ndtr(x)


def ks_distance(z: np.ndarray) -> float:
    """Kolmogorov-Smirnov sup distance between the empirical CDF of ``z`` and the standard normal."""
    z = np.sort(np.asarray(z, dtype=float))
    n = z.size
    cdf = _normal_cdf(z)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))


def normality_check(spec: EnsembleSpec, t: float, omega1: float = 0.5,
                    eps: float = DEFAULT_EPS, level_constant: float = 1.63) -> ExperimentReport:
    """KS test of :math:`q_0(t)` standardised by its exact standard deviation."""
    paths = center_paths(spec, omega1, [t], eps)[:, 0]
    sd = math.sqrt(exact_covariance(2.0 * omega1 * t, 0.0, spec.sigma2))
    dist = ks_distance(paths / sd)
    thresh = level_constant / math.sqrt(spec.n_samples)
    rep = ExperimentReport("normality", config={
        "spec": spec.__dict__, "t": t, "omega1": omega1, "eps": eps,
        "level_constant": level_constant})
    rep.metrics.update(ks_distance=dist, threshold=thresh, exact_sd=sd)
    rep.check("ks", f"KS distance <= {level_constant}/sqrt(n)", dist, dist <= thresh)
    return rep


def sup_growth_mc(spec: EnsembleSpec, omega1: float, thresholds: Sequence[float],
                  horizons: Sequence[float], dt: float = 0.5, eps: float = DEFAULT_EPS,
                  strict_sigma: float = 3.0, mirror_sigma: float = 4.0) -> ExperimentReport:
    """Fraction of paths with :math:`\\max_{t\\le H} q_0(t) \\ge a` on a grid of spacing ``dt``.

    Checks, per threshold: fractions are non-decreasing in ``H``; consecutive
    horizons differ by more than ``strict_sigma`` combined standard errors;
    the mirrored statistic :math:`\\min q_0 \\le -a` agrees within
    ``mirror_sigma`` combined standard errors.
    """
    horizons = [float(h) for h in horizons]
    if any(h2 <= h1 for h1, h2 in zip(horizons, horizons[1:])):
        raise DomainError("horizons must be strictly increasing")
    n_steps = int(round(horizons[-1] / dt))
    times = dt * np.arange(n_steps + 1)
    paths = center_paths(spec, omega1, times, eps)
    run_max = np.maximum.accumulate(paths, axis=1)
    run_min = np.minimum.accumulate(paths, axis=1)
    n = spec.n_samples
    rep = ExperimentReport("sup_growth", config={
        "spec": spec.__dict__, "omega1": omega1, "thresholds": list(thresholds),
        "horizons": horizons, "dt": dt, "eps": eps, "strict_sigma": strict_sigma,
        "mirror_sigma": mirror_sigma})
    rows = []
    for a in thresholds:
        fr, ses = [], []
        for h in horizons:
            j = int(np.searchsorted(times, h + 1e-9 * dt, side="right") - 1)
            f_up = float(np.mean(run_max[:, j] >= a))
            f_dn = float(np.mean(run_min[:, j] <= -a))
            se = math.sqrt(max(f_up * (1 - f_up), 1e-300) / n)
            se_dn = math.sqrt(max(f_dn * (1 - f_dn), 1e-300) / n)
            rows.append((a, h, f_up, se, f_dn, se_dn))
            fr.append(f_up)
            ses.append(se)
            comb = math.hypot(se, se_dn)
            rep.check(f"mirror a={a} H={h}", f"|sup frac - inf frac| <= {mirror_sigma} SE",
                      abs(f_up - f_dn), abs(f_up - f_dn) <= mirror_sigma * comb + 1.0 / n)
        for i in range(1, len(horizons)):
            rep.check(f"monotone a={a} H={horizons[i]}", "fraction non-decreasing in H",
                      fr[i] - fr[i - 1], fr[i] >= fr[i - 1])
        rep.metrics[f"fractions_a={a}"] = fr
        rep.metrics[f"strict_increase_a={a}"] = [
            (fr[i] - fr[i - 1]) / math.hypot(ses[i], ses[i - 1]) if fr[i] > fr[i - 1] else 0.0
            for i in range(1, len(horizons))]
    rep.tables["sup_growth"] = (["threshold", "horizon", "fraction", "se",
                                 "inf_fraction", "inf_se"], rows)
    return rep


def strict_increase(rep: ExperimentReport, a: float, strict_sigma: float = 3.0) -> list[bool]:
    """Whether each consecutive horizon pair increases by more than ``strict_sigma`` SEs."""
    return [z > strict_sigma for z in rep.metrics[f"strict_increase_a={a}"]]
