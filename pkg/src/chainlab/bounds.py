r"""Growth envelopes for bounded initial data.

For data at rest with :math:`|q(0)|_\infty < \infty` the solution obeys

.. math:: |q(t)|_\infty \le \bigl(\sqrt{2\gamma\omega_1 t} + 2\bigr)|q(0)|_\infty,

where :math:`\gamma` solves :math:`\gamma^{-1}e^{1/\gamma} = e^{-1}`.  The norm of
:math:`\cos(t\sqrt V)` on :math:`\ell_\infty` grows like :math:`\sqrt t`, which
:func:`cos_norm_scan` measures.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import propagator as prop
from .errors import DomainError
from .report import ExperimentReport

__all__ = [
    "GammaRoot",
    "solve_gamma",
    "upper_envelope",
    "envelope_ratio",
    "sample_unit_window",
    "verify_upper_bound",
    "cos_norm_scan",
]


@dataclass(frozen=True)
class GammaRoot:
    gamma: float
    residual: float


def _h(g: float) -> float:
    return math.exp(1.0 / g) / g - math.exp(-1.0)


@lru_cache(maxsize=None)
def solve_gamma() -> GammaRoot:
    """Bisection for the root of :math:`\\gamma^{-1}e^{1/\\gamma} - e^{-1}` on ``[1, 10]``."""
    lo, hi = 1.0, 10.0
    if not (_h(lo) > 0 > _h(hi)):
        raise RuntimeError("gamma bracket [1, 10] does not straddle the root")
    while hi - lo > 4 * math.ulp(hi):
        mid = 0.5 * (lo + hi)
        if _h(mid) > 0:
            lo = mid
        else:
            hi = mid
    g = lo if abs(_h(lo)) <= abs(_h(hi)) else hi
    return GammaRoot(g, _h(g))


def upper_envelope(omega1: float, t: float, q0_inf_norm: float) -> float:
    """Return :math:`(\\sqrt{2\\gamma\\omega_1 t} + 2)\\,|q(0)|_\\infty`."""
    if omega1 <= 0 or t < 0 or q0_inf_norm < 0:
        raise DomainError("upper_envelope needs omega1 > 0, t >= 0, q0_inf_norm >= 0")
    return (math.sqrt(2.0 * solve_gamma().gamma * omega1 * t) + 2.0) * q0_inf_norm


def sample_unit_window(rng: np.random.Generator, half_width: int,
                       distribution: str = "rademacher") -> prop.LatticeWindow:
    """Random data with :math:`|q|_\\infty \\le 1` on ``[-half_width, half_width]``, unknown elsewhere."""
    n = 2 * half_width + 1
    if distribution == "rademacher":
        vals = rng.choice(np.array([-1.0, 1.0]), size=n)
    elif distribution == "uniform":
        vals = rng.uniform(-1.0, 1.0, size=n)
    else:
        raise DomainError(f"unknown distribution {distribution!r}")
    return prop.LatticeWindow(-half_width, vals, fill="none")


def envelope_ratio(q0: prop.LatticeWindow, omega1: float, t: float, sites=None,
                   eps: float = prop.DEFAULT_EPS) -> float:
    """``|q(t)|_inf / upper_envelope`` over ``sites`` (default: all sites with a full light cone)."""
    norm = q0.inf_norm()
    if norm == 0:
        return 0.0
    if sites is None:
        m = prop.light_cone_window(omega1, t, eps)
        sites = (q0.lo - m, q0.hi + m) if q0.fill == "zero" else (q0.lo + m, q0.hi - m)
    q = prop.evolve(q0, None, omega1, t, eps, sites)
    return q.inf_norm() / upper_envelope(omega1, t, norm)


def verify_upper_bound(n_samples: int, omega1: float, t_grid: Sequence[float], seed: int,
                       eps: float = prop.DEFAULT_EPS, distribution: str = "rademacher",
                       eval_half_width: int = 16) -> ExperimentReport:
    """Sample unit-sup initial data and compare :math:`|q(t)|_\\infty` with the envelope.

    Each sample stores a window wide enough that the central
    ``2 * eval_half_width + 1`` sites see their full light cone at the largest time.
    """
    if n_samples < 1:
        raise DomainError(f"n_samples must be >= 1, got {n_samples}")
    t_grid = [float(t) for t in t_grid]
    rep = ExperimentReport("upper_envelope", config={
        "n_samples": n_samples, "omega1": omega1, "t_grid": t_grid, "seed": seed,
        "eps": eps, "distribution": distribution, "eval_half_width": eval_half_width})
    width = eval_half_width + prop.light_cone_window(omega1, max(t_grid), eps)
    sites = (-eval_half_width, eval_half_width)
    worst = {t: 0.0 for t in t_grid}
    for i in range(n_samples):
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        q0 = sample_unit_window(rng, width, distribution)
        for t in t_grid:
            worst[t] = max(worst[t], envelope_ratio(q0, omega1, t, sites, eps))
    for t in t_grid:
        env = upper_envelope(omega1, t, 1.0)
        rep.check(f"t={t}", "max |q(t)|_inf / envelope <= 1 + eps / envelope",
                  worst[t], worst[t] <= 1.0 + eps / env)
    rep.metrics["worst_ratio"] = max(worst.values())
    rep.metrics["worst_ratio_by_t"] = {str(t): r for t, r in worst.items()}
    rep.metrics["gamma"] = solve_gamma().gamma
    rep.tables["envelope"] = (["t", "envelope", "worst_ratio"],
                              [(t, upper_envelope(omega1, t, 1.0), worst[t]) for t in t_grid])
    return rep


def cos_norm_scan(omega1: float, t_grid: Sequence[float], eps: float = prop.DEFAULT_EPS,
                  slope_target: float = 0.5, slope_tol: float = 0.03) -> ExperimentReport:
    """Fit the log-log slope of :math:`N(t) - 1`, :math:`N(t) = |\\cos(t\\sqrt V)|_\\infty`."""
    ts = np.asarray([float(t) for t in t_grid])
    if ts.size < 3:
        raise DomainError("cos_norm_scan needs at least 3 grid points")
    if np.any(ts <= 0) or np.any(np.diff(ts) <= 0):
        raise DomainError("t_grid must be positive and strictly increasing")
    norms = np.array([prop.cos_norm(omega1, t, eps) for t in ts])
    excess = norms - 1.0
    if np.any(excess <= 0):
        raise DomainError("cos norm does not exceed 1 on the grid; pick larger times")
    slope, _ = np.polyfit(np.log(ts), np.log(excess), 1)
    scaled = excess / np.sqrt(ts)
    a_hat, b_hat = float(scaled.min()), float(scaled.max())
    rep = ExperimentReport("cos_norm_scan", config={
        "omega1": omega1, "t_grid": ts.tolist(), "eps": eps,
        "slope_target": slope_target, "slope_tol": slope_tol})
    rep.metrics.update(slope=float(slope), a_hat=a_hat, b_hat=b_hat)
    rep.check("slope", f"|slope - {slope_target}| <= {slope_tol}", float(slope),
              abs(slope - slope_target) <= slope_tol)
    rep.check("constants", "0 < a_hat <= b_hat", [a_hat, b_hat], 0 < a_hat <= b_hat)
    rep.tables["cos_norm"] = (["t", "cos_norm"], list(zip(ts.tolist(), norms.tolist())))
    return rep
