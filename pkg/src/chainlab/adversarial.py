r"""Bounded initial data whose central site grows like :math:`\sqrt T`.

For chain time ``T`` put :math:`t = 2\omega_1 T`.  Inside the oscillatory region

.. math:: J_{2k}(t) \approx f_k(t) = \sqrt{\frac{2}{\pi t\sqrt{1-\nu^2}}}
          \cos\bigl(x_k - \tfrac\pi4\bigr),\qquad \nu = 2k/t,\quad x_k = t\,g(\nu),

with :math:`g(\nu) = \sqrt{1-\nu^2} - \nu\arccos\nu`.  Picking the indices whose
phase :math:`x_k` lands in :math:`(0, \pi/2)` modulo :math:`2\pi` makes every
selected term positive; the indicator of that set is a unit-sup initial
condition with :math:`q_0(T) \approx \sum_{k\in I} f_k(t) \propto \sqrt T`.

Index convention: a plan with fractions ``(a, b)`` selects from
``k in [a t, b t]``, i.e. :math:`\nu \in [2a, 2b]`.  The defaults
``a = 0.1, b = 0.2`` keep :math:`\nu` in ``[0.2, 0.4]``.

Bumps built for a rapidly increasing sequence of times have disjoint supports
and are summed with alternating signs in :func:`build_multiscale`.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bessel import even_order_sum
from .errors import ConstructionError, DomainError
from .propagator import LatticeWindow, light_cone_bound
from .report import ExperimentReport

__all__ = [
    "PhasePoint",
    "AdversarialPlan",
    "MultiscalePlan",
    "g_fn",
    "g_prime",
    "f_main_term",
    "phase_point",
    "build_support_set",
    "phase_decrements",
    "measure_growth",
    "growth_scan",
    "build_multiscale",
    "DEFAULT_A",
    "DEFAULT_B",
]

DEFAULT_A = 0.1
DEFAULT_B = 0.2
NU_MAX = 1.0 - 1e-6
_CHUNK = 1 << 20


def t_min_default(omega1: float) -> float:
    return 50.0 / omega1


def g_fn(mu):
    r""":math:`g(\mu) = \sqrt{1-\mu^2} - \mu\arccos\mu` on ``[-1, 1]``."""
    m = np.asarray(mu, dtype=float)
    if np.any(np.abs(m) > 1):
        raise DomainError("g is defined on [-1, 1]")
    out = np.sqrt(1.0 - m * m) - m * np.arccos(m)
    return float(out) if out.ndim == 0 else out


def g_prime(mu):
    r""":math:`g'(\mu) = -\arccos\mu`."""
    m = np.asarray(mu, dtype=float)
    if np.any(np.abs(m) > 1):
        raise DomainError("g is defined on [-1, 1]")
    out = -np.arccos(m)
    return float(out) if out.ndim == 0 else out


def _main_terms(k: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
    nu = 2.0 * k / t
    x = t * (np.sqrt(1.0 - nu * nu) - nu * np.arccos(nu))
    amp = np.sqrt(2.0 / (np.pi * t * np.sqrt(1.0 - nu * nu)))
    return x, amp * np.cos(x - 0.25 * np.pi)


def f_main_term(k: int, t: float) -> float:
    """Stationary-phase main term :math:`f_k(t)` of :math:`J_{2k}(t)`."""
    if t <= 0:
        raise DomainError(f"t must be positive, got {t}")
    nu = 2.0 * k / t
    if not (0 <= nu <= NU_MAX):
        raise DomainError(f"need 0 <= 2k/t <= 1 - 1e-6, got {nu}")
    return float(_main_terms(np.array([k], dtype=float), t)[1][0])


@dataclass(frozen=True)
class PhasePoint:
    k: int
    nu: float
    x: float
    f: float


def phase_point(k: int, t: float) -> PhasePoint:
    f = f_main_term(k, t)
    nu = 2.0 * k / t
    return PhasePoint(int(k), nu, t * g_fn(nu), f)


@dataclass
class AdversarialPlan:
    """Indicator initial condition for one target time.

    ``I`` holds the selected indices; :attr:`q0` materialises the dense window.
    ``main_term`` is :math:`\\sum_{k\\in I} f_k(t)`, the asymptotic value of
    :math:`|q_0(T)|`; ``predicted_lower`` is half of it.
    """

    target_T: float
    omega1: float
    a: float
    b: float
    I: np.ndarray
    sign: int
    main_term: float
    predicted_lower: float
    c2: float
    window: tuple[int, int] = (0, 0)

    @property
    def t(self) -> float:
        return 2.0 * self.omega1 * self.target_T

    @property
    def q0(self) -> LatticeWindow:
        lo = int(self.I[0])
        vals = np.zeros(int(self.I[-1]) - lo + 1)
        vals[self.I - lo] = float(self.sign)
        return LatticeWindow(lo, vals)

    def ranges(self) -> list[tuple[int, int]]:
        """Run-length encoding of ``I`` as inclusive ``(lo, hi)`` pairs."""
        if self.I.size == 0:
            return []
        breaks = np.nonzero(np.diff(self.I) != 1)[0]
        starts = np.concatenate(([0], breaks + 1))
        ends = np.concatenate((breaks, [self.I.size - 1]))
        return [(int(self.I[s]), int(self.I[e])) for s, e in zip(starts, ends)]

    def digest(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.I, dtype="<i8").tobytes()).hexdigest()

    def summary(self, max_ranges: int = 20000) -> dict:
        d = {
            "target_T": self.target_T, "omega1": self.omega1, "t": self.t,
            "a": self.a, "b": self.b, "sign": self.sign, "size": int(self.I.size),
            "min_index": int(self.I[0]), "max_index": int(self.I[-1]),
            "window": list(self.window), "main_term": self.main_term,
            "predicted_lower": self.predicted_lower, "sha256": self.digest(),
        }
        if self.I.size <= max_ranges:
            d["ranges"] = [list(r) for r in self.ranges()]
        return d


def _validate_fractions(a: float, b: float) -> None:
    if not (0 < a < b < 0.5):
        raise DomainError(f"need 0 < a < b < 1/2, got a={a}, b={b}")
    if 2 * b > NU_MAX:
        raise DomainError("b too close to 1/2")


def build_support_set(T: float, omega1: float, a: float = DEFAULT_A, b: float = DEFAULT_B,
                      sign: int = 1, t_min: float | None = None) -> AdversarialPlan:
    """Select ``I = {k in [a t, b t] : x_k(t) mod 2 pi in (0, pi/2)}``, ``t = 2 omega1 T``."""
    if omega1 <= 0:
        raise DomainError(f"omega1 must be positive, got {omega1}")
    _validate_fractions(a, b)
    if sign not in (1, -1):
        raise DomainError("sign must be +1 or -1")
    t_min = t_min_default(omega1) if t_min is None else t_min
    if T < t_min:
        raise DomainError(f"T={T} is below the minimum {t_min}")
    t = 2.0 * omega1 * T
    k_lo, k_hi = math.ceil(a * t), math.floor(b * t)
    chosen, main = [], 0.0
    for start in range(k_lo, k_hi + 1, _CHUNK):
        k = np.arange(start, min(start + _CHUNK, k_hi + 1), dtype=np.int64)
        x, f = _main_terms(k.astype(float), t)
        phase = np.mod(x, 2.0 * np.pi)
        mask = (phase > 0) & (phase < 0.5 * np.pi)
        chosen.append(k[mask])
        main += float(np.sum(f[mask]))
    I = np.concatenate(chosen) if chosen else np.zeros(0, dtype=np.int64)
    if I.size == 0:
        raise ConstructionError(
            f"no index in [{k_lo}, {k_hi}] has its phase in (0, pi/2); T={T} is too small")
    return AdversarialPlan(float(T), float(omega1), a, b, I, sign, sign * main,
                           0.5 * sign * main, c2=b - a, window=(k_lo, k_hi))


def phase_decrements(plan: AdversarialPlan) -> dict:
    """Consecutive phase steps over the plan window against ``(-2 eps, -eps)``.

    ``eps = 0.9 * min |2 g'(nu)|`` over the window.
    """
    t = plan.t
    k_lo, k_hi = plan.window
    eps = 0.9 * 2.0 * float(np.arccos(2.0 * plan.b))
    lo_step, hi_step = math.inf, -math.inf
    for start in range(k_lo, k_hi + 1, _CHUNK):
        k = np.arange(start, min(start + _CHUNK + 1, k_hi + 1), dtype=float)
        x, _ = _main_terms(k, t)
        d = np.diff(x)
        if d.size:
            lo_step = min(lo_step, float(d.min()))
            hi_step = max(hi_step, float(d.max()))
    return {"eps": eps, "min_step": lo_step, "max_step": hi_step,
            "ok": bool(-2 * eps < lo_step and hi_step < -eps)}


def measure_growth(plan: AdversarialPlan, ratio_tol: float | None = None) -> ExperimentReport:
    """Exact :math:`q_0(T)` for the plan, compared with :math:`\\sqrt T` and the main term.

    ``ratio_tol`` bounds ``|q0(T) / main_term - 1|``; it defaults to ``5 / T``.
    """
    if plan.I.size == 0:
        raise ConstructionError("empty support set")
    T = plan.target_T
    tol = 5.0 / T if ratio_tol is None else ratio_tol
    q0T = plan.sign * even_order_sum(plan.t, plan.I)
    rep = ExperimentReport("adversarial_growth", config={
        "T": T, "omega1": plan.omega1, "a": plan.a, "b": plan.b, "sign": plan.sign,
        "ratio_tol": tol})
    ratio_main = q0T / plan.main_term
    rep.metrics.update(
        q0_T=q0T, sqrt_ratio=q0T / math.sqrt(T), main_term=plan.main_term,
        predicted_lower=plan.predicted_lower, main_term_ratio=ratio_main,
        lower_ratio=q0T / plan.predicted_lower, support_size=int(plan.I.size),
        support_fraction=plan.I.size / plan.t)
    rep.check("sign", "sign(q0(T)) == plan sign", q0T, q0T * plan.sign > 0)
    rep.check("main_term", f"|q0(T) / main_term - 1| <= {tol:.3g}", ratio_main,
              abs(ratio_main - 1.0) <= tol)
    rep.check("support_size", f"|I| <= c2 t with c2 = {plan.c2}", plan.I.size,
              plan.I.size <= plan.c2 * plan.t + 1)
    return rep


def growth_scan(Ts: Sequence[float], omega1: float, a: float = DEFAULT_A, b: float = DEFAULT_B,
                spread: float = 0.25) -> ExperimentReport:
    """Measure ``c(T) = q0(T) / sqrt(T)`` over ``Ts`` and check it stays within ``spread`` of its mean."""
    rep = ExperimentReport("adversarial_scan", config={
        "Ts": list(Ts), "omega1": omega1, "a": a, "b": b, "spread": spread})
    rows, cs = [], []
    for T in Ts:
        plan = build_support_set(T, omega1, a, b)
        sub = measure_growth(plan)
        for chk in sub.assertions:
            rep.check(f"T={T}:{chk.name}", chk.relation, chk.observed, chk.passed)
        c = sub.metrics["sqrt_ratio"]
        cs.append(c)
        rows.append((T, sub.metrics["q0_T"], c, sub.metrics["main_term_ratio"]))
    mean = float(np.mean(cs))
    dev = float(np.max(np.abs(np.array(cs) / mean - 1.0)))
    rep.metrics.update(c_mean=mean, c_min=float(min(cs)), c_max=float(max(cs)), c_spread=dev)
    rep.check("c_positive", "min c > 0", min(cs), min(cs) > 0)
    rep.check("c_stable", f"max |c / mean(c) - 1| <= {spread}", dev, dev <= spread)
    rep.tables["growth"] = (["T", "q0_T", "sqrt_ratio", "main_term_ratio"], rows)
    return rep


@dataclass
class MultiscalePlan:
    """Alternating-sign sum of disjoint bumps for the times ``Ts``."""

    Ts: list[float]
    plans: list[AdversarialPlan]
    c: float
    omega1: float
    values: list[float] = field(default_factory=list)

    def support(self) -> tuple[np.ndarray, np.ndarray]:
        idx = np.concatenate([p.I for p in self.plans])
        w = np.concatenate([np.full(p.I.size, float(p.sign)) for p in self.plans])
        return idx, w

    def window(self) -> LatticeWindow:
        """Dense initial condition; its length grows like ``b * 2 omega1 * Ts[-1]``."""
        idx, w = self.support()
        lo = int(idx.min())
        vals = np.zeros(int(idx.max()) - lo + 1)
        vals[idx - lo] = w
        return LatticeWindow(lo, vals)

    def q0_at(self, T: float) -> float:
        idx, w = self.support()
        return even_order_sum(2.0 * self.omega1 * T, idx, w)


def _next_time(prev: AdversarialPlan, earlier_l2: float, c: float, a: float,
               grid_step: float, max_T: float) -> float:
    om = prev.omega1
    T = prev.target_T
    while True:
        T *= grid_step
        if T > max_T:
            raise ConstructionError(f"no admissible next time below max_T={max_T}")
        m = math.ceil(a * 2.0 * om * T)
        disjoint = int(prev.I[-1]) < m
        alpha = om * prev.target_T / m
        far_tail = math.exp(alpha + 1.0) * alpha < 1.0
        accumulate = earlier_l2 + 1.0 < 0.5 * c * math.sqrt(T)
        if disjoint and far_tail and accumulate:
            return T


def build_multiscale(T1: float, count: int = 3, omega1: float = 0.5, safety: float = 1.2,
                     a: float = DEFAULT_A, b: float = DEFAULT_B, grid_step: float = 1.1,
                     max_T: float = 1e10) -> tuple[list[float], MultiscalePlan, ExperimentReport]:
    """Greedy sequence of times and the alternating-sign multi-bump initial condition.

    ``c`` is the growth constant ``q0(T1) / sqrt(T1)`` of the first bump.  Each next
    time is the first point of a geometric grid (ratio ``grid_step``) where

    * the new bump starts beyond the previous one,
    * the light-cone factor ``e^(alpha+1) alpha`` of the new bump at the previous
      time is below one, and
    * the summed l2 norms of earlier bumps plus one stay below ``(c/2) sqrt(T)``,

    multiplied by ``safety``.  At every ``T_k`` the full sum must satisfy
    ``|q0(T_k)| >= (c/2) sqrt(T_k)`` with sign ``(-1)^(k+1)``.
    """
    if count < 2:
        raise DomainError(f"count must be >= 2, got {count}")
    if safety < 1:
        raise DomainError(f"safety must be >= 1, got {safety}")
    first = build_support_set(T1, omega1, a, b, sign=1)
    c = float(even_order_sum(first.t, first.I) / math.sqrt(T1))
    if c <= 0:
        raise ConstructionError(f"first bump has non-positive growth constant {c}")
    plans = [first]
    l2 = math.sqrt(first.I.size)
    while len(plans) < count:
        T = safety * _next_time(plans[-1], l2, c, a, grid_step, max_T)
        sign = 1 if len(plans) % 2 == 0 else -1
        plans.append(build_support_set(T, omega1, a, b, sign=sign))
        l2 += math.sqrt(plans[-1].I.size)
    Ts = [p.target_T for p in plans]
    multi = MultiscalePlan(Ts, plans, c, omega1)
    rep = ExperimentReport("adversarial_multiscale", config={
        "T1": T1, "count": count, "omega1": omega1, "safety": safety, "a": a, "b": b,
        "grid_step": grid_step, "max_T": max_T})
    rep.metrics["c"] = c
    rows = []
    for k, (p, nxt) in enumerate(zip(plans, plans[1:] + [None]), start=1):
        if nxt is not None:
            rep.check(f"disjoint_{k}", f"max I_{k} < min I_{k + 1}",
                      [int(p.I[-1]), int(nxt.I[0])], p.I[-1] < nxt.I[0])
            m = int(nxt.I[0])
            rep.metrics[f"far_tail_bound_{k}"] = light_cone_bound(omega1, p.target_T, m)
        val = multi.q0_at(p.target_T)
        multi.values.append(val)
        expected = 1 if k % 2 == 1 else -1
        floor = 0.5 * c * math.sqrt(p.target_T)
        rep.check(f"sign_{k}", f"sign(q0(T_{k})) == {expected:+d}", val, val * expected > 0)
        rep.check(f"size_{k}", f"|q0(T_{k})| >= (c/2) sqrt(T_{k})", abs(val) / math.sqrt(p.target_T),
                  abs(val) >= floor)
        rows.append((p.target_T, val, val / math.sqrt(p.target_T)))
    rep.metrics["Ts"] = Ts
    rep.metrics["q0_values"] = list(multi.values)
    rep.metrics["plans"] = [p.summary() for p in plans]
    rep.tables["multiscale"] = (["T", "q0_T", "sqrt_ratio"], rows)
    return Ts, multi, rep
