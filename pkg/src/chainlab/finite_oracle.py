"""Velocity-Verlet integration of a finite chain, used as an independent oracle.

The finite chain is a truncation of the infinite one with either fixed (zero)
ends or periodic wrap-around.  As long as the light cone of the evaluated sites
stays away from the ends, the boundary choice is invisible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import propagator as prop
from .errors import DomainError
from .report import ExperimentReport

__all__ = [
    "FiniteChain",
    "energy",
    "step_verlet",
    "integrate",
    "embed",
    "cross_validate",
    "DEFAULT_SIZE",
]

DEFAULT_SIZE = 4096
BOUNDARIES = ("fixed_zero", "periodic")


@dataclass(frozen=True)
class FiniteChain:
    """State of an ``N``-site chain; site ``i`` of the arrays is lattice site ``i - N // 2``."""

    size: int
    omega1: float
    boundary: str
    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        if self.size < 3:
            raise DomainError(f"chain needs at least 3 sites, got {self.size}")
        if self.omega1 <= 0:
            raise DomainError(f"omega1 must be positive, got {self.omega1}")
        if self.boundary not in BOUNDARIES:
            raise DomainError(f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}")
        q = np.array(self.q, dtype=float)
        p = np.array(self.p, dtype=float)
        if q.shape != (self.size,) or p.shape != (self.size,):
            raise DomainError("q and p must both have length `size`")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise DomainError("chain state must be finite")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def center(self) -> int:
        return self.size // 2

    def site(self, n: int) -> int:
        return self.center + n

    def window(self, lo: int, hi: int, which: str = "q") -> prop.LatticeWindow:
        arr = self.q if which == "q" else self.p
        return prop.LatticeWindow(lo, arr[self.site(lo):self.site(hi) + 1].copy())


def _laplacian(q: np.ndarray, boundary: str, out: np.ndarray) -> np.ndarray:
    out[1:-1] = q[2:] - 2.0 * q[1:-1] + q[:-2]
    if boundary == "periodic":
        out[0] = q[1] - 2.0 * q[0] + q[-1]
        out[-1] = q[0] - 2.0 * q[-1] + q[-2]
    else:
        out[0] = q[1] - 2.0 * q[0]
        out[-1] = q[-2] - 2.0 * q[-1]
    return out


def energy(chain: FiniteChain) -> float:
    """:math:`\\frac12\\sum p_k^2 + \\frac{\\omega_1^2}{2}\\sum (q_{k+1} - q_k)^2` with the chain's boundary."""
    q = chain.q
    if chain.boundary == "periodic":
        bonds = np.diff(np.append(q, q[0]))
    else:
        bonds = np.diff(np.concatenate(([0.0], q, [0.0])))
    return 0.5 * float(np.dot(chain.p, chain.p)) + 0.5 * chain.omega1**2 * float(np.dot(bonds, bonds))


def _check_dt(dt: float, omega1: float, max_dt: float | None) -> None:
    limit = 0.5 / omega1 if max_dt is None else max_dt
    if not (math.isfinite(dt) and dt != 0 and abs(dt) <= limit):
        raise DomainError(f"|dt| must lie in (0, {limit}], got {dt}")


def step_verlet(chain: FiniteChain, dt: float, max_dt: float | None = None) -> FiniteChain:
    """One velocity-Verlet step; negative ``dt`` steps backwards in time."""
    _check_dt(dt, chain.omega1, max_dt)
    w2 = chain.omega1**2
    buf = np.empty(chain.size)
    p = chain.p + 0.5 * dt * w2 * _laplacian(chain.q, chain.boundary, buf)
    q = chain.q + dt * p
    p = p + 0.5 * dt * w2 * _laplacian(q, chain.boundary, buf)
    return replace(chain, q=q, p=p)


def integrate(chain: FiniteChain, dt: float | None = None, t_end: float = 0.0,
              report: ExperimentReport | None = None) -> FiniteChain:
    """Advance ``chain`` to ``t_end`` with steps of ``dt`` (default ``1e-3 / omega1``).

    The last step is shortened so the final time is hit exactly.  When ``report``
    is given, the relative energy drift is stored in its metrics.
    """
    if dt is None:
        dt = 1e-3 / chain.omega1
    _check_dt(dt, chain.omega1, None)
    if t_end < 0:
        raise DomainError(f"t_end must be >= 0, got {t_end}")
    if dt < 0:
        raise DomainError("integrate steps forward in time; use step_verlet for reversal")
    e0 = energy(chain)
    n_full = int(math.floor(t_end / dt + 1e-9))
    rest = t_end - n_full * dt
    w2 = chain.omega1**2
    q, p = chain.q.copy(), chain.p.copy()
    acc = np.empty(chain.size)
    _laplacian(q, chain.boundary, acc)
    acc *= w2
    for h in [dt] * n_full + ([rest] if rest > 1e-12 * dt else []):
        p += 0.5 * h * acc
        q += h * p
        _laplacian(q, chain.boundary, acc)
        acc *= w2
        p += 0.5 * h * acc
    out = replace(chain, q=q, p=p)
    if report is not None:
        e1 = energy(out)
        report.metrics["energy_initial"] = e0
        report.metrics["energy_final"] = e1
        report.metrics["energy_drift"] = abs(e1 - e0) / e0 if e0 > 0 else abs(e1 - e0)
    return out


def embed(q0: prop.LatticeWindow, p0: prop.LatticeWindow | None = None, omega1: float = 1.0,
          size: int = DEFAULT_SIZE, boundary: str = "fixed_zero") -> FiniteChain:
    """Place windows centred in an ``size``-site chain, zero elsewhere."""
    lo, hi = -(size // 2), size - 1 - size // 2
    if q0.lo < lo or q0.hi > hi or (p0 is not None and (p0.lo < lo or p0.hi > hi)):
        raise DomainError(f"window does not fit in a chain of {size} sites")
    q = q0.restrict(lo, hi).values
    p = p0.restrict(lo, hi).values if p0 is not None else np.zeros(size)
    return FiniteChain(size, float(omega1), boundary, q, p)


def cross_validate(q0: prop.LatticeWindow, omega1: float, t: float, dt: float | None = None,
                   size: int = DEFAULT_SIZE, boundary: str = "fixed_zero",
                   inner_half_width: int | None = None, tol: float = 1e-6,
                   eps: float = prop.DEFAULT_EPS) -> ExperimentReport:
    """Compare Verlet positions with the Bessel propagator on the inner sites."""
    if dt is None:
        dt = 1e-3 / omega1
    if inner_half_width is None:
        inner_half_width = size // 4
    rep = ExperimentReport("oracle_cross_validation", config={
        "omega1": omega1, "t": t, "dt": dt, "size": size, "boundary": boundary,
        "inner_half_width": inner_half_width, "tol": tol, "eps": eps,
        "q0": q0.to_dict()})
    chain = integrate(embed(q0, None, omega1, size, boundary), dt, t, report=rep)
    lo, hi = -inner_half_width, inner_half_width
    verlet = chain.window(lo, hi).values
    exact = prop.evolve(q0, None, omega1, t, eps, (lo, hi)).values
    err = float(np.max(np.abs(verlet - exact)))
    rep.metrics["max_abs_diff"] = err
    rep.check("agreement", f"max |verlet - bessel| <= {tol}", err, err <= tol)
    rep.tables["oracle"] = (["site", "verlet", "bessel"],
                            list(zip(range(lo, hi + 1), verlet.tolist(), exact.tolist())))
    return rep
