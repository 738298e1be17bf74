r"""Integer-order Bessel functions of the first kind.

Values are produced by Miller's backward recurrence

.. math:: J_{n-1}(t) = \frac{2n}{t} J_n(t) - J_{n+1}(t),

normalised with :math:`J_0(t) + 2\sum_{k\ge1} J_{2k}(t) = 1`.  Overflow during
the downward sweep is handled by exact power-of-two rescaling; every stored
value remembers how many rescalings preceded it, so no retroactive pass over
the row is needed.

An independent check is :func:`bessel_j_oracle`, the trapezoidal rule applied
to :math:`\frac1\pi\int_0^\pi \cos(t\sin\phi - n\phi)\,d\phi`.  The integrand
is even and :math:`2\pi`-periodic, so the rule converges spectrally.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import DomainError

__all__ = [
    "BesselRow",
    "bessel_j",
    "bessel_row",
    "bessel_rows",
    "bessel_j_oracle",
    "default_panels",
    "even_order_sum",
    "neumann_identity_residual",
    "start_order",
]

_RESCALE_EXP = 600
_BIG = 2.0**_RESCALE_EXP


@dataclass(frozen=True)
class BesselRow:
    """Values :math:`J_0(t), \\dots, J_{order\\_max}(t)` at one argument."""

    order_max: int
    argument: float
    values: np.ndarray

    def __getitem__(self, n: int) -> float:
        """Return :math:`J_n` for any integer ``n`` with ``|n| <= order_max``."""
        v = float(self.values[abs(n)])
        return -v if (n < 0 and n % 2) else v


def start_order(order_max: int, t: float) -> int:
    """Order at which the backward sweep starts.

    Beyond ``max(order_max, |t|)`` the Bessel functions fall off like an Airy
    tail of width :math:`(t/2)^{1/3}`; ``sqrt(40 m)`` clears it by a wide
    margin for every ``m`` while costing only :math:`O(\\sqrt{m})` extra steps.
    """
    t = abs(t)
    m = max(order_max, math.ceil(t), 1)
    nominal = order_max + math.ceil(10 + 1.5 * math.sqrt(order_max) + t)
    return max(nominal, m + math.ceil(math.sqrt(40.0 * m)) + 20)


@njit(cache=True)
def _miller_row(order_max, t, start):
    vals = np.zeros(order_max + 1)
    counts = np.zeros(order_max + 1, dtype=np.int64)
    f_hi = 0.0
    f = 1.0
    count = 0
    norm = 0.0
    if start <= order_max:
        vals[start] = f
    if start % 2 == 0:
        norm += 2.0 * f
    for n in range(start, 0, -1):
        f_lo = (2.0 * n / t) * f - f_hi
        if abs(f_lo) > _BIG:
            scale = 2.0**-_RESCALE_EXP
            f_lo *= scale
            f *= scale
            norm *= scale
            count += 1
        m = n - 1
        if m <= order_max:
            vals[m] = f_lo
            counts[m] = count
        if m == 0:
            norm += f_lo
        elif m % 2 == 0:
            norm += 2.0 * f_lo
        f_hi = f
        f = f_lo
    out = np.empty(order_max + 1)
    for m in range(order_max + 1):
        shift = count - counts[m]
        v = vals[m]
        if shift > 0:
            v = math.ldexp(v, -_RESCALE_EXP * shift) if shift < 4 else 0.0
        out[m] = v / norm
    return out


@njit(cache=True)
def _miller_weighted_even(t, ks, weights, start):
    # Σ_j weights[j] * J_{2 ks[j]}(t); ks sorted ascending, non-negative.
    f_hi = 0.0
    f = 1.0
    norm = 0.0
    acc = 0.0
    ptr = ks.size - 1
    while ptr >= 0 and 2 * ks[ptr] > start:
        ptr -= 1
    if start % 2 == 0:
        norm += 2.0 * f
        while ptr >= 0 and 2 * ks[ptr] == start:
            acc += weights[ptr] * f
            ptr -= 1
    for n in range(start, 0, -1):
        f_lo = (2.0 * n / t) * f - f_hi
        if abs(f_lo) > _BIG:
            scale = 2.0**-_RESCALE_EXP
            f_lo *= scale
            f *= scale
            norm *= scale
            acc *= scale
        m = n - 1
        if m % 2 == 0:
            norm += f_lo if m == 0 else 2.0 * f_lo
            while ptr >= 0 and 2 * ks[ptr] == m:
                acc += weights[ptr] * f_lo
                ptr -= 1
        f_hi = f
        f = f_lo
    return acc / norm


def _check_finite(t: float) -> float:
    t = float(t)
    if not math.isfinite(t):
        raise DomainError(f"Bessel argument must be finite, got {t!r}")
    return t


_SERIES_BELOW = 1e-3


def _series_row(order_max: int, t: float) -> np.ndarray:
    # J_n(t) = sum_m (-1)^m (t/2)^(2m+n) / (m! (m+n)!); four terms are exact for |t| < 1e-3
    n = np.arange(order_max + 1, dtype=float)
    h = 0.5 * t
    if h == 0.0:
        return (n == 0).astype(float)
    with np.errstate(under="ignore"):
        lead = np.exp(n * math.log(h) - np.array([math.lgamma(k + 1.0) for k in n]))
    corr = np.ones_like(n)
    term = np.ones_like(n)
    for m in range(1, 4):
        term = term * (-h * h) / (m * (m + n))
        corr += term
    return lead * corr


def bessel_row(order_max: int, t: float) -> BesselRow:
    """Evaluate :math:`J_n(t)` for all ``0 <= n <= order_max``.

    Parameters
    ----------
    order_max : int
        Highest order required, non-negative.
    t : float
        Argument; negative values use :math:`J_n(-t) = (-1)^n J_n(t)`.

    Returns
    -------
    BesselRow
    """
    order_max = int(order_max)
    if order_max < 0:
        raise DomainError(f"order_max must be >= 0, got {order_max}")
    t = _check_finite(t)
    if t == 0.0:
        vals = np.zeros(order_max + 1)
        vals[0] = 1.0
        return BesselRow(order_max, t, vals)
    if abs(t) < _SERIES_BELOW:
        vals = _series_row(order_max, abs(t))
    else:
        vals = _miller_row(order_max, abs(t), start_order(order_max, t))
    if t < 0:
        vals[1::2] *= -1.0
    return BesselRow(order_max, t, vals)


def bessel_rows(order_max: int, ts) -> np.ndarray:
    """Stack :func:`bessel_row` over many arguments; shape ``(len(ts), order_max + 1)``."""
    ts = np.asarray(ts, dtype=float).ravel()
    out = np.empty((ts.size, int(order_max) + 1))
    for i, t in enumerate(ts):
        out[i] = bessel_row(order_max, t).values
    return out


def bessel_j(n: int, t: float) -> float:
    """Return :math:`J_n(t)` for integer ``n`` and real ``t``.

    >>> bessel_j(0, 0.0)
    1.0
    """
    n = int(n)
    t = _check_finite(t)
    sign = 1.0
    if n < 0:
        n = -n
        if n % 2:
            sign = -sign
    if t < 0:
        t = -t
        if n % 2:
            sign = -sign
    if t == 0.0:
        return 1.0 if n == 0 else 0.0
    if t < _SERIES_BELOW:
        return sign * float(_series_row(n, t)[n])
    return sign * float(_miller_row(n, t, start_order(n, t))[n])


def even_order_sum(t: float, ks, weights=None) -> float:
    r"""Return :math:`\sum_j w_j J_{2k_j}(t)` in a single streaming sweep.

    Memory is independent of the number of orders swept, which makes the
    routine usable at arguments far beyond what a stored row allows.
    Indices may be negative (:math:`J_{-2k} = J_{2k}`).
    """
    t = abs(_check_finite(t))
    ks = np.abs(np.asarray(ks, dtype=np.int64).ravel())
    if weights is None:
        weights = np.ones(ks.size)
    weights = np.asarray(weights, dtype=float).ravel()
    if ks.size == 0:
        return 0.0
    if t == 0.0:
        return float(weights[ks == 0].sum())
    order = np.argsort(ks, kind="stable")
    ks, weights = ks[order], weights[order]
    if t < _SERIES_BELOW:
        # orders past a few hundred underflow at such arguments
        live = ks <= 200
        row = _series_row(int(2 * ks[live].max()) if live.any() else 0, t)
        return float(np.dot(weights[live], row[2 * ks[live]]))
    start = start_order(int(min(2 * ks[-1], math.ceil(t) + 1)), t)
    return float(_miller_weighted_even(t, ks, weights, start))


def default_panels(n: int, t: float) -> int:
    """Panel count used by :func:`bessel_j_oracle` when none is given."""
    return max(64, math.ceil(8 * (abs(t) + abs(n))))


def bessel_j_oracle(n: int, t: float, panels: int | None = None) -> float:
    r"""Trapezoidal evaluation of :math:`\frac1\pi\int_0^\pi\cos(t\sin\phi-n\phi)\,d\phi`."""
    t = _check_finite(t)
    if panels is None:
        panels = default_panels(n, t)
    panels = int(panels)
    if panels <= 0:
        raise DomainError(f"panels must be >= 1, got {panels}")
    phi = np.linspace(0.0, math.pi, panels + 1)
    f = np.cos(t * np.sin(phi) - n * phi)
    total = f[1:-1].sum() + 0.5 * (f[0] + f[-1])
    return float(total / panels)


def neumann_identity_residual(t1: float, t2: float, phi: float, n_trunc: int) -> float:
    r"""Residual of Neumann's addition theorem truncated at ``|n| <= n_trunc``.

    Returns :math:`|\sum_{|n|\le N} J_n(t_1)J_n(t_2)\cos(n\phi) - J_0(\bar t)|`,
    :math:`\bar t = \sqrt{t_1^2 + t_2^2 - 2t_1t_2\cos\phi}`.
    """
    t1, t2, phi = (_check_finite(x) for x in (t1, t2, phi))
    n_trunc = int(n_trunc)
    if n_trunc < 1:
        raise DomainError(f"n_trunc must be >= 1, got {n_trunc}")
    r1 = bessel_row(n_trunc, t1).values
    r2 = bessel_row(n_trunc, t2).values
    n = np.arange(n_trunc + 1)
    terms = r1 * r2 * np.cos(n * phi)
    # J_{-n}(t1) J_{-n}(t2) = J_n(t1) J_n(t2) and cos is even.
    lhs = terms[0] + 2.0 * terms[1:].sum()
    tbar = math.sqrt(max(t1 * t1 + t2 * t2 - 2.0 * t1 * t2 * math.cos(phi), 0.0))
    return abs(lhs - bessel_j(0, tbar))
