r"""Exact evolution of the infinite harmonic chain.

The chain :math:`\ddot q_k = \omega_1^2(q_{k+1} - 2q_k + q_{k-1})` is solved by
convolution with two kernels,

.. math::
    q_n(t) = \sum_k a_k(t) q_{n-k}(0) + \sum_k b_k(t) p_{n-k}(0),

where :math:`a_k(t) = J_{2k}(2\omega_1 t)` and :math:`b_k` is the Fourier
coefficient of :math:`\sin(2\omega_1 t\sin(\lambda/2)) / (2\omega_1\sin(\lambda/2))`.
Kernels are truncated to a window :math:`|k| \le M` whose size comes from the
light-cone estimate

.. math:: |q_0(t)| \le (e^{\alpha+1}\alpha)^{2M}\,|q(0)|_\infty,
          \qquad \alpha = \omega_1 t / M,

valid for data vanishing on :math:`|n| < M`.

Most experiments start from rest (``p(0) = 0``); :func:`evolve` also accepts an
initial velocity field but nothing in the package relies on it.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bessel import bessel_row
from .errors import DomainError, PreconditionError
from .report import ExperimentReport

__all__ = [
    "LatticeWindow",
    "KernelRow",
    "light_cone_bound",
    "light_cone_window",
    "kernel_row",
    "fourier_kernel",
    "evolve",
    "evolve_state",
    "cos_norm",
    "l2_uniform_bound_check",
    "MIN_HALF_WIDTH",
]

MIN_HALF_WIDTH = 8
DEFAULT_EPS = 1e-8


@dataclass(frozen=True)
class LatticeWindow:
    """A finite window ``values`` of a sequence on the integers, starting at ``offset``.

    ``fill="zero"`` means the sequence vanishes outside the window;
    ``fill="none"`` means it is unknown there.
    """

    offset: int
    values: np.ndarray
    fill: str = "zero"

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).ravel()
        if vals.size == 0:
            raise DomainError("LatticeWindow needs at least one value")
        if not np.all(np.isfinite(vals)):
            raise DomainError("LatticeWindow values must be finite")
        if self.fill not in ("zero", "none"):
            raise DomainError(f"fill must be 'zero' or 'none', got {self.fill!r}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "offset", int(self.offset))

    @classmethod
    def zeros(cls, lo: int, hi: int, fill: str = "zero") -> "LatticeWindow":
        return cls(lo, np.zeros(hi - lo + 1), fill)

    @classmethod
    def delta(cls, site: int = 0, value: float = 1.0) -> "LatticeWindow":
        return cls(site, np.array([value]))

    @property
    def lo(self) -> int:
        return self.offset

    @property
    def hi(self) -> int:
        return self.offset + self.values.size - 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1)

    def __len__(self) -> int:
        return self.values.size

    def __getitem__(self, n: int) -> float:
        if self.lo <= n <= self.hi:
            return float(self.values[n - self.lo])
        if self.fill == "zero":
            return 0.0
        raise PreconditionError(f"site {n} lies outside the stored window [{self.lo}, {self.hi}]")

    def inf_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def l2_norm(self) -> float:
        # scaled so tiny or huge entries neither underflow nor overflow
        top = self.inf_norm()
        if top == 0.0:
            return 0.0
        return top * float(np.sqrt(np.sum((self.values / top) ** 2)))

    def restrict(self, lo: int, hi: int) -> "LatticeWindow":
        """Values on ``[lo, hi]``; zero-padded when ``fill == "zero"``."""
        if hi < lo:
            raise DomainError(f"empty range [{lo}, {hi}]")
        if self.fill == "none" and (lo < self.lo or hi > self.hi):
            raise PreconditionError(
                f"range [{lo}, {hi}] exceeds stored window [{self.lo}, {self.hi}]")
        out = np.zeros(hi - lo + 1)
        a, b = max(lo, self.lo), min(hi, self.hi)
        if a <= b:
            out[a - lo:b - lo + 1] = self.values[a - self.lo:b - self.lo + 1]
        return LatticeWindow(lo, out, self.fill)

    def to_dict(self) -> dict:
        return {"offset": self.offset, "values": self.values.tolist(), "fill": self.fill}

    @classmethod
    def from_dict(cls, d: dict) -> "LatticeWindow":
        unknown = set(d) - {"offset", "values", "fill"}
        if unknown:
            raise DomainError(f"unknown LatticeWindow keys: {sorted(unknown)}")
        return cls(int(d["offset"]), np.asarray(d["values"], dtype=float), d.get("fill", "zero"))


@dataclass(frozen=True)
class KernelRow:
    """Kernel coefficients :math:`a_k, b_k` for ``-half_width <= k <= half_width``."""

    omega1: float
    time: float
    half_width: int
    a: np.ndarray
    b: np.ndarray
    tail_bound: float

    @property
    def ks(self) -> np.ndarray:
        return np.arange(-self.half_width, self.half_width + 1)

    def a_at(self, k: int) -> float:
        return float(self.a[k + self.half_width]) if abs(k) <= self.half_width else 0.0

    def b_at(self, k: int) -> float:
        return float(self.b[k + self.half_width]) if abs(k) <= self.half_width else 0.0


def _validate(omega1: float, t: float, eps: float) -> None:
    if not (omega1 > 0 and math.isfinite(omega1)):
        raise DomainError(f"omega1 must be positive, got {omega1!r}")
    if not (t >= 0 and math.isfinite(t)):
        raise DomainError(f"t must be non-negative, got {t!r}")
    if not (0 < eps < 1):
        raise DomainError(f"eps must lie in (0, 1), got {eps!r}")


def _gamma() -> float:
    from .bounds import solve_gamma

    return solve_gamma().gamma


def light_cone_bound(omega1: float, t: float, m: int) -> float:
    """The light-cone estimate :math:`(e^{\\alpha+1}\\alpha)^{2m}` with :math:`\\alpha = \\omega_1 t/m`."""
    if t == 0:
        return 0.0
    alpha = omega1 * t / m
    base = math.exp(alpha + 1.0) * alpha
    return math.exp(2 * m * math.log(base))


def light_cone_window(omega1: float, t: float, eps: float = DEFAULT_EPS) -> int:
    """Smallest ``M >= max(ceil(2 gamma omega1 t), 8)`` with light-cone bound at most ``eps``.

    Initial data vanishing on ``|n| < M`` then moves :math:`q_0(t)` by at most
    ``eps * |q(0)|_inf``.
    """
    _validate(omega1, t, eps)
    m = max(math.ceil(2.0 * _gamma() * omega1 * t), MIN_HALF_WIDTH)
    while light_cone_bound(omega1, t, m) > eps:
        m += 1
    return m


def _fft_size(half_width: int) -> int:
    n = 64
    while n < 4 * half_width + 128:
        n *= 2
    return n


def fourier_kernel(omega1: float, t: float, half_width: int, kind: str = "b") -> np.ndarray:
    r"""Trapezoidal Fourier coefficients of the kernel symbols on ``|k| <= half_width``.

    ``kind`` selects the symbol: ``"a"`` is :math:`\cos(A s)`, ``"b"`` is
    :math:`\sin(A s)/(2\omega_1 s)` and ``"adot"`` is
    :math:`-2\omega_1 s\sin(A s)`, with :math:`A = 2\omega_1 t`,
    :math:`s = \sin(\lambda/2)`.  All three are smooth :math:`2\pi`-periodic
    functions of :math:`\lambda`, so the rule is spectrally accurate.
    """
    n = _fft_size(half_width)
    lam = 2.0 * np.pi * np.arange(n) / n
    s = np.sin(0.5 * lam)
    amp = 2.0 * omega1 * t
    if kind == "a":
        sym = np.cos(amp * s)
    elif kind == "b":
        sym = t * np.sinc(amp * s / np.pi)
    elif kind == "adot":
        sym = -2.0 * omega1 * s * np.sin(amp * s)
    else:
        raise DomainError(f"unknown kernel kind {kind!r}")
    coef = np.fft.ifft(sym).real
    ks = np.arange(-half_width, half_width + 1)
    return coef[ks % n]


_cache: dict = {}
_cache_lock = threading.Lock()


def kernel_row(omega1: float, t: float, eps: float = DEFAULT_EPS) -> KernelRow:
    """Certified kernel row for the chain at time ``t``.

    ``a`` comes from Bessel values, ``b`` from quadrature of its symbol.  Rows are
    cached by ``(omega1, t, eps)``.
    """
    omega1, t, eps = float(omega1), float(t), float(eps)
    _validate(omega1, t, eps)
    key = (omega1, t, eps)
    with _cache_lock:
        row = _cache.get(key)
    if row is not None:
        return row
    m = light_cone_window(omega1, t, eps)
    even = bessel_row(2 * m, 2.0 * omega1 * t).values[::2]
    a = np.concatenate([even[:0:-1], even])
    b = fourier_kernel(omega1, t, m, "b")
    tail = light_cone_bound(omega1, t, m + 1)
    row = KernelRow(omega1, t, m, a, b, tail)
    with _cache_lock:
        if len(_cache) > 256:
            _cache.clear()
        _cache[key] = row
    return row


def _conv_window(kernel: np.ndarray, m: int, data: LatticeWindow, lo: int, hi: int) -> np.ndarray:
    # sum_{|k|<=m} kernel[k + m] * data[n - k] for n in [lo, hi]
    src = data.restrict(lo - m, hi + m)
    return np.convolve(src.values, kernel, mode="valid")


def _check_margin(data: LatticeWindow, m: int, lo: int, hi: int, label: str) -> None:
    if data.fill == "zero":
        return
    for n in (lo, hi):
        if n - m < data.lo or n + m > data.hi:
            raise PreconditionError(
                f"output site {n} needs {label} on [{n - m}, {n + m}], "
                f"but only [{data.lo}, {data.hi}] is stored")


def _out_range(q0: LatticeWindow, out_window) -> tuple[int, int]:
    if out_window is None:
        return q0.lo, q0.hi
    lo, hi = (int(v) for v in out_window)
    if hi < lo:
        raise DomainError(f"empty output window [{lo}, {hi}]")
    return lo, hi


def evolve(q0: LatticeWindow, p0: LatticeWindow | None, omega1: float, t: float,
           eps: float = DEFAULT_EPS, out_window: tuple[int, int] | None = None) -> LatticeWindow:
    """Positions :math:`q_n(t)` on ``out_window`` (default: the window of ``q0``).

    The per-site truncation error is at most ``eps * (|q0|_inf + t |p0|_inf)``.
    Windows with ``fill="none"`` must cover the full light cone of every requested
    site; otherwise :class:`PreconditionError` names the offending site.
    """
    lo, hi = _out_range(q0, out_window)
    if t == 0:
        _validate(omega1, t, eps)
        _check_margin(q0, 0, lo, hi, "q0")
        return LatticeWindow(lo, q0.restrict(lo, hi).values)
    row = kernel_row(omega1, t, eps)
    m = row.half_width
    _check_margin(q0, m, lo, hi, "q0")
    q = _conv_window(row.a, m, q0, lo, hi)
    if p0 is not None:
        _check_margin(p0, m, lo, hi, "p0")
        q = q + _conv_window(row.b, m, p0, lo, hi)
    return LatticeWindow(lo, q)


def evolve_state(q0: LatticeWindow, p0: LatticeWindow | None, omega1: float, t: float,
                 eps: float = DEFAULT_EPS, out_window=None) -> tuple[LatticeWindow, LatticeWindow]:
    """Positions and velocities at time ``t``; velocities use :math:`\\dot a_k` and :math:`\\dot b_k = a_k`."""
    q = evolve(q0, p0, omega1, t, eps, out_window)
    lo, hi = q.lo, q.hi
    if t == 0:
        p = p0.restrict(lo, hi).values if p0 is not None else np.zeros(hi - lo + 1)
        return q, LatticeWindow(lo, p)
    row = kernel_row(omega1, t, eps)
    m = row.half_width
    adot = fourier_kernel(omega1, t, m, "adot")
    p = _conv_window(adot, m, q0, lo, hi)
    if p0 is not None:
        p = p + _conv_window(row.a, m, p0, lo, hi)
    return q, LatticeWindow(lo, p)


def cos_norm(omega1: float, t: float, eps: float = DEFAULT_EPS) -> float:
    """Operator norm of :math:`\\cos(t\\sqrt V)` on :math:`\\ell_\\infty`: the :math:`\\ell_1` mass of ``a``."""
    row = kernel_row(omega1, t, eps)
    return float(np.abs(row.a).sum())


def l2_uniform_bound_check(q0: LatticeWindow, omega1: float, t_grid: Sequence[float],
                           eps: float = DEFAULT_EPS, tol: float = 1e-9) -> ExperimentReport:
    """Check :math:`|q(t)|_\\infty \\le |q(0)|_2` along ``t_grid`` for data starting at rest."""
    if q0.fill != "zero":
        raise PreconditionError("l2 bound check needs finitely supported data (fill='zero')")
    rep = ExperimentReport("l2_uniform_bound", config={
        "q0": q0.to_dict(), "omega1": omega1, "t_grid": list(t_grid), "eps": eps, "tol": tol})
    l2 = q0.l2_norm()
    worst = 0.0
    for t in t_grid:
        m = light_cone_window(omega1, t, eps)
        q = evolve(q0, None, omega1, t, eps, (q0.lo - m, q0.hi + m))
        sup = q.inf_norm()
        slack = l2 * (1 + tol) + eps * q0.inf_norm()
        rep.check(f"t={t}", "|q(t)|_inf <= |q(0)|_2 (1 + tol) + eps |q(0)|_inf", sup, sup <= slack)
        if l2 > 0:
            worst = max(worst, sup / l2)
    rep.metrics["max_ratio"] = worst
    rep.metrics["l2_norm"] = l2
    return rep
