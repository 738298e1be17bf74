r"""The limiting stationary Gaussian process and its finite-grid supremum bound.

:math:`X(s) = \sum_n \xi_n J_n(s)` with i.i.d. standard normal :math:`\xi_n` has
covariance :math:`J_0(t - s)`.  On a grid whose points are far enough apart
that :math:`|J_0(s_i - s_j)| \le \varepsilon'`, with :math:`N\varepsilon' \le
\delta < 1/2`,

.. math:: P\{\max_k X(s_k) \ge a\} \ge 1 - p^N,\qquad
          p = \sqrt{\tfrac{1+\delta}{1-\delta}}\,\Phi(a\sqrt{1+\delta}).

The grid condition uses :math:`|J_0(u)| \le |u|^{-1/3}`, hence a spacing of at
least :math:`\varepsilon'^{-3}`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bessel import bessel_j, bessel_row
from .errors import DomainError, PreconditionError
from .report import ExperimentReport

__all__ = [
    "GaussianGridSpec",
    "GaussianPath",
    "normal_cdf",
    "sample_X",
    "sample_X_batch",
    "sample_X_grid_exact",
    "grid_covariance",
    "sup_bound_p",
    "sup_probability_mc",
    "TRUNC_MARGIN",
]

TRUNC_MARGIN = 40


@dataclass(frozen=True)
class GaussianGridSpec:
    a: float
    delta: float
    N: int
    eps_prime: float
    grid_spacing: float

    def __post_init__(self):
        if self.N < 2:
            raise DomainError(f"N must be >= 2, got {self.N}")
        if not 0 < self.delta < 0.5:
            raise DomainError(f"delta must lie in (0, 1/2), got {self.delta}")
        if not self.eps_prime > 0:
            raise DomainError("eps_prime must be positive")
        if self.N * self.eps_prime > self.delta * (1 + 1e-12):
            raise DomainError(f"need N * eps_prime <= delta, got {self.N * self.eps_prime} > {self.delta}")
        if self.grid_spacing < self.eps_prime ** -3 * (1 - 1e-12):
            raise DomainError(f"grid_spacing must be >= eps_prime^-3 = {self.eps_prime ** -3}")

    @classmethod
    def build(cls, a: float, delta: float, N: int) -> "GaussianGridSpec":
        """Largest admissible ``eps_prime = delta / N`` and the smallest admissible spacing."""
        eps = delta / N
        return cls(a, delta, N, eps, float(math.ceil(eps ** -3)))

    @property
    def grid(self) -> np.ndarray:
        return self.grid_spacing * np.arange(1, self.N + 1)


@dataclass(frozen=True)
class GaussianPath:
    s: np.ndarray
    values: np.ndarray
    tail_mass: np.ndarray  # 1 - sum_{|n|<=n_trunc} J_n(s)^2: variance left out by truncation


def normal_cdf(x: float) -> float:
    """Standard normal CDF, :math:`\\tfrac12\\operatorname{erfc}(-x/\\sqrt2)`."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def _xi(seed: int, sample: int, count: int) -> np.ndarray:
    # draw order n = 0, +1, -1, +2, -2, ... so a larger n_trunc extends a path
    gen = np.random.Generator(np.random.Philox(key=[seed, sample]))
    return gen.standard_normal(count)


def _coefficient_matrix(s_grid: np.ndarray, n_trunc: int) -> tuple[np.ndarray, np.ndarray]:
    # columns follow the draw order: J_0, J_1, J_-1, J_2, J_-2, ...
    coef = np.empty((s_grid.size, 2 * n_trunc + 1))
    tail = np.empty(s_grid.size)
    for i, s in enumerate(s_grid):
        row = bessel_row(n_trunc, s).values
        neg = row.copy()
        neg[1::2] *= -1.0
        coef[i, 0] = row[0]
        coef[i, 1::2] = row[1:]
        coef[i, 2::2] = neg[1:]
        tail[i] = max(0.0, 1.0 - float(np.dot(coef[i], coef[i])))
    return coef, tail


def _check_trunc(s_grid: np.ndarray, n_trunc: int) -> None:
    need = math.ceil(float(np.max(np.abs(s_grid)))) + TRUNC_MARGIN
    if n_trunc < need:
        raise PreconditionError(f"n_trunc={n_trunc} is below max|s| + {TRUNC_MARGIN} = {need}")


def sample_X(s_grid: Sequence[float], n_trunc: int, seed: int, sample: int = 0) -> GaussianPath:
    """One path of the truncated series :math:`\\sum_{|n|\\le n_{trunc}} \\xi_n J_n(s)`."""
    s_grid = np.asarray(s_grid, dtype=float)
    _check_trunc(s_grid, n_trunc)
    coef, tail = _coefficient_matrix(s_grid, n_trunc)
    return GaussianPath(s_grid, coef @ _xi(seed, sample, coef.shape[1]), tail)


def sample_X_batch(s_grid: Sequence[float], n_trunc: int, seed: int, n_samples: int) -> np.ndarray:
    """``n_samples`` independent series paths; shape ``(n_samples, len(s_grid))``."""
    s_grid = np.asarray(s_grid, dtype=float)
    _check_trunc(s_grid, n_trunc)
    coef, _ = _coefficient_matrix(s_grid, n_trunc)
    xi = np.stack([_xi(seed, i, coef.shape[1]) for i in range(n_samples)])
    return xi @ coef.T


def grid_covariance(s_grid: Sequence[float]) -> np.ndarray:
    """Exact covariance matrix :math:`J_0(s_i - s_j)` of :math:`X` on the grid."""
    s_grid = np.asarray(s_grid, dtype=float)
    n = s_grid.size
    cache: dict[float, float] = {}
    cov = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            lag = abs(s_grid[i] - s_grid[j])
            if lag not in cache:
                cache[lag] = bessel_j(0, lag)
            cov[i, j] = cov[j, i] = cache[lag]
    return cov


def sample_X_grid_exact(s_grid: Sequence[float], n_samples: int, seed: int,
                        cov: np.ndarray | None = None) -> np.ndarray:
    """Samples of :math:`(X(s_1), \\dots, X(s_N))` through the Cholesky factor of its covariance.

    Same law as the series on the grid, at a cost independent of ``max |s|``.
    """
    if cov is None:
        cov = grid_covariance(s_grid)
    chol = np.linalg.cholesky(cov)
    z = np.stack([_xi(seed, i, cov.shape[0]) for i in range(n_samples)])
    return z @ chol.T


def sup_bound_p(delta: float, a: float) -> float:
    """:math:`p(\\delta) = \\sqrt{(1+\\delta)/(1-\\delta)}\\,\\Phi(a\\sqrt{1+\\delta})`."""
    if not 0 <= delta < 0.5:
        raise DomainError(f"delta must lie in [0, 1/2), got {delta}")
    return math.sqrt((1 + delta) / (1 - delta)) * normal_cdf(a * math.sqrt(1 + delta))


def sup_probability_mc(spec: GaussianGridSpec, n_samples: int, seed: int,
                       sampler: str = "auto", series_limit: float = 5e3) -> ExperimentReport:
    """Empirical :math:`P\\{\\max_k X(s_k) \\ge a\\}` on the decorrelated grid against ``1 - p^N``.

    ``sampler="series"`` sums the truncated series; ``"exact"`` draws from the
    exact finite-dimensional law.  ``"auto"`` uses the series when the grid
    ends below ``series_limit``.
    """
    s = spec.grid
    if sampler == "auto":
        sampler = "series" if s[-1] <= series_limit else "exact"
    cov = grid_covariance(s)
    off = np.abs(cov - np.diag(np.diag(cov)))
    premise = float(off.max())
    if sampler == "series":
        x = sample_X_batch(s, math.ceil(s[-1]) + TRUNC_MARGIN, seed, n_samples)
    elif sampler == "exact":
        x = sample_X_grid_exact(s, n_samples, seed, cov)
    else:
        raise DomainError(f"unknown sampler {sampler!r}")
    hit = np.max(x, axis=1) >= spec.a
    p_hat = float(hit.mean())
    se = math.sqrt(max(p_hat * (1 - p_hat), 1.0 / n_samples) / n_samples)
    p = sup_bound_p(spec.delta, spec.a)
    bound = 1.0 - p**spec.N
    eig = np.linalg.eigvalsh(cov)
    rep = ExperimentReport("gaussian_sup", config={
        "a": spec.a, "delta": spec.delta, "N": spec.N, "eps_prime": spec.eps_prime,
        "grid_spacing": spec.grid_spacing, "n_samples": n_samples, "seed": seed,
        "sampler": sampler})
    rep.metrics.update(empirical_p=p_hat, se=se, p=p, bound=bound, max_offdiag_cov=premise,
                       eig_min=float(eig.min()), eig_max=float(eig.max()))
    rep.check("premise", "max_{i!=j} |J0(s_i - s_j)| <= eps_prime", premise,
              premise <= spec.eps_prime)
    rep.check("gershgorin", "eigenvalues of the grid covariance within [1 - delta, 1 + delta]",
              [float(eig.min()), float(eig.max())],
              1 - spec.delta <= eig.min() and eig.max() <= 1 + spec.delta)
    rep.check("sup_bound", "P_hat >= 1 - p^N - 3 SE", p_hat, p_hat >= bound - 3 * se)
    rep.tables["gaussian_sup"] = (["a", "delta", "N", "empirical_p", "bound"],
                                  [(spec.a, spec.delta, spec.N, p_hat, bound)])
    return rep
