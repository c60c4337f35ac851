"""Factorial moments, adjacent covariances and convergence diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError
from .models import WindowModel, block_marginal, block_pair_joint
from .pmf import CpParams, Pmf

TREND_ATOL = 1e-12


def factorial_moment(f: Pmf, m: int) -> float:
    """``E X (X - 1) ... (X - m + 1)``; exactly zero when ``m`` exceeds the support."""
    if int(m) != m or m < 1:
        raise DomainError(f"factorial moment order must be a positive integer, got {m}")
    x = np.arange(len(f), dtype=np.float64)
    falling = np.ones_like(x)
    for i in range(m):
        falling *= x - i
    return math.fsum(falling * f.probs)


def covariance(joint: np.ndarray) -> float:
    """``E XY - E X E Y`` for a joint pmf matrix ``joint[x, y]``."""
    p = np.asarray(getattr(joint, "matrix", joint), dtype=np.float64)
    if p.ndim != 2 or np.any(p < 0) or abs(math.fsum(p.ravel()) - 1.0) > 1e-12:
        raise DomainError("joint law must be a nonnegative matrix summing to 1")
    x = np.arange(p.shape[0], dtype=np.float64)
    y = np.arange(p.shape[1], dtype=np.float64)
    exy = float(x @ p @ y)
    return exy - float(x @ p.sum(axis=1)) * float(y @ p.sum(axis=0))


@dataclass(frozen=True, eq=False)
class MomentSummary:
    """Block-level moment inputs of the error bound.

    ``nu[j - 1, m - 1]`` is the order-``m`` factorial moment of block ``j``
    for ``m = 1..s+1``; ``cov_adjacent[j - 2] = Cov(X_{j-1}, X_j)``.
    """

    nu: np.ndarray
    cov_adjacent: np.ndarray
    gamma1: float
    gamma2: float
    nu1_max: float
    n: int | None = field(default=None, compare=False)

    @property
    def s(self) -> int:
        return self.nu.shape[1] - 1

    def nu_sum(self, m: int) -> float:
        return math.fsum(self.nu[:, m - 1])

    def nu1_sq_sum(self) -> float:
        return math.fsum(self.nu[:, 0] ** 2)

    def abs_cov_sum(self) -> float:
        return math.fsum(np.abs(self.cov_adjacent))


def summarize(model: WindowModel, s: int, n: int | None = None) -> MomentSummary:
    """Moments of every block and covariance of every adjacent pair.

    The driver is i.i.d., so block laws depend only on block lengths; each
    distinct length (pair) is computed once.
    """
    if int(s) != s or s < 1:
        raise DomainError(f"s must be a positive integer, got {s}")
    lengths = model.block_lengths()
    marg_cache: dict[int, np.ndarray] = {}
    cov_cache: dict[tuple[int, int], float] = {}
    nu = np.zeros((len(lengths), s + 1))
    cov = np.zeros(max(len(lengths) - 1, 0))
    for j, L in enumerate(lengths, start=1):
        if L not in marg_cache:
            f = block_marginal(model, j)
            marg_cache[L] = np.array([factorial_moment(f, m) for m in range(1, s + 2)])
        nu[j - 1] = marg_cache[L]
        if j >= 2:
            key = (lengths[j - 2], L)
            if key not in cov_cache:
                cov_cache[key] = covariance(block_pair_joint(model, j).matrix)
            cov[j - 2] = cov_cache[key]
    gamma1 = math.fsum(nu[:, 0])
    gamma2 = 0.5 * math.fsum(nu[:, 1] - nu[:, 0] ** 2) + math.fsum(cov)
    nu.setflags(write=False)
    cov.setflags(write=False)
    return MomentSummary(nu, cov, gamma1, gamma2, float(nu[:, 0].max()), n)


@dataclass(frozen=True)
class ConditionRow:
    n: int | None
    nu1_max: float
    moment_gaps: tuple[float, ...]
    nu_s1_sum: float
    abs_cov_sum: float


@dataclass(frozen=True)
class ConvergenceReport:
    """Per-``n`` diagnostics and whether each one trends to its limit.

    ``moment_gaps[m - 1]`` is the distance of the scaled moment sum of
    order ``m`` from its compound Poisson target.
    """

    rows: tuple[ConditionRow, ...]
    nu1_max_decreasing: bool
    moment_gaps_decreasing: tuple[bool, ...]
    nu_s1_decreasing: bool
    cov_decreasing: bool

    @property
    def all_trending(self) -> bool:
        return (
            self.nu1_max_decreasing
            and all(self.moment_gaps_decreasing)
            and self.nu_s1_decreasing
            and self.cov_decreasing
        )


def condition_row(summary: MomentSummary, params: CpParams) -> ConditionRow:
    s = params.s
    if summary.s < s:
        raise DomainError(f"summary carries orders up to {summary.s + 1}, need {s + 1}")
    targets = params.moment_targets()
    gaps = tuple(
        abs(summary.nu_sum(m) / math.factorial(m) - targets[m - 1]) for m in range(1, s + 1)
    )
    return ConditionRow(summary.n, summary.nu1_max, gaps, summary.nu_sum(s + 1), summary.abs_cov_sum())


def trends_to_zero(seq: Sequence[float], atol: float = TREND_ATOL) -> bool:
    """Nonincreasing and either strictly smaller at the end or already at zero."""
    if len(seq) < 2:
        return False
    steps_ok = all(b <= a + atol for a, b in zip(seq, seq[1:]))
    return steps_ok and (seq[-1] < seq[0] - atol or seq[-1] <= atol)


def check_convergence_conditions(
    summaries: Sequence[MomentSummary], params: CpParams
) -> ConvergenceReport:
    """Evaluate the four sufficient conditions for compound Poisson convergence along ``n``."""
    if len(summaries) < 2:
        raise DomainError("need at least two summaries to judge a trend")
    rows = tuple(condition_row(sm, params) for sm in summaries)
    return ConvergenceReport(
        rows,
        trends_to_zero([r.nu1_max for r in rows]),
        tuple(trends_to_zero([r.moment_gaps[m] for r in rows]) for m in range(params.s)),
        trends_to_zero([r.nu_s1_sum for r in rows]),
        trends_to_zero([r.abs_cov_sum for r in rows]),
    )
