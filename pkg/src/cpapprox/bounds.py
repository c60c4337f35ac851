"""Explicit error bound for compound Poisson approximation of 1-dependent sums."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import DomainError
from .moments import MomentSummary
from .pmf import CpParams

PRECONDITION_LIMIT = 0.01
# relative slack so that parameters sitting exactly on the limit are not lost to rounding
PRECONDITION_RTOL = 1e-12
SQRT_PI_1 = math.sqrt(math.pi + 1.0)


@dataclass(frozen=True)
class Constants:
    a: float
    psi: float
    k1: float
    k2: float
    k3: float
    k4: float


@dataclass(frozen=True)
class BoundReport:
    a: float
    psi: float
    k1: float
    k2: float
    k3: float
    k4: float
    term_moment_match: float
    term_nu_s1: float
    term_nu1_sq: float
    term_cov: float
    total: float
    precondition_ok: bool
    gamma1: float
    nu1_max: float = 0.0
    form: str = "theorem"

    def to_dict(self) -> dict:
        return asdict(self)


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def weight_constant(h: float, c0: int) -> float:
    """``a = exp(h C0) (2 + h) sqrt(C0)``."""
    return math.exp(h * c0) * (2.0 + h) * math.sqrt(c0)


def precondition_holds(a: float, nu1_max: float) -> bool:
    """``a^2 nu1_max <= 1/100`` up to rounding."""
    return a * a * nu1_max <= PRECONDITION_LIMIT * (1.0 + PRECONDITION_RTOL)


def constants(params: CpParams, gamma1: float) -> Constants:
    if gamma1 < 0:
        raise DomainError(f"gamma1 must be nonnegative, got {gamma1}")
    h, c0, s = params.h, params.c0, params.s
    a = weight_constant(h, c0)
    a2g = a * a * gamma1
    rate_mass = math.fsum(lam * (math.exp(h * m) + 1.0) for m, lam in enumerate(params.lambdas, 1))
    psi = _exp(max(4.0 * a2g, rate_mass))
    eh1 = math.exp(h) + 1.0
    k1 = psi * SQRT_PI_1 * eh1**s * (s + 1 + 4.0 * a2g)
    k2 = psi * SQRT_PI_1 * (s + 1 + 4.0 * a2g) * math.exp(h * c0) * eh1 ** (s + 1) / math.factorial(s + 1)
    k3 = 16.0 * psi * a**4 * SQRT_PI_1 * (5.0 + 6.0 * a2g)
    k4 = 4.0 * psi * a**3 * SQRT_PI_1 * (1.1 + a2g)
    return Constants(a, psi, k1, k2, k3, k4)


def _term(constant: float, quantity: float) -> float:
    # a vanishing quantity contributes nothing even when psi overflowed
    return 0.0 if quantity == 0 else constant * quantity


def theorem2_bound(summary: MomentSummary, params: CpParams) -> BoundReport:
    """Right-hand side of the weighted total variation bound.

    Always computed; ``precondition_ok`` tells whether ``a^2 max_j nu_1(j) <= 1/100``
    holds, i.e. whether the number certifies anything.
    """
    s = params.s
    if summary.nu.shape[1] < s + 1:
        raise DomainError(f"summary has moment orders up to {summary.nu.shape[1]}, need {s + 1}")
    c = constants(params, summary.gamma1)
    targets = params.moment_targets()
    gap = math.fsum(
        abs(summary.nu_sum(m) / math.factorial(m) - targets[m - 1]) for m in range(1, s + 1)
    )
    t1 = _term(c.k1, gap)
    t2 = _term(c.k2, summary.nu_sum(s + 1))
    t3 = _term(c.k3, summary.nu1_sq_sum())
    t4 = _term(c.k4, summary.abs_cov_sum())
    return BoundReport(
        c.a, c.psi, c.k1, c.k2, c.k3, c.k4, t1, t2, t3, t4,
        t1 + t2 + t3 + t4,
        precondition_holds(c.a, summary.nu1_max),
        summary.gamma1,
        summary.nu1_max,
    )


def corollary_bound(summary: MomentSummary, params: CpParams) -> BoundReport:
    """The ``s = 1`` (Poisson) and ``s = 2`` specialisations, with explicit constants.

    For ``s = 2`` the second moment gap is ``|sum nu_2 / 2 - lambda_2|``,
    half of the ``|sum nu_2 - 2 lambda_2|`` form; the factor lives in ``K1``.
    """
    if params.s not in (1, 2):
        raise DomainError(f"corollary form needs s in {{1, 2}}, got {params.s}")
    report = theorem2_bound(summary, params)
    return BoundReport(**{**report.to_dict(), "form": f"corollary-s{params.s}"})


def wasserstein_bound(report: BoundReport, h: float) -> float:
    """Bound on the ``exp(h k)``-weighted Wasserstein distance."""
    if not h > 0:
        raise DomainError("the Wasserstein bound requires h > 0")
    return report.total / math.expm1(h)
