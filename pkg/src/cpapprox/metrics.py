"""Weighted total variation and Wasserstein norms of lattice signed measures."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .pmf import Pmf

HOLDS_TOL = 1e-10
DEFAULT_PANELS = 4096


@dataclass(frozen=True, eq=False)
class SignedMeasure:
    """Finite signed measure on ``{0, 1, ..., len - 1}``.

    ``defect`` bounds the mass known to be missing from ``values`` (tails
    dropped when its pmfs were truncated).
    """

    values: np.ndarray
    defect: float = 0.0

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=np.float64).ravel()
        if not np.all(np.isfinite(v)):
            raise DomainError("signed measure has NaN or infinite entries")
        if not self.defect >= 0:
            raise DomainError("defect must be nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size

    def total_mass(self) -> float:
        return math.fsum(self.values)


@dataclass(frozen=True)
class InequalityReport:
    lhs: float
    rhs: float
    holds: bool


@dataclass(frozen=True)
class PresmanReport:
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + HOLDS_TOL


def _weighted(values: np.ndarray, h: float) -> np.ndarray:
    # exp(h k) * v evaluated in log space: exp(h k) alone overflows long
    # before the probabilities it multiplies underflow.
    out = np.zeros_like(values)
    nz = values != 0
    k = np.flatnonzero(nz)
    with np.errstate(over="raise"):
        out[nz] = np.sign(values[nz]) * np.exp(h * k + np.log(np.abs(values[nz])))
    return out


def difference(f: Pmf, g: Pmf) -> SignedMeasure:
    """Unweighted ``f - g`` on the joint support."""
    n = max(len(f), len(g))
    return SignedMeasure(f.padded(n) - g.padded(n), f.trunc_defect + g.trunc_defect)


def weighted_difference(f: Pmf, g: Pmf, h: float) -> SignedMeasure:
    """Conjugate measure ``k -> exp(h k) (f(k) - g(k))``."""
    if h < 0:
        raise DomainError(f"h must be nonnegative, got {h}")
    return SignedMeasure(_weighted(difference(f, g).values, h))


def total_variation_norm(m: SignedMeasure) -> float:
    return math.fsum(np.abs(m.values))


def cumulative(m: SignedMeasure) -> np.ndarray:
    """Distribution function ``M(k) = M{[0, k]}``.

    For measures of zero total mass, up to round-off and the truncation
    defect, the upper part is taken as minus the remaining tail.  Left
    partial sums would carry the round-off and the dropped mass there.
    """
    v = m.values
    left = np.cumsum(v)
    abs_total = float(np.abs(v).sum())
    if abs_total == 0.0 or abs(m.total_mass()) > m.defect + 1e-9 * abs_total:
        return left
    tail = -(np.cumsum(v[::-1])[::-1] - v)  # -sum_{j > k} v_j
    abs_left = np.cumsum(np.abs(v))
    use_tail = abs_left > abs_total - abs_left
    return np.where(use_tail, tail, left)


def wasserstein_norm(m: SignedMeasure, h: float = 0.0) -> float:
    """``sum_k exp(h k) |M(k)|`` for an unweighted measure ``m``.

    The sum runs over the stored support only; beyond it the cumulative
    function of a zero-mass measure vanishes.
    """
    if h < 0:
        raise DomainError(f"h must be nonnegative, got {h}")
    return math.fsum(np.abs(_weighted(cumulative(m), h)))


def check_wasserstein_inequality(f: Pmf, g: Pmf, h: float) -> InequalityReport:
    """Compare the weighted Wasserstein distance with TV / (e^h - 1)."""
    if not h > 0:
        raise DomainError("the Wasserstein inequality requires h > 0")
    lhs = wasserstein_norm(difference(f, g), h)
    rhs = total_variation_norm(weighted_difference(f, g, h)) / math.expm1(h)
    return InequalityReport(lhs, rhs, lhs <= rhs + HOLDS_TOL)


def simpson_weights(panels: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    if panels < 2 or panels % 2:
        raise DomainError(f"Simpson needs an even number of panels >= 2, got {panels}")
    x = np.linspace(a, b, panels + 1)
    w = np.full(panels + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return x, w * (b - a) / (3 * panels)


def transform_on_grid(values: np.ndarray, t: np.ndarray, chunk: int = 256) -> tuple[np.ndarray, np.ndarray]:
    """``M^(it)`` and its t-derivative at every point of ``t``."""
    k = np.arange(values.size)
    mhat = np.empty(t.size, dtype=complex)
    dhat = np.empty(t.size, dtype=complex)
    for start in range(0, t.size, chunk):
        e = np.exp(1j * np.outer(t[start : start + chunk], k))
        mhat[start : start + chunk] = e @ values
        dhat[start : start + chunk] = e @ (1j * k * values)
    return mhat, dhat


def presman_bound(m: SignedMeasure, quadrature_panels: int = DEFAULT_PANELS) -> PresmanReport:
    """Total variation of ``m`` against the L2 bound on its transform.

    ``rhs = sqrt(1/2 + 1/(2 pi)) * sqrt(int_{-pi}^{pi} |M^|^2 + |M^'|^2 dt)``
    with composite Simpson quadrature.
    """
    t, w = simpson_weights(quadrature_panels, -math.pi, math.pi)
    mhat, dhat = transform_on_grid(m.values, t)
    integral = float(np.dot(w, np.abs(mhat) ** 2 + np.abs(dhat) ** 2))
    rhs = math.sqrt(0.5 + 1.0 / (2 * math.pi)) * math.sqrt(max(integral, 0.0))
    return PresmanReport(total_variation_norm(m), rhs)
