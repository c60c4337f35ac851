"""Finite-support probability mass functions on the nonnegative integers.

Every distribution in the package is carried by :class:`Pmf`: a vector of
probabilities indexed from 0 plus the mass that was thrown away when an
unbounded law (Poisson, compound Poisson) had to be cut off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

NORMALIZATION_TOL = 1e-12
DEFAULT_TAIL_TOL = 1e-12
MAX_JUMP = 20

# Negative entries smaller than this are treated as round-off.
_ROUNDOFF = 1e-15


@dataclass(frozen=True, eq=False)
class Pmf:
    """Probability mass function on ``{0, 1, ..., K}``.

    ``trunc_defect`` is the probability mass discarded beyond ``K``.  The
    vector is stored in trimmed form: trailing zeros are removed, except
    that the point mass at zero keeps its single entry.
    """

    probs: np.ndarray
    trunc_defect: float = 0.0

    def __post_init__(self) -> None:
        p = np.array(self.probs, dtype=np.float64).ravel()
        if p.size == 0:
            raise DomainError("a pmf needs at least one entry")
        if not np.all(np.isfinite(p)):
            raise DomainError("pmf entries must be finite")
        defect = float(self.trunc_defect)
        neg = p < 0
        if neg.any():
            if np.min(p) < -_ROUNDOFF:
                raise DomainError(f"negative probability {np.min(p):.3e} in pmf")
            defect += float(-p[neg].sum())
            p[neg] = 0.0
        nz = np.flatnonzero(p)
        p = p[: nz[-1] + 1] if nz.size else p[:1]
        if defect < 0:
            raise DomainError("trunc_defect must be nonnegative")
        total = math.fsum(p) + defect
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise DomainError(f"pmf mass {total!r} is not 1 within {NORMALIZATION_TOL}")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "trunc_defect", defect)

    def __len__(self) -> int:
        return self.probs.size

    def __getitem__(self, k: int) -> float:
        if 0 <= k < self.probs.size:
            return float(self.probs[k])
        return 0.0

    @property
    def support_max(self) -> int:
        return self.probs.size - 1

    def mean(self) -> float:
        return float(np.dot(np.arange(self.probs.size), self.probs))

    def variance(self) -> float:
        k = np.arange(self.probs.size, dtype=np.float64)
        mu = self.mean()
        return float(np.dot((k - mu) ** 2, self.probs))

    def padded(self, length: int) -> np.ndarray:
        """Probabilities zero-padded (never cut) to ``length`` entries."""
        out = np.zeros(max(length, self.probs.size))
        out[: self.probs.size] = self.probs
        return out


def point_mass(k: int = 0) -> Pmf:
    if k < 0:
        raise DomainError("point mass location must be nonnegative")
    p = np.zeros(k + 1)
    p[k] = 1.0
    return Pmf(p)


def bernoulli(q: float) -> Pmf:
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"Bernoulli parameter {q} outside [0, 1]")
    return Pmf(np.array([1.0 - q, q]))


@dataclass(frozen=True)
class CpParams:
    """Target compound Poisson law together with the weight and bound.

    ``lambdas[m - 1]`` is the rate of jumps of size ``m``; ``h`` is the
    exponent of the weights ``exp(h k)`` and ``c0`` bounds every summand.
    """

    s: int
    lambdas: tuple[float, ...]
    h: float = 0.0
    c0: int = 1

    def __post_init__(self) -> None:
        lam = tuple(float(x) for x in self.lambdas)
        object.__setattr__(self, "lambdas", lam)
        if int(self.s) != self.s or self.s < 1:
            raise DomainError(f"s must be a positive integer, got {self.s}")
        if self.s > MAX_JUMP:
            raise DomainError(f"s = {self.s} exceeds the supported maximum {MAX_JUMP}")
        if len(lam) != self.s:
            raise DomainError(f"expected {self.s} rates, got {len(lam)}")
        if any(not math.isfinite(x) or x < 0 for x in lam):
            raise DomainError(f"rates must be finite and nonnegative, got {lam}")
        if not math.isfinite(self.h) or self.h < 0:
            raise DomainError(f"h must be nonnegative, got {self.h}")
        if int(self.c0) != self.c0 or self.c0 < 1:
            raise DomainError(f"c0 must be an integer >= 1, got {self.c0}")

    def moment_targets(self) -> np.ndarray:
        """Entry ``m - 1`` is ``sum_{l >= m} C(l, m) lambda_l``."""
        return np.array(
            [
                math.fsum(math.comb(l, m) * self.lambdas[l - 1] for l in range(m, self.s + 1))
                for m in range(1, self.s + 1)
            ]
        )


def poisson_pmf(lam: float, weighted_tail_tol: float = DEFAULT_TAIL_TOL, h: float = 0.0) -> Pmf:
    """Poisson(``lam``) cut where the ``exp(h k)``-weighted tail drops below tolerance.

    The tail beyond ``K`` is bounded by a geometric series: once the ratio
    ``q = e^h lam / (K + 2)`` of consecutive weighted terms is below one, the
    weighted tail is at most ``w(K + 1) / (1 - q)``.
    """
    if not math.isfinite(lam) or lam < 0:
        raise DomainError(f"Poisson rate must be nonnegative, got {lam}")
    if weighted_tail_tol <= 0:
        raise DomainError("weighted_tail_tol must be positive")
    if h < 0:
        raise DomainError("h must be nonnegative")
    if lam == 0.0:
        return point_mass(0)

    log_lam = math.log(lam)
    terms = [math.exp(-lam)]
    k = 0
    while True:
        nxt = k + 1
        log_term = -lam + nxt * log_lam - math.lgamma(nxt + 1)
        weighted_next = math.exp(h * nxt + log_term)
        q = math.exp(h) * lam / (nxt + 1)
        if q < 1.0 and weighted_next / (1.0 - q) < weighted_tail_tol:
            break
        terms.append(math.exp(log_term))
        k = nxt
    probs = np.array(terms)
    defect = max(0.0, 1.0 - math.fsum(terms))
    return Pmf(probs, defect)


def convolve(f: Pmf, g: Pmf) -> Pmf:
    """Law of the sum of independent variables with laws ``f`` and ``g``."""
    # np.convolve is the direct sum, so nonnegative inputs stay nonnegative.
    return Pmf(np.convolve(f.probs, g.probs), f.trunc_defect + g.trunc_defect)


def scale_support(f: Pmf, m: int) -> Pmf:
    """Law of ``m * X`` for ``X ~ f``."""
    if int(m) != m or m < 1:
        raise DomainError(f"support scale must be a positive integer, got {m}")
    if m == 1:
        return f
    out = np.zeros((f.probs.size - 1) * m + 1)
    out[::m] = f.probs
    return Pmf(out, f.trunc_defect)


def compound_poisson_pmf(params: CpParams, weighted_tail_tol: float = DEFAULT_TAIL_TOL) -> Pmf:
    """Law of ``N_1 + 2 N_2 + ... + s N_s`` with independent ``N_m ~ Poisson(lambda_m)``.

    Each component gets a share of the tolerance divided by the weighted
    total mass of the other components, since weights are multiplicative
    under convolution.
    """
    h = params.h
    active = [(m, lam) for m, lam in enumerate(params.lambdas, start=1) if lam > 0]
    if not active:
        return point_mass(0)
    log_weighted_mass = {m: lam * math.expm1(h * m) for m, lam in active}
    total_log = sum(log_weighted_mass.values())
    result = point_mass(0)
    for m, lam in active:
        others = math.exp(total_log - log_weighted_mass[m])
        tol_m = weighted_tail_tol / (len(active) * others)
        comp = scale_support(poisson_pmf(lam, tol_m, h * m), m)
        result = convolve(result, comp)
    return result
