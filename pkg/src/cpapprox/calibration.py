"""Choose driver parameters so that a model's limit target is held fixed in ``n``."""

from __future__ import annotations

import math
from typing import Sequence

from .errors import ValidationError

RESIDUAL_TOL = 1e-12


def kk_rate(p: float, k1: int, k2: int) -> float:
    """``a(p) = (1 - p)^k1 p^k2``."""
    return (1.0 - p) ** k1 * p**k2


def _bisect_increasing(fn, target: float, lo: float, hi: float) -> float:
    # fn increasing on [lo, hi] with fn(lo) <= target <= fn(hi)
    mid = 0.5 * (lo + hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        r = fn(mid) - target
        if abs(r) <= RESIDUAL_TOL:
            return mid
        if r < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4 * math.ulp(mid):
            break
    return mid


def solve_kk_events(k1: int, k2: int, n: int, lam: float) -> float:
    """Smaller root ``p`` of ``(n - m + 1) a(p) = lam``."""
    m = k1 + k2
    terms = n - m + 1
    if terms < 1:
        raise ValidationError(f"n = {n} is smaller than k1 + k2 = {m}")
    if not lam > 0:
        raise ValidationError(f"calibration target must be positive, got {lam}")
    peak = k2 / m
    target = lam / terms
    if target > kk_rate(peak, k1, k2):
        raise ValidationError(
            f"infeasible calibration: lambda/(n-m+1) = {target:.4g} exceeds max a(p) = {kk_rate(peak, k1, k2):.4g}"
        )
    return _bisect_increasing(lambda p: terms * kk_rate(p, k1, k2), lam, 0.0, peak)


def solve_k_runs(k: int, n: int, lam: float) -> float:
    if not lam > 0:
        raise ValidationError(f"calibration target must be positive, got {lam}")
    p = (lam / n) ** (1.0 / k)
    if not p < 1.0:
        raise ValidationError(f"infeasible calibration: (lambda/n)^(1/k) = {p:.4g} is not below 1")
    return p


def solve_cp2(n: int, lam1: float, lam2: float) -> tuple[float, float]:
    if not (lam1 > 0 and lam2 > 0):
        raise ValidationError("cp2 calibration needs lambda1 > 0 and lambda2 > 0")
    p, pbar = math.sqrt(lam1 / n), lam2 / n
    if not (p < 1.0 and pbar < 1.0):
        raise ValidationError(f"infeasible calibration at n = {n}: p = {p:.4g}, pbar = {pbar:.4g}")
    return p, pbar


def solve_calibration(model_type: str, n: int, target: float | Sequence[float], **shape: int):
    """Driver parameter(s) holding the limiting rate(s) at ``target``.

    ``shape`` carries ``k1, k2`` for ``kk_events`` and ``k`` for ``k_runs``.
    """
    lams = [target] if isinstance(target, (int, float)) else list(target)
    if model_type == "kk_events":
        _expect(lams, 1, model_type)
        return solve_kk_events(shape["k1"], shape["k2"], n, lams[0])
    if model_type == "k_runs":
        _expect(lams, 1, model_type)
        return solve_k_runs(shape["k"], n, lams[0])
    if model_type == "cp2":
        _expect(lams, 2, model_type)
        return solve_cp2(n, lams[0], lams[1])
    raise ValidationError(f"no calibration rule for model type {model_type!r}")


def _expect(lams: list, count: int, kind: str) -> None:
    if len(lams) != count:
        raise ValidationError(f"{kind} calibration needs {count} target rate(s), got {len(lams)}")
