"""Heinrich's product representation of a 1-dependent sum's transform.

For ``u = it + h`` and ``Y_j = exp(u X_j) - 1`` the transform factors as
``E exp(u S_n) = phi_1(u) ... phi_n(u)`` whenever every block satisfies
``E|Y_j|^2 <= 1/36``.  Everything here works from the exact joint law of a
few blocks and exists to check the inequalities used in the error bound
numerically; cost grows exponentially with the number of blocks.
"""

from __future__ import annotations

import cmath
import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import PRECONDITION_LIMIT, precondition_holds, weight_constant
from .errors import DomainError, NumericalDegeneracyError, ResourceError
from .models import WindowModel, block_window_joint
from .pmf import CpParams

MAX_BLOCKS = 12
MAX_TUPLES = 10**6
REGION_RADIUS = 1.0 / 6.0
PHI_FLOOR = 1e-6
FD_STEP = 1e-5
FD_TOL = 1e-4


@dataclass(frozen=True)
class EvalPoint:
    t: float
    h: float = 0.0

    def __post_init__(self) -> None:
        if abs(self.t) > math.pi + 1e-15:
            raise DomainError(f"t = {self.t} outside [-pi, pi]")
        if self.h < 0:
            raise DomainError(f"h must be nonnegative, got {self.h}")

    @property
    def u(self) -> complex:
        return complex(self.h, self.t)


@dataclass(frozen=True, eq=False)
class JointLaw:
    """``probs[x_1, ..., x_n] = P(X_1 = x_1, ..., X_n = x_n)``."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=np.float64)
        if np.any(p < 0) or abs(math.fsum(p.ravel()) - 1.0) > 1e-12:
            raise DomainError("joint law must be nonnegative and sum to 1")
        object.__setattr__(self, "probs", p)

    @property
    def n_blocks(self) -> int:
        return self.probs.ndim

    def marginal(self, j: int) -> np.ndarray:
        axes = tuple(i for i in range(self.n_blocks) if i != j - 1)
        return self.probs.sum(axis=axes)

    @functools.cached_property
    def _window_marginals(self) -> dict[tuple[int, int], np.ndarray]:
        out = {}
        n = self.n_blocks
        for j in range(1, n + 1):
            head = self.probs.sum(axis=tuple(range(j - 1))) if j > 1 else self.probs
            for k in range(n, j - 1, -1):
                out[(j, k)] = head
                if k > j:
                    head = head.sum(axis=-1)
        return out

    def window(self, j: int, k: int) -> np.ndarray:
        """Joint law array of ``(X_j, ..., X_k)``."""
        return self._window_marginals[(j, k)]


def joint_law(model: WindowModel, n_blocks: int | None = None) -> JointLaw:
    """Exact joint law of the first ``n_blocks`` blocks."""
    n_blocks = model.n_blocks if n_blocks is None else n_blocks
    if not 1 <= n_blocks <= min(MAX_BLOCKS, model.n_blocks):
        raise DomainError(f"n_blocks must lie in 1..{min(MAX_BLOCKS, model.n_blocks)}")
    if (model.c0 + 1) ** n_blocks > MAX_TUPLES:
        raise ResourceError(f"{(model.c0 + 1) ** n_blocks} block tuples exceed {MAX_TUPLES}")
    return JointLaw(np.array(block_window_joint(model, 1, n_blocks)))


class _Tables:
    """Joint expectations and centered expectations of ``Y_j, ..., Y_k`` at one point."""

    def __init__(self, law: JointLaw, u: complex) -> None:
        self.law = law
        self.n = law.n_blocks
        size = law.probs.shape[0]
        self.y = np.exp(u * np.arange(size)) - 1.0
        self._prod: dict[tuple[int, int], complex] = {}
        self._centered: dict[tuple[int, int], complex] = {}

    def prod(self, j: int, k: int) -> complex:
        """``E(Y_j Y_{j+1} ... Y_k)``."""
        key = (j, k)
        if key not in self._prod:
            arr = self.law.window(j, k).astype(complex)
            for _ in range(k - j + 1):
                arr = np.tensordot(arr, self.y, axes=([-1], [0]))
            self._prod[key] = complex(arr)
        return self._prod[key]

    def centered(self, j: int, k: int) -> complex:
        key = (j, k)
        if key not in self._centered:
            val = self.prod(j, k)
            for i in range(j, k):
                val -= self.centered(j, i) * self.prod(i + 1, k)
            self._centered[key] = val
        return self._centered[key]

    def second_moment(self, j: int) -> float:
        return float(np.dot(self.law.marginal(j), np.abs(self.y) ** 2))


def centered_expectation(law: JointLaw, point: EvalPoint, j: int, k: int) -> complex:
    """Centered mixed expectation of ``Y_j, ..., Y_k`` (1-based, inclusive)."""
    if not 1 <= j <= k <= law.n_blocks:
        raise DomainError(f"need 1 <= j <= k <= {law.n_blocks}, got ({j}, {k})")
    return _Tables(law, point.u).centered(j, k)


@dataclass(frozen=True)
class RegionReport:
    w: float
    in_region: bool


def _region_from_marginals(marginals: list[np.ndarray], u: complex) -> RegionReport:
    w2 = 0.0
    for f in marginals:
        y2 = np.abs(np.exp(u * np.arange(f.size)) - 1.0) ** 2
        w2 = max(w2, float(np.dot(f, y2)))
    w = math.sqrt(w2)
    return RegionReport(w, w <= REGION_RADIUS)


def region_check(model: WindowModel, point: EvalPoint) -> RegionReport:
    """``w(u) = max_k sqrt(E|exp(u X_k) - 1|^2)`` and whether ``w(u) <= 1/6``."""
    lengths = model.block_lengths()
    seen: dict[int, np.ndarray] = {}
    for j, L in enumerate(lengths, start=1):
        if L not in seen:
            seen[L] = np.asarray(block_window_joint(model, j, j))
    return _region_from_marginals(list(seen.values()), point.u)


def _phis(tables: _Tables) -> list[complex]:
    phis: list[complex] = []
    for k in range(1, tables.n + 1):
        val = 1.0 + tables.prod(k, k)
        denom = 1.0 + 0j
        for j in range(k - 1, 0, -1):
            denom *= phis[j - 1]
            val += tables.centered(j, k) / denom
        if abs(val) < PHI_FLOOR:
            raise NumericalDegeneracyError(f"|phi_{k}| = {abs(val):.3e} below {PHI_FLOOR}")
        phis.append(val)
    return phis


def phi_sequence(law: JointLaw, point: EvalPoint) -> list[complex]:
    """Factors ``phi_1, ..., phi_n`` of the product representation at ``u``."""
    u = point.u
    region = _region_from_marginals([law.marginal(j) for j in range(1, law.n_blocks + 1)], u)
    if not region.in_region:
        raise DomainError(f"u = {u} lies outside the region: w = {region.w:.4f} > 1/6")
    return _phis(_Tables(law, u))


def log_sum_A(phis: list[complex]) -> complex:
    """``A = sum_k log phi_k`` on the principal branch."""
    for k, phi in enumerate(phis, start=1):
        if abs(phi - 1.0) >= 1.0:
            raise DomainError(f"|phi_{k} - 1| = {abs(phi - 1.0):.4f} >= 1")
    return complex(math.fsum(cmath.log(p).real for p in phis), math.fsum(cmath.log(p).imag for p in phis))


def log_series(phis: list[complex], terms: int = 200) -> complex:
    """``sum_k sum_j (-1)^{j+1} (phi_k - 1)^j / j``, truncated."""
    total = 0j
    for phi in phis:
        d = phi - 1.0
        power = 1.0 + 0j
        for j in range(1, terms + 1):
            power *= d
            total += (-1) ** (j + 1) * power / j
    return total


def tilted_transform(probs: np.ndarray, u: complex) -> complex:
    """``sum_k F{k} exp(u k)``."""
    return complex(np.dot(probs, np.exp(u * np.arange(probs.size))))


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    bound: float
    holds: bool


@dataclass(frozen=True)
class LemmaReport:
    point: EvalPoint
    a: float
    w: float
    checks: tuple[Check, ...] = field(default=())

    @property
    def all_hold(self) -> bool:
        return all(c.holds for c in self.checks)


def _A_at(law: JointLaw, t: float, h: float) -> complex:
    return log_sum_A(_phis(_Tables(law, complex(h, t))))


def lemma_checks(model: WindowModel, point: EvalPoint, params: CpParams, max_window: int = 4) -> LemmaReport:
    """Compare the representation's quantities with their stated bounds.

    Checked: the centered-expectation bound on windows of up to
    ``max_window`` blocks, both bounds on ``|phi_k - 1|``, ``1/|phi_k| <= 10/9``,
    ``|A| <= 4 a^2 Gamma_1`` and, by central differences in ``t``,
    ``|A'| <= 4 a^2 Gamma_1``.
    """
    law = joint_law(model)
    n = law.n_blocks
    a = weight_constant(point.h, params.c0)
    nu1 = [float(np.dot(law.marginal(j), np.arange(law.probs.shape[0]))) for j in range(1, n + 1)]
    if not precondition_holds(a, max(nu1)):
        raise DomainError(f"a^2 max nu_1 = {a * a * max(nu1):.4g} exceeds {PRECONDITION_LIMIT}")
    gamma1 = math.fsum(nu1)
    tables = _Tables(law, point.u)
    region = _region_from_marginals([law.marginal(j) for j in range(1, n + 1)], point.u)
    checks: list[Check] = []

    def add(name: str, value: float, bound: float, tol: float) -> None:
        checks.append(Check(name, value, bound, value <= bound + tol))

    sd = [math.sqrt(tables.second_moment(j)) for j in range(1, n + 1)]
    for j in range(1, n + 1):
        for k in range(j, min(n, j + max_window - 1) + 1):
            bound = 2.0 ** (k - j) * math.prod(sd[j - 1 : k])
            add(f"centered[{j},{k}]", abs(tables.centered(j, k)), bound, 1e-12)

    phis = _phis(tables)
    for k, phi in enumerate(phis, start=1):
        prev = nu1[k - 2] if k >= 2 else 0.0
        add(f"phi-1[{k}]", abs(phi - 1.0), a * a / 6.0 * (10.0 * prev + 13.0 * nu1[k - 1]), 1e-10)
        add(f"phi-1<=1/25[{k}]", abs(phi - 1.0), 1.0 / 25.0, 1e-10)
        add(f"1/phi[{k}]", 1.0 / abs(phi), 10.0 / 9.0, 1e-10)

    A = log_sum_A(phis)
    add("|A|", abs(A), 4.0 * a * a * gamma1, 1e-10)
    t0 = point.t
    dA = (_A_at(law, t0 + FD_STEP, point.h) - _A_at(law, t0 - FD_STEP, point.h)) / (2 * FD_STEP)
    add("|A'|", abs(dA), 4.0 * a * a * gamma1, FD_TOL)
    return LemmaReport(point, a, region.w, tuple(checks))


@dataclass(frozen=True)
class BergstromReport:
    lhs: complex
    rhs: complex
    max_abs_err: float


def bergstrom_check(alpha: complex, beta: complex, cap_n: int, s: int) -> BergstromReport:
    """Both sides of the binomial expansion of ``alpha^N`` around ``beta`` with remainder."""
    if cap_n < 0 or not 0 <= s <= cap_n:
        raise DomainError(f"need 0 <= s <= N, got s = {s}, N = {cap_n}")
    d = alpha - beta
    lhs = alpha**cap_n
    head = sum(math.comb(cap_n, m) * beta ** (cap_n - m) * d**m for m in range(s + 1))
    tail = sum(
        math.comb(m - 1, s) * alpha ** (cap_n - m) * d ** (s + 1) * beta ** (m - s - 1)
        for m in range(s + 1, cap_n + 1)
    )
    rhs = head + tail
    return BergstromReport(complex(lhs), complex(rhs), abs(lhs - rhs))
