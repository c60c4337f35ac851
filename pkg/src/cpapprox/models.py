"""Window statistics over i.i.d. drivers and their exact laws.

A :class:`WindowModel` describes ``Z_j = value(D_j, ..., D_{j+w-1})`` for an
i.i.d. driver sequence ``D`` and groups consecutive ``Z`` terms into blocks
``X_1, X_2, ...``.  With ``w <= block_size + 1`` the blocks are 1-dependent.

All exact laws come from one dynamic program whose state is the last
``w - 1`` driver symbols.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .errors import DomainError, ResourceError, ValidationError
from .pmf import Pmf

DEFAULT_BUDGET = 10**7
BRUTE_FORCE_LIMIT = 2**22
MAX_TABLE = 2**20
RNG_ALGORITHM = "PCG64 (numpy.random.default_rng)"


@dataclass(frozen=True)
class WindowModel:
    """Sliding-window statistic over an i.i.d. driver, grouped into blocks.

    ``values`` is the window value table, flattened so that the window
    ``(d_1, ..., d_w)`` (oldest symbol first) sits at index
    ``sum_i d_i * A**(w - i)``.
    """

    alphabet_probs: tuple[float, ...]
    window_width: int
    values: tuple[int, ...]
    n_terms: int
    block_size: int
    c0: int
    kind: str = "custom"
    params: tuple[tuple[str, Any], ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        probs = tuple(float(x) for x in self.alphabet_probs)
        object.__setattr__(self, "alphabet_probs", probs)
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        if not probs or any(not p > 0 for p in probs):
            raise DomainError("driver probabilities must be positive")
        if abs(math.fsum(probs) - 1.0) > 1e-12:
            raise DomainError(f"driver probabilities sum to {math.fsum(probs)!r}, not 1")
        for name in ("window_width", "n_terms", "block_size", "c0"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise DomainError(f"{name} must be a positive integer, got {v}")
        A, w = len(probs), self.window_width
        if A**w > MAX_TABLE:
            raise ResourceError(f"value table of {A}**{w} entries exceeds {MAX_TABLE}")
        if len(self.values) != A**w:
            raise DomainError(f"value table needs {A**w} entries, got {len(self.values)}")
        if min(self.values) < 0:
            raise DomainError("window values must be nonnegative integers")
        if w > self.block_size + 1:
            raise DomainError(
                f"window width {w} > block size {self.block_size} + 1: blocks would not be 1-dependent"
            )
        for length in set(self.block_lengths()):
            top = _max_sum(self._core, length)
            if top > self.c0:
                raise DomainError(f"a block of {length} terms reaches {top} > c0 = {self.c0}")

    @property
    def _core(self) -> tuple:
        return (self.alphabet_probs, self.window_width, self.values)

    @property
    def alphabet_size(self) -> int:
        return len(self.alphabet_probs)

    @property
    def driver_length(self) -> int:
        return self.n_terms + self.window_width - 1

    @property
    def n_blocks(self) -> int:
        return -(-self.n_terms // self.block_size)

    @property
    def max_value(self) -> int:
        return max(self.values)

    def block_lengths(self) -> list[int]:
        full, rest = divmod(self.n_terms, self.block_size)
        return [self.block_size] * full + ([rest] if rest else [])

    def block_length(self, j: int) -> int:
        self._check_block(j)
        return min(self.block_size, self.n_terms - (j - 1) * self.block_size)

    def _check_block(self, j: int) -> None:
        if not 1 <= j <= self.n_blocks:
            raise DomainError(f"block index {j} outside 1..{self.n_blocks}")

    def value(self, window: Sequence[int]) -> int:
        code = 0
        for d in window:
            code = code * self.alphabet_size + d
        return self.values[code]

    @classmethod
    def from_function(
        cls,
        alphabet_probs: Sequence[float],
        window_width: int,
        fn: Callable[[tuple[int, ...]], int],
        n_terms: int,
        block_size: int,
        c0: int | None = None,
        **kw: Any,
    ) -> "WindowModel":
        """Tabulate ``fn`` over all windows; ``c0`` defaults to the largest block value."""
        A = len(alphabet_probs)
        table = [int(fn(win)) for win in itertools.product(range(A), repeat=window_width)]
        if c0 is None:
            core = (tuple(float(p) for p in alphabet_probs), window_width, tuple(table))
            c0 = _auto_c0(core, n_terms, block_size)
        return cls(tuple(alphabet_probs), window_width, tuple(table), n_terms, block_size, c0, **kw)

    def to_dict(self) -> dict[str, Any]:
        if self.kind != "custom":
            return {"type": self.kind, **dict(self.params)}
        return {
            "type": "custom",
            "alphabet_probs": list(self.alphabet_probs),
            "window_width": self.window_width,
            "values": list(self.values),
            "n_terms": self.n_terms,
            "block_size": self.block_size,
            "c0": self.c0,
        }


@dataclass(frozen=True, eq=False)
class JointPair:
    """``matrix[x, y] = P(X_{j-1} = x, X_j = y)``."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=np.float64)
        if m.ndim != 2 or np.any(m < 0):
            raise DomainError("joint pair must be a nonnegative matrix")
        if abs(math.fsum(m.ravel()) - 1.0) > 1e-12:
            raise DomainError("joint pair entries must sum to 1")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


# ---------------------------------------------------------------------------
# constructors


def _check_prob(name: str, p: float) -> float:
    p = float(p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"{name} must lie in (0, 1), got {p}")
    return p


def _check_posint(name: str, v: int) -> int:
    if int(v) != v or v < 1:
        raise DomainError(f"{name} must be a positive integer, got {v}")
    return int(v)


def make_kk_events(k1: int, k2: int, n: int, p: float) -> WindowModel:
    """Number of ``k1`` failures immediately followed by ``k2`` successes in ``n`` trials.

    Terms ``Z_m, ..., Z_n`` with ``m = k1 + k2`` are grouped ``m`` at a
    time.  The pattern cannot overlap itself, so every block value is 0 or 1.
    """
    k1, k2 = _check_posint("k1", k1), _check_posint("k2", k2)
    n, p = int(n), _check_prob("p", p)
    m = k1 + k2
    if n < m:
        raise DomainError(f"n = {n} is smaller than k1 + k2 = {m}")
    table = [0] * 2**m
    table[2**k2 - 1] = 1  # binary 0...01...1, failures oldest
    return WindowModel(
        (1.0 - p, p), m, tuple(table), n - m + 1, m, 1,
        kind="kk_events", params=(("k1", k1), ("k2", k2), ("n", n), ("p", p)),
    )


def make_k_runs(k: int, n: int, p: float) -> WindowModel:
    """``sum_{j=1}^n eta_j ... eta_{j+k-1}`` over ``n + k - 1`` Bernoulli trials, blocks of ``k``."""
    k, n, p = _check_posint("k", k), _check_posint("n", n), _check_prob("p", p)
    table = [0] * 2**k
    table[-1] = 1
    return WindowModel(
        (1.0 - p, p), k, tuple(table), n, k, k,
        kind="k_runs", params=(("k", k), ("n", n), ("p", p)),
    )


def make_cp2_model(n: int, p: float, pbar: float) -> WindowModel:
    """``X_j = eta_j eta_{j+1} + 2 xi_j (1 - eta_j eta_{j+1})``.

    Driver symbol ``d = eta + 2 xi`` with independent ``eta ~ Be(p)`` and
    ``xi ~ Be(pbar)``.
    """
    n, p, pbar = _check_posint("n", n), _check_prob("p", p), _check_prob("pbar", pbar)
    probs = tuple((p if d & 1 else 1.0 - p) * (pbar if d & 2 else 1.0 - pbar) for d in range(4))

    def value(win: tuple[int, ...]) -> int:
        left, right = win
        both = (left & 1) * (right & 1)
        return both + 2 * (left >> 1) * (1 - both)

    table = tuple(value(win) for win in itertools.product(range(4), repeat=2))
    return WindowModel(
        probs, 2, table, n, 1, 2,
        kind="cp2", params=(("n", n), ("p", p), ("pbar", pbar)),
    )


def model_from_dict(spec: dict[str, Any]) -> WindowModel:
    """Build a model from its JSON description."""
    if not isinstance(spec, dict) or "type" not in spec:
        raise ValidationError("model description must be an object with a 'type' key")
    kind = spec["type"]
    try:
        if kind == "kk_events":
            return make_kk_events(spec["k1"], spec["k2"], spec["n"], spec["p"])
        if kind == "k_runs":
            return make_k_runs(spec["k"], spec["n"], spec["p"])
        if kind == "cp2":
            return make_cp2_model(spec["n"], spec["p"], spec["pbar"])
        if kind == "custom":
            values = np.asarray(spec["values"], dtype=np.int64).ravel()
            probs = [float(x) for x in spec["alphabet_probs"]]
            w = int(spec["window_width"])
            n_terms, block_size = int(spec["n_terms"]), int(spec["block_size"])
            table = tuple(values.tolist())
            c0 = spec.get("c0")
            if c0 is None:
                c0 = _auto_c0((tuple(probs), w, table), n_terms, block_size)
            return WindowModel(tuple(probs), w, table, n_terms, block_size, int(c0))
    except KeyError as exc:
        raise ValidationError(f"model '{kind}' is missing parameter {exc.args[0]!r}") from None
    raise ValidationError(f"unknown model type {kind!r}")


# ---------------------------------------------------------------------------
# dynamic programming engine


@functools.lru_cache(maxsize=256)
def _transitions(core: tuple) -> tuple[np.ndarray, list[tuple[int, int, int, float]]]:
    probs, w, values = core
    A = len(probs)
    S = A ** (w - 1)
    init = np.ones(1)
    for _ in range(w - 1):
        init = np.kron(init, np.asarray(probs))
    trans = []
    for s in range(S):
        for a in range(A):
            code = s * A + a
            trans.append((s, code % S, values[code], probs[a]))
    init.setflags(write=False)
    return init, trans


def _auto_c0(core: tuple, n_terms: int, block_size: int) -> int:
    full, rest = divmod(n_terms, block_size)
    lengths = ([block_size] if full else []) + ([rest] if rest else [])
    return max(1, max(_max_sum(core, L) for L in lengths))


_CYCLE_STATES = 4096


@functools.lru_cache(maxsize=1024)
def _max_sum(core: tuple, n_terms: int) -> int:
    """Largest reachable sum of ``n_terms`` consecutive window values."""
    init, trans = _transitions(core)
    best = np.zeros(init.size, dtype=np.int64)
    # max-plus iterates are eventually periodic up to a constant shift; skip whole periods
    seen: dict[bytes, tuple[int, int]] | None = {} if init.size <= _CYCLE_STATES else None
    step = 0
    while step < n_terms:
        if seen is not None:
            top = int(best.max())
            key = (best - top).tobytes()
            if key in seen:
                prev_step, prev_top = seen[key]
                period = step - prev_step
                cycles = (n_terms - step) // period
                best = best + cycles * (top - prev_top)
                step += cycles * period
                seen = None
                continue
            seen[key] = (step, top)
        nxt = np.full(init.size, np.iinfo(np.int64).min // 2, dtype=np.int64)
        for s, ns, z, _ in trans:
            nxt[ns] = max(nxt[ns], best[s] + z)
        best = nxt
        step += 1
    return int(best.max())


def _sum_dp(core: tuple, n_terms: int, budget: int) -> np.ndarray:
    init, trans = _transitions(core)
    S = init.size
    width = _max_sum(core, n_terms) + 1
    if S * width > budget:
        raise ResourceError(f"sum DP needs {S}x{width} cells, over the budget of {budget}")
    P = np.zeros((S, width))
    P[:, 0] = init
    reach = np.zeros(S, dtype=np.int64)
    for _ in range(n_terms):
        Q = np.zeros_like(P)
        new_reach = np.zeros(S, dtype=np.int64)
        for s, ns, z, pa in trans:
            r = reach[s]
            Q[ns, z : z + r + 1] += pa * P[s, : r + 1]
            if r + z > new_reach[ns]:
                new_reach[ns] = r + z
        P, reach = Q, new_reach
    return P.sum(axis=0)


@functools.lru_cache(maxsize=512)
def _blocks_joint(core: tuple, lengths: tuple[int, ...], c0: int, budget: int) -> np.ndarray:
    """Joint law of consecutive block sums with the given term counts."""
    init, trans = _transitions(core)
    S, W = init.size, c0 + 1
    cells = S * W ** len(lengths)
    if cells > budget:
        raise ResourceError(f"joint law needs {cells} cells, over the budget of {budget}")
    P = np.zeros((S, 1, W))
    P[:, 0, 0] = init
    for b, length in enumerate(lengths):
        if b:
            T = P.shape[1] * W
            fresh = np.zeros((S, T, W))
            fresh[:, :, 0] = P.reshape(S, T)
            P = fresh
        for _ in range(length):
            Q = np.zeros_like(P)
            for s, ns, z, pa in trans:
                # partial block sums never exceed c0, so the dropped cells are empty
                Q[ns, :, z:] += pa * P[s, :, : W - z]
            P = Q
    out = P.sum(axis=0).reshape((W,) * len(lengths))
    out.setflags(write=False)
    return out


def exact_sum_law(model: WindowModel, budget: int = DEFAULT_BUDGET) -> Pmf:
    """Exact law of ``S = Z_1 + ... + Z_{n_terms}``."""
    return Pmf(_sum_dp(model._core, model.n_terms, budget))


def block_window_joint(model: WindowModel, first: int, last: int, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """Joint law array of ``(X_first, ..., X_last)``, one axis per block."""
    model._check_block(first)
    model._check_block(last)
    if last < first:
        raise DomainError("last block precedes first block")
    lengths = tuple(model.block_length(j) for j in range(first, last + 1))
    return _blocks_joint(model._core, lengths, model.c0, budget)


def block_marginal(model: WindowModel, j: int) -> Pmf:
    """Exact law of block ``X_j`` (1-based)."""
    return Pmf(block_window_joint(model, j, j))


def block_pair_joint(model: WindowModel, j: int) -> JointPair:
    """Exact joint law of ``(X_{j-1}, X_j)`` for ``j >= 2``."""
    if j < 2:
        raise DomainError("block_pair_joint needs j >= 2")
    return JointPair(block_window_joint(model, j - 1, j))


def brute_force_law(model: WindowModel) -> Pmf:
    """Law of ``S`` by enumerating every driver string (test oracle)."""
    A, L, w = model.alphabet_size, model.driver_length, model.window_width
    if A**L > BRUTE_FORCE_LIMIT:
        raise ResourceError(f"{A}**{L} driver strings exceed the enumeration limit {BRUTE_FORCE_LIMIT}")
    idx = np.arange(A**L, dtype=np.int64)
    digits = np.stack([(idx // A ** (L - 1 - i)) % A for i in range(L)], axis=1)
    prob = np.asarray(model.alphabet_probs)[digits].prod(axis=1)
    total = _window_sums(digits, A, w, model.n_terms, np.asarray(model.values))
    return Pmf(np.bincount(total, weights=prob))


def _window_sums(digits: np.ndarray, A: int, w: int, n_terms: int, table: np.ndarray) -> np.ndarray:
    codes = np.zeros((digits.shape[0], n_terms), dtype=np.int64)
    for i in range(w):
        codes = codes * A + digits[:, i : i + n_terms]
    return table[codes].sum(axis=1)


def sample_sum(model: WindowModel, seed: int, reps: int, chunk_cells: int = 2_000_000) -> Pmf:
    """Empirical law of ``S`` from ``reps`` simulated driver strings.

    The generator is PCG64 seeded with ``seed``; output depends only on
    ``(model, seed, reps)``.
    """
    if reps < 1:
        raise DomainError("reps must be at least 1")
    rng = np.random.default_rng(seed)
    A, L = model.alphabet_size, model.driver_length
    table = np.asarray(model.values)
    probs = np.asarray(model.alphabet_probs)
    rows = max(1, chunk_cells // L)
    counts = np.zeros(1, dtype=np.int64)
    done = 0
    while done < reps:
        size = min(rows, reps - done)
        digits = rng.choice(A, size=(size, L), p=probs)
        c = np.bincount(_window_sums(digits, A, model.window_width, model.n_terms, table))
        if c.size > counts.size:
            c[: counts.size] += counts
            counts = c
        else:
            counts[: c.size] += c
        done += size
    return Pmf(counts / reps)

