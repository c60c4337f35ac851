import math

import numpy as np
import pytest

from cpapprox.models import WindowModel


def random_model(rng: np.random.Generator, max_strings: int = 2**18, max_driver: int = 20) -> WindowModel:
    """Small random window model whose driver space can be enumerated."""
    A = int(rng.integers(2, 4))
    w = int(rng.integers(1, 4))
    block = int(rng.integers(max(1, w - 1), 4))
    raw = rng.uniform(0.1, 1.0, size=A)
    probs = list(raw / raw.sum())
    probs[-1] = 1.0 - math.fsum(probs[:-1])
    values = rng.integers(0, 3, size=A**w) * (rng.uniform(size=A**w) < 0.6)
    max_len = min(max_driver, int(math.log(max_strings) / math.log(A)))
    n_terms = int(rng.integers(1, max_len - w + 2))
    return WindowModel.from_function(
        probs, w, lambda win: values[int(np.ravel_multi_index(win, (A,) * w))], n_terms, block
    )


def rare_model(rng: np.random.Generator, max_blocks: int = 10, eps_range: tuple[float, float] = (2e-5, 2e-4)) -> WindowModel:
    """Random model whose nonzero windows need a rare driver symbol."""
    A = int(rng.integers(2, 4))
    w = int(rng.integers(1, 3))
    block = int(rng.integers(max(1, w - 1), 3))
    eps = float(rng.uniform(*eps_range))
    probs = [1.0 - eps * (A - 1)] + [eps] * (A - 1)
    values = rng.integers(1, 3, size=A**w)
    values[0] = 0  # the all-common window contributes nothing
    while True:
        n_blocks = int(rng.integers(2, max_blocks + 1))
        model = WindowModel.from_function(
            probs, w, lambda win: values[int(np.ravel_multi_index(win, (A,) * w))],
            n_blocks * block, block,
        )
        if (model.c0 + 1) ** model.n_blocks <= 10**6:
            return model


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record one summary line per acceptance criterion."""
    store = request.config.stash.setdefault(_ACCEPTANCE, {})

    def record(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        store[number] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_ACCEPTANCE, {})
    if store:
        terminalreporter.write_sep("=", "acceptance criteria")
        for number in sorted(store):
            terminalreporter.write_line(store[number])
