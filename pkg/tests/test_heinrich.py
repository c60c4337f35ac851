import cmath
import math
import re

import numpy as np
import pytest

from cpapprox.errors import DomainError, ResourceError
from cpapprox.heinrich import (
    EvalPoint,
    JointLaw,
    bergstrom_check,
    centered_expectation,
    joint_law,
    lemma_checks,
    log_series,
    log_sum_A,
    phi_sequence,
    region_check,
    tilted_transform,
)
from cpapprox.models import WindowModel, block_marginal, exact_sum_law, make_k_runs
from cpapprox.pmf import CpParams

from conftest import rare_model

GRID_T = (-math.pi, -math.pi / 2, 0.0, math.pi / 2, math.pi)


def bernoulli_blocks(q, n):
    return WindowModel((1 - q, q), 1, (0, 1), n, 1, 1)


def y(u, size):
    return np.exp(u * np.arange(size)) - 1


class TestJointLaw:
    def test_single_block(self):
        model = make_k_runs(2, 6, 0.4)
        law = joint_law(model, 1)
        np.testing.assert_allclose(law.probs, block_marginal(model, 1).padded(law.probs.size), atol=1e-15)

    def test_marginals(self):
        model = make_k_runs(2, 6, 0.4)
        law = joint_law(model)
        assert law.n_blocks == 3
        for j in (1, 2, 3):
            f = block_marginal(model, j)
            np.testing.assert_allclose(law.marginal(j), f.padded(law.probs.shape[0]), atol=1e-12)

    def test_independent_product(self):
        law = joint_law(bernoulli_blocks(0.3, 3))
        b = np.array([0.7, 0.3])
        np.testing.assert_allclose(law.probs, np.einsum("i,j,k->ijk", b, b, b), atol=1e-15)

    def test_limits(self):
        with pytest.raises(DomainError):
            joint_law(bernoulli_blocks(0.3, 20))
        with pytest.raises(ResourceError):
            joint_law(WindowModel((0.5, 0.5), 1, (0, 9), 8, 1, 9))

    def test_validation(self):
        with pytest.raises(DomainError):
            JointLaw(np.array([0.5, 0.4]))

    def test_eval_point(self):
        with pytest.raises(DomainError):
            EvalPoint(3.2)
        with pytest.raises(DomainError):
            EvalPoint(0.0, -0.1)
        assert EvalPoint(1.0, 0.5).u == complex(0.5, 1.0)


class TestCentered:
    def test_base_cases(self):
        model = make_k_runs(2, 8, 0.3)
        law = joint_law(model)
        point = EvalPoint(0.7, 0.1)
        yy = y(point.u, law.probs.shape[0])
        for j in range(1, law.n_blocks + 1):
            assert centered_expectation(law, point, j, j) == pytest.approx(np.dot(law.marginal(j), yy), abs=1e-13)
        for k in range(2, law.n_blocks + 1):
            pair = law.window(k - 1, k)
            direct = yy @ pair @ yy - np.dot(law.marginal(k - 1), yy) * np.dot(law.marginal(k), yy)
            assert centered_expectation(law, point, k - 1, k) == pytest.approx(direct, abs=1e-13)

    def test_independent_vanish(self):
        law = joint_law(bernoulli_blocks(0.2, 4))
        point = EvalPoint(1.3, 0.2)
        for j in range(1, 4):
            for k in range(j + 1, 5):
                assert abs(centered_expectation(law, point, j, k)) <= 1e-13

    def test_index_range(self):
        law = joint_law(bernoulli_blocks(0.2, 3))
        with pytest.raises(DomainError):
            centered_expectation(law, EvalPoint(0.0), 2, 1)


class TestRegion:
    def test_zero_model(self):
        report = region_check(WindowModel((1.0,), 1, (0,), 4, 1, 1), EvalPoint(2.0, 0.3))
        assert report.w == 0.0 and report.in_region

    @pytest.mark.parametrize("t", GRID_T)
    def test_bernoulli_closed_form(self, t):
        q = 0.004
        report = region_check(bernoulli_blocks(q, 5), EvalPoint(t))
        assert report.w == pytest.approx(math.sqrt(q * (2 - 2 * math.cos(t))), abs=1e-15)

    def test_precondition_implies_small_w(self, rng):
        for _ in range(10):
            model = rare_model(rng)
            for h in (0.0, 0.25):
                a2 = (math.exp(h * model.c0) * (2 + h)) ** 2 * model.c0
                nu1 = max(block_marginal(model, j).mean() for j in range(1, model.n_blocks + 1))
                if a2 * nu1 <= 0.01:
                    for t in GRID_T:
                        assert region_check(model, EvalPoint(t, h)).w <= 0.1


class TestPhi:
    def test_single_block(self):
        law = joint_law(make_k_runs(2, 2, 0.05))
        point = EvalPoint(1.0, 0.1)
        (phi,) = phi_sequence(law, point)
        assert phi == pytest.approx(tilted_transform(law.probs, point.u), abs=1e-15)

    def test_independent(self):
        law = joint_law(bernoulli_blocks(0.002, 5))
        point = EvalPoint(2.0, 0.25)
        expected = 1 + 0.002 * (cmath.exp(point.u) - 1)
        for phi in phi_sequence(law, point):
            assert phi == pytest.approx(expected, abs=1e-15)

    def test_outside_region(self):
        law = joint_law(bernoulli_blocks(0.5, 3))
        with pytest.raises(DomainError):
            phi_sequence(law, EvalPoint(math.pi))

    def test_product_identity(self, rng):
        for _ in range(10):
            model = rare_model(rng, max_blocks=6)
            law = joint_law(model)
            exact = exact_sum_law(model).probs
            for t in GRID_T:
                point = EvalPoint(t, 0.1)
                phis = phi_sequence(law, point)
                direct = tilted_transform(exact, point.u)
                assert abs(np.prod(phis) - direct) <= 1e-10 * abs(direct)
                A = log_sum_A(phis)
                assert abs(cmath.exp(A) - direct) <= 1e-10 * abs(direct)


class TestLogA:
    def test_all_one(self):
        assert log_sum_A([1 + 0j] * 4) == 0

    @pytest.mark.parametrize("t", GRID_T)
    def test_bernoulli_closed_form(self, t):
        q, n = 0.003, 6
        law = joint_law(bernoulli_blocks(q, n))
        A = log_sum_A(phi_sequence(law, EvalPoint(t)))
        assert A == pytest.approx(n * cmath.log(1 + q * (cmath.exp(1j * t) - 1)), abs=1e-14)

    def test_series_and_exp(self):
        phis = [1 + 0.03j, 0.98 - 0.01j, 1.02 + 0.02j]
        A = log_sum_A(phis)
        assert A == pytest.approx(log_series(phis), abs=1e-14)
        assert cmath.exp(A) == pytest.approx(np.prod(phis), abs=1e-12)

    def test_far_from_one(self):
        with pytest.raises(DomainError):
            log_sum_A([1 + 0j, 2.5 + 0j])


class TestLemmaChecks:
    @pytest.mark.parametrize("h", [0.0, 0.25])
    @pytest.mark.parametrize("t", GRID_T)
    def test_k_runs_sweep(self, t, h):
        model = make_k_runs(2, 8, 0.01)
        report = lemma_checks(model, EvalPoint(t, h), CpParams(1, [8e-4], h, model.c0))
        assert report.all_hold, [c for c in report.checks if not c.holds]
        names = {c.name for c in report.checks}
        assert {"|A|", "|A'|", "centered[1,4]", "phi-1[4]", "1/phi[1]"} <= names

    def test_independent_blocks(self):
        model = bernoulli_blocks(0.001, 6)
        report = lemma_checks(model, EvalPoint(1.0, 0.25), CpParams(1, [0.006], 0.25, 1))
        assert report.all_hold
        for c in report.checks:
            if c.name.startswith("centered["):
                j, k = map(int, re.findall(r"\d+", c.name))
                if k > j:
                    assert c.value <= 1e-14

    @pytest.mark.parametrize("t", GRID_T)
    def test_bernoulli_A(self, t):
        q, n, h = 0.001, 5, 0.1
        u = complex(h, t)
        report = lemma_checks(bernoulli_blocks(q, n), EvalPoint(t, h), CpParams(1, [n * q], h, 1))
        check = next(c for c in report.checks if c.name == "|A|")
        assert check.value == pytest.approx(n * abs(cmath.log(1 + q * (cmath.exp(u) - 1))), rel=1e-12)
        assert check.bound == pytest.approx(4 * report.a**2 * n * q, rel=1e-12)
        assert check.holds

    def test_precondition(self):
        model = make_k_runs(2, 8, 0.2)
        with pytest.raises(DomainError):
            lemma_checks(model, EvalPoint(0.0), CpParams(1, [0.3], 0.0, 2))


class TestBergstrom:
    def test_equal_arguments(self):
        r = bergstrom_check(0.3 + 0.4j, 0.3 + 0.4j, 7, 3)
        assert r.rhs == pytest.approx((0.3 + 0.4j) ** 7, abs=1e-15)

    def test_full_binomial(self):
        r = bergstrom_check(0.9, 0.2 + 0.1j, 6, 6)
        head = sum(math.comb(6, m) * (0.2 + 0.1j) ** (6 - m) * (0.7 - 0.1j) ** m for m in range(7))
        assert r.rhs == pytest.approx(head, abs=1e-15)
        assert r.max_abs_err <= 1e-14

    def test_random(self, rng):
        worst = 0.0
        for _ in range(200):
            alpha, beta = (
                complex(*(r * np.array([math.cos(th), math.sin(th)])))
                for r, th in zip(np.sqrt(rng.uniform(size=2)), rng.uniform(0, 2 * math.pi, size=2))
            )
            N = int(rng.integers(0, 13))
            for s in range(N + 1):
                worst = max(worst, bergstrom_check(alpha, beta, N, s).max_abs_err)
        assert worst <= 1e-10

    def test_bad_s(self):
        with pytest.raises(DomainError):
            bergstrom_check(0.5, 0.4, 3, 4)
