import itertools
import math

import numpy as np
import pytest

from qseal import analytics as an
from qseal import quantum as qc

GRID = np.linspace(-math.pi / 4, math.pi / 4, 1002)[1:-1]


def test_eps_bound_value():
    # 16**0.25 == 2, so the bound is sin^2(0.05); value frozen from a 30-digit mpmath evaluation
    assert an.eps_bound(0.1, 0.25, 16) == pytest.approx(0.00249791736098711695, rel=1e-14)


def test_eps_bound_decreases_to_zero():
    vals = [an.eps_bound(0.1, 0.25, 2 ** e) for e in range(0, 80, 4)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-9


@pytest.mark.parametrize("Theta,alpha,n", [(0.0, 0.25, 4), (0.1, 0.5, 4), (0.1, 0.0, 4), (0.1, 0.25, 0), (0.8, 0.25, 4)])
def test_eps_bound_rejects_bad_params(Theta, alpha, n):
    with pytest.raises(ValueError):
        an.eps_bound(Theta, alpha, n)


class TestPassProbFake:
    @pytest.mark.parametrize("tp", [-0.5, -0.1, 0.0, 0.33, 0.7])
    def test_theta_zero(self, tp):
        assert an.pass_prob_fake(0.0, tp) == pytest.approx(math.cos(tp) ** 2, abs=1e-15)

    def test_no_fake_is_leave_formula(self):
        diff = np.abs(an.pass_prob_fake(GRID, 0.0) - (1 - 0.5 * np.sin(2 * GRID) ** 2))
        assert diff.max() <= 1e-14

    def test_trivial_point(self):
        assert an.pass_prob_fake(0.0, 0.0) == 1.0

    def test_matches_direct_quantum_overlaps(self, rng):
        # oracle: sum over Bob's outcomes of P(outcome) * |<target|fake>|^2 with explicit vectors
        for _ in range(50):
            th, tp = rng.uniform(-0.7, 0.7, 2)
            bit = int(rng.integers(0, 2))
            target = qc.make_qubit(bit, th)
            total = sum(target[b] ** 2 * np.dot(target, qc.make_qubit(b, tp)) ** 2 for b in (0, 1))
            assert an.pass_prob_fake(th, tp) == pytest.approx(total, abs=1e-14)

    def test_in_unit_interval(self):
        vals = an.pass_prob_fake(GRID[:, None], GRID[None, ::37])
        assert vals.min() >= 0 and vals.max() <= 1 + 1e-15


class TestAvgPassProb:
    @pytest.mark.parametrize("Theta,alpha,n", [(0.2, 0.25, 16), (0.1, 0.1, 3), (0.7, 0.4, 1), (0.05, 0.49, 1000)])
    def test_quadrature_matches_closed_form(self, Theta, alpha, n):
        a = an.half_width(Theta, alpha, n)
        for tp in np.linspace(-a, a, 21):
            assert an.avg_pass_prob(Theta, alpha, n, tp) == pytest.approx(
                an.avg_pass_prob_closed(Theta, alpha, n, tp), abs=1e-12)

    def test_narrow_range_limit(self):
        for tp in (0.0, 0.2, -0.6):
            assert an.avg_pass_prob(1e-7, 0.25, 1, tp) == pytest.approx(math.cos(tp) ** 2, abs=1e-12)

    def test_argmax_at_zero(self):
        a = an.half_width(0.2, 0.25, 16)
        grid = np.linspace(-a, a, 41)
        vals = [an.avg_pass_prob(0.2, 0.25, 16, tp) for tp in grid]
        assert grid[int(np.argmax(vals))] == 0.0
        assert all(v <= vals[20] for v in vals)

    def test_monte_carlo_average(self):
        rng = np.random.default_rng(21)
        a = an.half_width(0.3, 0.2, 8)
        th = rng.uniform(-a, a, 400_000)
        for tp in (0.0, 0.1, -0.15):
            vals = an.pass_prob_fake(th, tp)
            se = vals.std() / math.sqrt(vals.size)
            assert abs(vals.mean() - an.avg_pass_prob(0.3, 0.2, 8, tp)) <= 3 * se

    def test_avg_bit_error_monte_carlo(self):
        rng = np.random.default_rng(22)
        a = an.half_width(0.2, 0.25, 16)
        vals = np.sin(rng.uniform(-a, a, 400_000)) ** 2
        assert abs(vals.mean() - an.avg_bit_error(0.2, 0.25, 16)) <= 3 * vals.std() / math.sqrt(vals.size)
        assert an.avg_bit_error(0.2, 0.25, 16) < an.eps_bound(0.2, 0.25, 16)


class TestEvadeIndividual:
    def test_empty(self):
        assert an.evade_prob_individual([]) == 1.0

    @pytest.mark.parametrize("k", [1, 5, 64])
    def test_equal_factors(self, k):
        assert an.evade_prob_individual([0.17] * k) == pytest.approx((1 - 0.5 * math.sin(0.34) ** 2) ** k, rel=1e-13)

    def test_log_linear_in_k(self):
        ks = np.arange(0, 200, 10)
        logs = [math.log(an.evade_prob_individual([0.2] * k)) for k in ks]
        slope = np.polyfit(ks, logs, 1)[0]
        assert slope == pytest.approx(math.log(1 - 0.5 * math.sin(0.4) ** 2), rel=1e-10)

    def test_vanishes_with_n(self):
        Theta, alpha = 0.2, 0.25
        vals = []
        for e in range(4, 21):
            n = 2 ** e
            vals.append(an.evade_prob_individual(np.full(n, Theta / n ** alpha)))
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 1e-3


class TestInfoBound:
    def test_examples(self):
        assert an.info_bound(8, 2 ** 8) == 0
        assert an.info_bound(8, 1) == 8
        assert an.info_bound(8, 16) == 4

    def test_non_power_of_two(self):
        assert an.info_bound(3, 3) == pytest.approx(3 - math.log2(3))

    @pytest.mark.parametrize("m", [0, 9, 0.5])
    def test_range(self, m):
        with pytest.raises(ValueError):
            an.info_bound(3, m)


class TestBounds:
    def test_collective_all_zero_angles(self):
        assert an.evade_bound_collective([0.0] * 6, 6) == pytest.approx(1.0)
        assert an.evade_bound_collective([0.0] * 6, 0) == pytest.approx(64.0)
        assert an.evade_bound_collective_clamped([0.0] * 6, 0) == 1.0

    def test_collective_k_range(self):
        with pytest.raises(ValueError):
            an.evade_bound_collective([0.1] * 3, 4)

    def test_collective_bound_dominates_exact(self, rng):
        for _ in range(200):
            n = int(rng.integers(1, 11))
            thetas = rng.uniform(-0.7, 0.7, n)
            psi = qc.expand(qc.ProductState(qc.make_qubit(rng.integers(0, 2, n), thetas)))
            m = int(rng.integers(1, 2 ** n + 1))
            v = rng.choice(2 ** n, m, replace=False)
            exact = float(np.sum(psi.amplitudes[v] ** 2))
            assert exact <= an.evade_bound_collective(thetas, an.info_bound(n, m)) + 1e-12

    def test_per_v_examples(self):
        assert an.per_v_amplitude_bound([0.0, 0.0]) == 1.0
        assert an.per_v_amplitude_bound([0.3]) == pytest.approx(math.cos(0.3) ** 2)
        assert math.cos(0.3) ** 2 >= math.sin(0.3) ** 2

    def test_per_v_exhaustive_n10(self, rng):
        n = 10
        thetas = rng.uniform(-0.7, 0.7, n)
        bits = rng.integers(0, 2, n)
        f = qc.make_qubit(bits, thetas)
        # independent oracle: explicit product per basis vector
        best = max(math.prod(f[q, b] ** 2 for q, b in enumerate(v)) for v in itertools.product((0, 1), repeat=n))
        assert best <= an.per_v_amplitude_bound(thetas) + 1e-12
        assert best == pytest.approx(an.per_v_amplitude_bound(thetas), rel=1e-12)
