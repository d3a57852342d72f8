import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qseal import quantum as qc

angles = st.floats(min_value=-0.78, max_value=0.78, allow_nan=False)


def random_state(n, rng):
    v = rng.normal(size=2 ** n)
    return qc.StateVector(v / np.linalg.norm(v))


def random_subspace(n, m, rng):
    return qc.Subspace(n, rng.choice(2 ** n, size=m, replace=False))


def binom_ok(count, trials, p, n_sigma=3.0):
    return abs(count / trials - p) <= n_sigma * math.sqrt(p * (1 - p) / trials)


class TestMakeQubit:
    def test_identity_cases(self):
        np.testing.assert_array_equal(qc.make_qubit(0, 0.0), [1.0, 0.0])
        np.testing.assert_array_equal(qc.make_qubit(1, 0.0), [0.0, 1.0])

    def test_fifteen_degrees(self):
        np.testing.assert_allclose(qc.make_qubit(0, math.pi / 12), [0.9659258262890683, 0.25881904510252074],
                                   atol=1e-15)

    def test_bit_one_puts_cos_on_one(self):
        c0, c1 = qc.make_qubit(1, 0.2)
        assert c1 == pytest.approx(math.cos(0.2)) and c0 == pytest.approx(math.sin(0.2))

    @pytest.mark.parametrize("theta", [math.pi / 4, -math.pi / 4, 1.0])
    def test_rejects_large_angles(self, theta):
        with pytest.raises(ValueError, match="pi/4"):
            qc.make_qubit(0, theta)

    def test_batches(self):
        out = qc.make_qubit(np.array([[0, 1, 1]]), np.array([[0.1, -0.2, 0.0]]))
        assert out.shape == (1, 3, 2)
        np.testing.assert_allclose(np.sum(out ** 2, axis=-1), 1.0, atol=1e-15)


class TestExpand:
    def test_all_zero_factors(self):
        sv = qc.expand(qc.ProductState(np.tile([1.0, 0.0], (5, 1))))
        expected = np.zeros(32)
        expected[0] = 1
        np.testing.assert_array_equal(sv.amplitudes, expected)

    def test_single_qubit_is_factor(self):
        f = qc.make_qubit(0, 0.3)
        np.testing.assert_allclose(qc.expand(qc.ProductState([f])).amplitudes, f)

    def test_index_three_is_product_of_sines(self):
        a, b = 0.21, -0.4
        sv = qc.expand(qc.ProductState([[math.cos(a), math.sin(a)], [math.cos(b), math.sin(b)]]))
        assert sv.amplitudes[3] == pytest.approx(math.sin(a) * math.sin(b), abs=1e-16)

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_multiplicative_exhaustive(self, n, rng):
        factors = qc.make_qubit(rng.integers(0, 2, n), rng.uniform(-0.7, 0.7, n))
        sv = qc.expand(qc.ProductState(factors))
        for v, bits in enumerate(itertools.product((0, 1), repeat=n)):
            direct = math.prod(factors[q, b] for q, b in enumerate(bits))
            assert sv.amplitudes[v] == pytest.approx(direct, abs=1e-15)

    def test_resource_limit(self):
        big = qc.ProductState(np.tile([1.0, 0.0], (21, 1)))
        with pytest.raises(qc.ResourceLimitError):
            qc.expand(big)
        assert qc.expand(qc.ProductState(np.tile([1.0, 0.0], (3, 1))), max_qubits=3).dim == 8
        with pytest.raises(qc.ResourceLimitError):
            qc.expand(qc.ProductState(np.tile([1.0, 0.0], (3, 1))), max_qubits=2)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 1), angles), min_size=1, max_size=8))
    def test_expand_contract_roundtrip(self, qubits):
        bits, thetas = zip(*qubits)
        prod = qc.ProductState(qc.make_qubit(np.array(bits), np.array(thetas)))
        sv = qc.expand(prod)
        assert abs(float(sv.amplitudes @ sv.amplitudes) - 1) < 1e-12
        back = qc.contract(sv)
        np.testing.assert_allclose(qc.expand(back).amplitudes, sv.amplitudes, atol=1e-12)

    def test_contract_rejects_entangled(self):
        bell = qc.StateVector(np.array([1, 0, 0, 1]) / math.sqrt(2))
        with pytest.raises(ValueError, match="entangled"):
            qc.contract(bell)


class TestTypes:
    def test_state_vector_must_be_normalized(self):
        with pytest.raises(ValueError, match="normalized"):
            qc.StateVector(np.array([1.0, 1.0]))

    def test_state_vector_length_power_of_two(self):
        with pytest.raises(ValueError, match="2\\*\\*n"):
            qc.StateVector(np.array([1.0, 0.0, 0.0]))

    def test_state_is_immutable(self):
        sv = qc.StateVector(np.array([1.0, 0.0]))
        with pytest.raises(ValueError):
            sv.amplitudes[0] = 0.5

    def test_product_factor_normalization(self):
        with pytest.raises(ValueError, match="factor 1"):
            qc.ProductState([[1.0, 0.0], [0.5, 0.5]])

    def test_subspace_bounds(self):
        with pytest.raises(ValueError):
            qc.Subspace(2, [])
        with pytest.raises(ValueError):
            qc.Subspace(2, [4])
        with pytest.raises(ValueError, match="duplicates"):
            qc.Subspace(2, [1, 1])
        s = qc.Subspace(3, [5, 1, 2])
        assert s.basis_indices.tolist() == [1, 2, 5] and s.dim == 3
        assert s.complement().basis_indices.tolist() == [0, 3, 4, 6, 7]


class TestMeasureComputational:
    def test_basis_state_is_deterministic(self, rng):
        outcome, post = qc.measure_computational(np.tile([1.0, 0.0], (1000, 1)), rng)
        assert not outcome.any()
        np.testing.assert_array_equal(post, np.tile([1.0, 0.0], (1000, 1)))

    def test_frequency_matches_born_rule(self):
        trials = 1_000_000
        state = np.tile([math.cos(0.05), math.sin(0.05)], (trials, 1))
        outcome, _ = qc.measure_computational(state, np.random.default_rng(1))
        assert binom_ok(int(outcome.sum()), trials, math.sin(0.05) ** 2)

    def test_post_state_is_outcome_basis_state(self, rng):
        state = np.tile([math.cos(0.6), math.sin(0.6)], (500, 1))
        outcome, post = qc.measure_computational(state, rng)
        np.testing.assert_array_equal(post, qc.basis_qubit(outcome))
        assert 0 < outcome.sum() < 500

    def test_same_seed_same_sequence(self):
        state = np.tile([math.cos(0.5), math.sin(0.5)], (200, 1))
        a, _ = qc.measure_computational(state, np.random.default_rng(9))
        b, _ = qc.measure_computational(state, np.random.default_rng(9))
        np.testing.assert_array_equal(a, b)


class TestProjectOntoPure:
    def test_equal_always_passes(self, rng):
        t = np.tile(qc.make_qubit(1, 0.3), (1000, 1))
        passed, post = qc.project_onto_pure(t, t, rng)
        assert passed.all()
        np.testing.assert_array_equal(post, t)

    def test_orthogonal_never_passes(self, rng):
        t = np.tile(qc.make_qubit(0, 0.3), (1000, 1))
        passed, post = qc.project_onto_pure(qc.orthogonal(t), t, rng)
        assert not passed.any()
        np.testing.assert_allclose(post, qc.orthogonal(t))

    def test_pass_rate(self):
        trials = 1_000_000
        target = np.tile([math.cos(0.3), math.sin(0.3)], (trials, 1))
        state = np.tile([1.0, 0.0], (trials, 1))
        passed, _ = qc.project_onto_pure(state, target, np.random.default_rng(2))
        assert binom_ok(int(passed.sum()), trials, math.cos(0.3) ** 2)

    def test_post_states_normalized(self, rng):
        s = qc.make_qubit(rng.integers(0, 2, 300), rng.uniform(-0.7, 0.7, 300))
        t = qc.make_qubit(rng.integers(0, 2, 300), rng.uniform(-0.7, 0.7, 300))
        _, post = qc.project_onto_pure(s, t, rng)
        np.testing.assert_allclose(np.sum(post ** 2, axis=-1), 1.0, atol=1e-12)


class TestSubspaceProjection:
    def test_full_space(self, rng):
        psi = random_state(5, rng)
        for _ in range(20):
            collapsed, post, norm = qc.project_onto_subspace(psi, qc.Subspace.full(5), rng)
            assert collapsed and norm == pytest.approx(1.0, abs=1e-12)
            np.testing.assert_allclose(post.amplitudes, psi.amplitudes, atol=1e-12)

    def test_rank_one(self, rng):
        psi = random_state(4, rng)
        v = 11
        seen = False
        for _ in range(200):
            collapsed, post, norm = qc.project_onto_subspace(psi, qc.Subspace(4, [v]), rng)
            assert norm == pytest.approx(psi.amplitudes[v] ** 2, abs=1e-15)
            if collapsed:
                seen = True
                assert abs(post.amplitudes[v]) == pytest.approx(1.0)
        assert seen or psi.amplitudes[v] ** 2 < 0.02

    def test_overlap_equals_weight_n8(self, rng):
        psi = random_state(8, rng)
        v = random_subspace(8, 16, rng)
        norm, inside = qc.restrict(psi, v.basis_indices)
        assert qc.overlap_sq(psi, inside) == pytest.approx(norm, abs=1e-10)

    def test_overlap_equals_weight_random_cases(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 13))
            psi = random_state(n, rng)
            v = random_subspace(n, int(rng.integers(1, 2 ** n + 1)), rng)
            collapsed, post, norm = qc.project_onto_subspace(psi, v, rng)
            expected = float(np.sum(psi.amplitudes[v.basis_indices] ** 2))
            assert norm == pytest.approx(expected, abs=1e-12)
            if collapsed:
                assert abs(qc.overlap_sq(psi, post) - norm) <= 1e-10
            assert abs(float(post.amplitudes @ post.amplitudes) - 1) <= 1e-12

    def test_zero_weight_never_collapses(self, rng):
        psi = qc.StateVector(np.eye(8)[0])
        for _ in range(100):
            collapsed, post, norm = qc.project_onto_subspace(psi, qc.Subspace(3, [1, 2]), rng)
            assert norm == 0.0 and not collapsed
            np.testing.assert_array_equal(post.amplitudes, psi.amplitudes)

    def test_frequency_of_collapse(self):
        rng = np.random.default_rng(3)
        psi = random_state(6, rng)
        v = random_subspace(6, 20, rng)
        weight = float(np.sum(psi.amplitudes[v.basis_indices] ** 2))
        hits = sum(qc.project_onto_subspace(psi, v, rng)[0] for _ in range(20000))
        assert binom_ok(hits, 20000, weight)

    def test_mismatched_sizes(self, rng):
        with pytest.raises(ValueError):
            qc.project_onto_subspace(random_state(3, rng), qc.Subspace.full(2), rng)


class TestOverlap:
    def test_self_overlap(self, rng):
        psi = random_state(6, rng)
        assert qc.overlap_sq(psi, psi) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_basis(self):
        e = np.eye(4)
        assert qc.overlap_sq(qc.StateVector(e[0]), qc.StateVector(e[2])) == 0.0

    def test_uniform_vs_basis(self):
        assert qc.overlap_sq(qc.StateVector(np.full(4, 0.5)), qc.StateVector(np.eye(4)[0])) == pytest.approx(0.25)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            qc.overlap_sq(qc.StateVector(np.eye(4)[0]), qc.StateVector(np.eye(2)[0]))
