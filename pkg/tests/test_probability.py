import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from universal_outlier import (
    Distribution,
    SequenceBatch,
    TypeVector,
    bhattacharyya,
    empirical_type,
    in_linf_ball,
    kl_divergence,
    mixture,
    sample_sequence,
)
from universal_outlier._validation import InputError

import oracles


def distributions(min_size=2, max_size=10):
    return st.integers(min_size, max_size).flatmap(
        lambda k: st.lists(st.floats(0.0, 1.0), min_size=k, max_size=k)
        .filter(lambda w: sum(w) > 1e-6)
        .map(lambda w: Distribution.normalized(w))
    )


def pairs(min_size=2, max_size=10):
    return st.integers(min_size, max_size).flatmap(
        lambda k: st.tuples(
            *[st.lists(st.floats(1e-6, 1.0), min_size=k, max_size=k).map(Distribution.normalized)] * 2
        )
    )


class TestDistribution:
    def test_rejects_bad_vectors(self):
        with pytest.raises(InputError):
            Distribution([0.5, 0.6])
        with pytest.raises(InputError):
            Distribution([1.0])
        with pytest.raises(InputError):
            Distribution([1.2, -0.2])

    def test_tolerance_on_simplex(self):
        Distribution([0.5, 0.5 + 5e-10])
        with pytest.raises(InputError):
            Distribution([0.5, 0.5 + 5e-9])

    def test_no_silent_renormalisation(self):
        assert Distribution.normalized([1, 3]).probs.tolist() == [0.25, 0.75]

    def test_typical_requires_positive_mass(self):
        with pytest.raises(InputError):
            Distribution.typical([1.0, 0.0])
        assert Distribution.typical([0.2, 0.8]).pi_min == 0.2

    def test_immutable(self):
        d = Distribution([0.3, 0.7])
        with pytest.raises(ValueError):
            d.probs[0] = 0.5

    def test_bernoulli_parameterisation(self):
        assert Distribution.bernoulli(0.3).probs.tolist() == [0.7, 0.3]


class TestEmpiricalType:
    @pytest.mark.parametrize(
        "seq, k, expected",
        [
            ([0, 0, 1, 1], 2, [0.5, 0.5]),
            ([2, 2, 2], 3, [0.0, 0.0, 1.0]),
            ([0, 1, 1, 2], 3, [0.25, 0.5, 0.25]),
        ],
    )
    def test_examples(self, seq, k, expected):
        tv = empirical_type(seq, k)
        assert tv.probs.tolist() == expected
        assert tv.counts.sum() == len(seq)

    def test_errors(self):
        with pytest.raises(InputError):
            empirical_type([], 2)
        with pytest.raises(InputError):
            empirical_type([0, 3], 3)

    def test_type_vector_counts_must_sum_to_n(self):
        with pytest.raises(InputError):
            TypeVector([1, 2], n=4)


class TestKL:
    def test_identical(self):
        assert kl_divergence([0.3, 0.7], [0.3, 0.7]) == 0.0

    def test_hand_value(self):
        # 0.5 log2(2) + 0.5 log2(2/3)
        assert kl_divergence([0.5, 0.5], [0.25, 0.75]) == pytest.approx(0.20751874963942191, abs=1e-14)

    def test_disjoint_support_is_inf(self):
        assert kl_divergence([1.0, 0.0], [0.0, 1.0]) == math.inf

    def test_zero_mass_terms_ignored(self):
        assert kl_divergence([1.0, 0.0], [0.5, 0.5]) == pytest.approx(1.0)

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            kl_divergence([0.5, 0.5], [0.2, 0.3, 0.5])

    @settings(max_examples=200, deadline=None)
    @given(distributions(), st.data())
    def test_nonnegative(self, q, data):
        p = data.draw(distributions(q.alphabet_size, q.alphabet_size))
        assert kl_divergence(q, p) >= 0
        assert kl_divergence(q, q) == 0.0


class TestBhattacharyya:
    def test_identical(self):
        assert bhattacharyya([0.2, 0.3, 0.5], [0.2, 0.3, 0.5]) == 0.0

    def test_hand_value(self):
        # mpmath at 50 digits: -log2(sqrt(0.15) + sqrt(0.35))
        assert bhattacharyya([0.5, 0.5], [0.3, 0.7]) == pytest.approx(0.030757302819326540, abs=1e-14)

    def test_disjoint(self):
        assert bhattacharyya([1.0, 0.0], [0.0, 1.0]) == math.inf

    @settings(max_examples=200, deadline=None)
    @given(pairs())
    def test_symmetric_exactly(self, pq):
        p, q = pq
        assert bhattacharyya(p, q) == bhattacharyya(q, p)


class TestOracleAgreement:
    def test_random_pairs_match_high_precision(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            k = int(rng.integers(2, 11))
            p = Distribution.normalized(rng.random(k))
            q = Distribution.normalized(rng.random(k))
            assert abs(kl_divergence(q, p) - float(oracles.kl_bits(q.probs, p.probs))) <= 1e-12
            assert abs(bhattacharyya(p, q) - float(oracles.bhattacharyya_bits(p.probs, q.probs))) <= 1e-12


class TestMixture:
    def test_endpoints(self):
        pi, mu = Distribution([0.2, 0.8]), Distribution([0.6, 0.4])
        assert mixture(pi, mu, 0) == pi
        assert mixture(pi, mu, 1) == mu

    def test_symmetric_midpoint(self):
        assert mixture([1, 0], [0, 1], 0.5).probs.tolist() == [0.5, 0.5]

    def test_out_of_range(self):
        with pytest.raises(InputError):
            mixture([1, 0], [0, 1], 1.5)

    @settings(max_examples=200, deadline=None)
    @given(pairs(), st.floats(0, 1))
    def test_sums_to_one(self, pq, c):
        out = mixture(pq[0], pq[1], c)
        assert abs(out.probs.sum() - 1) <= 1e-9


class TestBall:
    def test_examples(self):
        pi = [0.5, 0.5]
        assert in_linf_ball(pi, pi, 1e-9)
        assert not in_linf_ball([0.6, 0.4], pi, 0.05)
        assert in_linf_ball([0.625, 0.375], pi, 0.125)  # exact binary boundary


class TestSampling:
    def test_degenerate(self):
        assert sample_sequence([1.0, 0.0], 5, np.random.default_rng(0)).tolist() == [0] * 5

    def test_never_draws_zero_mass_symbols(self):
        x = sample_sequence([0.5, 0.0, 0.5, 0.0], 10_000, np.random.default_rng(1))
        assert set(x.tolist()) <= {0, 2}

    def test_deterministic(self):
        a = sample_sequence([0.2, 0.3, 0.5], 100, np.random.default_rng(42))
        b = sample_sequence([0.2, 0.3, 0.5], 100, np.random.default_rng(42))
        assert np.array_equal(a, b)

    def test_rejects_empty(self):
        with pytest.raises(InputError):
            sample_sequence([0.5, 0.5], 0, np.random.default_rng(0))

    def test_converges_for_100_seeds(self):
        d = Distribution([0.5, 0.5])
        for seed in range(100):
            x = sample_sequence(d, 10**5, np.random.default_rng(seed))
            tv = empirical_type(x, 2)
            assert np.max(np.abs(tv.probs - d.probs)) < 0.01


class TestSequenceBatch:
    def test_requires_fewer_than_half_outliers(self):
        with pytest.raises(InputError):
            SequenceBatch([[0], [1], [0], [1]], [0, 1], 2)
        SequenceBatch([[0], [1], [0], [1], [0]], [0, 1], 2)

    def test_symbol_range(self):
        with pytest.raises(InputError):
            SequenceBatch([[0, 2]], [], 2)

    def test_types(self):
        b = SequenceBatch([[0, 1, 1, 2], [2, 2, 2, 2]], [], 3)
        assert b.type_matrix().tolist() == [[0.25, 0.5, 0.25], [0, 0, 1]]
        assert b.types()[0] == empirical_type([0, 1, 1, 2], 3)

    def test_permuted_tracks_ground_truth(self):
        b = SequenceBatch([[0, 0], [1, 1], [0, 1]], [1], 2)
        p = b.permuted([2, 0, 1])
        assert p.data[2].tolist() == [1, 1]
        assert p.outlier_indices == {2}
