import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from universal_outlier import (
    BudgetExceededError,
    Distribution,
    GLRTOutlierDetector,
    KnownDistributionDetector,
    MeanOutlierDetector,
    MedianOutlierDetector,
    SequenceBatch,
    glrt,
    mean_test,
    median_test_single_step,
    median_test_two_step,
    ml_test_known,
    sample_sequence,
    score_sequences,
    top_t,
)
from universal_outlier._validation import InputError
from universal_outlier.detectors import run_detector
from universal_outlier.harness import generate_batch

import oracles

DETECTOR_CALLS = {
    "mean": lambda b, t: mean_test(b, t),
    "median1": lambda b, t: median_test_single_step(b, t),
    "median2": lambda b, t: median_test_two_step(b, t, 0.5),
    "glrt": lambda b, t: glrt(b, t),
    "ml": lambda b, t: ml_test_known(b, t, [0.7, 0.2, 0.1], [0.1, 0.3, 0.6]),
}


def rows_of(types, n=10):
    """Binary rows of length n whose type is (1 - p1, p1) for each listed p1."""
    out = []
    for p1 in types:
        ones = round(p1 * n)
        out.append([0] * (n - ones) + [1] * ones)
    return out


class TestScores:
    def test_type_equal_reference(self):
        assert score_sequences(np.array([[0.3, 0.7]]), [0.3, 0.7]).scores.tolist() == [0.0]

    def test_hand_values(self):
        s = score_sequences(np.array([[0.5, 0.5], [0.25, 0.75]]), [0.25, 0.75]).scores
        assert s[0] == pytest.approx(0.20751874963942191, abs=1e-14)
        assert s[1] == 0.0

    def test_infinite(self):
        assert score_sequences(np.array([[0.5, 0.5]]), [1.0, 0.0]).scores[0] == math.inf


class TestTopT:
    def test_examples(self):
        assert top_t([0.1, 0.9, 0.2], 1).indices == (1,)
        assert top_t([0.1, 0.9, 0.2, 0.3, 0.05], 2).indices == (1, 3)
        assert top_t([0.5, 0.5, 0.1], 1).indices == (0,)

    def test_infinity_outranks_and_ties_by_index(self):
        assert top_t([1.0, math.inf, 5.0, math.inf, 0.0], 2).indices == (1, 3)
        assert top_t([1.0, math.inf, 5.0, 0.0, 0.0], 2).indices == (1, 2)

    def test_range(self):
        with pytest.raises(InputError):
            top_t([0.1, 0.2, 0.3, 0.4], 2)
        with pytest.raises(InputError):
            top_t([0.1, 0.2, 0.3], 0)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.integers(0, 5).map(float), min_size=3, max_size=12), st.data())
    def test_matches_brute_force_argmax(self, scores, data):
        t = data.draw(st.integers(1, (len(scores) - 1) // 2))
        assert top_t(scores, t).indices == oracles.best_subset_by_sum(scores, t)


class TestMeanTest:
    def test_hand_example(self):
        # types (0, 1), (3/4, 1/4), (3/4, 1/4); mean (1/2, 1/2); row 0 is 1 bit away
        b = SequenceBatch([[1, 1, 1, 1], [0, 0, 0, 1], [0, 0, 1, 0]], [], 2)
        scores = score_sequences(b.type_matrix(), [0.5, 0.5]).scores
        assert scores[0] == pytest.approx(1.0)
        assert scores[1] == pytest.approx(1 - 0.8112781244591328, abs=1e-12)
        assert mean_test(b, 1).indices == (0,)

    def test_identical_rows(self):
        b = SequenceBatch([[0, 1, 1]] * 5, [], 2)
        assert mean_test(b, 2).indices == (0, 1)

    def test_separated_pair_recovery(self):
        pi, mu = Distribution([0.9, 0.1]), Distribution([0.1, 0.9])
        hits = sum(
            mean_test(b, 1).as_set() == b.outlier_indices
            for b in (generate_batch(pi, mu, 20, 1, 500, np.random.default_rng(s)) for s in range(100))
        )
        assert hits >= 99

    def test_separable_objective_brute_force(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            m = int(rng.integers(3, 13))
            b = SequenceBatch(rng.integers(0, 3, size=(m, 8)), [], 3)
            t = int(rng.integers(1, (m - 1) // 2 + 1))
            types = b.type_matrix()
            scores = score_sequences(types, types.mean(axis=0)).scores
            assert mean_test(b, t).indices == oracles.best_subset_by_sum(scores.tolist(), t)


class TestMedianTests:
    def test_identical_rows(self):
        b = SequenceBatch([[0, 1, 1, 0]] * 5, [], 2)
        assert median_test_single_step(b, 2).indices == (0, 1)
        assert median_test_two_step(b, 2).indices == (0, 1)

    def test_single_step_hand_example(self):
        b = SequenceBatch(rows_of([0.8, 0.5, 0.1]), [], 2)
        scores = score_sequences(b.type_matrix(), [0.5, 0.5]).scores
        assert scores[2] == pytest.approx(0.53100440641071878, abs=1e-12)
        assert scores[0] == pytest.approx(0.27807190511263765, abs=1e-12)
        assert median_test_single_step(b, 1).indices == (2,)

    def test_two_step_scores_second_part(self):
        # estimation half says pi = (1, 0)-ish, detection half differs per row
        rng = np.random.default_rng(0)
        data = rng.integers(0, 2, size=(7, 250))
        b = SequenceBatch(data, [], 2)
        det = MedianOutlierDetector(n_outliers=2, two_step=True, rho=0.5).fit(data)
        scores = -det.score_samples(data)
        tail = SequenceBatch(data[:, 125:], [], 2).type_matrix()
        head_ref = np.median(SequenceBatch(data[:, :125], [], 2).type_matrix(), axis=0)
        head_ref /= head_ref.sum()
        assert np.allclose(scores, score_sequences(tail, head_ref).scores)
        assert det.outliers_ == median_test_two_step(b, 2, 0.5)


class TestGLRT:
    def test_identical_types(self):
        b = SequenceBatch([[0, 1, 2, 2]] * 7, [], 3)
        assert glrt(b, 1).indices == (0,)
        assert glrt(b, 3).indices == (0, 1, 2)

    def test_budget_refusal_names_count(self):
        b = SequenceBatch(np.zeros((30, 2), dtype=int), [], 2)
        with pytest.raises(BudgetExceededError, match="142506"):
            glrt(b, 5, subset_budget=1000)

    def test_recovers_outlier(self):
        pi, mu = Distribution([0.9, 0.1]), Distribution([0.1, 0.9])
        hits = 0
        for s in range(100):
            rng = np.random.default_rng(s)
            data = [sample_sequence(mu if row == 2 else pi, 20, rng) for row in range(4)]
            b = SequenceBatch(data, [2], 2)
            hits += glrt(b, 1).indices == (2,)
        assert hits >= 95

    def test_matches_brute_force_on_random_batches(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            m = int(rng.integers(3, 7))
            t = int(rng.integers(1, 3))
            if 2 * t >= m:
                t = 1
            k = int(rng.integers(2, 4))
            n = int(rng.integers(1, 31))
            rows = rng.integers(0, k, size=(m, n))
            b = SequenceBatch(rows, [], k)
            assert glrt(b, t).indices == oracles.glrt_brute_force(rows.tolist(), k, t)


class TestKnownDistribution:
    def test_equal_laws_tie_break(self):
        b = SequenceBatch(np.random.default_rng(0).integers(0, 2, (7, 10)), [], 2)
        assert ml_test_known(b, 3, [0.5, 0.5], [0.5, 0.5]).indices == (0, 1, 2)

    def test_all_ones_row_selected(self):
        data = np.zeros((5, 6), dtype=int)
        data[3] = 1
        b = SequenceBatch(data, [], 2)
        assert ml_test_known(b, 1, [0.9, 0.1], [0.1, 0.9]).indices == (3,)

    def test_impossible_symbols(self):
        data = np.array([[0, 0], [0, 1], [0, 0], [0, 0], [2, 2]])
        b = SequenceBatch(data, [], 3)
        # symbol 1 impossible under pi -> +inf; symbol 2 impossible under mu -> -inf
        d = ml_test_known(b, 2, [0.5, 0.0, 0.5], [0.5, 0.5, 0.0])
        assert d.indices == (0, 1)
        assert 4 not in d.indices


class TestInvariants:
    @pytest.mark.parametrize("name", sorted(DETECTOR_CALLS))
    def test_permutation_equivariance(self, name):
        rng = np.random.default_rng(5)
        pi, mu = Distribution([0.7, 0.2, 0.1]), Distribution([0.1, 0.3, 0.6])
        for _ in range(20):
            b = generate_batch(pi, mu, 8, 2, 40, rng)
            perm = rng.permutation(b.m)
            d = DETECTOR_CALLS[name](b, 2)
            dp = DETECTOR_CALLS[name](b.permuted(perm), 2)
            # row i of the permuted batch is row perm[i] of the original
            assert {int(perm[i]) for i in dp.indices} == d.as_set()

    @pytest.mark.parametrize("name", sorted(DETECTOR_CALLS))
    def test_deterministic(self, name):
        b = generate_batch([0.7, 0.2, 0.1], [0.1, 0.3, 0.6], 9, 3, 30, np.random.default_rng(1))
        assert DETECTOR_CALLS[name](b, 3) == DETECTOR_CALLS[name](b, 3)

    def test_run_detector_dispatch(self):
        b = generate_batch([0.7, 0.3], [0.2, 0.8], 9, 2, 30, np.random.default_rng(2))
        assert run_detector("median2", b, 2, rho=0.5) == median_test_two_step(b, 2, 0.5)
        with pytest.raises(InputError):
            run_detector("ml", b, 2)
        with pytest.raises(InputError):
            run_detector("nope", b, 2)


class TestEstimatorAPI:
    def test_mean_detector_matches_function(self):
        b = generate_batch([0.7, 0.3], [0.2, 0.8], 15, 3, 50, np.random.default_rng(4))
        det = MeanOutlierDetector(n_outliers=3)
        labels = det.fit_predict(b.data)
        assert set(np.flatnonzero(labels == -1)) == mean_test(b, 3).as_set()
        assert det.outliers_ == mean_test(b, 3)
        assert det.get_params() == {"alphabet_size": None, "n_outliers": 3}

    def test_clone_and_params(self):
        from sklearn.base import clone

        det = MedianOutlierDetector(n_outliers=2, two_step=True, rho=0.4)
        c = clone(det)
        assert c.get_params() == det.get_params()

    def test_glrt_and_known(self):
        b = generate_batch([0.7, 0.3], [0.2, 0.8], 8, 2, 40, np.random.default_rng(6))
        assert GLRTOutlierDetector(n_outliers=2).fit(b.data).outliers_ == glrt(b, 2)
        known = KnownDistributionDetector(pi=[0.7, 0.3], mu=[0.2, 0.8], n_outliers=2)
        assert known.fit(b.data).outliers_ == ml_test_known(b, 2, [0.7, 0.3], [0.2, 0.8])

    def test_unfitted(self):
        from sklearn.exceptions import NotFittedError

        with pytest.raises(NotFittedError):
            MeanOutlierDetector().predict(np.zeros((3, 2), dtype=int))

    def test_bad_outlier_count(self):
        with pytest.raises(InputError):
            MeanOutlierDetector(n_outliers=2).fit(np.zeros((4, 3), dtype=int))
