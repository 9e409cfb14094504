"""Outlier detectors over a batch of discrete sequences.

Every detector returns an :class:`OutlierDecision` holding exactly ``t``
row indices. Ties between scores are broken towards the smaller row index
(and, for the GLRT, towards the lexicographically smallest subset), so all
detectors are deterministic.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
import numpy as np
from sklearn.base import BaseEstimator, OutlierMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import (
    BudgetExceededError,
    InputError,
    check_n_outliers,
    check_same_alphabet,
    check_symbols,
)
from .estimators import as_type_matrix, mean_estimate, median_estimate, split_batch, split_point
from .probability import Distribution, SequenceBatch, kl_rows, type_counts

__all__ = [
    "OutlierDecision",
    "ScoreVector",
    "score_sequences",
    "top_t",
    "mean_test",
    "median_test_single_step",
    "median_test_two_step",
    "glrt",
    "ml_test_known",
    "DETECTORS",
    "run_detector",
    "MeanOutlierDetector",
    "MedianOutlierDetector",
    "GLRTOutlierDetector",
    "KnownDistributionDetector",
]

DEFAULT_SUBSET_BUDGET = 10**6
# objectives closer than this are treated as tied in the GLRT subset scan
GLRT_TIE_TOL = 1e-9
_GLRT_CHUNK = 1 << 16


@dataclass(frozen=True)
class OutlierDecision:
    indices: tuple[int, ...]
    m: int

    def __post_init__(self):
        idx = tuple(sorted(int(i) for i in self.indices))
        if len(set(idx)) != len(idx):
            raise InputError("decision indices must be distinct")
        if idx and (idx[0] < 0 or idx[-1] >= self.m):
            raise InputError(f"decision indices must lie in [0, {self.m})")
        object.__setattr__(self, "indices", idx)

    @property
    def t(self) -> int:
        return len(self.indices)

    def as_set(self) -> frozenset:
        return frozenset(self.indices)

    def labels(self) -> np.ndarray:
        """sklearn-style labels: ``-1`` for outliers, ``1`` for inliers."""
        out = np.ones(self.m, dtype=int)
        out[list(self.indices)] = -1
        return out

    def __iter__(self):
        return iter(self.indices)

    def __len__(self):
        return len(self.indices)


@dataclass(frozen=True)
class ScoreVector:
    scores: np.ndarray
    reference: Distribution

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=float)
        if s.ndim != 1 or np.any(np.isnan(s)) or np.any(s < 0):
            raise InputError("scores must be a 1-D vector of values >= 0 or +inf")
        s.setflags(write=False)
        object.__setattr__(self, "scores", s)

    def __len__(self):
        return self.scores.size


def score_sequences(types, reference) -> ScoreVector:
    """Divergence ``D(type_i || reference)`` of every type, in bits."""
    mat = as_type_matrix(types)
    ref = reference if isinstance(reference, Distribution) else Distribution(reference)
    check_same_alphabet(mat[0], ref.probs)
    return ScoreVector(kl_rows(mat, ref.probs), ref)


def top_t(scores, t: int) -> OutlierDecision:
    """Indices of the ``t`` largest scores.

    ``+inf`` outranks every finite score; equal scores go to the smaller index.
    """
    s = scores.scores if isinstance(scores, ScoreVector) else np.asarray(scores, dtype=float)
    if s.ndim != 1:
        raise InputError("scores must be one-dimensional")
    if np.any(np.isnan(s)):
        raise InputError("scores contain NaN")
    t = check_n_outliers(t, s.size)
    order = np.argsort(-s, kind="stable")
    return OutlierDecision(tuple(order[:t].tolist()), s.size)


def _check_batch(batch, t) -> int:
    if not isinstance(batch, SequenceBatch):
        raise InputError(f"expected a SequenceBatch, got {type(batch).__name__}")
    return check_n_outliers(t, batch.m)


def mean_test(batch: SequenceBatch, t: int) -> OutlierDecision:
    """Flag the ``t`` sequences whose types diverge most from the mean type."""
    t = _check_batch(batch, t)
    types = batch.type_matrix()
    return top_t(score_sequences(types, mean_estimate(types)), t)


def median_test_single_step(batch: SequenceBatch, t: int) -> OutlierDecision:
    """Like :func:`mean_test` but scored against the normalised median type.

    Estimation and scoring use the same samples.
    """
    t = _check_batch(batch, t)
    types = batch.type_matrix()
    return top_t(score_sequences(types, median_estimate(types)), t)


def median_test_two_step(batch: SequenceBatch, t: int, rho: float = 0.5) -> OutlierDecision:
    """Median reference from the first ``ceil(rho n)`` samples, scores from the rest."""
    t = _check_batch(batch, t)
    head, tail = split_batch(batch, rho)
    reference = median_estimate(head.type_matrix())
    return top_t(score_sequences(tail.type_matrix(), reference), t)


def _entropy_rows(P: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return -np.where(P > 0, P * np.log2(P), 0.0).sum(axis=-1)


def glrt(batch: SequenceBatch, t: int, subset_budget: int = DEFAULT_SUBSET_BUDGET) -> OutlierDecision:
    """Generalized likelihood ratio test by exhaustive subset search.

    Minimises ``sum_{j not in S} D(P_j || mean_{k not in S} P_k)`` over all
    size-``t`` subsets ``S``. The objective is evaluated through the identity
    ``(M - t) H(mean) - sum_{j not in S} H(P_j)``, where the out-of-subset mean
    comes from the global type sum minus the in-subset sum, so each subset
    costs ``O(t K)``.

    Raises
    ------
    BudgetExceededError
        If ``C(M, t)`` exceeds ``subset_budget``.
    """
    t = _check_batch(batch, t)
    m = batch.m
    n_subsets = math.comb(m, t)
    if n_subsets > subset_budget:
        raise BudgetExceededError(n_subsets, subset_budget)

    P = batch.type_matrix()
    H = _entropy_rows(P)
    total, h_total = P.sum(axis=0), H.sum()

    objectives = np.empty(n_subsets)
    combos = itertools.combinations(range(m), t)
    pos = 0
    while pos < n_subsets:
        size = min(_GLRT_CHUNK, n_subsets - pos)
        flat = itertools.islice(itertools.chain.from_iterable(combos), size * t)
        idx = np.fromiter(flat, dtype=np.int64, count=size * t).reshape(size, t)
        inside = P[idx].sum(axis=1)
        out_mean = (total - inside) / (m - t)
        objectives[pos:pos + size] = (m - t) * _entropy_rows(out_mean) - (h_total - H[idx].sum(axis=1))
        pos += size

    best = objectives.min()
    winner = int(np.flatnonzero(objectives <= best + GLRT_TIE_TOL)[0])
    subset = next(itertools.islice(itertools.combinations(range(m), t), winner, None))
    return OutlierDecision(subset, m)


def ml_test_known(batch: SequenceBatch, t: int, pi, mu) -> OutlierDecision:
    """Likelihood-ratio ranking when both laws are known.

    Each sequence scores ``sum_k log2(mu(y_k) / pi(y_k))``. Symbols impossible
    under ``pi`` only give ``+inf``, those impossible under ``mu`` only give
    ``-inf``; a row that is impossible under both laws scores 0.
    """
    t = _check_batch(batch, t)
    pv = pi.probs if isinstance(pi, Distribution) else Distribution(pi).probs
    mv = mu.probs if isinstance(mu, Distribution) else Distribution(mu).probs
    check_same_alphabet(pv, mv)
    if pv.size != batch.alphabet_size:
        raise InputError(
            f"alphabet size mismatch: batch has {batch.alphabet_size}, laws have {pv.size}"
        )
    counts = batch.type_counts().astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        llr = np.log2(mv) - np.log2(pv)
        contrib = np.where(counts > 0, counts * llr, 0.0)
        scores = contrib.sum(axis=1)
    scores = np.where(np.isnan(scores), 0.0, scores)
    return top_t(scores, t)


DETECTORS = ("mean", "median1", "median2", "glrt", "ml")


def run_detector(name: str, batch: SequenceBatch, t: int, *, rho=0.5,
                 subset_budget=DEFAULT_SUBSET_BUDGET, pi=None, mu=None) -> OutlierDecision:
    """Dispatch on the short detector names used by the CLI and the harness."""
    if name == "mean":
        return mean_test(batch, t)
    if name == "median1":
        return median_test_single_step(batch, t)
    if name == "median2":
        return median_test_two_step(batch, t, rho)
    if name == "glrt":
        return glrt(batch, t, subset_budget)
    if name == "ml":
        if pi is None or mu is None:
            raise InputError("the ml detector needs both pi and mu")
        return ml_test_known(batch, t, pi, mu)
    raise InputError(f"unknown detector {name!r}; choose from {sorted(DETECTORS)}")


class _BatchDetector(OutlierMixin, BaseEstimator):
    """Shared plumbing: rows of ``X`` are sequences, columns are time steps.

    ``predict`` returns ``-1`` for the ``n_outliers`` flagged rows and ``1``
    for all others.
    """

    def _batch(self, X, fitting=False) -> SequenceBatch:
        k = self.alphabet_size if fitting else self.alphabet_size_
        arr, k = check_symbols(X, k)
        if fitting:
            self.alphabet_size_ = k
        return SequenceBatch(arr, alphabet_size=k)

    def _decide(self, batch: SequenceBatch) -> OutlierDecision:
        raise NotImplementedError

    def fit(self, X, y=None):
        batch = self._batch(X, fitting=True)
        self._fit_reference(batch)
        self.outliers_ = self._decide(batch)
        return self

    def _fit_reference(self, batch):
        pass

    def predict(self, X):
        check_is_fitted(self, "outliers_")
        return self._decide(self._batch(X)).labels()


class _ReferenceDetector(_BatchDetector):
    def _scored_part(self, batch: SequenceBatch) -> np.ndarray:
        return batch.type_matrix()

    def _decide(self, batch):
        scores = score_sequences(self._scored_part(batch), self.reference_)
        return top_t(scores, self.n_outliers)

    def score_samples(self, X):
        """Negated divergence from the reference; lower means more outlying."""
        check_is_fitted(self, "reference_")
        batch = self._batch(X)
        return -score_sequences(self._scored_part(batch), self.reference_).scores


class MeanOutlierDetector(_ReferenceDetector):
    """Mean-based universal outlier test.

    Parameters
    ----------
    n_outliers : int
        Number of outlier sequences ``t``; must satisfy ``1 <= t < M/2``.
    alphabet_size : int or None
        Inferred from the training data when None.

    Attributes
    ----------
    reference_ : Distribution
        Mean of the training types.
    outliers_ : OutlierDecision
        Decision on the training batch.
    """

    def __init__(self, n_outliers=1, alphabet_size=None):
        self.n_outliers = n_outliers
        self.alphabet_size = alphabet_size

    def _fit_reference(self, batch):
        check_n_outliers(self.n_outliers, batch.m)
        self.reference_ = mean_estimate(batch.type_matrix())


class MedianOutlierDetector(_ReferenceDetector):
    """Median-based universal outlier test, single- or two-step.

    With ``two_step=True`` the reference is estimated from the first
    ``ceil(rho * n)`` columns of the training matrix and every call scores the
    remaining columns of its input.
    """

    def __init__(self, n_outliers=1, two_step=False, rho=0.5, alphabet_size=None):
        self.n_outliers = n_outliers
        self.two_step = two_step
        self.rho = rho
        self.alphabet_size = alphabet_size

    def _split(self, batch):
        k = split_point(batch.n, self.rho)
        if k >= batch.n:
            raise InputError(f"rho={self.rho} leaves no samples for detection (n={batch.n})")
        return k

    def _fit_reference(self, batch):
        check_n_outliers(self.n_outliers, batch.m)
        if self.two_step:
            head, _ = split_batch(batch, self.rho)
            self.reference_ = median_estimate(head.type_matrix())
        else:
            self.reference_ = median_estimate(batch.type_matrix())

    def _scored_part(self, batch):
        if not self.two_step:
            return batch.type_matrix()
        k = self._split(batch)
        tail = batch.data[:, k:]
        return type_counts(tail, batch.alphabet_size) / tail.shape[1]


class GLRTOutlierDetector(_BatchDetector):
    """Exhaustive GLRT; refuses batches with more than ``subset_budget`` subsets."""

    def __init__(self, n_outliers=1, subset_budget=DEFAULT_SUBSET_BUDGET, alphabet_size=None):
        self.n_outliers = n_outliers
        self.subset_budget = subset_budget
        self.alphabet_size = alphabet_size

    def _decide(self, batch):
        return glrt(batch, self.n_outliers, self.subset_budget)


class KnownDistributionDetector(_BatchDetector):
    """Likelihood-ratio ranking with known typical (``pi``) and outlier (``mu``) laws."""

    def __init__(self, pi=None, mu=None, n_outliers=1, alphabet_size=None):
        self.pi = pi
        self.mu = mu
        self.n_outliers = n_outliers
        self.alphabet_size = alphabet_size

    def fit(self, X, y=None):
        if self.pi is None or self.mu is None:
            raise InputError("KnownDistributionDetector needs both pi and mu")
        return super().fit(X, y)

    def _batch(self, X, fitting=False):
        if fitting and self.alphabet_size is None:
            arr, self.alphabet_size_ = check_symbols(X, len(self.pi))
            return SequenceBatch(arr, alphabet_size=self.alphabet_size_)
        return super()._batch(X, fitting)

    def _decide(self, batch):
        if self.pi is None or self.mu is None:
            raise InputError("KnownDistributionDetector needs both pi and mu")
        return ml_test_known(batch, self.n_outliers, self.pi, self.mu)
