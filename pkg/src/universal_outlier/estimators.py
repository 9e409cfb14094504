"""Estimates of the typical distribution from a batch of empirical types."""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import DegenerateMedianError, InputError, check_rho, check_symbols
from .probability import Distribution, SequenceBatch, TypeVector, type_counts

__all__ = [
    "mean_estimate",
    "median_estimate",
    "median_of_types",
    "split_batch",
    "split_point",
    "TypeTransformer",
    "TypicalDistributionEstimator",
]


def as_type_matrix(types) -> np.ndarray:
    """Stack a list of types (or accept a ready ``M x K`` matrix) as floats."""
    if isinstance(types, np.ndarray):
        mat = np.asarray(types, dtype=float)
        if mat.ndim != 2:
            raise InputError(f"expected an M x K type matrix, got shape {mat.shape}")
    else:
        rows = [t.probs if isinstance(t, (TypeVector, Distribution)) else np.asarray(t, float)
                for t in types]
        if not rows:
            raise InputError("need at least one type")
        sizes = {r.size for r in rows}
        if len(sizes) != 1:
            raise InputError(f"types have different alphabet sizes: {sorted(sizes)}")
        mat = np.vstack(rows)
    if mat.shape[0] == 0:
        raise InputError("need at least one type")
    return mat


def mean_estimate(types) -> Distribution:
    """Arithmetic mean of the type vectors."""
    mat = as_type_matrix(types)
    return Distribution(mat.mean(axis=0))


def median_of_types(types) -> np.ndarray:
    """Unnormalised per-symbol median ``m(y)``.

    For an even number of types this is the midpoint of the two central
    order statistics. ``np.median`` selects them by partitioning, so the work
    is linear in ``M`` per symbol.
    """
    mat = as_type_matrix(types)
    return np.median(mat, axis=0)


def median_estimate(types) -> Distribution:
    """Per-symbol median of the types, renormalised to sum to one.

    Raises
    ------
    DegenerateMedianError
        If every per-symbol median is zero.
    """
    m = median_of_types(types)
    total = m.sum()
    if total <= 0.0:
        raise DegenerateMedianError(
            "all per-symbol medians are zero; the median estimate is undefined"
        )
    return Distribution(m / total)


def split_point(n: int, rho: float) -> int:
    """Number of leading samples reserved for estimation, ``ceil(rho * n)``."""
    rho = check_rho(rho)
    # guard against products like 0.3 * 10 = 3.0000000000000004
    return math.ceil(round(rho * n, 9))


def split_batch(batch: SequenceBatch, rho: float) -> tuple[SequenceBatch, SequenceBatch]:
    """Split every sequence into its first ``ceil(rho n)`` samples and the rest."""
    k = split_point(batch.n, rho)
    if k >= batch.n:
        raise InputError(
            f"rho={rho} leaves no samples for detection (n={batch.n}, split at {k})"
        )
    first = SequenceBatch(batch.data[:, :k], batch.outlier_indices, batch.alphabet_size)
    second = SequenceBatch(batch.data[:, k:], batch.outlier_indices, batch.alphabet_size)
    return first, second


class TypeTransformer(TransformerMixin, BaseEstimator):
    """Map an ``M x n`` symbol matrix to its ``M x K`` matrix of empirical types.

    Parameters
    ----------
    alphabet_size : int or None
        Alphabet size ``K``. Inferred from the training data when None.
    """

    def __init__(self, alphabet_size=None):
        self.alphabet_size = alphabet_size

    def fit(self, X, y=None):
        _, self.alphabet_size_ = check_symbols(X, self.alphabet_size)
        return self

    def transform(self, X):
        check_is_fitted(self, "alphabet_size_")
        arr, k = check_symbols(X, self.alphabet_size_)
        return type_counts(arr, k) / arr.shape[1]


class TypicalDistributionEstimator(BaseEstimator):
    """Estimate the typical distribution from a symbol matrix.

    Parameters
    ----------
    method : {"mean", "median"}
        Mean of the types, or the renormalised per-symbol median.
    alphabet_size : int or None
        Inferred from ``X`` when None.

    Attributes
    ----------
    distribution_ : Distribution
    """

    def __init__(self, method="median", alphabet_size=None):
        self.method = method
        self.alphabet_size = alphabet_size

    def fit(self, X, y=None):
        if self.method not in ("mean", "median"):
            raise InputError(f"unknown method {self.method!r}")
        types = TypeTransformer(self.alphabet_size).fit_transform(X)
        est = mean_estimate if self.method == "mean" else median_estimate
        self.distribution_ = est(types)
        return self
