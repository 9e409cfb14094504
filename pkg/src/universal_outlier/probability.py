"""Finite-alphabet distributions, empirical types, divergences and sampling.

All divergences are reported in bits. ``math.inf`` is returned whenever a
divergence is unbounded (support mismatch); it is never replaced by a large
finite number.
"""
from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from ._validation import (
    InputError,
    check_probability_vector,
    check_same_alphabet,
    check_symbols,
)

__all__ = [
    "Distribution",
    "TypeVector",
    "SequenceBatch",
    "empirical_type",
    "kl_divergence",
    "bhattacharyya",
    "mixture",
    "in_linf_ball",
    "sample_sequence",
    "type_counts",
    "kl_rows",
]


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


class Distribution:
    """Probability vector over the alphabet ``{0, ..., K-1}``.

    Entries must be non-negative and sum to one within ``1e-9``; nothing is
    renormalised behind the caller's back (use :meth:`normalized` for that).
    Zeros are allowed, which estimates need; :meth:`typical` additionally
    demands a strictly positive minimum.
    """

    __slots__ = ("_probs",)

    def __init__(self, probs):
        self._probs = _frozen(check_probability_vector(probs))

    @classmethod
    def normalized(cls, weights) -> "Distribution":
        w = np.array(weights, dtype=float)
        if w.ndim != 1 or np.any(w < 0) or not np.all(np.isfinite(w)):
            raise InputError("weights must be a 1-D vector of finite non-negative values")
        total = w.sum()
        if total <= 0:
            raise InputError("weights sum to zero")
        return cls(w / total)

    @classmethod
    def bernoulli(cls, theta: float) -> "Distribution":
        """Binary law with ``P(1) = theta`` and ``P(0) = 1 - theta``."""
        theta = float(theta)
        if not 0.0 <= theta <= 1.0:
            raise InputError(f"Bernoulli parameter must lie in [0, 1], got {theta}")
        return cls([1.0 - theta, theta])

    @classmethod
    def typical(cls, probs) -> "Distribution":
        """A distribution suitable as the typical law: every symbol has mass > 0."""
        dist = probs if isinstance(probs, cls) else cls(probs)
        if dist.pi_min <= 0:
            raise InputError("typical distribution must have strictly positive entries")
        return dist

    @property
    def probs(self) -> np.ndarray:
        return self._probs

    @property
    def alphabet_size(self) -> int:
        return self._probs.size

    @property
    def pi_min(self) -> float:
        return float(self._probs.min())

    def __len__(self):
        return self._probs.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self._probs, dtype=dtype)

    def __iter__(self):
        return iter(self._probs.tolist())

    def __eq__(self, other):
        if not isinstance(other, Distribution):
            return NotImplemented
        return np.array_equal(self._probs, other._probs)

    def __hash__(self):
        return hash(self._probs.tobytes())

    def __repr__(self):
        return f"Distribution({np.array2string(self._probs, precision=6, separator=', ')})"


class TypeVector:
    """Empirical distribution (symbol counts) of one length-``n`` sequence."""

    __slots__ = ("_counts", "_n")

    def __init__(self, counts, n=None):
        c = np.array(counts)
        if c.ndim != 1 or c.size < 2:
            raise InputError("counts must be a 1-D vector over at least 2 symbols")
        if c.dtype.kind == "f" and not np.all(np.mod(c, 1) == 0):
            raise InputError("counts must be integers")
        c = c.astype(np.int64)
        if np.any(c < 0):
            raise InputError("counts must be non-negative")
        total = int(c.sum())
        if n is None:
            n = total
        if n <= 0 or total != n:
            raise InputError(f"counts sum to {total}, expected positive length n={n}")
        self._counts = _frozen(c)
        self._n = int(n)

    @property
    def counts(self) -> np.ndarray:
        return self._counts

    @property
    def n(self) -> int:
        return self._n

    @property
    def alphabet_size(self) -> int:
        return self._counts.size

    @property
    def probs(self) -> np.ndarray:
        return self._counts / self._n

    def distribution(self) -> Distribution:
        return Distribution(self.probs)

    def __len__(self):
        return self._counts.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.probs, dtype=dtype)

    def __eq__(self, other):
        if not isinstance(other, TypeVector):
            return NotImplemented
        return self._n == other._n and np.array_equal(self._counts, other._counts)

    def __hash__(self):
        return hash((self._n, self._counts.tobytes()))

    def __repr__(self):
        return f"TypeVector(counts={self._counts.tolist()}, n={self._n})"


class SequenceBatch:
    """``M`` sequences of ``n`` symbols plus the ground-truth outlier rows.

    The outlier set may be empty (useful for custom runs and for data whose
    ground truth is unknown) but must always hold fewer than ``M/2`` rows.
    """

    __slots__ = ("_data", "_outliers", "_alphabet_size")

    def __init__(self, data, outlier_indices: Iterable[int] = (), alphabet_size=None):
        arr, k = check_symbols(data, alphabet_size)
        outliers = frozenset(int(i) for i in outlier_indices)
        m = arr.shape[0]
        if any(i < 0 or i >= m for i in outliers):
            raise InputError(f"outlier indices must lie in [0, {m})")
        if 2 * len(outliers) >= m:
            raise InputError(
                f"need T < M/2 outliers, got T={len(outliers)} with M={m}"
            )
        self._data = _frozen(arr)
        self._outliers = outliers
        self._alphabet_size = k

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def outlier_indices(self) -> frozenset:
        return self._outliers

    @property
    def alphabet_size(self) -> int:
        return self._alphabet_size

    @property
    def m(self) -> int:
        return self._data.shape[0]

    @property
    def n(self) -> int:
        return self._data.shape[1]

    @property
    def t(self) -> int:
        return len(self._outliers)

    def type_counts(self) -> np.ndarray:
        return type_counts(self._data, self._alphabet_size)

    def type_matrix(self) -> np.ndarray:
        """``M x K`` matrix whose rows are the empirical types."""
        return self.type_counts() / self.n

    def types(self) -> list[TypeVector]:
        return [TypeVector(row, self.n) for row in self.type_counts()]

    def permuted(self, perm) -> "SequenceBatch":
        """Batch with row ``i`` of the result equal to row ``perm[i]`` of this one."""
        perm = np.asarray(perm)
        inverse = np.empty_like(perm)
        inverse[perm] = np.arange(perm.size)
        return SequenceBatch(
            self._data[perm], (int(inverse[i]) for i in self._outliers), self._alphabet_size
        )

    def __repr__(self):
        return (
            f"SequenceBatch(M={self.m}, n={self.n}, alphabet_size={self.alphabet_size}, "
            f"outliers={sorted(self._outliers)})"
        )


_COUNT_BLOCK = 1 << 18  # symbols per bincount call; keeps temporaries cache-resident


def type_counts(data, alphabet_size: int) -> np.ndarray:
    """Per-row symbol counts of a 2-D symbol matrix via blocked ``bincount``."""
    data = np.asarray(data, dtype=np.int64)
    m, n = data.shape
    k = alphabet_size
    rows = max(1, _COUNT_BLOCK // max(n, 1))
    out = np.empty((m, k), dtype=np.int64)
    offsets = (np.arange(min(rows, m), dtype=np.int64) * k)[:, None]
    for start in range(0, m, rows):
        block = data[start:start + rows]
        r = block.shape[0]
        flat = np.bincount((block + offsets[:r]).ravel(), minlength=r * k)
        out[start:start + r] = flat.reshape(r, k)
    return out


def empirical_type(sequence: Sequence[int], alphabet_size: int) -> TypeVector:
    seq = np.asarray(sequence)
    if seq.ndim != 1 or seq.size == 0:
        raise InputError("sequence must be a non-empty 1-D list of symbols")
    arr, k = check_symbols(seq[None, :], alphabet_size)
    return TypeVector(np.bincount(arr[0], minlength=k), arr.shape[1])


def _as_vector(x) -> np.ndarray:
    if isinstance(x, (Distribution, TypeVector)):
        return x.probs
    return np.asarray(x, dtype=float)


def kl_rows(Q, p) -> np.ndarray:
    """Row-wise ``D(Q[i] || p)`` in bits for a 2-D matrix of distributions."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    p = np.asarray(p, dtype=float)
    if Q.shape[1] != p.size:
        raise InputError(f"alphabet size mismatch: {Q.shape[1]} vs {p.size}")
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ratio = Q / p
        terms = np.where(Q > 0, Q * np.log2(ratio), 0.0)
        # ratio overflows for subnormal p > 0; the divergence is large but finite
        overflow = np.isinf(ratio) & (Q > 0) & (p > 0)
        if overflow.any():
            terms = np.where(overflow, Q * (np.log2(Q) - np.log2(p)), terms)
    out = terms.sum(axis=1)
    return np.maximum(out, 0.0)


def kl_divergence(q, p) -> float:
    """Relative entropy ``D(q || p)`` in bits.

    Uses ``0 log(0/x) = 0``; returns ``math.inf`` when ``q`` puts mass on a
    symbol where ``p`` has none.

    >>> round(kl_divergence([0.5, 0.5], [0.25, 0.75]), 5)
    0.20752
    """
    qv, pv = _as_vector(q), _as_vector(p)
    check_same_alphabet(qv, pv)
    if np.array_equal(qv, pv):
        return 0.0
    return float(kl_rows(qv[None, :], pv)[0])


def bhattacharyya(p, q) -> float:
    """Bhattacharyya distance ``-log2 sum_y sqrt(p(y) q(y))`` in bits."""
    pv, qv = _as_vector(p), _as_vector(q)
    check_same_alphabet(pv, qv)
    if np.array_equal(pv, qv):
        return 0.0
    coeff = math.fsum(np.sqrt(pv * qv))
    if coeff <= 0.0:
        return math.inf
    return max(0.0, -math.log2(coeff))


def mixture(pi, mu, c: float) -> Distribution:
    """The contaminated law ``(1 - c) pi + c mu``."""
    pv, mv = _as_vector(pi), _as_vector(mu)
    check_same_alphabet(pv, mv)
    c = float(c)
    if not 0.0 <= c <= 1.0:
        raise InputError(f"mixture weight must lie in [0, 1], got {c}")
    if c == 0.0:
        return pi if isinstance(pi, Distribution) else Distribution(pv)
    if c == 1.0:
        return mu if isinstance(mu, Distribution) else Distribution(mv)
    return Distribution((1.0 - c) * pv + c * mv)


def in_linf_ball(q, pi, eps: float) -> bool:
    """Whether ``|q(y) - pi(y)| <= eps`` for every symbol (boundary inclusive)."""
    qv, pv = _as_vector(q), _as_vector(pi)
    check_same_alphabet(qv, pv)
    return bool(np.all(np.abs(qv - pv) <= eps))


def sample_sequence(dist, n: int, rng) -> np.ndarray:
    """Draw ``n`` i.i.d. symbols from ``dist`` by inverse-CDF lookup.

    ``rng`` is a :class:`numpy.random.Generator` (or anything accepted by
    :func:`numpy.random.default_rng`). The output is fully determined by the
    generator state.
    """
    if n < 1:
        raise InputError(f"sequence length must be >= 1, got {n}")
    rng = np.random.default_rng(rng)
    probs = _as_vector(dist)
    cdf = np.cumsum(probs)
    u = rng.random(int(n))
    idx = np.searchsorted(cdf, u, side="right")
    # cumulative sum can land just below 1; never map overflow to a zero-mass symbol
    last = int(np.flatnonzero(probs > 0)[-1])
    return np.minimum(idx, last).astype(np.int64)
