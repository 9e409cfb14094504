"""Input validation helpers shared by the public API and the estimators."""
from __future__ import annotations

import math

import numpy as np

SIMPLEX_TOL = 1e-9


class InputError(ValueError):
    """Raised when an argument violates a documented precondition."""


class DegenerateMedianError(ArithmeticError):
    """Raised when every per-symbol median is zero, so no normalisation exists."""


class BudgetExceededError(RuntimeError):
    """Raised when an exhaustive subset search would exceed its budget."""

    def __init__(self, n_subsets: int, budget: int):
        self.n_subsets = n_subsets
        self.budget = budget
        super().__init__(
            f"GLRT refused: C(M, t) = {n_subsets} subsets exceeds the budget of {budget}"
        )


def check_probability_vector(probs, name="probs") -> np.ndarray:
    arr = np.array(probs, dtype=float)
    if arr.ndim != 1:
        raise InputError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < 2:
        raise InputError(f"{name} needs an alphabet of at least 2 symbols")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite entries")
    if np.any(arr < 0):
        raise InputError(f"{name} contains negative entries")
    total = math.fsum(arr)
    if abs(total - 1.0) > SIMPLEX_TOL:
        raise InputError(f"{name} sums to {total!r}, not 1")
    return arr


def check_same_alphabet(a, b) -> None:
    if len(a) != len(b):
        raise InputError(f"alphabet size mismatch: {len(a)} vs {len(b)}")


def check_symbols(X, alphabet_size=None) -> tuple[np.ndarray, int]:
    """Validate a 2-D matrix of non-negative integer symbols.

    Returns the matrix as ``int64`` together with the alphabet size, which is
    inferred as ``max + 1`` (at least 2) when not given.
    """
    arr = np.asarray(X)
    if arr.ndim != 2:
        raise InputError(f"expected a 2-D symbol matrix, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise InputError("symbol matrix must have at least one row and one column")
    if arr.dtype.kind == "f":
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise InputError("symbol matrix contains non-integer values")
    elif arr.dtype.kind not in "iub":
        raise InputError(f"symbol matrix has unsupported dtype {arr.dtype}")
    arr = arr.astype(np.int64)
    if arr.min() < 0:
        raise InputError("symbols must be non-negative")
    if alphabet_size is None:
        alphabet_size = max(int(arr.max()) + 1, 2)
    elif arr.max() >= alphabet_size:
        raise InputError(
            f"symbol {int(arr.max())} out of range for alphabet size {alphabet_size}"
        )
    return arr, int(alphabet_size)


def check_n_outliers(t, m) -> int:
    if isinstance(t, bool) or int(t) != t:
        raise InputError(f"number of outliers must be an integer, got {t!r}")
    t = int(t)
    if t < 1 or 2 * t >= m:
        raise InputError(f"number of outliers must satisfy 1 <= t < M/2, got t={t}, M={m}")
    return t


def check_rho(rho) -> float:
    rho = float(rho)
    if not 0.0 < rho < 1.0:
        raise InputError(f"rho must lie in (0, 1), got {rho}")
    return rho
