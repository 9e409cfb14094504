"""Error exponents, Hoeffding deviation bounds and related checks.

Exponents are in bits. The two Hoeffding bounds use the natural exponential.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from ._validation import InputError, check_same_alphabet
from .probability import Distribution, bhattacharyya, kl_rows, mixture

__all__ = [
    "ExponentResult",
    "MeanBound",
    "ExponentFit",
    "optimal_exponent",
    "bernoulli_grid",
    "simplex_grid",
    "default_grid",
    "mean_exponent_grid",
    "hoeffding_median_bound",
    "hoeffding_mean_bound",
    "median_property_check",
    "empirical_exponent",
]

CONSTRAINT_SLACK = 1e-12
MAX_GRID_PAIRS = 10**6
_CHUNK_CELLS = 1 << 22


@dataclass(frozen=True)
class ExponentResult:
    value: float
    grid_resolution: float
    argmin_pair: tuple[Distribution, Distribution]


class MeanBound(NamedTuple):
    value: float
    vacuous: bool


class ExponentFit(NamedTuple):
    slope: float
    residual_norm: float


def optimal_exponent(pi, mu) -> float:
    """Exponent ``2 B(pi, mu)`` of the test that knows both laws."""
    return 2.0 * bhattacharyya(pi, mu)


def bernoulli_grid(start=0.001, step=0.005, stop=0.996) -> list[Distribution]:
    """Bernoulli candidates with success probabilities ``start, start+step, ..., stop``."""
    if not 0.0 < start <= stop < 1.0 or step <= 0:
        raise InputError("Bernoulli grid must satisfy 0 < start <= stop < 1 and step > 0")
    count = int(math.floor(round((stop - start) / step, 9))) + 1
    thetas = [round(start + k * step, 12) for k in range(count)]
    return [Distribution.bernoulli(th) for th in thetas]


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def simplex_grid(alphabet_size: int, resolution: int) -> list[Distribution]:
    """Interior lattice points of the simplex with coordinates in ``{1/r, 2/r, ...}``.

    Every candidate has strictly positive entries, mirroring the Bernoulli
    grid that avoids success probabilities of exactly 0 and 1.
    """
    if alphabet_size < 2 or resolution < alphabet_size:
        raise InputError("need alphabet_size >= 2 and resolution >= alphabet_size")
    return [Distribution(np.array(c, dtype=float) / resolution)
            for c in _compositions(resolution, alphabet_size)]


def default_grid(alphabet_size: int) -> tuple[list[Distribution], float]:
    """Default candidate grid and its resolution for a given alphabet size.

    Binary alphabets get ``{0.001, 0.006, ..., 0.996}``. Larger alphabets get
    the finest interior lattice with at most ``sqrt(MAX_GRID_PAIRS)`` points.
    """
    if alphabet_size == 2:
        return bernoulli_grid(), 0.005
    max_points = math.isqrt(MAX_GRID_PAIRS)
    r = alphabet_size
    while math.comb(r, alphabet_size - 1) <= max_points:
        r += 1
    return simplex_grid(alphabet_size, r), 1.0 / r


def _grid_resolution(grid: np.ndarray) -> float:
    steps = []
    for col in grid.T:
        diffs = np.diff(np.unique(col))
        diffs = diffs[diffs > 0]
        if diffs.size:
            steps.append(diffs.min())
    return float(min(steps)) if steps else 0.0


def mean_exponent_grid(pi, mu, c: float, grid=None, resolution=None) -> ExponentResult:
    """Grid minimum of ``D(Q1 || mu) + D(Q2 || pi)`` under ``D(Q2 || nu) >= D(Q1 || nu)``.

    ``nu = (1 - c) pi + c mu`` is the law the mean estimate converges to when a
    fraction ``c`` of the sequences are outliers. Both ``Q1`` and ``Q2`` range
    over ``grid`` (default: :func:`default_grid`). Candidates with an infinite
    divergence are skipped. Ties go to the smallest ``(Q1, Q2)`` grid index.

    Parameters
    ----------
    pi, mu : Distribution
    c : float
        Outlier proportion in ``[0, 1]``.
    grid : sequence of Distribution, optional
    resolution : float, optional
        Recorded in the result; estimated from the grid when omitted.
    """
    pi = pi if isinstance(pi, Distribution) else Distribution(pi)
    mu = mu if isinstance(mu, Distribution) else Distribution(mu)
    check_same_alphabet(pi.probs, mu.probs)
    nu = mixture(pi, mu, c)
    if grid is None:
        grid, default_res = default_grid(pi.alphabet_size)
        resolution = default_res if resolution is None else resolution
    candidates = list(grid)
    if not candidates:
        raise InputError("grid must not be empty")
    G = np.vstack([np.asarray(q.probs if isinstance(q, Distribution) else q, dtype=float)
                   for q in candidates])
    if G.shape[1] != pi.alphabet_size:
        raise InputError(
            f"grid alphabet size {G.shape[1]} does not match {pi.alphabet_size}"
        )
    if resolution is None:
        resolution = _grid_resolution(G)

    to_mu = kl_rows(G, mu.probs)
    to_pi = kl_rows(G, pi.probs)
    to_nu = kl_rows(G, nu.probs)
    first_ok = np.flatnonzero(np.isfinite(to_mu) & np.isfinite(to_nu))
    second_ok = np.flatnonzero(np.isfinite(to_pi) & np.isfinite(to_nu))
    if first_ok.size == 0 or second_ok.size == 0:
        raise RuntimeError("no feasible candidate pair on the grid")

    d2, dn2 = to_pi[second_ok], to_nu[second_ok]
    best = (math.inf, -1, -1)
    rows = max(1, _CHUNK_CELLS // second_ok.size)
    for start in range(0, first_ok.size, rows):
        i_idx = first_ok[start:start + rows]
        feasible = dn2[None, :] - to_nu[i_idx][:, None] >= -CONSTRAINT_SLACK
        obj = np.where(feasible, to_mu[i_idx][:, None] + d2[None, :], np.inf)
        j_local = obj.argmin(axis=1)
        vals = obj[np.arange(i_idx.size), j_local]
        r = int(vals.argmin())
        if vals[r] < best[0]:
            best = (float(vals[r]), int(i_idx[r]), int(second_ok[j_local[r]]))
    if not math.isfinite(best[0]):
        raise RuntimeError("no feasible candidate pair on the grid")

    value, i, j = best
    pair = tuple(q if isinstance(q, Distribution) else Distribution(q)
                 for q in (candidates[i], candidates[j]))
    return ExponentResult(max(value, 0.0), float(resolution), pair)


def hoeffding_median_bound(alphabet_size: int, m: int, t: int, n: int, eps: float) -> float:
    """Bound on ``P(median estimate outside the eps-ball around pi)``.

    ``2 K (m - t) exp(-2 n (eps / (1 + K))**2)``.
    """
    if 2 * t >= m:
        raise InputError(f"need t < m/2, got t={t}, m={m}")
    if eps <= 0:
        raise InputError("eps must be positive")
    eps_prime = eps / (1 + alphabet_size)
    return 2.0 * alphabet_size * (m - t) * math.exp(-2.0 * n * eps_prime**2)


def hoeffding_mean_bound(alphabet_size: int, m: int, t: int, eps: float) -> MeanBound:
    """Bound on ``P(mean estimate outside the eps-ball around pi)``.

    ``2 K exp(-2 (eps m - t)**2 / m)``, informative only when ``eps m >= t``.
    Otherwise the exponent is clamped to zero and the result is flagged
    vacuous.
    """
    if eps <= 0:
        raise InputError("eps must be positive")
    if m < 1:
        raise InputError("m must be positive")
    gap = eps * m - t
    if gap < 0:
        return MeanBound(2.0 * alphabet_size, True)
    return MeanBound(2.0 * alphabet_size * math.exp(-2.0 * gap**2 / m), False)


def median_property_check(values: Sequence[float], subset) -> bool:
    """Whether the median of ``values`` lies between the min and max over ``subset``.

    ``subset`` holds indices into ``values`` and must cover more than half of
    them. For such subsets the answer is always True; the function exists so
    that this can be exercised.
    """
    vals = np.asarray(values, dtype=float)
    idx = sorted(set(int(i) for i in subset))
    if 2 * len(idx) <= vals.size:
        raise InputError(
            f"subset must contain more than half of the {vals.size} values, got {len(idx)}"
        )
    if idx[0] < 0 or idx[-1] >= vals.size:
        raise InputError("subset indices out of range")
    med = float(np.median(vals))
    chosen = vals[idx]
    return bool(chosen.min() <= med <= chosen.max())


def empirical_exponent(points) -> ExponentFit:
    """Least-squares slope of ``-log2(error)`` against ``n``.

    ``points`` is a sequence of ``(n, error_probability)`` pairs with strictly
    increasing ``n`` and probabilities in ``(0, 1]``. A zero probability cannot
    be placed on a log scale and is rejected.
    """
    pts = [(float(n), float(p)) for n, p in points]
    if len(pts) < 2:
        raise InputError("need at least two points")
    ns = np.array([n for n, _ in pts])
    ps = np.array([p for _, p in pts])
    if np.any(np.diff(ns) <= 0):
        raise InputError("n must be strictly increasing")
    if np.any(ps <= 0) or np.any(ps > 1):
        raise InputError("error probabilities must lie in (0, 1]; rerun with more trials")
    y = -np.log2(ps)
    A = np.column_stack([ns, np.ones_like(ns)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.linalg.norm(y - A @ coef))
    slope = float(coef[0])
    # an exact zero slope should not come back as -0.0 or 1e-17
    if abs(slope) < 1e-15:
        slope = 0.0
    return ExponentFit(slope, resid)
