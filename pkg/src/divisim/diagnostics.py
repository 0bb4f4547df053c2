"""Statistical comparison utilities: QQ tables, kernel density estimates,
pseudo-observations, the two-sample Kolmogorov-Smirnov statistic and
Kendall's tau.  Everything returns data (arrays/CSV), never plots.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSample,
    DomainError,
    EmptySample,
    LengthMismatch,
)
from .riskfactor import SampleMatrix, _ranks

__all__ = [
    "QqTable",
    "KdeCurve",
    "qq_against_analytic",
    "kde",
    "pseudo_observations",
    "ks_statistic",
    "kendall_tau",
]


@dataclass(frozen=True, eq=False)
class QqTable:
    """Rows of (probability level, empirical quantile, model quantile)."""

    levels: np.ndarray
    empirical: np.ndarray
    model: np.ndarray

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=float)
        emp = np.asarray(self.empirical, dtype=float)
        mod = np.asarray(self.model, dtype=float)
        if not (levels.size == emp.size == mod.size):
            raise LengthMismatch("QQ columns differ in length")
        if np.any(np.diff(levels) <= 0):
            raise DomainError("QQ levels must be strictly increasing")
        if np.any(np.diff(emp) < 0) or np.any(np.diff(mod) < 0):
            raise DomainError("QQ quantile columns must be non-decreasing")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "empirical", emp)
        object.__setattr__(self, "model", mod)

    def write_csv(self, handle):
        handle.write("p,q_empirical,q_model\n")
        for p, qa, qb in zip(self.levels, self.empirical, self.model):
            handle.write(f"{p!r},{qa!r},{qb!r}\n")


def qq_against_analytic(sample, dist, levels) -> QqTable:
    """Empirical quantiles of ``sample`` against analytic quantiles of ``dist``.

    Empirical quantiles interpolate linearly between order statistics at
    positions p(N+1); levels must lie strictly inside (0, 1).
    """
    x = np.asarray(sample, dtype=float).ravel()
    if x.size == 0:
        raise EmptySample("sample contains no values")
    p = np.asarray(levels, dtype=float).ravel()
    if p.size == 0 or np.any(np.isnan(p)) or np.any((p <= 0) | (p >= 1)):
        raise DomainError("levels must lie strictly inside (0, 1)")
    empirical = np.quantile(x, p, method="weibull")
    model = np.asarray(dist.quantile(p), dtype=float)
    return QqTable(p, empirical, model)


@dataclass(frozen=True, eq=False)
class KdeCurve:
    """Density estimate on a grid, with the bandwidth that produced it."""

    x: np.ndarray
    density: np.ndarray
    bandwidth: float

    def __post_init__(self):
        grid = np.asarray(self.x, dtype=float)
        dens = np.asarray(self.density, dtype=float)
        if grid.size != dens.size:
            raise LengthMismatch("KDE columns differ in length")
        if np.any(np.diff(grid) <= 0):
            raise DomainError("KDE grid must be strictly increasing")
        if np.any(dens < 0):
            raise DomainError("density estimates must be nonnegative")
        object.__setattr__(self, "x", grid)
        object.__setattr__(self, "density", dens)
        object.__setattr__(self, "bandwidth", float(self.bandwidth))

    def write_csv(self, handle):
        handle.write("x,density\n")
        for xv, dv in zip(self.x, self.density):
            handle.write(f"{xv!r},{dv!r}\n")


def _silverman_bandwidth(x):
    sd = float(np.std(x, ddof=1))
    q25, q75 = np.quantile(x, [0.25, 0.75])
    spread = min(sd, (q75 - q25) / 1.34)
    return 0.9 * spread * x.size ** (-0.2)


def kde(sample, grid=None, bandwidth=None) -> KdeCurve:
    """Gaussian-kernel density estimate.

    Default bandwidth is Silverman's rule 0.9 min(sd, IQR/1.34) N^(-1/5);
    the default grid spans the sample range plus five bandwidths on each
    side (512 points), over which the estimate integrates to ~1.
    """
    x = np.asarray(sample, dtype=float).ravel()
    if x.size < 2:
        raise DegenerateSample("kde needs at least two observations")
    if bandwidth is None:
        h = _silverman_bandwidth(x)
        if h <= 0.0:
            raise DegenerateSample("sample has no spread; bandwidth is zero")
    else:
        h = float(bandwidth)
        if not h > 0.0:
            raise DomainError("bandwidth must be positive")
    if grid is None:
        grid = np.linspace(x.min() - 5.0 * h, x.max() + 5.0 * h, 512)
    else:
        grid = np.asarray(grid, dtype=float).ravel()
    out = np.empty(grid.size)
    norm = x.size * h * math.sqrt(2.0 * math.pi)
    step = max(1, int(2**22 // max(x.size, 1)))
    for start in range(0, grid.size, step):
        block = grid[start : start + step, None]
        z = (block - x[None, :]) / h
        out[start : start + step] = np.exp(-0.5 * z * z).sum(axis=1) / norm
    return KdeCurve(grid, out, h)


def pseudo_observations(samples: SampleMatrix) -> SampleMatrix:
    """Column-wise ranks divided by N+1: the sample on the copula scale."""
    n = samples.n_rows
    if n < 1:
        raise EmptySample("pseudo-observations need at least one row")
    values = np.empty_like(samples.values)
    for j in range(samples.n_cols):
        values[:, j] = (_ranks(samples.values[:, j]) + 1) / (n + 1)
    return SampleMatrix(values, samples.column_names)


def ks_statistic(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|."""
    xa = np.sort(np.asarray(a, dtype=float).ravel())
    xb = np.sort(np.asarray(b, dtype=float).ravel())
    if xa.size == 0 or xb.size == 0:
        raise EmptySample("ks statistic needs two non-empty samples")
    pooled = np.concatenate([xa, xb])
    fa = np.searchsorted(xa, pooled, side="right") / xa.size
    fb = np.searchsorted(xb, pooled, side="right") / xb.size
    return float(np.max(np.abs(fa - fb)))


def _strict_inversions(values) -> int:
    """Pairs i < j with values[i] > values[j], by bottom-up merge counting.

    The array is padded with +inf to a power of two; padding sits in a
    suffix, so a left block can only contain inf when the right block is all
    inf, and no spurious inversions arise.
    """
    n = values.size
    if n < 2:
        return 0
    size = 1 << (n - 1).bit_length()
    buf = np.full(size, np.inf)
    buf[:n] = values
    total = 0
    width = 1
    while width < size:
        blocks = buf.reshape(size // (2 * width), 2 * width)
        left = blocks[:, :width]
        right = blocks[:, width:]
        if width <= 64:
            total += int(np.count_nonzero(left[:, :, None] > right[:, None, :]))
        else:
            for row in range(blocks.shape[0]):
                total += int(
                    np.sum(width - np.searchsorted(left[row], right[row], side="right"))
                )
        buf = np.sort(blocks, axis=1).reshape(size)
        width *= 2
    return total


def _tie_term(change_mask, n) -> int:
    """sum t(t-1)/2 over runs of equal adjacent values (given a change mask)."""
    idx = np.flatnonzero(change_mask)
    lengths = np.diff(np.concatenate(([0], idx + 1, [n])))
    return int(sum(int(t) * (int(t) - 1) // 2 for t in lengths))


def kendall_tau(a, b) -> float:
    """Tie-adjusted Kendall's tau-b, via O(N log N) merge-sort counting.

    Integer pair counts make the result exactly +/-1 for perfectly
    (counter)monotone inputs.
    """
    xa = np.asarray(a, dtype=float).ravel()
    xb = np.asarray(b, dtype=float).ravel()
    if xa.size != xb.size:
        raise LengthMismatch(f"length mismatch: {xa.size} vs {xb.size}")
    if xa.size < 2:
        raise LengthMismatch("kendall tau needs at least two pairs")
    if np.any(np.isnan(xa)) or np.any(np.isnan(xb)):
        raise DomainError("kendall tau is undefined for NaN values")
    n = xa.size
    order = np.lexsort((xb, xa))
    a_s, b_s = xa[order], xb[order]

    n0 = n * (n - 1) // 2
    n1 = _tie_term(np.diff(a_s) != 0, n)
    n2 = _tie_term(np.diff(np.sort(xb)) != 0, n)
    n3 = _tie_term((np.diff(a_s) != 0) | (np.diff(b_s) != 0), n)
    # b is ascending within each a-tie group after the lexsort, so strict
    # inversions of b are exactly the discordant pairs.
    discordant = _strict_inversions(b_s)
    num = n0 - n1 - n2 + n3 - 2 * discordant
    d1, d2 = n0 - n1, n0 - n2
    if d1 == 0 or d2 == 0:
        return math.nan
    if num * num == d1 * d2:
        return 1.0 if num > 0 else -1.0
    return num / math.sqrt(d1) / math.sqrt(d2)
