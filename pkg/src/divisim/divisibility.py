"""Exact piece extraction.

The beta-piece of X is the distribution whose log-Laplace transform is
beta times that of X.  For the families below the piece stays in the family
with rescaled parameters, so dividing costs nothing and introduces no error.
Pareto and log-normal have no such parametric pieces; approximate them first
(see :mod:`divisim.fitting`).
"""

import math

import numpy as np

from .distributions import (
    CompoundPoisson,
    DegenerateZero,
    Gamma,
    GammaConvolution,
    Gaussian,
    NegativeBinomial,
    Poisson,
)
from .errors import DomainError, NotParametricallyDivisible

__all__ = ["is_parametrically_divisible", "piece", "partition"]

_DIVISIBLE = (
    Gamma,
    Gaussian,
    Poisson,
    CompoundPoisson,
    NegativeBinomial,
    GammaConvolution,
    DegenerateZero,
)


def is_parametrically_divisible(dist) -> bool:
    """True when pieces of ``dist`` stay in a known parametric family."""
    return isinstance(dist, _DIVISIBLE)


def piece(dist, beta):
    """Return the beta-piece of ``dist`` for beta in [0, 1].

    Gamma(a, s) -> Gamma(beta a, s); Gaussian(m, v) -> Gaussian(beta m,
    beta v); Poisson(r) -> Poisson(beta r); a compound Poisson thins its
    rate and keeps the severity object; a negative binomial scales its size;
    a Gamma convolution scales every atom shape.  beta = 0 collapses to the
    point mass at zero and beta = 1 returns ``dist`` itself.
    """
    b = float(beta)
    if math.isnan(b) or not 0.0 <= b <= 1.0:
        raise DomainError(f"piece weight must lie in [0, 1], got {beta!r}")
    if not is_parametrically_divisible(dist):
        raise NotParametricallyDivisible(
            f"{dist.family} has no parametric pieces; fit an approximant first"
        )
    if b == 0.0:
        return DegenerateZero()
    if b == 1.0:
        return dist
    if isinstance(dist, Gamma):
        return Gamma(b * dist.shape, dist.scale)
    if isinstance(dist, Gaussian):
        return Gaussian(b * dist.mean, b * dist.variance)
    if isinstance(dist, Poisson):
        return Poisson(b * dist.rate)
    if isinstance(dist, CompoundPoisson):
        return CompoundPoisson(b * dist.rate, dist.severity)
    if isinstance(dist, NegativeBinomial):
        return NegativeBinomial(b * dist.size, dist.prob)
    if isinstance(dist, GammaConvolution):
        return GammaConvolution(tuple((b * a, s) for a, s in dist.atoms))
    return DegenerateZero()


def partition(dist, weights):
    """Split ``dist`` into one piece per weight.

    Weights may be unequal but must each lie in [0, 1] and sum to one
    (within 1e-12).  The pieces' transforms add back to the transform of
    ``dist`` at every t.
    """
    w = np.asarray(weights, dtype=float).ravel()
    if w.size == 0:
        raise DomainError("partition needs at least one weight")
    if np.any(np.isnan(w)) or np.any((w < 0) | (w > 1)):
        raise DomainError("partition weights must lie in [0, 1]")
    total = float(w.sum())
    if abs(total - 1.0) > 1e-12:
        raise DomainError(f"partition weights sum to {total!r}, expected 1")
    return [piece(dist, float(b)) for b in w]
