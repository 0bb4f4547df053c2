"""Parametric families for loss modeling: transforms, densities, quantiles,
sampling and serialization.

Every distribution is an immutable value object, safe to share across
threads; sampling mutates only the caller-supplied ``numpy.random.Generator``.

The workhorse operation is the log-Laplace transform

    psi(t) = ln E[exp(-t X)],   t >= 0,

which exists for every positive-support family (and for the Gaussian at any
t).  Piece extraction and convolution fitting in the sibling modules speak
exclusively in terms of ``psi``.

Records
-------
Distributions serialize to flat JSON-able dicts carrying a ``family`` tag,
e.g. ``{"family": "gamma", "shape": 2.0, "scale": 3.0}``.  A Gamma
convolution serializes as ``{"family": "ggc", "atoms": [[a1, s1], ...]}``
and a compound Poisson nests its severity record.  Unknown or missing fields
are rejected.
"""

import math
import operator
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import (
    DomainError,
    RecordError,
    UnsupportedCdf,
    UnsupportedDensity,
    UnsupportedQuantile,
)

__all__ = [
    "Distribution",
    "DegenerateZero",
    "Gamma",
    "Gaussian",
    "Poisson",
    "CompoundPoisson",
    "NegativeBinomial",
    "Pareto",
    "LogNormal",
    "GammaConvolution",
    "canonical_atoms",
    "from_record",
    "supports_quantile",
]

_SQRT2PI = math.sqrt(2.0 * math.pi)

# Adaptive quadrature settings for transforms without a closed form.  The
# infinite domain is mapped to (0, 1) via x = u / (1 - u) before integrating.
_QUAD_OPTS = {"epsabs": 1e-15, "epsrel": 1e-12, "limit": 200}


def _as_array(value):
    arr = np.asarray(value, dtype=float)
    return arr, arr.ndim == 0


def _ret(arr, scalar):
    return float(arr) if scalar else arr


def _check_t(t):
    arr, scalar = _as_array(t)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainError("transform argument t must be >= 0")
    return arr, scalar


def _check_p(p):
    arr, scalar = _as_array(p)
    if np.any(np.isnan(arr)) or np.any((arr < 0) | (arr > 1)):
        raise DomainError("probability level must lie in [0, 1]")
    return arr, scalar


def _check_n(n):
    count = operator.index(n)
    if count < 0:
        raise DomainError("sample size must be >= 0")
    return count


def _positive(value, name):
    v = float(value)
    if math.isnan(v) or math.isinf(v) or v <= 0.0:
        raise DomainError(f"{name} must be a positive finite real, got {value!r}")
    return v


def _finite(value, name):
    v = float(value)
    if math.isnan(v) or math.isinf(v):
        raise DomainError(f"{name} must be a finite real, got {value!r}")
    return v


class Distribution:
    """Common interface; concrete families override what they support."""

    family = "?"

    def log_laplace(self, t):
        """ln E[exp(-t X)] at t >= 0 (scalar or array)."""
        raise NotImplementedError

    def density(self, x):
        raise UnsupportedDensity(f"{self.family}: density not available")

    def quantile(self, p):
        raise UnsupportedQuantile(f"{self.family}: quantile not available")

    def cdf(self, x):
        raise UnsupportedCdf(f"{self.family}: cdf not available")

    def sample(self, rng, n):
        """Draw ``n`` i.i.d. values using the supplied numpy Generator."""
        raise NotImplementedError

    def to_record(self):
        raise NotImplementedError


@dataclass(frozen=True)
class DegenerateZero(Distribution):
    """Point mass at zero: the piece of weight zero of anything."""

    family = "zero"

    def log_laplace(self, t):
        arr, scalar = _check_t(t)
        return _ret(np.zeros_like(arr), scalar)

    def quantile(self, p):
        arr, scalar = _check_p(p)
        return _ret(np.zeros_like(arr), scalar)

    def cdf(self, x):
        arr, scalar = _as_array(x)
        return _ret((arr >= 0).astype(float), scalar)

    def sample(self, rng, n):
        return np.zeros(_check_n(n))

    def to_record(self):
        return {"family": "zero"}


@dataclass(frozen=True)
class Gamma(Distribution):
    """Gamma distribution with density x^(shape-1) exp(-x/scale) / (Gamma(shape) scale^shape).

    Mean shape*scale, variance shape*scale^2.  The shape may be arbitrarily
    small (repeated piece extraction drives it toward zero); sampling stays
    valid there.
    """

    shape: float
    scale: float
    family = "gamma"

    def __post_init__(self):
        object.__setattr__(self, "shape", _positive(self.shape, "shape"))
        object.__setattr__(self, "scale", _positive(self.scale, "scale"))

    def log_laplace(self, t):
        arr, scalar = _check_t(t)
        return _ret(-self.shape * np.log1p(self.scale * arr), scalar)

    def density(self, x):
        arr, scalar = _as_array(x)
        a, s = self.shape, self.scale
        out = np.zeros_like(arr)
        pos = arr > 0
        with np.errstate(divide="ignore"):
            out[pos] = np.exp(
                (a - 1.0) * np.log(arr[pos])
                - arr[pos] / s
                - special.gammaln(a)
                - a * math.log(s)
            )
        at_zero = arr == 0
        if a < 1.0:
            out[at_zero] = np.inf
        elif a == 1.0:
            out[at_zero] = 1.0 / s
        return _ret(out, scalar)

    def quantile(self, p):
        arr, scalar = _check_p(p)
        return _ret(special.gammaincinv(self.shape, arr) * self.scale, scalar)

    def cdf(self, x):
        arr, scalar = _as_array(x)
        out = np.zeros_like(arr)
        pos = arr > 0
        out[pos] = special.gammainc(self.shape, arr[pos] / self.scale)
        return _ret(out, scalar)

    def sample(self, rng, n):
        return rng.gamma(self.shape, self.scale, _check_n(n))

    def to_record(self):
        return {"family": "gamma", "shape": self.shape, "scale": self.scale}


@dataclass(frozen=True)
class Gaussian(Distribution):
    """Gaussian with the given mean and variance."""

    mean: float
    variance: float
    family = "gaussian"

    def __post_init__(self):
        object.__setattr__(self, "mean", _finite(self.mean, "mean"))
        object.__setattr__(self, "variance", _positive(self.variance, "variance"))

    def log_laplace(self, t):
        # E exp(-tX) exists for all real t.
        arr, scalar = _check_t(t)
        return _ret(-self.mean * arr + 0.5 * self.variance * arr * arr, scalar)

    def density(self, x):
        arr, scalar = _as_array(x)
        sd = math.sqrt(self.variance)
        z = (arr - self.mean) / sd
        return _ret(np.exp(-0.5 * z * z) / (sd * _SQRT2PI), scalar)

    def quantile(self, p):
        arr, scalar = _check_p(p)
        return _ret(self.mean + math.sqrt(self.variance) * special.ndtri(arr), scalar)

    def cdf(self, x):
        arr, scalar = _as_array(x)
        return _ret(special.ndtr((arr - self.mean) / math.sqrt(self.variance)), scalar)

    def sample(self, rng, n):
        return rng.normal(self.mean, math.sqrt(self.variance), _check_n(n))

    def to_record(self):
        return {"family": "gaussian", "mean": self.mean, "variance": self.variance}


@dataclass(frozen=True)
class Poisson(Distribution):
    """Poisson counting distribution with the given rate."""

    rate: float
    family = "poisson"

    def __post_init__(self):
        object.__setattr__(self, "rate", _positive(self.rate, "rate"))

    def log_laplace(self, t):
        arr, scalar = _check_t(t)
        return _ret(self.rate * np.expm1(-arr), scalar)

    def cdf(self, x):
        arr, scalar = _as_array(x)
        out = np.zeros_like(arr)
        ok = arr >= 0
        out[ok] = special.gammaincc(np.floor(arr[ok]) + 1.0, self.rate)
        return _ret(out, scalar)

    def sample(self, rng, n):
        return rng.poisson(self.rate, _check_n(n)).astype(float)

    def to_record(self):
        return {"family": "poisson", "rate": self.rate}


@dataclass(frozen=True)
class CompoundPoisson(Distribution):
    """Sum of a Poisson(rate) number of i.i.d. severity draws."""

    rate: float
    severity: Distribution
    family = "compound_poisson"

    def __post_init__(self):
        object.__setattr__(self, "rate", _positive(self.rate, "rate"))
        if not isinstance(self.severity, Distribution):
            raise DomainError("severity must be a Distribution")

    def log_laplace(self, t):
        # rate * (E exp(-tY) - 1), with the severity transform taken recursively.
        arr, scalar = _check_t(t)
        inner = np.asarray(self.severity.log_laplace(arr))
        return _ret(self.rate * np.expm1(inner), scalar)

    def cdf(self, x):
        raise UnsupportedCdf("compound_poisson: cdf not available")

    def sample(self, rng, n):
        n = _check_n(n)
        counts = rng.poisson(self.rate, n)
        total = int(counts.sum())
        if total == 0:
            return np.zeros(n)
        jumps = np.asarray(self.severity.sample(rng, total), dtype=float)
        idx = np.repeat(np.arange(n), counts)
        return np.bincount(idx, weights=jumps, minlength=n)

    def to_record(self):
        return {
            "family": "compound_poisson",
            "rate": self.rate,
            "severity": self.severity.to_record(),
        }


@dataclass(frozen=True)
class NegativeBinomial(Distribution):
    """Negative binomial: failures before the size-th success, P(success) = prob.

    Real-valued ``size`` is allowed; a geometric distribution is size = 1.
    """

    size: float
    prob: float
    family = "negative_binomial"

    def __post_init__(self):
        object.__setattr__(self, "size", _positive(self.size, "size"))
        p = _finite(self.prob, "prob")
        if not 0.0 < p < 1.0:
            raise DomainError(f"prob must lie in (0, 1), got {p!r}")
        object.__setattr__(self, "prob", p)

    def log_laplace(self, t):
        arr, scalar = _check_t(t)
        # -size * ln(1 + (1-p)/p * (1 - exp(-t))); exactly 0 at t = 0.
        ratio = (1.0 - self.prob) / self.prob
        return _ret(-self.size * np.log1p(-ratio * np.expm1(-arr)), scalar)

    def cdf(self, x):
        arr, scalar = _as_array(x)
        out = np.zeros_like(arr)
        ok = arr >= 0
        out[ok] = special.betainc(self.size, np.floor(arr[ok]) + 1.0, self.prob)
        return _ret(out, scalar)

    def sample(self, rng, n):
        return rng.negative_binomial(self.size, self.prob, _check_n(n)).astype(float)

    def to_record(self):
        return {"family": "negative_binomial", "size": self.size, "prob": self.prob}


@dataclass(frozen=True)
class Pareto(Distribution):
    """Pareto on the positive half-line with density shape * (x+1)^(-shape-1).

    The tail is heavy: the mean is finite only for shape > 1 and the variance
    only for shape > 2.  The transform has no closed form and is computed by
    adaptive quadrature.
    """

    shape: float
    family = "pareto"

    def __post_init__(self):
        object.__setattr__(self, "shape", _positive(self.shape, "shape"))

    def log_laplace(self, t):
        arr, scalar = _check_t(t)
        a = self.shape

        def transform(tv):
            if tv == 0.0:
                return 0.0

            def integrand(u):
                w = 1.0 - u
                if w <= 0.0:
                    return 0.0
                # exp(-t x) f(x) dx/du with x = u/w collapses to a exp(.) w^(a-1)
                return a * math.exp(-tv * u / w + (a - 1.0) * math.log(w))

            val, _ = integrate.quad(integrand, 0.0, 1.0, **_QUAD_OPTS)
            return math.log(val)

        out = np.array([transform(tv) for tv in np.atleast_1d(arr)])
        return _ret(out[0] if scalar else out, scalar)

    def density(self, x):
        arr, scalar = _as_array(x)
        out = np.zeros_like(arr)
        ok = arr >= 0
        out[ok] = self.shape * np.power(arr[ok] + 1.0, -self.shape - 1.0)
        return _ret(out, scalar)

    def quantile(self, p):
        arr, scalar = _check_p(p)
        with np.errstate(divide="ignore"):
            out = np.power(1.0 - arr, -1.0 / self.shape) - 1.0
        return _ret(out, scalar)

    def cdf(self, x):
        arr, scalar = _as_array(x)
        out = np.zeros_like(arr)
        ok = arr >= 0
        out[ok] = -np.expm1(-self.shape * np.log1p(arr[ok]))
        return _ret(out, scalar)

    def sample(self, rng, n):
        return rng.pareto(self.shape, _check_n(n))

    def to_record(self):
        return {"family": "pareto", "shape": self.shape}


@dataclass(frozen=True)
class LogNormal(Distribution):
    """Log-normal: ln X is Gaussian with mean log_mean and sd log_sd."""

    log_mean: float
    log_sd: float
    family = "lognormal"

    def __post_init__(self):
        object.__setattr__(self, "log_mean", _finite(self.log_mean, "log_mean"))
        object.__setattr__(self, "log_sd", _positive(self.log_sd, "log_sd"))

    def log_laplace(self, t):
        arr, scalar = _check_t(t)
        mu, sig = self.log_mean, self.log_sd

        def transform(tv):
            if tv == 0.0:
                return 0.0

            def integrand(u):
                w = 1.0 - u
                if w <= 0.0 or u <= 0.0:
                    return 0.0
                x = u / w
                lx = math.log(x)
                z = (lx - mu) / sig
                return math.exp(-tv * x - 0.5 * z * z - lx) / (sig * _SQRT2PI * w * w)

            val, _ = integrate.quad(integrand, 0.0, 1.0, **_QUAD_OPTS)
            return math.log(val)

        out = np.array([transform(tv) for tv in np.atleast_1d(arr)])
        return _ret(out[0] if scalar else out, scalar)

    def density(self, x):
        arr, scalar = _as_array(x)
        out = np.zeros_like(arr)
        pos = arr > 0
        z = (np.log(arr[pos]) - self.log_mean) / self.log_sd
        out[pos] = np.exp(-0.5 * z * z) / (arr[pos] * self.log_sd * _SQRT2PI)
        return _ret(out, scalar)

    def quantile(self, p):
        arr, scalar = _check_p(p)
        return _ret(np.exp(self.log_mean + self.log_sd * special.ndtri(arr)), scalar)

    def cdf(self, x):
        arr, scalar = _as_array(x)
        out = np.zeros_like(arr)
        pos = arr > 0
        out[pos] = special.ndtr((np.log(arr[pos]) - self.log_mean) / self.log_sd)
        return _ret(out, scalar)

    def sample(self, rng, n):
        return rng.lognormal(self.log_mean, self.log_sd, _check_n(n))

    def to_record(self):
        return {"family": "lognormal", "log_mean": self.log_mean, "log_sd": self.log_sd}


def canonical_atoms(atoms):
    """Validate and canonicalize a list of (shape, scale) Gamma atoms.

    Sorted by scale; atoms with equal scale merge by adding shapes, so two
    structurally equal convolutions represent equal distributions.
    """
    cleaned = []
    for atom in atoms:
        pair = tuple(atom)
        if len(pair) != 2:
            raise DomainError(f"atom must be a (shape, scale) pair, got {atom!r}")
        cleaned.append((_positive(pair[0], "atom shape"), _positive(pair[1], "atom scale")))
    cleaned.sort(key=lambda pair: pair[1])
    merged = []
    for a, s in cleaned:
        if merged and merged[-1][1] == s:
            merged[-1][0] += a
        else:
            merged.append([a, s])
    return tuple((a, s) for a, s in merged)


@dataclass(frozen=True)
class GammaConvolution(Distribution):
    """Finite convolution of independent Gamma factors.

    The transform is -sum_i shape_i * ln(1 + scale_i * t), i.e. the atoms act
    like a finitely supported measure on scales.  No closed-form density,
    cdf or quantile exists; quantiles of pieces are obtained empirically by
    the model sampler.  An empty atom list is the point mass at zero.
    """

    atoms: tuple = ()
    family = "ggc"

    def __post_init__(self):
        object.__setattr__(self, "atoms", canonical_atoms(self.atoms))

    def log_laplace(self, t):
        arr, scalar = _check_t(t)
        out = np.zeros_like(arr, dtype=float)
        for a, s in self.atoms:
            out -= a * np.log1p(s * arr)
        return _ret(out, scalar)

    def sample(self, rng, n):
        n = _check_n(n)
        out = np.zeros(n)
        for a, s in self.atoms:
            out += rng.gamma(a, s, n)
        return out

    def to_record(self):
        return {"family": "ggc", "atoms": [[a, s] for a, s in self.atoms]}


def supports_quantile(dist) -> bool:
    """True when ``dist`` has a closed-form (or directly invertible) quantile."""
    return isinstance(dist, (Gamma, Gaussian, Pareto, LogNormal, DegenerateZero))


def _num(record, field):
    value = record[field]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise RecordError(f"field {field!r} must be a number, got {value!r}")
    return float(value)


def _expect_fields(record, wanted):
    got = set(record) - {"family"}
    missing = wanted - got
    unknown = got - wanted
    if missing:
        raise RecordError(f"{record.get('family')}: missing field(s) {sorted(missing)}")
    if unknown:
        raise RecordError(f"{record.get('family')}: unknown field(s) {sorted(unknown)}")


def from_record(record) -> Distribution:
    """Rebuild a distribution from its record; rejects malformed input."""
    if not isinstance(record, dict):
        raise RecordError(f"distribution record must be an object, got {type(record).__name__}")
    if "family" not in record:
        raise RecordError("distribution record is missing 'family'")
    family = record["family"]
    try:
        if family == "zero":
            _expect_fields(record, set())
            return DegenerateZero()
        if family == "gamma":
            _expect_fields(record, {"shape", "scale"})
            return Gamma(_num(record, "shape"), _num(record, "scale"))
        if family == "gaussian":
            _expect_fields(record, {"mean", "variance"})
            return Gaussian(_num(record, "mean"), _num(record, "variance"))
        if family == "poisson":
            _expect_fields(record, {"rate"})
            return Poisson(_num(record, "rate"))
        if family == "compound_poisson":
            _expect_fields(record, {"rate", "severity"})
            return CompoundPoisson(_num(record, "rate"), from_record(record["severity"]))
        if family == "negative_binomial":
            _expect_fields(record, {"size", "prob"})
            return NegativeBinomial(_num(record, "size"), _num(record, "prob"))
        if family == "pareto":
            _expect_fields(record, {"shape"})
            return Pareto(_num(record, "shape"))
        if family == "lognormal":
            _expect_fields(record, {"log_mean", "log_sd"})
            return LogNormal(_num(record, "log_mean"), _num(record, "log_sd"))
        if family == "ggc":
            _expect_fields(record, {"atoms"})
            atoms = record["atoms"]
            if not isinstance(atoms, list):
                raise RecordError("ggc: 'atoms' must be a list of [shape, scale] pairs")
            for atom in atoms:
                if not isinstance(atom, list) or len(atom) != 2:
                    raise RecordError(f"ggc: bad atom {atom!r}")
            return GammaConvolution(tuple((float(a), float(s)) for a, s in atoms))
    except DomainError as exc:
        raise RecordError(f"{family}: {exc}") from exc
    raise RecordError(f"unknown family {family!r}")
