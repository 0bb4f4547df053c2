"""Additive risk factor model and its sampler.

A model couples d marginal distributions through n latent uniform factors:
marginal i receives the beta[i, j]-piece of itself from factor j, and the
pieces of one factor are comonotone because they share that factor's
uniforms.  Row sums of the weight matrix equal one, so each column of a
sampled matrix is distributed as its marginal.

Sampling follows two routes per piece.  Pieces with a closed-form quantile
(Gamma, Gaussian, point mass) plug the shared uniforms into it directly.
Pieces without one (Gamma convolutions, counting and compound families) draw
an auxiliary i.i.d. sample, sort it, and index its order statistics by the
ranks of the shared uniforms -- an empirically comonotone coupling whose
marginal law is exact.

Randomness is derived from an integer master seed by position: factor j
draws from the stream keyed (0, j) and the auxiliary sample of piece (i, j)
from the stream keyed (1, i, j).  Results are therefore reproducible and
independent of evaluation order, and a zero weight consumes no randomness
at all.
"""

import json
import operator
from dataclasses import dataclass

import numpy as np

from .distributions import Distribution, from_record, supports_quantile
from .divisibility import is_parametrically_divisible, piece
from .errors import (
    DimensionMismatch,
    DomainError,
    NotParametricallyDivisible,
    RecordError,
    RowSumViolation,
)

__all__ = [
    "BetaMatrix",
    "RiskFactorModel",
    "SampleMatrix",
    "build_model",
    "sample_model",
    "reinject_marginals",
    "aggregate",
    "model_to_record",
    "model_from_record",
    "load_model",
    "derived_rng",
]

_ROW_SUM_TOL = 1e-12


def derived_rng(seed, key) -> np.random.Generator:
    """Independent generator derived from ``seed`` by an integer key tuple."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


@dataclass(frozen=True, eq=False)
class BetaMatrix:
    """d x n matrix of piece weights; every row sums to one."""

    entries: np.ndarray

    def __post_init__(self):
        try:
            arr = np.array(self.entries, dtype=float)
        except (TypeError, ValueError) as exc:
            raise RecordError(f"beta matrix is not numeric: {exc}") from exc
        if arr.ndim != 2 or arr.size == 0:
            raise DimensionMismatch("beta must be a non-empty 2-d matrix")
        if np.any(np.isnan(arr)) or np.any((arr < 0) | (arr > 1)):
            raise DomainError("beta entries must lie in [0, 1]")
        sums = arr.sum(axis=1)
        for i, total in enumerate(sums):
            if abs(total - 1.0) > _ROW_SUM_TOL:
                raise RowSumViolation(i + 1, float(total))
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)

    @property
    def shape(self):
        return self.entries.shape


@dataclass(frozen=True, eq=False)
class RiskFactorModel:
    """Marginals plus a weight matrix; optional targets for reinjection.

    Every marginal must be parametrically divisible -- heavy-tailed marginals
    enter through a fitted approximant, with the original distribution
    optionally kept in ``reinject`` so sampled ranks can be mapped back onto
    its quantiles.
    """

    marginals: tuple
    beta: BetaMatrix
    reinject: tuple = None

    def __post_init__(self):
        marginals = tuple(self.marginals)
        if not marginals:
            raise DimensionMismatch("model needs at least one marginal")
        for i, dist in enumerate(marginals):
            if not isinstance(dist, Distribution):
                raise DomainError(f"marginal {i + 1} is not a Distribution")
            if not is_parametrically_divisible(dist):
                raise NotParametricallyDivisible(
                    f"marginal {i + 1} ({dist.family}) is not parametrically "
                    "divisible; fit an approximant first"
                )
        if self.beta.shape[0] != len(marginals):
            raise DimensionMismatch(
                f"beta has {self.beta.shape[0]} rows for {len(marginals)} marginals"
            )
        reinject = self.reinject
        if reinject is not None:
            reinject = tuple(reinject)
            if len(reinject) != len(marginals):
                raise DimensionMismatch(
                    f"{len(reinject)} reinjection targets for {len(marginals)} marginals"
                )
            for tgt in reinject:
                if tgt is not None and not isinstance(tgt, Distribution):
                    raise DomainError("reinjection targets must be Distributions or None")
        object.__setattr__(self, "marginals", marginals)
        object.__setattr__(self, "reinject", reinject)

    @property
    def n_marginals(self):
        return len(self.marginals)

    @property
    def n_factors(self):
        return self.beta.shape[1]


def build_model(marginals, beta, reinject=None) -> RiskFactorModel:
    """Validate and assemble a model from raw pieces."""
    matrix = beta if isinstance(beta, BetaMatrix) else BetaMatrix(beta)
    return RiskFactorModel(tuple(marginals), matrix, reinject)


@dataclass(frozen=True, eq=False)
class SampleMatrix:
    """N x d matrix of simulated scenarios with column labels."""

    values: np.ndarray
    column_names: tuple

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 2:
            raise DimensionMismatch("sample matrix must be 2-d")
        if np.any(np.isnan(arr)):
            raise DomainError("sample matrix contains NaN")
        names = tuple(str(c) for c in self.column_names)
        if len(names) != arr.shape[1]:
            raise DimensionMismatch(
                f"{len(names)} column names for {arr.shape[1]} columns"
            )
        arr = arr.copy() if arr.flags.writeable else arr
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "column_names", names)

    @property
    def n_rows(self):
        return self.values.shape[0]

    @property
    def n_cols(self):
        return self.values.shape[1]

    def write_csv(self, handle):
        handle.write(",".join(self.column_names) + "\n")
        for row in self.values:
            handle.write(",".join(str(v) for v in row) + "\n")


def _open_uniforms(rng, n):
    # Uniforms strictly inside (0, 1): boundary draws are redrawn.
    u = rng.random(n)
    bad = (u <= 0.0) | (u >= 1.0)
    while np.any(bad):
        u[bad] = rng.random(int(bad.sum()))
        bad = (u <= 0.0) | (u >= 1.0)
    return u


def _ranks(values):
    order = np.argsort(values, kind="stable")
    out = np.empty(values.size, dtype=np.intp)
    out[order] = np.arange(values.size)
    return out


def sample_model(model: RiskFactorModel, n, seed, *, return_pieces=False):
    """Draw ``n`` scenarios from the model.

    For each factor one block of uniforms is drawn and shared by every piece
    of that factor, which is what makes those pieces comonotone.  With
    ``return_pieces`` the per-piece contributions are also returned, keyed by
    (marginal index, factor index).
    """
    count = operator.index(n)
    if count < 0:
        raise DomainError("sample size must be >= 0")
    seed = operator.index(seed)
    d, factors = model.beta.shape
    weights = model.beta.entries
    values = np.zeros((count, d))
    pieces = {}
    for j in range(factors):
        if not np.any(weights[:, j] > 0.0):
            continue
        uniforms = _open_uniforms(derived_rng(seed, (0, j)), count)
        ranks = None
        for i in range(d):
            w = float(weights[i, j])
            if w == 0.0:
                continue
            part = piece(model.marginals[i], w)
            if supports_quantile(part):
                contrib = np.asarray(part.quantile(uniforms), dtype=float)
            else:
                aux = np.sort(part.sample(derived_rng(seed, (1, i, j)), count))
                if ranks is None:
                    ranks = _ranks(uniforms)
                contrib = aux[ranks]
            values[:, i] += contrib
            if return_pieces:
                pieces[(i, j)] = contrib
    matrix = SampleMatrix(values, tuple(f"x{i + 1}" for i in range(d)))
    return (matrix, pieces) if return_pieces else matrix


def reinject_marginals(samples: SampleMatrix, targets) -> SampleMatrix:
    """Replace each targeted column by its target's quantiles at the column's ranks.

    The value of rank k (1-based, stable ties) becomes quantile(target,
    k/(N+1)); columns whose target is None pass through unchanged.  Ranks --
    and hence pseudo-observations -- are preserved exactly.
    """
    targets = tuple(targets)
    if len(targets) != samples.n_cols:
        raise DimensionMismatch(
            f"{len(targets)} reinjection targets for {samples.n_cols} columns"
        )
    if all(t is None for t in targets):
        return samples
    values = samples.values.copy()
    n = samples.n_rows
    levels = np.arange(1, n + 1) / (n + 1)
    for idx, target in enumerate(targets):
        if target is None:
            continue
        quantiles = np.asarray(target.quantile(levels), dtype=float)
        values[:, idx] = quantiles[_ranks(samples.values[:, idx])]
    return SampleMatrix(values, samples.column_names)


def aggregate(samples: SampleMatrix) -> np.ndarray:
    """Total loss per scenario: row sums of the sample matrix."""
    return samples.values.sum(axis=1)


def model_to_record(model: RiskFactorModel) -> dict:
    record = {
        "marginals": [m.to_record() for m in model.marginals],
        "beta": [[float(v) for v in row] for row in model.beta.entries],
    }
    if model.reinject is not None:
        record["reinject"] = [
            None if t is None else t.to_record() for t in model.reinject
        ]
    return record


def model_from_record(record) -> RiskFactorModel:
    """Rebuild a model from its record; unknown fields are rejected."""
    if not isinstance(record, dict):
        raise RecordError("model record must be an object")
    unknown = set(record) - {"marginals", "beta", "reinject"}
    if unknown:
        raise RecordError(f"model record has unknown field(s) {sorted(unknown)}")
    if "marginals" not in record or "beta" not in record:
        raise RecordError("model record needs 'marginals' and 'beta'")
    if not isinstance(record["marginals"], list):
        raise RecordError("'marginals' must be a list of distribution records")
    marginals = tuple(from_record(r) for r in record["marginals"])
    reinject = None
    if record.get("reinject") is not None:
        if not isinstance(record["reinject"], list):
            raise RecordError("'reinject' must be a list of records or nulls")
        reinject = tuple(
            None if r is None else from_record(r) for r in record["reinject"]
        )
    return build_model(marginals, record["beta"], reinject)


def load_model(path) -> RiskFactorModel:
    with open(path) as handle:
        try:
            record = json.load(handle)
        except json.JSONDecodeError as exc:
            raise RecordError(f"{path}: not valid JSON: {exc}") from exc
    return model_from_record(record)
