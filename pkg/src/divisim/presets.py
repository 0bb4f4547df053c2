"""Built-in example model: a heavy Pareto marginal and a log-normal marginal,
each replaced by a parametrically divisible approximant, coupled through a
shared middle factor so that the 80% piece of the first marginal is
comonotone with the 20% piece of the second.

Two variants ship as bundled fixture fits (single Gamma vs 20-atom Gamma
convolution, both fitted to one million draws); ``paper-4b`` is the
convolution variant.  The original Pareto(3/4) and log-normal(0, 2)
marginals ride along as reinjection targets.
"""

import json
from importlib import resources

from .distributions import LogNormal, Pareto, from_record
from .errors import RecordError
from .riskfactor import RiskFactorModel, build_model

__all__ = ["PRESET_NAMES", "preset_model"]

_BETA = [[0.2, 0.8, 0.0], [0.0, 0.2, 0.8]]
_TRUE_MARGINALS = (Pareto(0.75), LogNormal(0.0, 2.0))

_FIXTURES = {
    "gamma": ("pareto34_gamma.json", "lognormal02_gamma.json"),
    "ggc": ("pareto34_ggc20.json", "lognormal02_ggc20.json"),
}

PRESET_NAMES = ("paper-4b", "paper-4b-ggc", "paper-4b-gamma")


def fixture_fit(name):
    """Load one bundled fit report record and return its fitted distribution."""
    path = resources.files("divisim") / "fixtures" / name
    try:
        record = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise RecordError(f"bundled fixture {name} is missing") from exc
    return from_record(record["fitted"])


def preset_model(name) -> RiskFactorModel:
    """Return a built-in model by name (see ``PRESET_NAMES``)."""
    if name == "paper-4b":
        name = "paper-4b-ggc"
    if name == "paper-4b-ggc":
        files = _FIXTURES["ggc"]
    elif name == "paper-4b-gamma":
        files = _FIXTURES["gamma"]
    else:
        raise RecordError(
            f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}"
        )
    marginals = tuple(fixture_fit(f) for f in files)
    return build_model(marginals, _BETA, _TRUE_MARGINALS)
