"""Command-line interface.

Subcommands: ``fit`` (project a CSV sample onto a divisible family),
``divide`` (compute pieces of a distribution record), ``sample`` (draw from
a risk factor model file or preset), ``reproduce`` (rebuild the comparison
figures as CSV data) and ``validate`` (check a model file and print its
normalized form).

Exit codes: 0 success, 1 input/validation error, 2 unsupported operation,
3 fit did not converge (the report is still written).  The environment
variable ``DIVISIM_SEED`` supplies a default seed.
"""

import argparse
import json
import os
import sys
from pathlib import Path

from . import figures
from .distributions import from_record
from .divisibility import partition, piece
from .errors import (
    DivisimError,
    DomainError,
    NotParametricallyDivisible,
    RecordError,
    UnsupportedCdf,
    UnsupportedDensity,
    UnsupportedQuantile,
    UnsupportedTransform,
)
from .fitting import (
    estimate_shifted_moments,
    fit_gamma_convolution,
    fit_gamma_mle,
    fit_gamma_shifted_moments,
    read_sample_csv,
)
from .presets import PRESET_NAMES, preset_model
from .riskfactor import load_model, model_to_record, reinject_marginals, sample_model

_UNSUPPORTED = (
    NotParametricallyDivisible,
    UnsupportedTransform,
    UnsupportedDensity,
    UnsupportedQuantile,
    UnsupportedCdf,
)

_FAMILIES = ("gamma-mle", "gamma-shifted", "ggc")


def _resolve_seed(value):
    if value is not None:
        return value
    env = os.environ.get("DIVISIM_SEED", "").strip()
    if env:
        try:
            return int(env)
        except ValueError:
            raise DomainError(f"DIVISIM_SEED must be an integer, got {env!r}") from None
    return 0


def _emit(text, out_path):
    """Write text to a file atomically, or to stdout when no path is given."""
    if out_path is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
        return
    path = Path(out_path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as handle:
        handle.write(text)
    os.replace(tmp, path)


def _load_distribution_arg(value):
    text = value.strip()
    if not text.startswith("{"):
        with open(text) as handle:
            text = handle.read()
    try:
        record = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RecordError(f"not valid JSON: {exc}") from exc
    return from_record(record)


def _load_model_arg(value):
    if os.path.exists(value):
        return load_model(value)
    if value in PRESET_NAMES:
        return preset_model(value)
    raise RecordError(
        f"{value!r} is neither a model file nor a preset ({', '.join(PRESET_NAMES)})"
    )


def _cmd_fit(args):
    sample = read_sample_csv(args.input)
    family = args.family
    if family == "gamma-mle":
        report = fit_gamma_mle(sample)
    elif family == "gamma-shifted":
        report = fit_gamma_shifted_moments(estimate_shifted_moments(sample))
    elif family == "ggc":
        report = fit_gamma_convolution(sample, args.atoms, seed=_resolve_seed(args.seed))
    else:
        raise DomainError(f"unknown family {family!r}; expected one of {_FAMILIES}")
    _emit(json.dumps(report.to_record(), indent=2), args.out)
    return 0 if report.converged else 3


def _cmd_divide(args):
    dist = _load_distribution_arg(args.dist)
    betas = [float(tok) for tok in args.beta.split(",") if tok.strip()]
    if not betas:
        raise DomainError("--beta needs at least one weight")
    if len(betas) == 1:
        record = piece(dist, betas[0]).to_record()
    else:
        record = [p.to_record() for p in partition(dist, betas)]
    _emit(json.dumps(record, indent=2), args.out)
    return 0


def _cmd_sample(args):
    model = _load_model_arg(args.model)
    samples = sample_model(model, args.n, _resolve_seed(args.seed))
    if args.reinject:
        if model.reinject is None:
            raise DomainError("model file carries no reinjection targets")
        samples = reinject_marginals(samples, model.reinject)
    lines = [",".join(samples.column_names)]
    lines += [",".join(repr(v) for v in row) for row in samples.values]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_validate(args):
    model = _load_model_arg(args.model)
    print(json.dumps(model_to_record(model), indent=2))
    return 0


def _cmd_reproduce(args):
    written = figures.reproduce(
        args.figure,
        _resolve_seed(args.seed),
        args.out,
        budget=args.budget,
        refit=args.refit,
    )
    for path in written:
        print(f"wrote {path}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="divisim",
        description="Divide, fit and sample parametrically divisible loss distributions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a divisible family to a one-column CSV sample")
    p_fit.add_argument("input", help="CSV file with one numeric column (optional header 'x')")
    p_fit.add_argument("--family", required=True, metavar="|".join(_FAMILIES))
    p_fit.add_argument("--atoms", type=int, default=20, help="atom count for --family ggc")
    p_fit.add_argument("--seed", type=int, default=None)
    p_fit.add_argument("--out", default=None, help="write the fit report here (default stdout)")
    p_fit.set_defaults(func=_cmd_fit)

    p_div = sub.add_parser("divide", help="compute pieces of a distribution record")
    p_div.add_argument("dist", help="inline JSON record or path to one")
    p_div.add_argument("--beta", required=True, help="one weight, or a comma list summing to 1")
    p_div.add_argument("--out", default=None)
    p_div.set_defaults(func=_cmd_divide)

    p_sample = sub.add_parser("sample", help="draw scenarios from a risk factor model")
    p_sample.add_argument("--model", required=True, help="model file or preset name")
    p_sample.add_argument("--n", type=int, required=True)
    p_sample.add_argument("--seed", type=int, default=None)
    p_sample.add_argument("--out", default=None, help="CSV destination (default stdout)")
    p_sample.add_argument("--reinject", action="store_true",
                          help="map ranks onto the model's true marginals")
    p_sample.set_defaults(func=_cmd_sample)

    p_rep = sub.add_parser("reproduce", help="rebuild a comparison figure as CSV data")
    p_rep.add_argument("figure", help="fig1 | fig2 | fig3 | fig4")
    p_rep.add_argument("--seed", type=int, default=None)
    p_rep.add_argument("--out", default=".", help="output directory")
    p_rep.add_argument("--budget", type=float, default=1.0,
                       help="scale factor on all sample sizes")
    p_rep.add_argument("--refit", action="store_true",
                       help="refit the preset approximants instead of using bundled fits")
    p_rep.set_defaults(func=_cmd_reproduce)

    p_val = sub.add_parser("validate", help="check a model file and print its normalized form")
    p_val.add_argument("model", help="model file or preset name")
    p_val.set_defaults(func=_cmd_validate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _UNSUPPORTED as exc:
        return _fail(exc, 2)
    except DivisimError as exc:
        return _fail(exc, 1)
    except OSError as exc:
        return _fail(exc, 1)


def _fail(exc, code):
    name = type(exc).__name__
    message = str(exc)
    if not message.startswith(name):
        message = f"{name}: {message}" if message else name
    print(f"error: {message}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
