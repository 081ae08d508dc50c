"""Command-line interface: ``ggmech {calibrate,sanitize,compare,experiment}``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from ._version import __version__
from .analysis import curve_to_csv, ratio_crossings, tail_ratio_curve
from .calibration import McConfig, PrivacyParams, equivalent_epsilon
from .errors import ConfigurationError, GGMechError, IngestionError
from .mechanisms import KINDS, MechanismSpec, calibrate, sanitize
from .numerics import RngStream
from .pipeline import (
    POSTPROCESS_OPS,
    ExperimentConfig,
    _write_text,
    load_histogram,
    postprocess,
    run_experiment,
)
from .sensitivity import SensitivityProfile


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _bounds(text: str) -> tuple[float, float]:
    vals = _floats(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError(f"bounds take 'lo,hi', got {text!r}")
    return vals[0], vals[1]


def _add_spec_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("mechanism")
    g.add_argument("--spec", type=Path, help="MechanismSpec JSON file (other mechanism flags are ignored)")
    g.add_argument("--mechanism", choices=KINDS)
    g.add_argument("--p", type=int, help="GG order (fixed for laplace and gauss_*)")
    g.add_argument("--epsilon", type=float)
    g.add_argument("--delta", type=float, default=0.0)
    g.add_argument("--delta1", type=_floats, help="per-element l1 sensitivities, comma-separated")
    g.add_argument("--bins", type=int, help="disjoint histogram profile with this many unit-sensitivity bins")
    g.add_argument("--bounds", type=_bounds, help="'lo,hi' applied to every element")
    g.add_argument("--disjoint", action="store_true")
    g.add_argument("--delta-p", type=float, dest="delta_p", help="known l_p sensitivity override")
    g.add_argument("--draws", type=int, help="Monte-Carlo draws for gg_pdp calibration")


def _spec_from_args(args, r_hint: int | None = None) -> MechanismSpec:
    if args.spec is not None:
        try:
            data = json.loads(args.spec.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"{args.spec}: cannot read spec ({exc})") from exc
        return MechanismSpec.from_dict(data)
    if args.mechanism is None or args.epsilon is None:
        raise ConfigurationError("give --spec, or --mechanism and --epsilon")
    if args.delta1 is not None:
        delta1 = args.delta1
    elif args.bins is not None or r_hint is not None:
        delta1 = [1.0] * (args.bins or r_hint)
    else:
        raise ConfigurationError("give --delta1 or --bins to describe the sensitivity profile")
    bounds = None if args.bounds is None else [args.bounds] * len(delta1)
    profile = SensitivityProfile(
        delta1=delta1,
        bounds=bounds,
        disjoint=args.disjoint or (args.bins is not None and args.delta1 is None),
        delta_p_override=args.delta_p,
    )
    mc = None if args.draws is None else McConfig(draws=args.draws)
    return MechanismSpec(args.mechanism, PrivacyParams(args.epsilon, args.delta), profile, p=args.p, mc=mc)


def _emit(text: str, output, overwrite: bool) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        _write_text(output, text, overwrite)


def cmd_calibrate(args) -> int:
    spec = _spec_from_args(args)
    rng = None if args.seed is None else RngStream(args.seed)
    result = calibrate(spec, rng=rng, allow_large_epsilon=args.allow_large_epsilon)
    print(json.dumps(result.to_dict(), indent=2, sort_keys=True))
    return 0


def cmd_sanitize(args) -> int:
    if args.input is not None:
        hist = load_histogram(args.input)
        labels, values = hist.labels, hist.counts
    elif args.values is not None:
        values = np.asarray(args.values)
        labels = tuple(str(i) for i in range(values.size))
    else:
        raise ConfigurationError("give --input or --values")
    spec = _spec_from_args(args, r_hint=len(values))
    result = sanitize(spec, values, RngStream(args.seed))
    out = result.values
    if args.postprocess:
        total = float(np.sum(values)) if args.total is None else args.total
        out = postprocess(out, args.postprocess, total)
    lines = ["label,value"] + [f"{lab},{v:.9g}" for lab, v in zip(labels, out)]
    _emit("\n".join(lines) + "\n", args.output, args.overwrite)
    print(f"scale_used={result.scale_used:.9g}", file=sys.stderr)
    return 0


def cmd_tails(args) -> int:
    grid = np.linspace(0.0, args.t_max, args.points)
    points = tail_ratio_curve(args.epsilon, args.delta, args.delta_s, grid, cutoff=args.cutoff)
    _emit(curve_to_csv(points), args.output, args.overwrite)
    crossings = ratio_crossings(points)
    if crossings:
        print("ratio crosses 1 at t=" + ",".join(f"{c:.6g}" for c in crossings), file=sys.stderr)
    return 0


def cmd_equiv(args) -> int:
    eps2 = equivalent_epsilon(args.epsilon1, args.delta, args.t, args.delta_s)
    print(f"{eps2:.9g}")
    return 0


def cmd_experiment(args) -> int:
    if args.config is not None:
        config = ExperimentConfig.from_json(args.config)
    else:
        config = ExperimentConfig()
    overrides = {"seed": args.seed}
    if args.repeats is not None:
        overrides["repeats"] = args.repeats
    if args.dataset is not None:
        overrides["dataset"] = args.dataset
    config = replace(config, **overrides)
    report = run_experiment(config, workers=args.workers)
    _emit(report.to_json(), args.output, args.overwrite)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ggmech", description="Generalized-Gaussian privacy mechanisms.")
    parser.add_argument("--version", action="version", version=f"ggmech {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="print the calibrated noise scale for a mechanism")
    _add_spec_args(p)
    p.add_argument("--seed", type=int, help="seed for Monte-Carlo calibration (default: fixed internal stream)")
    p.add_argument("--allow-large-epsilon", action="store_true", help="apply the aDP Gaussian bound at eps >= 1")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("sanitize", help="perturb a histogram or vector")
    _add_spec_args(p)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--input", type=Path, help="histogram CSV with header label,count")
    src.add_argument("--values", type=_floats, help="comma-separated query values")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--postprocess", nargs="*", choices=POSTPROCESS_OPS, default=[])
    p.add_argument("--total", type=float, help="clamp/normalize total (default: sum of the input)")
    p.add_argument("--output", type=Path)
    p.add_argument("--overwrite", action="store_true")
    p.set_defaults(func=cmd_sanitize)

    cmp_ = sub.add_parser("compare", help="Laplace versus Gaussian comparisons")
    csub = cmp_.add_subparsers(dest="study", required=True)
    p = csub.add_parser("tails", help="tail-probability ratio curve as CSV")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--delta-s", type=float, default=1.0, dest="delta_s")
    p.add_argument("--t-max", type=float, default=20.0, dest="t_max")
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--cutoff", type=float, default=1e-4)
    p.add_argument("--output", type=Path)
    p.add_argument("--overwrite", action="store_true")
    p.set_defaults(func=cmd_tails)
    p = csub.add_parser("equiv-eps", help="Gaussian epsilon matching a Laplace tail at t")
    p.add_argument("--epsilon1", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--delta-s", type=float, default=1.0, dest="delta_s")
    p.set_defaults(func=cmd_equiv)

    p = sub.add_parser("experiment", help="run the sanitization experiment grid")
    p.add_argument("--config", type=Path, help="ExperimentConfig JSON")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--repeats", type=int)
    p.add_argument("--dataset", help="synthetic-mildew, synthetic-czech or a histogram CSV path")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output", type=Path)
    p.add_argument("--overwrite", action="store_true")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GGMechError as exc:
        print(f"ggmech: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (TypeError, ValueError) as exc:
        print(f"ggmech: error: {exc}", file=sys.stderr)
        return ConfigurationError.exit_code


if __name__ == "__main__":
    sys.exit(main())
