"""Command-line interface: ``hazard-odds <subcommand> ...``.

Exit codes: 0 success, 1 verification failure, 2 usage or parse error,
3 numerical or model error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Optional, Sequence

from .baselines import parse_baseline
from .concordance import PairRule, between_group_concordance, harrell_c
from .core import HazardRatio, PrecedenceProbability, explain, hr_to_prob, prob_later, prob_to_hr, render_odds, render_percent
from .estimate import CoxFitError, Ties, cox_fit, kaplan_meier
from .simulate import TrialConfig, dataset_to_csv, parse_censoring, read_dataset_csv, simulate_trial, write_dataset_csv
from .verify import DEFAULT_BASELINES, DEFAULT_LAMBDAS, format_table, run_verification

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_MODEL = 3


class UsageError(Exception):
    pass


def _json(obj) -> str:
    # NaN is not valid JSON
    def clean(x):
        if isinstance(x, float) and not math.isfinite(x):
            return None
        if isinstance(x, dict):
            return {k: clean(v) for k, v in x.items()}
        if isinstance(x, (list, tuple)):
            return [clean(v) for v in x]
        return x

    return json.dumps(clean(obj), indent=2)


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid number {text!r}") from None
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError("must be positive and finite")
    return v


def cmd_convert(args) -> int:
    if (args.hr is None) == (args.prob is None):
        raise UsageError("give exactly one of --hr or --prob")
    if args.hr is not None:
        hr = HazardRatio(args.hr)
        before, after = hr_to_prob(hr), prob_later(hr)
    else:
        before = PrecedenceProbability(args.prob)
        hr = prob_to_hr(before)
        after = PrecedenceProbability(before.complement, before.p)
    out = {
        "hr": hr.value,
        "odds": str(render_odds(hr)),
        "p_before": before.p,
        "p_after": after.p,
        "percent_before": render_percent(before),
    }
    if args.format == "json":
        print(_json(out))
    else:
        print(f"{'hazard ratio':<24}{hr.value:.6g}")
        print(f"{'odds (treatment first)':<24}{out['odds']}")
        print(f"{'P(treatment first)':<24}{before.p:.6f} ({out['percent_before']})")
        print(f"{'P(treatment later)':<24}{after.p:.6f}")
    return EXIT_OK


def cmd_explain(args) -> int:
    print(explain(HazardRatio(args.hr), args.event))
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = TrialConfig(
        n_control=args.n_control,
        n_treatment=args.n_treatment,
        lam=HazardRatio(args.lam),
        baseline=parse_baseline(args.baseline),
        censoring=parse_censoring(args.censor),
        seed=args.seed,
    )
    data = simulate_trial(config)
    if args.out == "-":
        sys.stdout.write(dataset_to_csv(data))
        return EXIT_OK
    write_dataset_csv(data, args.out)
    print(
        _json(
            {
                "out": args.out,
                "n": len(data),
                "events": int(data.event.sum()),
                "lambda": config.lam.value,
                "baseline": config.baseline.spec,
                "censoring": config.censoring.spec,
                "seed": config.seed,
            }
        )
    )
    return EXIT_OK


def _load(path: str):
    if path == "-":
        return read_dataset_csv(sys.stdin)
    return read_dataset_csv(path)


def cmd_fit(args) -> int:
    data = _load(args.input)
    fit = cox_fit(data, ties=Ties(args.ties))
    print(_json(fit.to_dict(args.level)))
    return EXIT_OK


def cmd_km(args) -> int:
    data = _load(args.input)
    arms = [args.arm] if args.arm is not None else [0, 1]
    out = {}
    for arm in arms:
        out[str(arm)] = kaplan_meier(data, arm).to_dict()
    print(_json(out))
    return EXIT_OK


def cmd_concordance(args) -> int:
    if args.score_column:
        path = sys.stdin if args.input == "-" else args.input
        data, extra = read_dataset_csv(path, extra_columns=(args.score_column,))
        res = harrell_c(data, extra[args.score_column], args.rule or PairRule.HARRELL)
        kind = "harrell"
    else:
        data = _load(args.input)
        res = between_group_concordance(data, args.rule or PairRule.BOTH_EVENTS)
        kind = "between_group"
    print(_json({"statistic": kind, **res.to_dict()}))
    return EXIT_OK


def cmd_verify(args) -> int:
    baselines = [parse_baseline(b) for b in args.baselines]
    reports = run_verification(
        baselines, args.lambdas, args.pairs, args.seed, workers=args.workers, break_ph=args.break_ph
    )
    if args.format == "json":
        print(_json([r.to_dict() for r in reports]))
    else:
        print(format_table(reports))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VERIFY_FAILED


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hazard-odds", description="Hazard ratios as odds of precedence: conversions, simulation, fitting.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("convert", help="convert a hazard ratio or precedence probability")
    c.add_argument("--hr", type=float)
    c.add_argument("--prob", type=float)
    c.add_argument("--format", choices=("json", "text"), default="json")
    c.set_defaults(func=cmd_convert)

    e = sub.add_parser("explain", help="plain-language statement of a hazard ratio")
    e.add_argument("--hr", type=float, required=True)
    e.add_argument("--event", default="heal", help="verb phrase, e.g. 'resolve symptoms'")
    e.set_defaults(func=cmd_explain)

    s = sub.add_parser("simulate", help="simulate a two-arm proportional-hazards trial to CSV")
    s.add_argument("--n-control", type=_positive_int, required=True)
    s.add_argument("--n-treatment", type=_positive_int, required=True)
    s.add_argument("--lambda", dest="lam", type=_positive_float, required=True)
    s.add_argument("--baseline", default="exp(rate=1)")
    s.add_argument("--censor", default="none", help="none | admin(cutoff=T) | exp(rate=R)")
    s.add_argument("--seed", type=_seed, required=True)
    s.add_argument("--out", required=True, help="output CSV path, or - for stdout")
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("fit", help="Cox proportional-hazards fit of the treatment indicator")
    f.add_argument("--in", dest="input", required=True)
    f.add_argument("--ties", choices=[t.value for t in Ties], default="breslow")
    f.add_argument("--level", type=float, default=0.95)
    f.set_defaults(func=cmd_fit)

    k = sub.add_parser("km", help="Kaplan-Meier curves per arm")
    k.add_argument("--in", dest="input", required=True)
    k.add_argument("--arm", type=int, choices=(0, 1))
    k.set_defaults(func=cmd_km)

    cc = sub.add_parser("concordance", help="between-arm concordance, or Harrell's c for a score column")
    cc.add_argument("--in", dest="input", required=True)
    cc.add_argument("--rule", choices=[r.value for r in PairRule])
    cc.add_argument("--score-column", help="CSV column of risk scores; switches to Harrell's c")
    cc.set_defaults(func=cmd_concordance)

    v = sub.add_parser("verify", help="check P(treatment first) = lam/(1+lam) by quadrature and Monte Carlo")
    v.add_argument("--baselines", nargs="+", default=list(DEFAULT_BASELINES))
    v.add_argument("--lambdas", nargs="+", type=_positive_float, default=list(DEFAULT_LAMBDAS))
    v.add_argument("--pairs", type=_positive_int, default=100_000)
    v.add_argument("--seed", type=_seed, required=True)
    v.add_argument("--format", choices=("json", "table"), default="table")
    v.add_argument("--workers", type=_positive_int, default=1)
    v.add_argument(
        "--break-ph",
        action="store_true",
        help="demo only: apply lambda after the control median, violating proportional hazards",
    )
    v.set_defaults(func=cmd_verify)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except CoxFitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (ValueError, OSError) as exc:
        # includes SpecParseError and CSV/domain errors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ArithmeticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
