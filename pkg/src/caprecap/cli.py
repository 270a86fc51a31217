"""Command-line interface.

Subcommands cover the whole pipeline: direct fits, estimability checks, the
all-models audit, stepwise selection, bootstrap intervals, and the simulation
studies.  Results go to stdout (JSON by default, CSV for the tabular
commands); warnings and effective seeds for stochastic runs go to stderr.

Exit codes: 0 success, 1 usage or data errors, 2 estimability failure
(nonexistent estimate or unidentifiable model).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bootstrap import bootstrap_estimate
from .datasets import BUILTIN_NAMES, builtin_dataset
from .errors import NonexistentMLEError, UnidentifiableError
from .estimability import check_all_models, check_model
from .fitting import ModelSpec, fit
from .histories import CaptureDataset, parse_dataset
from .inference import DEFAULT_THRESHOLD, estimate_population
from .rng import DEFAULT_SEED
from .simulation import (
    ESTIMATION_THRESHOLDS,
    SCENARIO_THRESHOLDS,
    deviance_qq_study,
    threshold_study,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ESTIMABILITY = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; 2 is reserved for
    # estimability failures here, so remap
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(self.exit_with(message))

    @staticmethod
    def exit_with(message: str) -> int:
        print(f"error: {message}", file=sys.stderr)
        return EXIT_USAGE


def _load_dataset(spec: str) -> CaptureDataset:
    if spec in BUILTIN_NAMES:
        return builtin_dataset(spec)
    path = Path(spec)
    if not path.exists():
        raise ValueError(f"no such builtin dataset or file: {spec!r}")
    return parse_dataset(path.read_text())


def _parse_pairs(dataset: CaptureDataset, text: str) -> frozenset:
    return frozenset(dataset.pair_of(part) for part in text.split(",") if part)


def _model_spec(dataset: CaptureDataset, args) -> ModelSpec:
    if getattr(args, "pairs", None):
        return ModelSpec(dataset.t, _parse_pairs(dataset, args.pairs))
    model = getattr(args, "model", "main")
    if model == "main":
        return ModelSpec.main_effects(dataset.t)
    if model == "full":
        return ModelSpec.full(dataset.t)
    raise ValueError(f"--model {model!r} needs no pairs; use main or full")


def _emit_json(obj) -> None:
    print(json.dumps(obj, indent=2))


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ValueError(f"expected comma-separated numbers, got {text!r}") from None


def _cmd_datasets(args) -> int:
    if args.name:
        _emit_json(builtin_dataset(args.name).to_json_obj())
    else:
        _emit_json(list(BUILTIN_NAMES))
    return EXIT_OK


def _cmd_fit(args) -> int:
    dataset = _load_dataset(args.data)
    spec = _model_spec(dataset, args)
    result = fit(dataset, spec)
    obj = result.to_json_obj()
    if args.format == "table":
        for name, value in obj["coefficients"].items():
            print(f"{name:24s} {value if isinstance(value, str) else f'{value:12.6f}'}")
        print(f"{'dark figure':24s} {result.dark_figure:12.3f}")
        print(f"{'population estimate':24s} {result.population_estimate:12.3f}")
    elif args.format == "csv":
        print("parameter,estimate")
        for name, value in obj["coefficients"].items():
            print(f"{name},{value if isinstance(value, str) else repr(value)}")
        print(f"dark_figure,{result.dark_figure!r}")
        print(f"population_estimate,{result.population_estimate!r}")
    else:
        _emit_json(obj)
    return EXIT_OK


def _cmd_check(args) -> int:
    dataset = _load_dataset(args.data)
    spec = _model_spec(dataset, args)
    report = check_model(dataset, spec)
    if args.format == "csv":
        print("pairs,s_max,exists,identifiable,verdict")
        label = ";".join(sorted(dataset.pair_label(p) for p in spec.pairs))
        print(f"{label},{report.s_max:.10g},{report.exists},{report.identifiable},{report.verdict}")
    else:
        obj = report.to_json_obj()
        obj["pairs"] = sorted(dataset.pair_label(p) for p in spec.pairs)
        _emit_json(obj)
    return EXIT_OK if report.ok else EXIT_ESTIMABILITY


def _cmd_check_all(args) -> int:
    dataset = _load_dataset(args.data)
    print("pairs,s_max,verdict")

    def on_model(pairs, smax, verdict):
        label = ";".join(sorted(dataset.pair_label(p) for p in pairs))
        print(f"{label},{smax:.10g},{verdict}")

    audit = check_all_models(dataset, threads=args.threads, on_model=on_model)
    print(
        f"audit: {audit.tested} linear programs, "
        f"{'all models ok' if audit.all_ok else f'{len(audit.failures)} failing models'}",
        file=sys.stderr,
    )
    return EXIT_OK if audit.all_ok else EXIT_ESTIMABILITY


def _cmd_stepwise(args) -> int:
    dataset = _load_dataset(args.data)
    result, trail = estimate_population(
        dataset, method="stepwise", threshold=args.pthresh
    )
    if args.format == "table":
        for round_no, step in enumerate(trail.steps, start=1):
            for pair, value in sorted(step.evaluations.items()):
                shown = f"{value:.6g}" if isinstance(value, float) else value
                action = "add" if pair == step.chosen else ""
                print(f"{round_no:5d}  {dataset.pair_label(pair):12s} {shown:>12s} {action}")
            if step.chosen is None:
                print(f"{round_no:5d}  stop")
        print(f"population estimate: {result.population_estimate:.3f}")
    elif args.format == "csv":
        print("round,candidate,p_value,action")
        for round_no, step in enumerate(trail.steps, start=1):
            for pair, value in sorted(step.evaluations.items()):
                shown = repr(value) if isinstance(value, float) else value
                action = "add" if pair == step.chosen else ""
                print(f"{round_no},{dataset.pair_label(pair)},{shown},{action}")
            if step.chosen is None:
                print(f"{round_no},,,stop")
    else:
        obj = trail.to_json_obj(dataset)
        obj["estimate"] = result.population_estimate
        obj["dark_figure"] = result.dark_figure
        _emit_json(obj)
    return EXIT_OK


def _cmd_estimate(args) -> int:
    dataset = _load_dataset(args.data)
    method = args.model
    result, trail = estimate_population(
        dataset, method=method, threshold=args.pthresh
    )
    obj = {
        "estimate": result.population_estimate,
        "dark_figure": result.dark_figure,
        "model_pairs": sorted(dataset.pair_label(p) for p in result.spec.pairs),
        "method": method,
    }
    if method == "stepwise":
        obj["pthresh"] = args.pthresh
    if args.nboot > 0:
        threshold = {"main": 0.0, "full": 1.0}.get(method, args.pthresh)
        boot = bootstrap_estimate(
            dataset,
            threshold,
            n_boot=args.nboot,
            levels=tuple(args.levels),
            seed=args.seed,
            threads=args.threads,
        )
        obj["nboot"] = args.nboot
        obj["seed"] = args.seed
        obj["z0"] = boot.z0
        obj["a"] = boot.a
        obj["n_failed"] = boot.n_failed
        obj["intervals"] = {
            f"{level:g}": [lo, hi] for level, (lo, hi) in sorted(boot.intervals.items())
        }
        print(f"seed: {args.seed}", file=sys.stderr)
        _maybe_dump_replicates(args, boot)
    _emit_json(obj)
    return EXIT_OK


def _cmd_bootstrap(args) -> int:
    dataset = _load_dataset(args.data)
    threshold = {"main": 0.0, "full": 1.0}.get(args.model, args.pthresh)
    boot = bootstrap_estimate(
        dataset,
        threshold,
        n_boot=args.nboot,
        levels=tuple(args.levels),
        seed=args.seed,
        threads=args.threads,
    )
    print(f"seed: {args.seed}", file=sys.stderr)
    _maybe_dump_replicates(args, boot)
    _emit_json(boot.to_json_obj())
    return EXIT_OK


def _maybe_dump_replicates(args, boot) -> None:
    if getattr(args, "dump_replicates", None):
        Path(args.dump_replicates).write_text(
            "".join(f"{float(value)!r}\n" for value in boot.replicates)
        )


def _cmd_simulate_threshold_study(args) -> int:
    names = [part.strip() for part in args.datasets.split(",") if part.strip()]
    if args.full:
        scenario_taus = list(SCENARIO_THRESHOLDS)
        n_sims = 1000
    else:
        scenario_taus = _parse_floats(args.scenario_thresholds)
        n_sims = args.nsims
    scenarios = [(name, tau) for tau in scenario_taus for name in names]
    result = threshold_study(
        scenarios,
        n_sims=n_sims,
        est_thresholds=tuple(_parse_floats(args.est_thresholds)),
        seed=args.seed,
        threads=args.threads,
    )
    print(f"seed: {args.seed}", file=sys.stderr)
    sys.stdout.write(result.to_csv())
    return EXIT_OK


def _cmd_simulate_deviance_qq(args) -> int:
    from scipy.stats import chi2

    probs = _parse_floats(args.probs)
    if len(probs) != 3:
        raise ValueError("--probs needs exactly three values")
    reductions = deviance_qq_study(
        tuple(probs), args.pop, args.nsims, seed=args.seed, threads=args.threads
    )
    print(f"seed: {args.seed}", file=sys.stderr)
    n = len(reductions)
    if n < args.nsims:
        print(f"dropped {args.nsims - n} non-estimable realizations", file=sys.stderr)
    print("deviance_reduction,chi2_quantile")
    quantiles = chi2.ppf((np.arange(1, n + 1) - 0.5) / n, df=1)
    for value, q in zip(sorted(reductions), quantiles):
        print(f"{value:.8g},{q:.8g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="caprecap", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, stochastic=False):
        p.add_argument("--data", required=True, help="builtin dataset name or CSV path")
        p.add_argument("--format", choices=("json", "csv", "table"), default="json")
        p.add_argument("--threads", type=int, default=1)
        if stochastic:
            p.add_argument("--seed", type=int, default=DEFAULT_SEED)

    p = sub.add_parser("datasets", help="list builtin datasets or dump one as JSON")
    p.add_argument("name", nargs="?", choices=BUILTIN_NAMES)
    p.set_defaults(func=_cmd_datasets)

    p = sub.add_parser("fit", help="fit one model")
    add_common(p)
    p.add_argument("--pairs", help="two-list parameters, e.g. A:B,C:D")
    p.add_argument("--model", choices=("main", "full"), default="main")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("check", help="existence/identifiability of one model")
    add_common(p)
    p.add_argument("--pairs", help="two-list parameters, e.g. A:B,C:D")
    p.add_argument("--model", choices=("main", "full"), default="main")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("check-all", help="audit every candidate model (CSV)")
    add_common(p)
    p.set_defaults(func=_cmd_check_all)

    p = sub.add_parser("stepwise", help="forward stepwise selection")
    add_common(p)
    p.add_argument("--pthresh", type=float, default=DEFAULT_THRESHOLD)
    p.set_defaults(func=_cmd_stepwise)

    p = sub.add_parser("estimate", help="point estimate plus bootstrap intervals")
    add_common(p, stochastic=True)
    p.add_argument("--pthresh", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--model", choices=("stepwise", "main", "full"), default="stepwise")
    p.add_argument("--nboot", type=int, default=1000)
    p.add_argument("--levels", type=_parse_floats, default=[0.80, 0.95])
    p.add_argument("--dump-replicates", metavar="PATH")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("bootstrap", help="bootstrap confidence intervals")
    add_common(p, stochastic=True)
    p.add_argument("--pthresh", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--model", choices=("stepwise", "main", "full"), default="stepwise")
    p.add_argument("--nboot", type=int, default=1000)
    p.add_argument("--levels", type=_parse_floats, default=[0.80, 0.95])
    p.add_argument("--dump-replicates", metavar="PATH")
    p.set_defaults(func=_cmd_bootstrap)

    p = sub.add_parser("simulate", help="Monte Carlo studies")
    sim_sub = p.add_subparsers(dest="study", required=True)

    ps = sim_sub.add_parser("threshold-study", help="score estimation thresholds")
    ps.add_argument(
        "--datasets",
        default="uk,uk5,netherlands,netherlands5,new_orleans,new_orleans5,western",
    )
    ps.add_argument("--scenario-thresholds", default="0")
    ps.add_argument("--nsims", type=int, default=200)
    ps.add_argument(
        "--est-thresholds",
        default=",".join(f"{t:g}" for t in ESTIMATION_THRESHOLDS),
    )
    ps.add_argument("--full", action="store_true", help="full 28-scenario, 1000-sim study")
    ps.add_argument("--seed", type=int, default=DEFAULT_SEED)
    ps.add_argument("--threads", type=int, default=1)
    ps.set_defaults(func=_cmd_simulate_threshold_study)

    ps = sim_sub.add_parser("deviance-qq", help="deviance reductions vs chi-square")
    ps.add_argument("--probs", default="0.3,0.3,0.3")
    ps.add_argument("--pop", type=float, default=1000.0)
    ps.add_argument("--nsims", type=int, default=10000)
    ps.add_argument("--seed", type=int, default=DEFAULT_SEED)
    ps.add_argument("--threads", type=int, default=1)
    ps.set_defaults(func=_cmd_simulate_deviance_qq)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except NonexistentMLEError as exc:
        print(f"nonexistent estimate: {exc}", file=sys.stderr)
        return EXIT_ESTIMABILITY
    except UnidentifiableError as exc:
        print(f"unidentifiable model: {exc}", file=sys.stderr)
        return EXIT_ESTIMABILITY
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
