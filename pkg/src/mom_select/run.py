from __future__ import annotations

import argparse
from dataclasses import replace
import json
import sys
from typing import Sequence, TextIO

import numpy as np

from .app import ExperimentApplication, ExperimentConfig
from .blocks import robust_mean_confidence
from .data_layer import read_sample_csv, write_rows_csv
from .dictionary import Dictionary, build_histogram_dictionary, build_polynomial_dictionary, build_trigonometric_dictionary, regular_breakpoints
from .errors import (
    ConditionViolationError,
    DataError,
    DeltaTooSmallError,
    DimensionError,
    EmptyInputError,
    MomSelectError,
)
from .estimator_selection import PenaltyRule, SelectionConfig, SelectionMode, nested_models, projection_candidates, select
from .experiments import ExperimentKind
from .m_select import ContrastModel, SelectorTrace, contrast_kullback_histogram, contrast_l2_density, contrast_l2_regression, select_m_estimator
from .mixing import select_m_estimator_mixing
from .monitoring import log_event
from .robust_lasso import lasso_weights, solve_lasso

DEFAULT_DELTA = 0.05

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONDITION = 2
EXIT_DATA = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--delta", type=float, default=None, help="confidence level in (0, 1)")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--reps", type=int, default=None)
    common.add_argument("--input", default=None, help="headerless CSV, one column or x,y pairs")
    common.add_argument("--output", choices=["json", "csv"], default="json")
    common.add_argument("--config", default=None, help="experiment config (TOML or JSON)")

    parser = _Parser(prog="mom-select", description="Median-of-means estimation and selection tools")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    sub.add_parser("mean", parents=[common], help="robust mean with its confidence half-width")

    lasso = sub.add_parser("lasso", parents=[common], help="robust Lasso density estimate")
    lasso.add_argument("--basis", choices=["histogram", "trigonometric"], default="histogram")
    lasso.add_argument("--cells", type=int, default=16)
    lasso.add_argument("--max-frequency", type=int, default=4)
    lasso.add_argument("--weight-factor", type=float, default=1.0)

    sel = sub.add_parser("select", parents=[common], help="choose among trigonometric projection estimators")
    sel.add_argument("--mode", choices=[m.value for m in SelectionMode], default=SelectionMode.ROBUST.value)
    sel.add_argument("--penalty", choices=[p.value for p in PenaltyRule], default=None)
    sel.add_argument("--max-frequency", type=int, default=4)
    sel.add_argument("--alpha", type=float, default=2.0)
    sel.add_argument("--epsilon", type=float, default=0.1)

    for name, helptext in (("mselect", "argmin-max M-estimator selection"), ("mixing", "selection on odd blocks of a dependent series")):
        cmd = sub.add_parser(name, parents=[common], help=helptext)
        choices = ["l2", "kullback", "regression"] if name == "mselect" else ["l2", "kullback"]
        cmd.add_argument("--contrast", choices=choices, default="l2")
        cmd.add_argument("--cells", type=int, default=4)
        cmd.add_argument("--degree", type=int, default=1)
        cmd.add_argument("--blocks", type=int, default=None, help="V; derived from delta when omitted")

    exp = sub.add_parser("experiment", parents=[common], help="Monte Carlo coverage experiment")
    exp.add_argument("--kind", choices=[k.value for k in ExperimentKind], default=None)
    exp.add_argument("--workers", type=int, default=None)
    exp.add_argument("--timing", action="store_true")
    exp.add_argument("--save-dir", default=None)
    return parser


def _emit(payload: dict, rows: list[dict], fmt: str, stdout: TextIO) -> None:
    if fmt == "csv":
        write_rows_csv(rows, stdout)
        return
    stdout.write(json.dumps(payload, indent=2, sort_keys=True))
    stdout.write("\n")


def _require_input(args: argparse.Namespace, columns: int | None = 1) -> np.ndarray:
    if args.input is None:
        raise UsageError(f"{args.command} needs --input")
    return read_sample_csv(args.input, columns=columns)


def _delta(args: argparse.Namespace, config: ExperimentConfig) -> float:
    if args.delta is not None:
        return args.delta
    return config.delta if config.delta is not None else DEFAULT_DELTA


def _histogram(cells: int) -> Dictionary:
    return build_histogram_dictionary(regular_breakpoints(cells))


def _contrast(args: argparse.Namespace, n: int) -> ContrastModel:
    if args.contrast == "l2":
        return contrast_l2_density(_histogram(args.cells))
    if args.contrast == "kullback":
        return contrast_kullback_histogram(regular_breakpoints(args.cells), n=n)
    return contrast_l2_regression(build_polynomial_dictionary(args.degree))


def _trace_rows(trace: SelectorTrace) -> list[dict]:
    return [{"K": K, "worst_case": w, "selected": K == trace.K_star} for K, w in enumerate(trace.worst_case)]


def _cmd_mean(args: argparse.Namespace, config: ExperimentConfig, stdout: TextIO) -> None:
    sample = _require_input(args)
    result = robust_mean_confidence(sample, None, _delta(args, config))
    _emit(result.to_dict(), [result.to_dict()], args.output, stdout)


def _cmd_lasso(args: argparse.Namespace, config: ExperimentConfig, stdout: TextIO) -> None:
    sample = _require_input(args)
    if args.basis == "histogram":
        dictionary = _histogram(args.cells)
    else:
        dictionary = build_trigonometric_dictionary(args.max_frequency)
    problem = lasso_weights(sample, dictionary, _delta(args, config), weight_factor=args.weight_factor)
    fit = solve_lasso(problem)
    if not fit.converged:
        log_event("warning", "lasso did not converge", iterations=fit.iterations)
    rows = [
        {"label": label, "theta": float(fit.theta_hat[i]), "weight": float(problem.weights[i]), "first_moment": float(problem.first_moments[i])}
        for i, label in enumerate(dictionary.labels)
    ]
    _emit({"problem": problem.to_dict(), "fit": fit.to_dict()}, rows, args.output, stdout)


def _cmd_select(args: argparse.Namespace, config: ExperimentConfig, stdout: TextIO) -> None:
    sample = _require_input(args)
    dictionary = build_trigonometric_dictionary(args.max_frequency)
    mode = SelectionMode(args.mode)
    penalty = args.penalty or (PenaltyRule.ROBUST.value if mode == SelectionMode.ROBUST else PenaltyRule.PLUGIN.value)
    models = nested_models(dictionary)
    candidates, _ = projection_candidates(sample, dictionary, models)
    settings = SelectionConfig(delta=_delta(args, config), epsilon=args.epsilon, penalty=PenaltyRule(penalty))
    result = select(candidates, sample, args.alpha, mode, settings, dictionary)
    rows = [
        {"theta": theta, "criterion": value, "model": result.chosen_models[theta], "selected": theta == result.theta_hat}
        for theta, value in result.criteria.items()
    ]
    _emit(result.to_dict(), rows, args.output, stdout)


def _cmd_mselect(args: argparse.Namespace, config: ExperimentConfig, stdout: TextIO) -> None:
    sample = _require_input(args, columns=2 if args.contrast == "regression" else 1)
    contrast = _contrast(args, sample.shape[0])
    trace = select_m_estimator(sample, contrast, _delta(args, config), V=args.blocks)
    _emit({"contrast": contrast.name, **trace.to_dict()}, _trace_rows(trace), args.output, stdout)


def _cmd_mixing(args: argparse.Namespace, config: ExperimentConfig, stdout: TextIO) -> None:
    sample = _require_input(args)
    contrast = _contrast(args, sample.shape[0])
    trace = select_m_estimator_mixing(sample, contrast, _delta(args, config), V=args.blocks)
    if trace.truncated:
        log_event("warning", "trailing observations dropped", truncated=trace.truncated)
    _emit({"contrast": contrast.name, **trace.to_dict()}, _trace_rows(trace), args.output, stdout)


def _cmd_experiment(args: argparse.Namespace, config: ExperimentConfig, stdout: TextIO) -> None:
    kind = args.kind or config.kind
    if kind is None:
        raise UsageError("experiment needs --kind or a kind in the config")
    if args.save_dir:
        config = replace(config, save_dir=args.save_dir)
    app = ExperimentApplication(config)
    report = app.run_experiment(
        kind,
        timing=args.timing,
        reps=args.reps,
        seed=args.seed,
        delta=args.delta,
        workers=args.workers,
    )
    app.save(report)
    _emit(report.to_dict(), report.rows(), args.output, stdout)


_COMMANDS = {
    "mean": _cmd_mean,
    "lasso": _cmd_lasso,
    "select": _cmd_select,
    "mselect": _cmd_mselect,
    "mixing": _cmd_mixing,
    "experiment": _cmd_experiment,
}


def main(argv: Sequence[str] | None = None, stdout: TextIO | None = None) -> int:
    out = stdout or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        config = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
        _COMMANDS[args.command](args, config, out)
    except UsageError as exc:
        log_event("error", "usage error", detail=str(exc))
        return EXIT_USAGE
    except (ConditionViolationError, DeltaTooSmallError) as exc:
        log_event("error", "condition violated", error=type(exc).__name__, detail=str(exc))
        return EXIT_CONDITION
    except (DataError, DimensionError, EmptyInputError) as exc:
        log_event("error", "data error", error=type(exc).__name__, detail=str(exc))
        return EXIT_DATA
    except MomSelectError as exc:
        log_event("error", "invalid arguments", error=type(exc).__name__, detail=str(exc))
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
