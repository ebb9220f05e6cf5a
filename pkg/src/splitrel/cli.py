"""Command-line front end for the split-half reliability toolkit.

Six subcommands: ``split``, ``reliability``, ``truescore``, ``battery``,
``simulate``, ``scale``.  Reports are JSON (optionally CSV tables where
a table is the natural shape) wrapped in a provenance envelope carrying
the tool version, the sha256 digest of every input file, and the
effective parameters.  Nothing time-dependent goes into a report, so a
rerun on the same inputs writes byte-identical output.

Exit codes: 0 success, 1 usage or validation error, 2 degenerate
computation (zero variance, singular covariance matrix).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from ._version import __version__
from .battery import (
    BatteryInput,
    ComponentTest,
    covariance_matrix,
    eigen_weights,
    equal_weights,
    nonnegative_weights,
    optimal_weights,
    weighted_reliability,
)
from .data_model import (
    ExamineeScores,
    descriptive_stats,
    load_score_matrix,
    write_score_matrix,
)
from .errors import RangeError, ToolkitError
from .reliability import classical_reliability, sub_test_scores, true_score_geometry
from .simulate import SimModel, generate, scaling_suite
from .splitter import split
from .truescore import compare_estimators, estimate_true_scores, percentile_rank

__all__ = ["RunConfig", "run", "main", "load_schema"]

_WEIGHT_METHODS = ("optimal", "nonneg", "eigen-cov", "eigen-corr", "equal")


@dataclass(frozen=True)
class RunConfig:
    """Everything one invocation needs, already validated by the parser."""

    command: str
    inputs: tuple[str, ...] = ()
    output: str | None = None
    fmt: str = "json"
    criterion: str = "abs_S"
    reliability_kind: str = "classical"
    seed: int = 0
    bin_width: int = 1
    max_iter: int | None = None
    policy: str = "single"
    has_header: bool = False
    weights_method: str = "optimal"
    model: str = "D3"
    N: int = 0
    n: int = 0
    sizes: tuple[tuple[int, int], ...] = ()
    percentile_of: float | None = None


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors, but 2 is reserved
    # here for degenerate computations; remap usage problems to 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(ToolkitError):
    exit_code = 1


def _json_safe(obj):
    """Recursively strip JSON-hostile values: numpy scalars, NaN, inf."""
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, np.ndarray):
        return [_json_safe(v) for v in obj.tolist()]
    return obj


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _envelope(config: RunConfig, parameters: dict, report: dict) -> dict:
    return {
        "tool": "splitrel",
        "version": __version__,
        "command": config.command,
        "parameters": parameters,
        "inputs": {path: _sha256(path) for path in config.inputs},
        "report": report,
    }


def _emit(text: str, output: str | None) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _dump(envelope: dict, output: str | None) -> None:
    text = json.dumps(_json_safe(envelope), indent=2, sort_keys=True) + "\n"
    _emit(text, output)


def load_schema() -> dict:
    """The published JSON schema that every report envelope satisfies."""
    text = resources.files("splitrel").joinpath("report_schema.json").read_text("utf-8")
    return json.loads(text)


def _analyze(path: str, config: RunConfig):
    """Shared pipeline: load, split, half scores, reduced-test stats, report."""
    m = load_score_matrix(path, has_header=config.has_header)
    result = split(m, config.criterion, max_iter=config.max_iter, policy=config.policy)
    scores = sub_test_scores(m, result.assignment)
    reduced_n = m.n_items - (result.assignment.dropped_item is not None)
    stats = descriptive_stats(ExamineeScores(scores.combined()), reduced_n)
    report = classical_reliability(scores, stats)
    return m, result, scores, stats, report


def _histogram(values: np.ndarray, capacity: int, width: int) -> list[int]:
    # fixed-width bins [k*w, (k+1)*w) covering every reachable score,
    # so the counts always sum to the number of examinees
    counts = np.bincount(values // width, minlength=capacity // width + 1)
    return [int(c) for c in counts]


def _cmd_split(config: RunConfig) -> None:
    m = load_score_matrix(config.inputs[0], has_header=config.has_header)
    result = split(m, config.criterion, max_iter=config.max_iter, policy=config.policy)
    if config.fmt == "csv":
        lines = ["g_item,g_score,h_item,h_score,difference"]
        for row in result.to_dict()["rows"]:
            lines.append(
                f"{row['g_item']},{row['g_score']},{row['h_item']},"
                f"{row['h_score']},{row['difference']}"
            )
        _emit("\n".join(lines) + "\n", config.output)
        return
    parameters = {
        "criterion": config.criterion,
        "max_iter": config.max_iter,
        "policy": config.policy,
        "has_header": config.has_header,
    }
    _dump(_envelope(config, parameters, result.to_dict()), config.output)


def _cmd_reliability(config: RunConfig) -> None:
    m, result, scores, stats, report = _analyze(config.inputs[0], config)
    n_pair = result.assignment.n_rows
    stats_g = descriptive_stats(ExamineeScores(scores.g), n_pair)
    stats_h = descriptive_stats(ExamineeScores(scores.h), n_pair)

    geometry = None
    warnings = []
    if 0.0 <= report.r_tt <= 1.0:
        geo = true_score_geometry(stats, report.r_tt)
        geometry = {
            "S_T_sq": geo.S_T_sq,
            "norm_T": geo.norm_T,
            "cos_theta_T": geo.cos_theta_T,
        }
    else:
        warnings.append("true-score geometry skipped: r_tt outside [0, 1]")

    reduced_n = stats.n
    body = {
        "split": result.to_dict(),
        "stats": {
            "full": stats.to_dict(),
            "g": stats_g.to_dict(),
            "h": stats_h.to_dict(),
        },
        "reliability": report.to_dict(),
        "true_score_geometry": geometry,
        "histograms": {
            "bin_width": config.bin_width,
            "full": _histogram(scores.combined(), reduced_n, config.bin_width),
            "g": _histogram(scores.g, n_pair, config.bin_width),
            "h": _histogram(scores.h, n_pair, config.bin_width),
        },
        "warnings": warnings,
    }
    parameters = {
        "criterion": config.criterion,
        "max_iter": config.max_iter,
        "policy": config.policy,
        "has_header": config.has_header,
        "bin_width": config.bin_width,
    }
    _dump(_envelope(config, parameters, body), config.output)


def _cmd_truescore(config: RunConfig) -> None:
    m, result, scores, stats, report = _analyze(config.inputs[0], config)
    r = report.r_tt if config.reliability_kind == "classical" else report.r_gh
    if math.isnan(r):
        raise RangeError("selected reliability is undefined for this input")
    x = ExamineeScores(scores.combined())
    table = estimate_true_scores(x, stats, r, config.reliability_kind)
    if config.fmt == "csv":
        _emit(table.to_csv(), config.output)
        return
    comparison = compare_estimators(x, stats, report.r_tt, report.r_gh)
    percentile = None
    if config.percentile_of is not None:
        percentile = {
            "t": config.percentile_of,
            "rank": percentile_rank(table, config.percentile_of),
        }
    body = {
        "reliability": report.to_dict(),
        "table": table.to_dict(),
        "comparison": comparison.to_dict(),
        "percentile": percentile,
    }
    parameters = {
        "criterion": config.criterion,
        "reliability_kind": config.reliability_kind,
        "max_iter": config.max_iter,
        "policy": config.policy,
        "has_header": config.has_header,
        "percentile_of": config.percentile_of,
    }
    _dump(_envelope(config, parameters, body), config.output)


def _pick_weights(method: str, d, k: int):
    if method == "optimal":
        return optimal_weights(d)
    if method == "nonneg":
        return nonnegative_weights(d)
    if method == "eigen-cov":
        return eigen_weights(d, "cov_proportional")
    if method == "eigen-corr":
        return eigen_weights(d, "corr_scaled")
    return equal_weights(k)


def _cmd_battery(config: RunConfig) -> None:
    tests = []
    details = []
    for path in config.inputs:
        m, result, scores, stats, report = _analyze(path, config)
        tests.append(
            ComponentTest(
                scores=ExamineeScores(scores.combined()),
                S_X_sq=stats.variance,
                r_tt=report.r_tt,
                name=path,
            )
        )
        details.append(
            {
                "name": path,
                "N": stats.N,
                "n_reduced": stats.n,
                "abs_S": result.abs_S,
                "r_tt": report.r_tt,
                "r_gh": report.r_gh,
                "variance": stats.variance,
            }
        )
    battery = BatteryInput(tests=tuple(tests))
    d = covariance_matrix(battery)
    weights = _pick_weights(config.weights_method, d, battery.k)
    battery_report = weighted_reliability(battery, d, weights)
    body = {
        "battery": battery_report.to_dict(),
        "component_details": details,
    }
    parameters = {
        "criterion": config.criterion,
        "weights": config.weights_method,
        "max_iter": config.max_iter,
        "policy": config.policy,
        "has_header": config.has_header,
    }
    _dump(_envelope(config, parameters, body), config.output)


def _cmd_simulate(config: RunConfig) -> None:
    model = SimModel(kind=config.model, N=config.N, n=config.n, seed=config.seed)
    m = generate(model)
    write_score_matrix(m, config.output)
    meta = dict(model.metadata())
    meta["matrix_sha256"] = _sha256(config.output)
    parameters = {"model": config.model, "N": config.N, "n": config.n, "seed": config.seed}
    sidecar = _envelope(config, parameters, meta)
    _dump(sidecar, config.output + ".meta.json")


def _cmd_scale(config: RunConfig) -> None:
    rows = scaling_suite(list(config.sizes), config.model, config.seed)
    if config.fmt == "csv":
        cols = ["N", "n", "seed", "split_seconds", "total_seconds", "abs_S", "iterations", "r_tt"]
        lines = [",".join(cols)]
        for row in rows:
            lines.append(",".join(str(row[c]) for c in cols))
        _emit("\n".join(lines) + "\n", config.output)
        return
    parameters = {
        "model": config.model,
        "seed": config.seed,
        "sizes": [list(s) for s in config.sizes],
    }
    _dump(_envelope(config, parameters, {"rows": rows}), config.output)


_COMMANDS = {
    "split": _cmd_split,
    "reliability": _cmd_reliability,
    "truescore": _cmd_truescore,
    "battery": _cmd_battery,
    "simulate": _cmd_simulate,
    "scale": _cmd_scale,
}


def run(config: RunConfig) -> int:
    """Execute one command; raises ToolkitError subclasses on failure."""
    _COMMANDS[config.command](config)
    return 0


def _size_pair(text: str) -> tuple[int, int]:
    try:
        left, right = text.split(",")
        pair = (int(left), int(right))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N,n (e.g. 999,50), got {text!r}") from None
    if pair[0] < 2 or pair[1] < 2:
        raise argparse.ArgumentTypeError(f"need N >= 2 and n >= 2, got {text!r}")
    return pair


def _build_parser() -> _Parser:
    parser = _Parser(prog="splitrel", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"splitrel {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, formats=("json",)):
        p.add_argument("--output", help="write the report here instead of stdout")
        if len(formats) > 1:
            p.add_argument("--format", choices=formats, default="json", dest="fmt")

    def matrix_opts(p):
        p.add_argument("--input", required=True, help="CSV of 0/1 scores, rows are examinees")
        p.add_argument("--has-header", action="store_true", help="first row holds item ids")
        p.add_argument("--criterion", choices=("abs_S", "product"), default="abs_S")
        p.add_argument("--max-iter", type=int, default=None)
        p.add_argument("--policy", choices=("single", "all"), default="single")

    p = sub.add_parser("split", help="dichotomise a test into two parallel halves")
    matrix_opts(p)
    common(p, formats=("json", "csv"))

    p = sub.add_parser("reliability", help="split, then compute the reliability report")
    matrix_opts(p)
    p.add_argument("--bin-width", type=int, default=1, help="histogram bin width in score units")
    common(p)

    p = sub.add_parser("truescore", help="per-examinee true-score estimates")
    matrix_opts(p)
    p.add_argument(
        "--kind",
        choices=("classical", "split_half"),
        default="classical",
        dest="reliability_kind",
        help="which reliability to regress with",
    )
    p.add_argument("--percentile-of", type=float, default=None, metavar="T")
    common(p, formats=("json", "csv"))

    p = sub.add_parser("battery", help="battery reliability over several tests")
    p.add_argument("--inputs", required=True, nargs="+", help="one score CSV per test")
    p.add_argument("--has-header", action="store_true")
    p.add_argument("--criterion", choices=("abs_S", "product"), default="abs_S")
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--policy", choices=("single", "all"), default="single")
    p.add_argument("--weights", choices=_WEIGHT_METHODS, default="optimal", dest="weights_method")
    common(p)

    p = sub.add_parser("simulate", help="generate a synthetic score matrix")
    p.add_argument("--model", choices=("D1", "D2", "D3", "D4"), required=True)
    p.add_argument("--N", type=int, required=True, help="number of examinees")
    p.add_argument("--n", type=int, required=True, help="number of items")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--output", required=True, help="matrix CSV path; metadata sidecar gets .meta.json")

    p = sub.add_parser("scale", help="timing and reliability across matrix sizes")
    p.add_argument("--model", choices=("D1", "D2", "D3", "D4"), required=True)
    p.add_argument("--sizes", required=True, nargs="+", type=_size_pair, metavar="N,n")
    p.add_argument("--seed", type=int, required=True)
    common(p, formats=("json", "csv"))

    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    inputs: tuple[str, ...] = ()
    if getattr(args, "input", None) is not None:
        inputs = (args.input,)
    elif getattr(args, "inputs", None) is not None:
        inputs = tuple(args.inputs)
    if getattr(args, "seed", None) is not None and not 0 <= args.seed < 2**64:
        raise _UsageError(f"seed must be a 64-bit unsigned integer, got {args.seed}")
    if getattr(args, "bin_width", 1) < 1:
        raise _UsageError(f"bin width must be a positive integer, got {args.bin_width}")
    return RunConfig(
        command=args.command,
        inputs=inputs,
        output=getattr(args, "output", None),
        fmt=getattr(args, "fmt", "json"),
        criterion=getattr(args, "criterion", "abs_S"),
        reliability_kind=getattr(args, "reliability_kind", "classical"),
        seed=getattr(args, "seed", 0) or 0,
        bin_width=getattr(args, "bin_width", 1),
        max_iter=getattr(args, "max_iter", None),
        policy=getattr(args, "policy", "single"),
        has_header=getattr(args, "has_header", False),
        weights_method=getattr(args, "weights_method", "optimal"),
        model=getattr(args, "model", "D3"),
        N=getattr(args, "N", 0),
        n=getattr(args, "n", 0),
        sizes=tuple(getattr(args, "sizes", ()) or ()),
        percentile_of=getattr(args, "percentile_of", None),
    )


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        config = _config_from_args(args)
        return run(config)
    except ToolkitError as exc:
        print(f"error[{type(exc).__name__}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error[FileNotFoundError]: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error[{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
