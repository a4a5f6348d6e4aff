"""
Command-line front end.

Subcommands::

    bregdiv dist      distance between two samples (CSV) or two summaries (JSON)
    bregdiv roc       ROC curve of a distance over null/alternative pseudo pairs
    bregdiv select    pick k or p by AUC over pseudo pairs
    bregdiv test      calibrated two-sample test
    bregdiv simulate  Monte Carlo study on the built-in Gaussian presets

Results go to stdout (or ``--out``) as JSON, except ROC curves which are CSV.
Errors are reported as a JSON object on stderr, with exit code 2 for invalid
input, 3 for numerical failures, 4 when no grid parameter is usable and 1 for
anything unexpected.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .empirical import as_sample, energy_distance, sample_moments
from .errors import (
    BregdivError,
    InconsistentArity,
    InfeasibleError,
    NumericalError,
    ParameterError,
    ParseError,
    ValidationError,
)
from .gaussian_divergences import DistanceSpec, Family, GaussianSummary, evaluate
from .spectral import EigenFloor
from .two_sample import (
    GRID_FAMILIES,
    H0,
    H1,
    PseudoPairs,
    SamplingScheme,
    TestConfig,
    _spec_distances,
    default_grid,
    roc,
    run_test,
    select_parameter,
    simulate_example,
    simulate_test_rates,
)

EXIT_OK, EXIT_UNEXPECTED, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_INFEASIBLE = 0, 1, 2, 3, 4

FAMILY_ALIASES = {
    "logphi-p": Family.LOGPHIP_JB,
    "logsimplicial": Family.LOGSIMPLICIAL_JB,
    "b": Family.BHATTACHARYYA,
}

DEFAULT_SIM_DISTANCES = ("bhattacharyya", "logphi-p-jb:0.5", "logsimplicial-jb:3", "logsimplicial-br:3")


# input


@dataclass(frozen=True)
class DatasetCsv:
    """Where and how to read a CSV of observations (rows) by features (columns).

    ``class_column`` is a 0-based column index, or a column name when the file
    has a header.
    """

    path: str
    has_header: bool = False
    class_column: int | str | None = None
    delimiter: str = ","


def _class_index(cfg: DatasetCsv, header: list[str] | None, width: int) -> int | None:
    col = cfg.class_column
    if col is None:
        return None
    if isinstance(col, str) and not col.lstrip("-").isdigit():
        if header is None or col not in header:
            raise ParameterError(f"class column {col!r} not found in the header")
        return header.index(col)
    col = int(col)
    if not -width <= col < width:
        raise ParameterError(f"class column {col} out of range for {width} columns")
    return col % width


def load_csv(cfg: DatasetCsv) -> list[tuple[str | None, np.ndarray]]:
    """Read a CSV into one sample per class label, in order of first appearance.

    Without a class column the whole file is one sample with label ``None``.
    Blank lines are skipped. Row numbers in errors count file lines from 1.
    """
    with open(cfg.path, newline="") as fh:
        rows = list(csv.reader(fh, delimiter=cfg.delimiter))
    header = None
    start = 0
    if cfg.has_header:
        if not rows:
            raise ParseError(f"{cfg.path}: missing header", row=1)
        header = [h.strip() for h in rows[0]]
        start = 1
    width = None
    cls = None
    groups: dict = {}
    for lineno, row in enumerate(rows[start:], start=start + 1):
        if not row or all(not c.strip() for c in row):
            continue
        if width is None:
            width = len(row)
            cls = _class_index(cfg, header, width)
        elif len(row) != width:
            raise InconsistentArity(
                f"{cfg.path}: row {lineno} has {len(row)} fields, expected {width}"
            )
        values = []
        for j, cell in enumerate(row):
            if j == cls:
                continue
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(
                    f"{cfg.path}: row {lineno}, column {j + 1}: cannot parse {cell!r} as a number",
                    row=lineno,
                    column=j + 1,
                ) from None
            if not math.isfinite(v):
                raise ParseError(
                    f"{cfg.path}: row {lineno}, column {j + 1}: non-finite value {cell!r}",
                    row=lineno,
                    column=j + 1,
                )
            values.append(v)
        label = row[cls].strip() if cls is not None else None
        groups.setdefault(label, []).append(values)
    if not groups:
        raise ParseError(f"{cfg.path}: no data rows")
    return [(label, np.array(v, dtype=float)) for label, v in groups.items()]


def load_summary(path) -> GaussianSummary:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc.msg})", row=exc.lineno, column=exc.colno) from None
    if not isinstance(data, dict):
        raise ParseError(f"{path}: expected an object with 'mean' and 'cov'")
    return GaussianSummary.from_dict(data)


def write_summary(summary: GaussianSummary, path) -> None:
    # json writes floats as the shortest decimal that round-trips
    Path(path).write_text(json.dumps(summary.to_dict(), indent=2) + "\n")


def _is_json(path) -> bool:
    return str(path).lower().endswith(".json")


def _select_class(groups, label, path):
    if label is None:
        if len(groups) != 1:
            raise ParameterError(f"{path} has {len(groups)} classes; choose one with --x-label/--y-label")
        return groups[0][1]
    for lab, sample in groups:
        if lab == label:
            return sample
    raise ParameterError(f"class {label!r} not found in {path}; available: {[g[0] for g in groups]}")


def _read_samples(args):
    """(x, y) as raw samples, or as GaussianSummary objects for JSON inputs."""
    x_path = args.x
    y_path = args.y if args.y is not None else args.x
    if x_path is None:
        raise ParameterError("--x is required")
    if _is_json(x_path) or _is_json(y_path):
        if not (_is_json(x_path) and _is_json(y_path)):
            raise ParameterError("--x and --y must both be CSV files or both be JSON summaries")
        return load_summary(x_path), load_summary(y_path), True
    if args.y is None and args.class_column is None:
        raise ParameterError("--y is required unless --class-column splits --x into classes")
    out = []
    for path, label in ((x_path, args.x_label), (y_path, args.y_label)):
        cfg = DatasetCsv(path, args.header, _column_arg(args.class_column), args.delimiter)
        out.append(as_sample(_select_class(load_csv(cfg), label, path), Path(path).name))
    return out[0], out[1], False


def _column_arg(value):
    if value is None:
        return None
    return int(value) if value.lstrip("-").isdigit() else value


# distance flags


def parse_family(name: str) -> Family:
    key = name.strip().lower()
    if key in FAMILY_ALIASES:
        return FAMILY_ALIASES[key]
    try:
        return Family(key)
    except ValueError:
        choices = [f.value for f in Family] + list(FAMILY_ALIASES)
        raise ParameterError(f"unknown family {name!r}; choose from {choices}") from None


def _spec_from_args(args, family: Family) -> DistanceSpec:
    name = family.parameter_name
    value = {"p": args.p, "k": args.k, "delta": args.delta}.get(name) if name else None
    if name == "delta" and value is None:
        value = 1.0
    if name is None and any(v is not None for v in (args.p, args.k, args.delta)):
        raise ParameterError(f"family {family.value} takes no parameter")
    floor = EigenFloor.clamp(args.floor) if getattr(args, "floor", None) is not None else EigenFloor("reject")
    return DistanceSpec(family, value, allow_negative_p=args.unsafe_negative_p, floor=floor)


def parse_grid(text: str | None, family: Family, d: int) -> list:
    if text is None or text == "default":
        return default_grid(family, d)
    items = [t for t in text.replace(" ", "").split(",") if t]
    if not items:
        raise ParameterError("--grid is empty")
    try:
        if family.parameter_name == "k":
            return [int(t) for t in items]
        return [float(t) for t in items]
    except ValueError:
        raise ParameterError(f"cannot parse --grid {text!r}") from None


def parse_distance(text: str) -> DistanceSpec:
    """``family`` or ``family:param``, e.g. ``logsimplicial-jb:3``."""
    name, _, param = text.partition(":")
    family = parse_family(name)
    value = None
    if param:
        try:
            value = int(param) if family.parameter_name == "k" else float(param)
        except ValueError:
            raise ParameterError(f"cannot parse parameter in {text!r}") from None
    elif family is Family.ENERGY:
        value = 1.0
    return DistanceSpec(family, value)


def _scheme(args) -> SamplingScheme:
    if args.scheme == "bootstrap":
        return SamplingScheme.bootstrap()
    return SamplingScheme.without_replacement(args.r)


def _require_seed(args):
    if args.seed is None:
        raise ParameterError(f"--seed is required for '{args.command}'")
    if not 0 <= args.seed < 2**64:
        raise ParameterError("--seed must be an unsigned 64-bit integer")
    return args.seed


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_json(obj, out) -> None:
    _emit(json.dumps(_jsonable(obj), indent=2, allow_nan=False) + "\n", out)


# commands


def cmd_dist(args) -> int:
    family = parse_family(args.family)
    spec = _spec_from_args(args, family)
    x, y, summaries = _read_samples(args)
    if summaries:
        value = evaluate(spec, x, y)
    elif family is Family.ENERGY:
        value = energy_distance(x, y, spec.param)
    else:
        value = evaluate(spec, sample_moments(x), sample_moments(y))
    params = {family.parameter_name: spec.param} if family.parameter_name else {}
    _emit_json({"family": family.value, "params": params, "value": value}, args.out)
    return EXIT_OK


def _samples_only(args):
    x, y, summaries = _read_samples(args)
    if summaries:
        raise ParameterError(f"'{args.command}' resamples observations; it needs CSV inputs")
    return x, y


def _N(args, x) -> int:
    N = args.N if args.N is not None else len(x)
    if N < 10:
        raise ParameterError(f"N must be >= 10, got {N}")
    return N


def cmd_roc(args) -> int:
    seed = _require_seed(args)
    family = parse_family(args.family)
    spec = _spec_from_args(args, family)
    x, y = _samples_only(args)
    spec.check_dim(x.shape[1])
    pairs = PseudoPairs(x, y, _scheme(args), _N(args, x), seed)
    d0 = _spec_distances(pairs, H0, spec, args.unbiased_phi_k)
    d1 = _spec_distances(pairs, H1, spec, args.unbiased_phi_k)
    d0, d1 = d0[np.isfinite(d0)], d1[np.isfinite(d1)]
    curve = roc(d0, d1)
    _emit(curve.to_csv(), args.out)
    if args.out:
        _emit_json({"distance": spec.label(), "auc": curve.auc, "dropped_pairs": int(2 * pairs.N - d0.size - d1.size)}, None)
    return EXIT_OK


def _grid_family(args) -> Family:
    family = parse_family(args.family)
    if family not in GRID_FAMILIES:
        raise ParameterError(f"family {family.value} has no parameter to select; use one of {[f.value for f in GRID_FAMILIES]}")
    return family


def cmd_select(args) -> int:
    seed = _require_seed(args)
    family = _grid_family(args)
    x, y = _samples_only(args)
    grid = parse_grid(args.grid, family, x.shape[1])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        best, table = select_parameter(
            x, y, family, grid, _scheme(args), _N(args, x), seed, args.unbiased_phi_k
        )
    _emit_json(
        {
            "family": family.value,
            "selected": best,
            "auc_by_param": [{"param": k, "auc": v} for k, v in table.items()],
        },
        args.out,
    )
    return EXIT_OK


def cmd_test(args) -> int:
    seed = _require_seed(args)
    x, y = _samples_only(args)
    common = dict(
        N=_N(args, x),
        scheme=_scheme(args),
        significance=args.significance,
        master_seed=seed,
        unbiased_phi_k=args.unbiased_phi_k,
    )
    if args.grid is not None:
        family = _grid_family(args)
        config = TestConfig(family=family, grid=parse_grid(args.grid, family, x.shape[1]), **common)
        label = f"{family.value}(selected)"
    else:
        spec = _spec_from_args(args, parse_family(args.family))
        config = TestConfig(spec=spec, **common)
        label = spec.label()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        result = run_test(x, y, config)
    _emit_json({"distance": label, **result.to_dict()}, args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    seed = _require_seed(args)
    param = args.param if args.param is not None else (1.4 if args.example == 1 else math.pi / 16)
    if args.table:
        configs = [
            TestConfig(spec=DistanceSpec(Family.BHATTACHARYYA), N=args.N, scheme=_scheme(args), significance=args.significance),
            TestConfig(family=Family.LOGPHIP_BR, N=args.N, scheme=_scheme(args), significance=args.significance),
            TestConfig(family=Family.LOGSIMPLICIAL_BR, N=args.N, scheme=_scheme(args), significance=args.significance),
        ]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rates = simulate_test_rates(args.example, param, configs, args.n, args.d, args.reps, seed, args.workers)
        _emit_json({"example": args.example, "param": param, "reps": args.reps, "rates": rates}, args.out)
        return EXIT_OK
    specs = [parse_distance(t) for t in (args.distance or DEFAULT_SIM_DISTANCES)]
    res = simulate_example(args.example, param, args.n, args.d, args.reps, specs, seed, args.significance)
    table = {
        label: {"auc": r["auc"], "fp": r["fp"], "tp": r["tp"], "tau": r["tau"]} for label, r in res.items()
    }
    _emit_json({"example": args.example, "param": param, "reps": args.reps, "distances": table}, args.out)
    if args.roc_dir:
        folder = Path(args.roc_dir)
        folder.mkdir(parents=True, exist_ok=True)
        for label, r in res.items():
            name = label.replace("(", "_").replace(")", "").replace("=", "")
            (folder / f"{name}.csv").write_text(r["roc"].to_csv())
    return EXIT_OK


# parser


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage errors through the JSON error channel."""

    def error(self, message):
        raise ParameterError(message)


def _add_inputs(p):
    p.add_argument("--x", help="first sample (CSV) or summary (.json)")
    p.add_argument("--y", help="second sample (CSV) or summary (.json); defaults to --x with --class-column")
    p.add_argument("--header", action="store_true", help="CSV files start with a header row")
    p.add_argument("--delimiter", default=",", help="CSV field separator (default ',')")
    p.add_argument("--class-column", help="column holding class labels (0-based index or header name)")
    p.add_argument("--x-label", help="class label to use as the first sample")
    p.add_argument("--y-label", help="class label to use as the second sample")


def _add_distance(p, required=True):
    p.add_argument("--family", required=required, help="distance family: " + ", ".join(f.value for f in Family))
    p.add_argument("--p", type=float, help="exponent of log phi_p (p < 1)")
    p.add_argument("--k", type=int, help="order of log Phi_k (1 <= k <= d)")
    p.add_argument("--delta", type=float, help="energy distance exponent in (0, 2] (default 1)")
    p.add_argument("--unsafe-negative-p", action="store_true", help="allow p < 0")
    p.add_argument("--floor", type=float, help="clamp eigenvalues to this floor instead of rejecting singular covariances")


def _add_resampling(p):
    p.add_argument("--N", type=int, help="pseudo pairs per hypothesis (default: size of --x)")
    p.add_argument("--r", type=int, default=5, help="points dropped per pseudo sample (default 5)")
    p.add_argument("--scheme", choices=("subsample", "bootstrap"), default="subsample")
    p.add_argument("--seed", type=int, help="master seed (required)")
    p.add_argument("--unbiased-phi-k", action="store_true", help="bias-correct Phi_k inside log Phi_k BR distances")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bregdiv", description=__doc__.split("\n\n")[0].strip())
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("dist", help="distance between two inputs")
    _add_inputs(p)
    _add_distance(p)
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("roc", help="ROC curve (CSV) over pseudo pairs")
    _add_inputs(p)
    _add_distance(p)
    _add_resampling(p)
    p.add_argument("--out", help="write the CSV here (the AUC then goes to stdout)")
    p.set_defaults(func=cmd_roc)

    p = sub.add_parser("select", help="choose k or p by AUC")
    _add_inputs(p)
    p.add_argument("--family", required=True)
    p.add_argument("--grid", help="comma-separated candidates, or 'default'")
    _add_resampling(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("test", help="calibrated two-sample test")
    _add_inputs(p)
    _add_distance(p)
    p.add_argument("--grid", nargs="?", const="default", help="select the parameter over this grid first")
    _add_resampling(p)
    p.add_argument("--significance", type=float, default=0.05)
    p.add_argument("--out")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("simulate", help="Monte Carlo study on a Gaussian preset")
    p.add_argument("--example", type=int, choices=(1, 2), required=True)
    p.add_argument("--param", type=float, help="alpha for preset 1 (default 1.4), theta for preset 2 (default pi/16)")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--d", type=int, default=20)
    p.add_argument("--distance", action="append", help="family[:param]; repeatable")
    p.add_argument("--significance", type=float, default=0.05)
    p.add_argument("--seed", type=int)
    p.add_argument("--table", action="store_true", help="run the full test procedures and report FP/TP rates")
    p.add_argument("--N", type=int, help="pseudo pairs per test with --table (default n)")
    p.add_argument("--r", type=int, default=5)
    p.add_argument("--scheme", choices=("subsample", "bootstrap"), default="subsample")
    p.add_argument("--workers", type=int, default=1, help="worker processes with --table; results do not depend on it")
    p.add_argument("--roc-dir", help="also write one ROC CSV per distance into this folder")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)
    return parser


def _error(kind: str, exc: BaseException, code: int) -> int:
    payload = {"error": kind, "type": type(exc).__name__, "message": str(exc)}
    for attr in ("row", "column", "k", "argument"):
        if getattr(exc, attr, None) is not None:
            payload[attr] = getattr(exc, attr)
    sys.stderr.write(json.dumps(payload) + "\n")
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ValidationError as exc:
        return _error("validation", exc, EXIT_VALIDATION)
    except NumericalError as exc:
        return _error("numerical", exc, EXIT_NUMERICAL)
    except InfeasibleError as exc:
        return _error("infeasible", exc, EXIT_INFEASIBLE)
    except OSError as exc:
        return _error("validation", exc, EXIT_VALIDATION)
    except BregdivError as exc:
        return _error("unexpected", exc, EXIT_UNEXPECTED)
    except Exception as exc:  # noqa: BLE001 - last-resort contract
        return _error("unexpected", exc, EXIT_UNEXPECTED)


if __name__ == "__main__":
    sys.exit(main())
