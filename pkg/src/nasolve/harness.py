"""CLI front end and machine-readable convergence-history output.

Subcommands: ``solve`` (one problem, one configuration), ``sweep`` (vary a
problem parameter over a grid), ``compare`` (several configurations on one
problem), and ``verify`` (ad-hoc brute-force oracle checks).  Histories and
summaries are emitted as plot-ready CSV or JSON with floats printed at 17
significant digits, so identical experiment specs produce byte-identical
output.

Exit codes: 0 success, 1 usage error, 2 when every cell of an experiment
failed to converge.
"""

import argparse
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import oracle
from .problem import PROBLEM_IDS, problem_from_id
from .solver import ArmijoConfig, SolverConfig, gamma_safeguard, solve

__all__ = [
    "CSV_COLUMNS",
    "ExperimentSpec",
    "config_label",
    "emit_history",
    "run_experiment",
    "main",
]

CSV_COLUMNS = (
    "k",
    "residual_norm",
    "step_norm",
    "gamma",
    "lambda",
    "eta",
    "r_used",
    "beta",
    "theta",
    "theta_lambda",
    "decision",
    "q",
)

SUMMARY_COLUMNS = ("param", "config", "status", "iterations", "q_term")

X0_CHOICES = ("zero", "ones", "default", "builtin_default")


def _fmt(value):
    """Float to text at 17 significant digits (exact round trip)."""
    return format(float(value), ".17g")


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: a problem, configurations to compare, and output.

    ``x0`` selects the initial iterate: ``zero``, ``ones``, ``default``
    (the problem's documented built-in start), or ``perturbed:IDX:VAL``
    which takes the built-in start with entry IDX set to VAL.  ``sweep``
    is an optional (parameter name, start, end, step) grid; each cell is
    cold-started from the same initial iterate unless ``warm_start`` is
    set, in which case cells are warm-started from the previous converged
    solution (natural continuation).  ``seed`` is reserved for randomized
    initial-iterate perturbations; the built-in selectors are
    deterministic, so runs with equal specs are byte-identical.
    """

    problem: str
    params: dict = field(default_factory=dict)
    configs: tuple = (SolverConfig(),)
    x0: str = "default"
    sweep: tuple | None = None
    fmt: str = "csv"
    output: str = "out"
    seed: int = 0
    warm_start: bool = False

    def __post_init__(self):
        if not self.configs:
            raise ValueError("at least one solver configuration is required")
        if self.fmt not in ("csv", "json"):
            raise ValueError(f"format must be csv or json, got {self.fmt!r}")
        if self.sweep is not None:
            name, start, end, step = self.sweep
            if not step > 0.0:
                raise ValueError("sweep step must be positive")
            if not start <= end:
                raise ValueError("sweep start must not exceed end")
        _parse_x0_selector(self.x0)


def _parse_x0_selector(selector):
    if selector in X0_CHOICES:
        return selector, None, None
    if selector.startswith("perturbed:"):
        parts = selector.split(":")
        if len(parts) == 3:
            return "perturbed", int(parts[1]), float(parts[2])
    raise ValueError(
        f"bad initial-iterate selector {selector!r}; "
        "use zero | ones | default | perturbed:IDX:VAL"
    )


def initial_iterate(problem, selector):
    """Resolve an initial-iterate selector against a problem."""
    kind, idx, val = _parse_x0_selector(selector)
    if kind == "zero":
        return np.zeros(problem.dimension)
    if kind == "ones":
        return np.ones(problem.dimension)
    if kind in ("default", "builtin_default"):
        return problem.default_start.copy()
    x0 = problem.default_start.copy()
    if not 0 <= idx < problem.dimension:
        raise ValueError(f"perturbation index {idx} out of range")
    x0[idx] = val
    return x0


def config_label(cfg):
    """Short deterministic label for a configuration, used in file names."""
    if cfg.method == "newton":
        base = "newton"
    elif cfg.method == "na":
        base = f"na_m{cfg.m}"
        if cfg.switch_to_m1_at is not None:
            base += f"_sw{cfg.switch_to_m1_at:g}"
    elif cfg.method == "gna":
        base = f"gna_r{cfg.r:g}"
    else:
        base = f"agna_rhat{cfg.r_hat:g}"
    if cfg.method in ("gna", "agna") and cfg.activation == "asymptotic":
        base += f"_asym{cfg.threshold:g}"
    if cfg.linesearch is not None:
        base += "_ls"
    return base


def history_rows(report):
    """Per-iteration rows matching CSV_COLUMNS (None for missing values)."""
    rows = []
    norms = [rec.step_norm for rec in report.records]
    for i, rec in enumerate(report.records):
        q = None
        if i > 0 and 0.0 < norms[i - 1] < 1.0 and 0.0 < norms[i] < 1.0:
            q = math.log(norms[i]) / math.log(norms[i - 1])
        gamma = rec.gamma
        if isinstance(gamma, np.ndarray):
            gamma = [float(g) for g in gamma]
        elif gamma is not None:
            gamma = float(gamma)
        rows.append(
            {
                "k": rec.k,
                "residual_norm": rec.residual_norm,
                "step_norm": rec.step_norm,
                "gamma": gamma,
                "lambda": rec.lam,
                "eta": rec.eta,
                "r_used": rec.r_used,
                "beta": rec.beta,
                "theta": rec.theta,
                "theta_lambda": rec.theta_lambda,
                "decision": rec.decision.case if rec.decision is not None else None,
                "q": q,
            }
        )
    return rows


def _csv_cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, list):
        return ";".join(_fmt(v) for v in value)
    if not np.isfinite(value):
        return ""
    return _fmt(value)


def _json_value(value):
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, list):
        return "[" + ", ".join(_json_value(v) for v in value) + "]"
    if not np.isfinite(value):
        return "null"
    return _fmt(value)


def _json_object(row, keys):
    return "{" + ", ".join(f'"{k}": {_json_value(row[k])}' for k in keys) + "}"


def emit_history(report, fmt="csv"):
    """Serialize a convergence history to CSV or JSON bytes.

    CSV columns follow CSV_COLUMNS in order, with missing values as empty
    fields and the depth-m gamma vector semicolon-joined.  JSON mirrors the
    field names 1:1 (one object per iteration, missing values as null).
    Floats are printed with 17 significant digits.
    """
    rows = history_rows(report)
    if fmt == "csv":
        lines = [",".join(CSV_COLUMNS)]
        lines.extend(",".join(_csv_cell(row[c]) for c in CSV_COLUMNS) for row in rows)
        return ("\n".join(lines) + "\n").encode()
    if fmt == "json":
        body = ",\n  ".join(_json_object(row, CSV_COLUMNS) for row in rows)
        return (f"[\n  {body}\n]\n" if rows else "[]\n").encode()
    raise ValueError(f"format must be csv or json, got {fmt!r}")


def _sweep_values(sweep):
    name, start, end, step = sweep
    npts = int(math.floor((end - start) / step + 1e-9)) + 1
    return name, [start + i * step for i in range(npts)]


def _emit_summary(rows, fmt):
    if fmt == "csv":
        lines = [",".join(SUMMARY_COLUMNS)]
        lines.extend(
            ",".join(_csv_cell(row[c]) for c in SUMMARY_COLUMNS) for row in rows
        )
        return ("\n".join(lines) + "\n").encode()
    body = ",\n  ".join(_json_object(row, SUMMARY_COLUMNS) for row in rows)
    return (f"[\n  {body}\n]\n" if rows else "[]\n").encode()


def run_experiment(spec):
    """Run every (sweep value x config) cell of an experiment.

    Writes one history file per cell plus a summary table (status,
    iterations, q_term) under ``spec.output``.  Cells run in a fixed order
    and all floats are formatted at 17 significant digits, so identical
    specs produce byte-identical files.  Per-cell solver failures are
    recorded in the summary, not fatal.

    Returns ``(exit_code, written_paths)`` with exit code 0 on success and
    2 when no cell converged.
    """
    outdir = Path(spec.output)
    outdir.mkdir(parents=True, exist_ok=True)
    ext = spec.fmt

    if spec.sweep is not None:
        sweep_name, values = _sweep_values(spec.sweep)
        cells = [(v, {**spec.params, sweep_name: v}) for v in values]
    else:
        cells = [(None, dict(spec.params))]

    written = []
    summary = []
    warm = {}
    for i, (value, params) in enumerate(cells):
        problem = problem_from_id(spec.problem, params)
        for j, cfg in enumerate(spec.configs):
            x0 = warm.get(j) if spec.warm_start else None
            if x0 is None:
                x0 = initial_iterate(problem, spec.x0)
            report = solve(problem, x0, cfg)
            if spec.warm_start and report.status == "converged":
                warm[j] = report.x_final
            name = f"history_p{i:03d}_c{j}_{config_label(cfg)}.{ext}"
            path = outdir / name
            path.write_bytes(emit_history(report, ext))
            written.append(path)
            summary.append(
                {
                    "param": value,
                    "config": config_label(cfg),
                    "status": report.status,
                    "iterations": report.iterations,
                    "q_term": report.q_term,
                }
            )
    summary_path = outdir / f"summary.{ext}"
    summary_path.write_bytes(_emit_summary(summary, ext))
    written.append(summary_path)
    all_failed = all(row["status"] != "converged" for row in summary)
    return (2 if all_failed else 0), written


def _add_solver_flags(sub):
    sub.add_argument("--problem", required=True, choices=PROBLEM_IDS)
    sub.add_argument(
        "--param",
        action="append",
        default=[],
        metavar="K=V",
        help="problem parameter, e.g. c=0.5 or n=100 (repeatable)",
    )
    sub.add_argument(
        "--method",
        action="append",
        default=[],
        choices=("newton", "na", "gna", "agna"),
        help="solver method (repeatable for sweep/compare)",
    )
    sub.add_argument("--m", type=int, default=1, help="Anderson depth (method na)")
    sub.add_argument("--r", type=float, default=0.5, help="fixed safeguard parameter (gna)")
    sub.add_argument("--rhat", type=float, default=0.5, help="adaptive safeguard cap (agna)")
    sub.add_argument(
        "--activation",
        choices=("always", "preasymptotic", "asymptotic"),
        default="always",
    )
    sub.add_argument(
        "--threshold",
        type=float,
        default=1e-1,
        help="step-norm threshold for asymptotic activation",
    )
    sub.add_argument(
        "--switch-to-m1-at",
        type=float,
        default=None,
        help="step-norm threshold at which NA(m) drops to safeguarded depth 1",
    )
    sub.add_argument("--tol", type=float, default=1e-10)
    sub.add_argument("--max-iter", type=int, default=200)
    sub.add_argument(
        "--linesearch",
        default="none",
        metavar="none|armijo[:C1:SHRINK:MAXBT]",
        help="optional Armijo backtracking on the composite step",
    )
    sub.add_argument(
        "--x0",
        default="default",
        help="initial iterate: zero | ones | default | perturbed:IDX:VAL",
    )
    sub.add_argument("--output", default="out", help="output directory")
    sub.add_argument("--format", choices=("csv", "json"), default="csv")
    sub.add_argument("--seed", type=int, default=0)


def _parse_params(pairs):
    params = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise ValueError(f"bad --param {pair!r}; expected K=V")
        params[key] = value
    return params


def _parse_linesearch(text):
    if text == "none":
        return None
    parts = text.split(":")
    if parts[0] != "armijo":
        raise ValueError(f"bad --linesearch {text!r}")
    if len(parts) == 1:
        return ArmijoConfig()
    if len(parts) == 4:
        return ArmijoConfig(
            c1=float(parts[1]), shrink=float(parts[2]), max_backtracks=int(parts[3])
        )
    raise ValueError(f"bad --linesearch {text!r}")


def _configs_from_args(args):
    methods = args.method or ["newton"]
    linesearch = _parse_linesearch(args.linesearch)
    configs = []
    for method in methods:
        configs.append(
            SolverConfig(
                method=method,
                m=args.m if method == "na" else 1,
                r=args.r,
                r_hat=args.rhat,
                activation=args.activation,
                threshold=args.threshold,
                switch_to_m1_at=args.switch_to_m1_at if method == "na" else None,
                tol=args.tol,
                max_iter=args.max_iter,
                linesearch=linesearch,
            )
        )
    return tuple(configs)


def _parse_sweep(text):
    parts = text.split(":")
    if len(parts) != 4:
        raise ValueError(f"bad --sweep {text!r}; expected NAME:START:END:STEP")
    return parts[0], float(parts[1]), float(parts[2]), float(parts[3])


def _spec_from_args(args, sweep=None):
    return ExperimentSpec(
        problem=args.problem,
        params=_parse_params(args.param),
        configs=_configs_from_args(args),
        x0=args.x0,
        sweep=sweep,
        fmt=args.format,
        output=args.output,
        seed=args.seed,
        warm_start=getattr(args, "warm_start", False),
    )


def _print_summary(spec, code, written):
    summary_path = written[-1]
    print(summary_path.read_bytes().decode(), end="")
    print(f"wrote {len(written)} file(s) under {spec.output}")
    if code == 2:
        print("no cell converged", file=sys.stderr)


def _cmd_solve(args):
    if len(args.method) > 1:
        raise ValueError("solve takes a single --method; use compare for several")
    spec = _spec_from_args(args)
    code, written = run_experiment(spec)
    _print_summary(spec, code, written)
    return code


def _cmd_sweep(args):
    spec = _spec_from_args(args, sweep=_parse_sweep(args.sweep))
    code, written = run_experiment(spec)
    _print_summary(spec, code, written)
    return code


def _cmd_compare(args):
    if not args.method:
        raise ValueError("compare needs at least one --method")
    spec = _spec_from_args(args)
    code, written = run_experiment(spec)
    _print_summary(spec, code, written)
    return code


def _cmd_verify(args):
    if args.check == "safeguard":
        lam_oracle = oracle.safeguard_case_oracle(args.gamma, args.beta)
        # realize the requested beta through the solver-facing interface
        w_prev = np.array([1.0, 0.0])
        w_next = np.array([args.beta / 0.5, 0.0])
        lam_solver = gamma_safeguard(w_next, w_prev, args.gamma, 0.5).lambda_value
        print(f"gamma={_fmt(args.gamma)} beta={_fmt(args.beta)}")
        print(f"solver lambda = {_fmt(lam_solver)}")
        print(f"oracle lambda = {_fmt(lam_oracle)}")
        return 0 if abs(lam_solver - lam_oracle) <= 1e-14 else 2
    if args.check == "gamma-grid":
        from .solver import anderson_gamma_1

        rng = np.random.default_rng(args.seed)
        worst = 0.0
        for _ in range(args.trials):
            w_next = rng.standard_normal(4)
            w_prev = rng.standard_normal(4)
            closed = anderson_gamma_1(w_next, w_prev)
            gridded = oracle.gamma_grid_oracle(
                w_next, w_prev, closed - 1.0, closed + 1.0, args.step
            )
            worst = max(worst, abs(closed - gridded))
        print(f"max |closed form - grid oracle| over {args.trials} trials: {_fmt(worst)}")
        return 0 if worst <= args.step else 2
    # fold
    lam = oracle.fold_sweep(args.n, args.start, args.end, args.step)
    print(f"last converged lambda: {lam if lam is None else _fmt(lam)}")
    return 0 if lam is not None else 2


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nasolve",
        description="Newton / Newton-Anderson solver benchmark harness",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p_solve = subs.add_parser("solve", help="run one configuration on one problem")
    _add_solver_flags(p_solve)

    p_sweep = subs.add_parser("sweep", help="sweep a problem parameter over a grid")
    _add_solver_flags(p_sweep)
    p_sweep.add_argument(
        "--sweep", required=True, metavar="NAME:START:END:STEP", help="parameter grid"
    )
    p_sweep.add_argument(
        "--warm-start",
        action="store_true",
        help="warm-start each cell from the previous converged solution",
    )

    p_cmp = subs.add_parser("compare", help="compare several methods on one problem")
    _add_solver_flags(p_cmp)

    p_ver = subs.add_parser("verify", help="ad-hoc brute-force oracle checks")
    p_ver.add_argument("check", choices=("safeguard", "gamma-grid", "fold"))
    p_ver.add_argument("--gamma", type=float, default=0.5)
    p_ver.add_argument("--beta", type=float, default=0.25)
    p_ver.add_argument("--trials", type=int, default=100)
    p_ver.add_argument("--step", type=float, default=1e-4)
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--n", type=int, default=200)
    p_ver.add_argument("--start", type=float, default=3.0)
    p_ver.add_argument("--end", type=float, default=3.6)

    return parser


_COMMANDS = {
    "solve": _cmd_solve,
    "sweep": _cmd_sweep,
    "compare": _cmd_compare,
    "verify": _cmd_verify,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; report those as 1
        return 0 if exc.code in (0, None) else 1
    try:
        return _COMMANDS[args.command](args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
