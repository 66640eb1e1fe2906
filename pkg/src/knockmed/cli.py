"""Command-line interface: real-data analysis and simulation grids.

``knockmed analyze`` ingests a delimited numeric table with named column
roles, runs the selection pipeline, and writes a JSON report that fully
reproduces the run (config echo plus seed; no timestamps, so reports are
byte-identical across repeated runs and worker counts).

``knockmed simulate`` runs a replication grid over the synthetic
settings and writes per-replication and aggregate CSVs.

Exit codes: 0 success (an empty selection is success), 2 malformed
input data, 3 invalid configuration.
"""

from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from ._util import keyed_rng
from .effects import fit_outcome_forest, gformula_nie, product_effects
from .exceptions import KnockmedError
from .filtering import RULE_KNOCKOFF, RULE_KNOCKOFF_PLUS
from .forest import ForestConfig
from .pipeline import (
    PATHB_LASSO,
    PATHB_PLS,
    PATHB_RF,
    GkmsConfig,
    gkms,
    standardize_dataset,
)
from .simulation import (
    AGGREGATE_COLUMNS,
    REPLICATION_COLUMNS,
    SimulationConfig,
    aggregate_row,
    replication_rows,
    run_replications,
    write_csv,
)
from .statistics import CrossValidatedLambda, Dataset, FixedLambda

SEED_ENV_VAR = "KNOCKMED_SEED"

_RULES = {"knockoff": RULE_KNOCKOFF, "knockoff-plus": RULE_KNOCKOFF_PLUS}
_PATHB = {"lasso": PATHB_LASSO, "rf": PATHB_RF, "pls": PATHB_PLS}
_KEY_EFFECTS = 17


class InputDataError(Exception):
    """Malformed input file (exit 2)."""


class ConfigError(Exception):
    """Invalid configuration (exit 3)."""


def _jsonify(obj):
    """Make numpy scalars/arrays JSON-safe; non-finite floats become null."""
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer, int)) and not isinstance(obj, bool):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        val = float(obj)
        return val if np.isfinite(val) else None
    return obj


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {env!r}") from exc
    return 0


def _float_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    grp = parser.add_argument_group("selection configuration")
    grp.add_argument("--q", type=float, default=0.2, help="target FDR level (default 0.2)")
    grp.add_argument("--rule", choices=sorted(_RULES), default="knockoff-plus")
    grp.add_argument("--pathb", choices=sorted(_PATHB), default="lasso",
                     help="outcome-side statistic (default lasso)")
    grp.add_argument("--data-split", action="store_true",
                     help="score the two pathways on disjoint row halves")
    grp.add_argument("--split-fraction", type=float, default=0.5)
    grp.add_argument("--seed", type=int, default=None,
                     help=f"RNG seed (default: ${SEED_ENV_VAR} if set, else 0)")
    grp.add_argument("--shrinkage", type=float, default=None,
                     help="covariance shrinkage in [0,1] (default: automatic)")
    grp.add_argument("--trees", type=int, default=300, help="forest size for --pathb rf")
    grp.add_argument("--mtry", type=int, default=None)
    grp.add_argument("--min-node", type=int, default=5)
    grp.add_argument("--lasso-lambda", type=float, default=None,
                     help="fixed lasso penalty (default: cross-validated)")
    grp.add_argument("--cv-folds", type=int, default=10)
    grp.add_argument("--threads", type=int, default=1,
                     help="worker cap; results are identical for any value")


def _build_gkms_config(args, seed: int) -> GkmsConfig:
    if args.lasso_lambda is not None:
        lambda_rule = FixedLambda(args.lasso_lambda)
    else:
        lambda_rule = CrossValidatedLambda(folds=args.cv_folds)
    try:
        return GkmsConfig(
            q=args.q,
            rule=_RULES[args.rule],
            pathb_method=_PATHB[args.pathb],
            data_split=args.data_split,
            split_fraction=args.split_fraction,
            seed=seed,
            shrinkage=args.shrinkage,
            forest=ForestConfig(n_trees=args.trees, mtry=args.mtry, min_node=args.min_node),
            lambda_rule=lambda_rule,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _load_table(path: str, delimiter: str) -> pd.DataFrame:
    if not Path(path).exists():
        raise InputDataError(f"input file not found: {path}")
    try:
        return pd.read_csv(path, sep=delimiter)
    except Exception as exc:
        raise InputDataError(f"could not parse {path}: {exc}") from exc


def _numeric_column(df: pd.DataFrame, name: str) -> pd.Series:
    if name not in df.columns:
        raise InputDataError(f"column {name!r} is missing from the input file")
    try:
        return pd.to_numeric(df[name], errors="raise")
    except (ValueError, TypeError) as exc:
        raise InputDataError(f"column {name!r} is not numeric") from exc


def _resolve_roles(args, df: pd.DataFrame) -> tuple[str, str, list[str], list[str]]:
    exposure = args.exposure
    outcome = args.outcome
    covariates = [c for c in (args.covariates or "").split(",") if c]
    if args.mediators:
        mediators = [c for c in args.mediators.split(",") if c]
    elif args.mediator_prefix:
        taken = {exposure, outcome, *covariates}
        mediators = [c for c in df.columns
                     if c.startswith(args.mediator_prefix) and c not in taken]
        if not mediators:
            raise InputDataError(
                f"no columns match mediator prefix {args.mediator_prefix!r}"
            )
    else:
        raise ConfigError("one of --mediators or --mediator-prefix is required")

    roles = [exposure, outcome, *covariates, *mediators]
    seen = set()
    for name in roles:
        if name in seen:
            raise ConfigError(f"column {name!r} appears in more than one role")
        seen.add(name)
    return exposure, outcome, covariates, mediators


def cmd_analyze(args) -> int:
    seed = _resolve_seed(args)
    config = _build_gkms_config(args, seed)
    df = _load_table(args.input, args.delimiter)
    exposure, outcome, covariates, mediators = _resolve_roles(args, df)

    cols = {name: _numeric_column(df, name) for name in
            [exposure, outcome, *covariates, *mediators]}
    table = pd.DataFrame(cols)
    n_total = len(table)
    table = table.dropna()
    n_dropped = n_total - len(table)
    if len(table) < 2:
        raise InputDataError("fewer than 2 complete rows after dropping missing values")

    warnings = []
    if n_dropped:
        warnings.append(f"dropped {n_dropped} rows with missing values in role columns")
        print(f"note: dropped {n_dropped} incomplete rows", file=sys.stderr)

    data = Dataset(
        x=table[exposure].to_numpy(),
        v=table[covariates].to_numpy() if covariates else None,
        m=table[mediators].to_numpy(),
        y=table[outcome].to_numpy(),
    )
    if args.standardize:
        data = standardize_dataset(data)

    result = gkms(data, config, n_jobs=args.threads)
    report = result.report
    selected = report.selected

    effects_out = []
    if args.effects and selected.size:
        try:
            rng = keyed_rng(seed, _KEY_EFFECTS)
            if config.pathb_method == PATHB_RF:
                outcome_forest = fit_outcome_forest(
                    data, config=config.forest, rng=rng, n_jobs=args.threads
                )
                estimates = gformula_nie(
                    data, selected, outcome_forest,
                    mc_draws=args.mc_draws, bootstrap_reps=args.bootstrap_reps, rng=rng,
                )
            else:
                estimates = product_effects(
                    data, selected, bootstrap_reps=args.bootstrap_reps, rng=rng
                )
            for est in estimates:
                record = asdict(est)
                record["mediator"] = mediators[est.mediator_index]
                effects_out.append(record)
        except KnockmedError as exc:
            warnings.append(f"effect estimation skipped: {exc}")

    lambda_echo = (
        {"type": "fixed", "value": args.lasso_lambda}
        if args.lasso_lambda is not None
        else {"type": "cv", "folds": args.cv_folds}
    )
    document = {
        "config": {
            "input": args.input,
            "delimiter": args.delimiter,
            "exposure": exposure,
            "outcome": outcome,
            "covariates": covariates,
            "mediators": mediators,
            "q": config.q,
            "rule": config.rule,
            "pathb_method": config.pathb_method,
            "data_split": config.data_split,
            "split_fraction": config.split_fraction,
            "seed": seed,
            "shrinkage": config.shrinkage,
            "forest": {"n_trees": config.forest.n_trees, "mtry": config.forest.mtry,
                       "min_node": config.forest.min_node},
            "lambda": lambda_echo,
            "standardize": bool(args.standardize),
            "effects": bool(args.effects),
            "bootstrap_reps": args.bootstrap_reps,
            "mc_draws": args.mc_draws,
        },
        "selection": {
            "indices": selected,
            "names": [mediators[j] for j in selected],
            "threshold": report.threshold,
            "rule": report.rule,
            "fdp_estimate": report.fdp_estimate,
        },
        "statistics": [
            {
                "name": mediators[j],
                "z_a": result.patha.z[j],
                "z_a_tilde": result.patha.z_tilde[j],
                "z_b": result.pathb.z[j],
                "z_b_tilde": result.pathb.z_tilde[j],
                "w": result.w.w[j],
            }
            for j in range(len(mediators))
        ],
        "effects": effects_out,
        "warnings": warnings + report.warnings,
        "meta": {
            "package": "knockmed",
            "version": __version__,
            "n_rows_total": n_total,
            "n_rows_used": len(table),
            "n_rows_dropped": n_dropped,
        },
    }
    payload = json.dumps(_jsonify(document), indent=2) + "\n"
    if args.output:
        Path(args.output).write_text(payload)
    else:
        sys.stdout.write(payload)

    print(
        f"selected {selected.size} of {len(mediators)} mediators"
        + (f" (threshold {report.threshold:.6g})" if report.threshold else ""),
        file=sys.stderr,
    )
    return 0


def cmd_simulate(args) -> int:
    seed = _resolve_seed(args)
    config = _build_gkms_config(args, seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    rep_rows: list[dict] = []
    agg_rows: list[dict] = []
    grid = itertools.product(
        _float_list(args.rho), _float_list(args.a), _float_list(args.b)
    )
    for rho, a, b in grid:
        try:
            sim = SimulationConfig(
                n=args.n, p=args.p, rho=rho, a=a, b=b,
                setting=args.setting, replications=args.replications, seed=seed,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        metrics = run_replications(sim, config, n_jobs=args.threads)
        rep_rows.extend(replication_rows(sim, config, metrics))
        agg_rows.append(aggregate_row(sim, config, metrics))

    write_csv(out_dir / "replications.csv", rep_rows, REPLICATION_COLUMNS)
    write_csv(out_dir / "aggregate.csv", agg_rows, AGGREGATE_COLUMNS)

    header = f"{'setting':<12}{'n':>6}{'p':>5}{'rho':>6}{'a':>6}{'b':>6}  {'method':<14}{'fdr':>8}{'power':>8}"
    print(header)
    for row in agg_rows:
        print(
            f"{row['setting']:<12}{row['n']:>6}{row['p']:>5}{row['rho']:>6.2f}"
            f"{row['a']:>6.2f}{row['b']:>6.2f}  {row['method']:<14}"
            f"{row['fdr']:>8.3f}{row['power']:>8.3f}"
        )
    print(f"wrote {out_dir / 'replications.csv'} and {out_dir / 'aggregate.csv'}",
          file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="knockmed",
        description="Knockoff-based mediator selection with FDR control.",
    )
    parser.add_argument("--version", action="version", version=f"knockmed {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="select mediators from a delimited data file")
    pa.add_argument("--input", required=True, help="delimited text file with a header row")
    pa.add_argument("--delimiter", default=",")
    pa.add_argument("--exposure", required=True, help="exposure column name")
    pa.add_argument("--outcome", required=True, help="outcome column name")
    pa.add_argument("--covariates", default="", help="comma-separated covariate columns")
    pa.add_argument("--mediators", default=None, help="comma-separated mediator columns")
    pa.add_argument("--mediator-prefix", default=None,
                    help="treat every column with this prefix as a mediator")
    pa.add_argument("--output", default=None, help="report path (default: stdout)")
    pa.add_argument("--no-standardize", dest="standardize", action="store_false",
                    help="skip unit-RMS scaling of mediators and outcome")
    pa.add_argument("--no-effects", dest="effects", action="store_false",
                    help="skip post-selection effect estimation")
    pa.add_argument("--bootstrap-reps", type=int, default=100)
    pa.add_argument("--mc-draws", type=int, default=200)
    _add_config_flags(pa)
    pa.set_defaults(func=cmd_analyze)

    ps = sub.add_parser("simulate", help="run a synthetic replication grid")
    ps.add_argument("--setting", choices=["linear", "interaction", "cosine"],
                    default="linear")
    ps.add_argument("--n", type=int, default=1000)
    ps.add_argument("--p", type=int, default=100)
    ps.add_argument("--rho", default="0.1",
                    help="comma-separated correlation levels")
    ps.add_argument("--a", default="0.3",
                    help="comma-separated exposure-side signal sizes")
    ps.add_argument("--b", default="0.3",
                    help="comma-separated outcome-side signal sizes")
    ps.add_argument("--replications", type=int, default=10)
    ps.add_argument("--out-dir", required=True)
    _add_config_flags(ps)
    ps.set_defaults(func=cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except KnockmedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
