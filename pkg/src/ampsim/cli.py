"""Command-line front end.

Exit codes: 0 success, 1 domain error (infeasible model, degenerate
design, ...), 2 usage error. All file outputs are written atomically and
are byte-identical for a given --seed regardless of --threads.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import estimators as est
from . import experiment as exp
from . import realdata as rd
from .errors import AmpsimError, InfeasibleEstimator, ParseError
from .io_utils import atomic_write_text
from .sem import InterventionSpec, LinearSEM, feasible_interval, parse_spec
from .simulate import Dataset, SeedPolicy, draw_dataset, read_csv_columns


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so run_command owns the
    exit-code contract."""

    def error(self, message):
        raise _UsageError(message)


def _default_threads(value: str | None) -> int:
    if value is not None:
        return _positive_int(value, "--threads")
    env = os.environ.get("AMPSIM_THREADS")
    if env is not None:
        return _positive_int(env, "AMPSIM_THREADS")
    return os.cpu_count() or 1


def _positive_int(raw, what: str) -> int:
    try:
        v = int(raw)
    except (TypeError, ValueError):
        raise _UsageError(f"{what} must be an integer, got {raw!r}")
    if v < 1:
        raise _UsageError(f"{what} must be >= 1, got {v}")
    return v


def _load_sem(path: str) -> LinearSEM:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_spec(fh.read())
    except OSError as exc:
        raise _UsageError(f"cannot read spec file {path}: {exc}")


def _parse_edge(raw: str) -> tuple[str, str]:
    parts = raw.split(",")
    if len(parts) != 2 or not all(parts):
        raise _UsageError(f"--edge/--truth-edge must be FROM,TO, got {raw!r}")
    return parts[0], parts[1]


def _parse_values(raw: str) -> tuple[float, ...]:
    """Either a single number or an inclusive sweep START:STOP:STEP."""
    try:
        if ":" in raw:
            parts = raw.split(":")
            if len(parts) != 3:
                raise ValueError
            start, stop, step = (float(p) for p in parts)
            spec = InterventionSpec.sweep(("_", "__"), start, stop, step)
            return spec.values
        return (float(raw),)
    except (ValueError, ParseError):
        raise _UsageError(f"--values must be NUMBER or START:STOP:STEP, got {raw!r}")


def _parse_estimators(raw: str, sem: LinearSEM, treatment: str, outcome: str):
    """Comma-separated entries: ``naive``, ``adjusted[:R1+R2]``,
    ``oracle[:R1+R2]``, ``custom:R1+R2``. Bare ``adjusted`` means every
    observed non-treatment, non-outcome node; bare ``oracle`` means every
    such node including unobserved ones."""
    unobserved = sem.unobserved_names()
    others = [n for n in sem.node_names() if n not in (treatment, outcome)]
    specs = []
    for entry in raw.split(","):
        entry = entry.strip()
        if not entry:
            continue
        label, _, cols = entry.partition(":")
        regressors = tuple(c for c in cols.split("+") if c) if cols else None
        try:
            if label == "naive":
                if regressors:
                    raise _UsageError("naive takes no regressors")
                specs.append(est.EstimatorSpec.naive())
            elif label == "adjusted":
                if regressors is None:
                    regressors = tuple(n for n in others if n not in unobserved)
                bad = set(regressors) & unobserved
                if bad:
                    raise InfeasibleEstimator(
                        f"adjusted may not use unobserved nodes {sorted(bad)}; "
                        "use oracle for infeasible estimators"
                    )
                specs.append(est.EstimatorSpec.adjusted(regressors))
            elif label == "oracle":
                if regressors is None:
                    regressors = tuple(others)
                specs.append(est.EstimatorSpec.oracle(regressors))
            elif label == "custom":
                if regressors is None:
                    raise _UsageError("custom needs regressors, e.g. custom:BAV1+BAV2")
                specs.append(est.EstimatorSpec(label="custom", regressors=regressors))
            else:
                raise _UsageError(f"unknown estimator {label!r}")
        except ValueError as exc:
            raise _UsageError(str(exc))
    if not specs:
        raise _UsageError("--estimators selected nothing")
    return specs


def _json_interval(interval) -> dict:
    def side(v):
        return None if not np.isfinite(v) else v

    return {
        "edge": list(interval.edge),
        "lower": side(interval.lower),
        "upper": side(interval.upper),
        "binding_constraints": list(interval.binding_constraints),
    }


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def _cmd_simulate(args) -> int:
    sem = _load_sem(args.spec)
    treatment, outcome = _parse_edge(args.truth_edge)
    truth = sem.edge_coefficient(treatment, outcome)
    specs = _parse_estimators(args.estimators, sem, treatment, outcome)
    reps = _positive_int(args.reps, "--reps")
    n = _positive_int(args.n, "--n")
    threads = _default_threads(args.threads)
    reports = exp.run_replications(
        sem, n, reps, specs, truth, args.seed,
        treatment=treatment, outcome=outcome, threads=threads,
    )
    extra = {
        "command": "simulate",
        "spec_hash": sem.content_hash(),
        "n": n,
        "reps": reps,
        "seed": args.seed,
        "treatment": treatment,
        "outcome": outcome,
        "truth": truth,
    }
    payload = exp.reports_to_json(reports, extra)
    if args.out_json:
        atomic_write_text(args.out_json, payload)
    else:
        sys.stdout.write(payload)
    if args.out_csv:
        atomic_write_text(args.out_csv, exp.reports_to_csv(reports))
    return 0


def _cmd_intervene(args) -> int:
    sem = _load_sem(args.spec)
    edge = _parse_edge(args.edge)
    treatment, outcome = _parse_edge(args.truth_edge)
    truth = sem.edge_coefficient(treatment, outcome)
    specs = _parse_estimators(args.estimators, sem, treatment, outcome)
    values = _parse_values(args.values)
    modes = []
    for m in args.modes.split(","):
        m = m.strip()
        if m not in ("fixed", "floating"):
            raise _UsageError(f"--modes entries must be fixed or floating, got {m!r}")
        modes.append(m + "-variance")
    reps = _positive_int(args.reps, "--reps")
    n = _positive_int(args.n, "--n")
    threads = _default_threads(args.threads)
    reports = exp.intervention_experiment(
        sem, InterventionSpec(edge, values, modes[0]), modes, n, reps, specs,
        truth, args.seed, treatment=treatment, outcome=outcome, threads=threads,
    )
    extra = {
        "command": "intervene",
        "spec_hash": sem.content_hash(),
        "edge": list(edge),
        "values": list(values),
        "modes": modes,
        "n": n,
        "reps": reps,
        "seed": args.seed,
        "truth": truth,
    }
    payload = exp.intervention_reports_to_json(reports, extra)
    if args.out_json:
        atomic_write_text(args.out_json, payload)
    else:
        sys.stdout.write(payload)
    if args.out_csv:
        atomic_write_text(args.out_csv, exp.intervention_reports_to_csv(reports))
    return 0


def _cmd_bounds(args) -> int:
    sem = _load_sem(args.spec)
    edge = _parse_edge(args.edge)
    interval = feasible_interval(sem, edge)
    sys.stdout.write(json.dumps(_json_interval(interval), indent=2) + "\n")
    return 0


def _cmd_amplify(args) -> int:
    try:
        with open(args.data, encoding="utf-8") as fh:
            columns = read_csv_columns(fh)
    except OSError as exc:
        raise _UsageError(f"cannot read data file {args.data}: {exc}")
    n = len(next(iter(columns.values())))
    dataset = Dataset(columns=columns, n=n, provenance=("csv", 0, 0))
    controls = tuple(c for c in (args.controls or "").split(",") if c)
    amp = est.amplification_factor(dataset, args.treatment, controls)
    sys.stdout.write(json.dumps({
        "treatment": args.treatment,
        "controls": list(controls),
        "ssr_over_n": amp.ssr_over_n,
        "marginal_var": amp.marginal_var,
        "r_squared": amp.r_squared,
        "factor": amp.factor,
    }, indent=2) + "\n")
    return 0


def _cmd_partialplot(args) -> int:
    sem = _load_sem(args.spec)
    n = _positive_int(args.n, "--n")
    ds = draw_dataset(sem, n, SeedPolicy(args.seed, 0))
    controls = tuple(c for c in (args.controls or "").split(",") if c)
    points = est.partial_regression_points(ds, args.treatment, args.outcome, controls)
    atomic_write_text(args.out, est.partial_regression_csv(points))
    return 0


def _cmd_realdata(args) -> int:
    try:
        with open(args.config, encoding="utf-8") as fh:
            config = rd.ProbitPipelineConfig.from_json(fh.read())
    except OSError as exc:
        raise _UsageError(f"cannot read config file {args.config}: {exc}")
    if args.data:
        try:
            with open(args.data, encoding="utf-8") as fh:
                rct = rd.RCTDataset.read_csv(fh)
        except OSError as exc:
            raise _UsageError(f"cannot read data file {args.data}: {exc}")
    else:
        coefs = [float(v) for v in args.surrogate_x_coefs.split(",") if v]
        rct = rd.generate_surrogate_rct(
            n=_positive_int(args.surrogate_n, "--surrogate-n"),
            p_a=args.surrogate_p_a,
            itt_effect=args.surrogate_itt,
            covariate_outcome_coefs=coefs,
            seed=args.surrogate_seed,
        )
    intervention = None
    if args.intervene_covariate is not None:
        if args.intervene_gamma is None:
            raise _UsageError("--intervene-gamma is required with --intervene-covariate")
        modes = tuple(
            m.strip() + "-variance"
            for m in args.intervene_modes.split(",") if m.strip()
        )
        intervention = rd.LatentInterventionSpec(
            covariate_index=int(args.intervene_covariate),
            new_gamma=float(args.intervene_gamma),
            modes=modes,
        )
    threads = _default_threads(args.threads)
    result = rd.bootstrap_pipeline(rct, config, intervention=intervention, threads=threads)
    extra = {
        "command": "realdata",
        "n": rct.n,
        "reps": config.reps,
        "seed": config.base_seed,
        "treated_fraction": rct.treated_fraction(),
        "truth": config.beta_a_truth,
    }
    if result.arms is None:
        payload = exp.reports_to_json(result.reports, extra)
        csv_payload = exp.reports_to_csv(result.reports)
    else:
        payload = exp.intervention_reports_to_json(result.arms, extra)
        csv_payload = exp.intervention_reports_to_csv(result.arms)
    if args.out_json:
        atomic_write_text(args.out_json, payload)
    else:
        sys.stdout.write(payload)
    if args.out_csv:
        atomic_write_text(args.out_csv, csv_payload)
    return 0


# --------------------------------------------------------------------------
# argv plumbing
# --------------------------------------------------------------------------

def _build_parser() -> _Parser:
    parser = _Parser(prog="ampsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Monte Carlo estimator comparison on a model spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--n", required=True)
    p.add_argument("--reps", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--estimators", required=True)
    p.add_argument("--truth-edge", required=True)
    p.add_argument("--out-json")
    p.add_argument("--out-csv")
    p.add_argument("--threads")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("intervene", help="fixed- vs floating-variance edge interventions")
    p.add_argument("--spec", required=True)
    p.add_argument("--edge", required=True)
    p.add_argument("--values", required=True)
    p.add_argument("--modes", default="fixed,floating")
    p.add_argument("--n", required=True)
    p.add_argument("--reps", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--estimators", default="naive,adjusted,oracle")
    p.add_argument("--truth-edge", required=True)
    p.add_argument("--out-json")
    p.add_argument("--out-csv")
    p.add_argument("--threads")
    p.set_defaults(func=_cmd_intervene)

    p = sub.add_parser("bounds", help="feasible interval of an edge coefficient")
    p.add_argument("--spec", required=True)
    p.add_argument("--edge", required=True)
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("amplify", help="amplification factor of a control set on a CSV dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--treatment", required=True)
    p.add_argument("--controls", default="")
    p.set_defaults(func=_cmd_amplify)

    p = sub.add_parser("partialplot", help="partial-regression point pairs to CSV")
    p.add_argument("--spec", required=True)
    p.add_argument("--n", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--treatment", required=True)
    p.add_argument("--outcome", required=True)
    p.add_argument("--controls", default="")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_partialplot)

    p = sub.add_parser("realdata", help="latent-probit confounding-injection pipeline")
    p.add_argument("--config", required=True)
    p.add_argument("--data")
    p.add_argument("--surrogate-n", default="294")
    p.add_argument("--surrogate-p-a", type=float, default=0.51)
    p.add_argument("--surrogate-itt", type=float, default=0.137)
    p.add_argument("--surrogate-x-coefs", default="0.10,-0.15,-0.10")
    p.add_argument("--surrogate-seed", type=int, default=20260808)
    p.add_argument("--intervene-covariate")
    p.add_argument("--intervene-gamma")
    p.add_argument("--intervene-modes", default="fixed,floating")
    p.add_argument("--out-json")
    p.add_argument("--out-csv")
    p.add_argument("--threads")
    p.set_defaults(func=_cmd_realdata)

    return parser


def run_command(argv) -> int:
    """Dispatch one invocation; returns the exit code instead of exiting."""
    parser = _build_parser()
    try:
        args = parser.parse_args(list(argv))
        return args.func(args)
    except _UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 2
    except AmpsimError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 1


def main():
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
