"""Monte Carlo replication harness and intervention experiments.

Every replicate i draws its dataset from the stream keyed on
``(base_seed, i)`` and every estimator sees the same dataset, so arms of an
intervention experiment share common random numbers and results are
independent of thread count and execution order.
"""

from __future__ import annotations

import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTreatment, MismatchedReplicates
from .estimators import estimate
from .io_utils import fmt_float
from .sem import InterventionSpec, LinearSEM, intervene
from .simulate import SeedPolicy, draw_dataset


@dataclass(frozen=True)
class EstimatorReport:
    """Per-replicate estimates plus summary statistics for one estimator."""

    label: str
    estimates: np.ndarray
    truth: float
    mean: float
    sd: float
    mean_abs_bias: float
    frac_worse_than: dict[str, float]
    wrong_sign_frac: float

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "truth": self.truth,
            "reps": int(self.estimates.shape[0]),
            "mean": self.mean,
            "sd": self.sd,
            "mean_abs_bias": self.mean_abs_bias,
            "frac_worse_than": dict(self.frac_worse_than),
            "wrong_sign_frac": self.wrong_sign_frac,
        }


@dataclass(frozen=True)
class InterventionReport:
    """One arm of an intervention experiment.

    ``abs_bias_diff`` summarizes the per-replicate difference in absolute
    error between the adjusted and naive estimators (present when the menu
    contains both labels).
    """

    arm: str  # "baseline" | "fixed" | "floating"
    value: float
    reports: tuple[EstimatorReport, ...]
    abs_bias_diff: dict | None

    def report(self, label: str) -> EstimatorReport:
        for r in self.reports:
            if r.label == label:
                return r
        raise KeyError(label)

    def to_dict(self) -> dict:
        return {
            "arm": self.arm,
            "value": self.value,
            "reports": [r.to_dict() for r in self.reports],
            "abs_bias_diff": self.abs_bias_diff,
        }


def _wrong_sign(estimates: np.ndarray, truth: float) -> float:
    if truth > 0:
        wrong = estimates <= 0.0
    elif truth < 0:
        wrong = estimates >= 0.0
    else:
        wrong = estimates != 0.0
    return float(np.mean(wrong))


def _build_reports(labels, estimates: np.ndarray, truth: float) -> list[EstimatorReport]:
    """estimates has one column per estimator, one row per replicate."""
    reps = estimates.shape[0]
    abs_err = np.abs(estimates - truth)
    reports = []
    for j, label in enumerate(labels):
        frac_worse = {
            other: float(np.mean(abs_err[:, j] > abs_err[:, k]))
            for k, other in enumerate(labels)
            if other != label
        }
        col = estimates[:, j]
        reports.append(
            EstimatorReport(
                label=label,
                estimates=col.copy(),
                truth=truth,
                mean=float(col.mean()),
                sd=float(col.std(ddof=1)) if reps > 1 else 0.0,
                mean_abs_bias=float(abs_err[:, j].mean()),
                frac_worse_than=frac_worse,
                wrong_sign_frac=_wrong_sign(col, truth),
            )
        )
    return reports


def run_replications(
    sem: LinearSEM,
    n: int,
    reps: int,
    estimator_specs,
    truth: float,
    base_seed: int,
    *,
    treatment: str,
    outcome: str,
    threads: int = 1,
) -> list[EstimatorReport]:
    """Draw ``reps`` datasets of size ``n`` and apply every estimator to
    each. Replicate i uses the stream (base_seed, i); results are stored by
    replicate index, so output is independent of thread count.
    """
    if reps < 1:
        raise MismatchedReplicates(f"need reps >= 1, got {reps}")
    specs = list(estimator_specs)
    labels = [s.label for s in specs]
    if len(set(labels)) != len(labels):
        raise ValueError(f"estimator labels must be unique, got {labels}")

    estimates = np.empty((reps, len(specs)))

    def one(i: int):
        ds = draw_dataset(sem, n, SeedPolicy(base_seed, i))
        try:
            return [estimate(ds, treatment, outcome, s) for s in specs]
        except DegenerateTreatment as exc:
            raise DegenerateTreatment(f"replicate {i}: {exc}") from exc

    if threads <= 1:
        for i in range(reps):
            estimates[i, :] = one(i)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for i, row in enumerate(pool.map(one, range(reps))):
                estimates[i, :] = row

    return _build_reports(labels, estimates, truth)


def intervention_experiment(
    sem: LinearSEM,
    intervention: InterventionSpec,
    modes,
    n: int,
    reps: int,
    estimator_specs,
    truth: float,
    base_seed: int,
    *,
    treatment: str,
    outcome: str,
    threads: int = 1,
) -> list[InterventionReport]:
    """Baseline arm plus one arm per (mode, sweep value), all sharing the
    same per-replicate seeds (common random numbers)."""
    specs = list(estimator_specs)
    arms: list[tuple[str, float, LinearSEM]] = [
        ("baseline", sem.edge_coefficient(*intervention.edge), sem)
    ]
    for mode in modes:
        for value in intervention.values:
            arm_sem = intervene(sem, InterventionSpec(intervention.edge, (value,), mode))
            arms.append((mode.replace("-variance", ""), value, arm_sem))

    out = []
    for arm_label, value, arm_sem in arms:
        reports = run_replications(
            arm_sem, n, reps, specs, truth, base_seed,
            treatment=treatment, outcome=outcome, threads=threads,
        )
        diff = None
        labels = [r.label for r in reports]
        if "adjusted" in labels and "naive" in labels:
            adj = reports[labels.index("adjusted")]
            nai = reports[labels.index("naive")]
            diff = compare_abs_bias(adj, nai, truth)
        out.append(InterventionReport(arm=arm_label, value=value, reports=tuple(reports),
                                      abs_bias_diff=diff))
    return out


def compare_abs_bias(report_a: EstimatorReport, report_b: EstimatorReport, truth: float) -> dict:
    """Per-replicate paired differences |a - truth| - |b - truth| plus
    summary statistics. Requires equal replicate counts drawn with the same
    seeds (common random numbers)."""
    if report_a.estimates.shape != report_b.estimates.shape:
        raise MismatchedReplicates(
            f"replicate counts differ: {report_a.estimates.shape[0]} vs {report_b.estimates.shape[0]}"
        )
    diffs = np.abs(report_a.estimates - truth) - np.abs(report_b.estimates - truth)
    qs = np.quantile(diffs, [0.025, 0.25, 0.5, 0.75, 0.975])
    return {
        "labels": [report_a.label, report_b.label],
        "differences": diffs,
        "mean": float(diffs.mean()),
        "frac_a_worse": float(np.mean(diffs > 0.0)),
        "quantiles": {
            "q025": float(qs[0]),
            "q25": float(qs[1]),
            "q50": float(qs[2]),
            "q75": float(qs[3]),
            "q975": float(qs[4]),
        },
    }


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------

def reports_to_json(reports, extra: dict | None = None) -> str:
    """Summary JSON (lower_snake_case keys) for a list of EstimatorReports."""
    doc = dict(extra or {})
    doc["reports"] = [r.to_dict() for r in reports]
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def reports_to_csv(reports) -> str:
    """Per-replicate estimates: one column per estimator, one row per
    replicate."""
    buf = io.StringIO()
    labels = [r.label for r in reports]
    buf.write(",".join(["replicate"] + labels) + "\n")
    reps = reports[0].estimates.shape[0]
    for i in range(reps):
        row = [str(i)] + [fmt_float(r.estimates[i]) for r in reports]
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def _intervention_report_json_dict(rep: InterventionReport) -> dict:
    doc = rep.to_dict()
    if doc["abs_bias_diff"] is not None:
        doc["abs_bias_diff"] = {
            k: v for k, v in doc["abs_bias_diff"].items() if k != "differences"
        }
    return doc


def intervention_reports_to_json(reports, extra: dict | None = None) -> str:
    doc = dict(extra or {})
    doc["arms"] = [_intervention_report_json_dict(r) for r in reports]
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def intervention_reports_to_csv(reports) -> str:
    """Long-format per-replicate estimates: arm, value, replicate, then one
    column per estimator label."""
    buf = io.StringIO()
    labels = [r.label for r in reports[0].reports]
    buf.write(",".join(["arm", "value", "replicate"] + labels) + "\n")
    for arm in reports:
        reps = arm.reports[0].estimates.shape[0]
        for i in range(reps):
            row = [arm.arm, fmt_float(arm.value), str(i)]
            row += [fmt_float(r.estimates[i]) for r in arm.reports]
            buf.write(",".join(row) + "\n")
    return buf.getvalue()
