#!/usr/bin/env python3
"""Fixed-variance vs floating-variance edge interventions.

Question: how does the adjusted estimator react when the unmeasured
confounder's pull on the treatment (the U -> A weight) grows from 0.3 to
0.55?

Doing this naively -- overwrite the coefficient, draw again -- lets the
treatment variance drift from 1.0 to 1.2125, which quietly weakens every
other edge into A. The treatment's noise term has to absorb the shock
instead (fixed-variance mode) for the comparison to be a controlled
experiment. The floating run understates the damage by almost half.
"""

import os


from ampsim import (
    EstimatorSpec,
    InterventionSpec,
    closed_form_bias,
    implied_variance,
    intervene,
    intervention_experiment,
    parse_spec,
)

HERE = os.path.dirname(__file__)
sem = parse_spec(open(os.path.join(HERE, "specs", "two_path.json")).read())
truth = 0.2

arms = intervention_experiment(
    sem,
    InterventionSpec(("U", "A"), (0.55,), "fixed-variance"),
    ["fixed-variance", "floating-variance"],
    n=10_000,
    reps=300,
    estimator_specs=[EstimatorSpec.naive(), EstimatorSpec.adjusted(["BAV"])],
    truth=truth,
    base_seed=4242,
    treatment="A",
    outcome="Y",
    threads=2,
)

print(f"{'arm':<10} {'U->A':>6} {'Var(A)':>8} {'adj mean':>9} {'adj |bias|':>10} "
      f"{'mean |adj|-|naive|':>19}")
for arm in arms:
    adj = arm.report("adjusted")
    if arm.arm == "baseline":
        var_a = implied_variance(sem, "A")
    else:
        mode = arm.arm + "-variance"
        var_a = implied_variance(intervene(sem, InterventionSpec(("U", "A"), (arm.value,), mode)), "A")
    diff = arm.abs_bias_diff["mean"]
    print(f"{arm.arm:<10} {arm.value:>6.2f} {var_a:>8.4f} {adj.mean:>9.4f} "
          f"{adj.mean_abs_bias:>10.4f} {diff:>19.4f}")

print()
print("closed forms for the adjusted estimator's bias:")
for label, mode in (("baseline", None), ("floating", "floating-variance"), ("fixed", "fixed-variance")):
    arm_sem = sem if mode is None else intervene(sem, InterventionSpec(("U", "A"), (0.55,), mode))
    print(f"  {label:<9} {closed_form_bias(arm_sem, 'A', 'Y', EstimatorSpec.adjusted(['BAV'])):.4f}")
print()
print("the floating arm reports ~0.19 of bias where the controlled "
      "experiment shows ~0.26: un-pinned variances hide amplification.")
