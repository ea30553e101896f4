"""Linear structural-equation DAGs with per-node variance budgets.

A :class:`LinearSEM` is the single source of truth for both simulation and
closed-form math. Each node carries a target variance (or "free") and an
error variance (or "auto"); :func:`solve_error_variances` makes every
"auto" error term absorb exactly the shock needed to hit its node's target,
processing the DAG in topological order.

Population moments are computed by covariance algebra over the DAG (not by
conditional-expectation manipulations), which handles any number of
upstream confounders and amplifiers uniformly. Edge interventions come in
two modes:

- fixed-variance: replace the coefficient and re-solve downstream error
  variances so every node keeps its original variance -- the proper
  counterfactual experiment;
- floating-variance: replace the coefficient only, letting downstream
  variances drift. Deliberately first-class: the distortions it produces
  are part of what the toolkit demonstrates.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    CycleError,
    InfeasibleIntervention,
    InfeasibleVariance,
    ParseError,
    SingularRegressorCovariance,
    UnknownNode,
    UnresolvedErrorVariance,
)

AUTO = "auto"
FREE = "free"

# Tiny negative error variances from float cancellation are clamped to zero.
_NEG_TOL = 1e-12


@dataclass(frozen=True)
class NodeSpec:
    """One node of the DAG.

    ``target_variance`` is a positive float or ``"free"``;
    ``error_variance`` is a non-negative float or ``"auto"``. At most one of
    the two may be free/auto. ``auto_error`` records whether the error
    variance is derived from the target (it survives solving, so
    interventions know which error terms may absorb shocks). ``kind`` is
    ``"continuous"`` or ``"binary-threshold"``; a binary-threshold node's
    structural equation defines its latent index, and simulation emits both
    the indicator 1{latent > 0} and the latent column.
    """

    name: str
    target_variance: float | str = 1.0
    mean: float = 0.0
    kind: str = "continuous"
    error_variance: float | str = AUTO
    observed: bool = True
    auto_error: bool | None = None

    def __post_init__(self):
        if not self.name or not isinstance(self.name, str):
            raise ParseError("node name must be a non-empty string")
        if self.target_variance != FREE:
            tv = float(self.target_variance)
            if not (tv > 0.0 and math.isfinite(tv)):
                raise ParseError(f"node {self.name!r}: target variance must be positive")
            object.__setattr__(self, "target_variance", tv)
        if self.error_variance != AUTO:
            ev = float(self.error_variance)
            if not (ev >= 0.0 and math.isfinite(ev)):
                raise ParseError(f"node {self.name!r}: error variance must be >= 0")
            object.__setattr__(self, "error_variance", ev)
        if self.target_variance == FREE and self.error_variance == AUTO:
            raise ParseError(
                f"node {self.name!r}: at most one of variance/error_variance may be free/auto"
            )
        if self.auto_error is None:
            object.__setattr__(self, "auto_error", self.error_variance == AUTO)
        if self.kind not in ("continuous", "binary-threshold"):
            raise ParseError(f"node {self.name!r}: unknown kind {self.kind!r}")


@dataclass(frozen=True)
class EdgeSpec:
    """Weighted directed edge ``from_node -> to_node``."""

    from_node: str
    to_node: str
    coefficient: float

    def __post_init__(self):
        if self.from_node == self.to_node:
            raise ParseError(f"self-loop on node {self.from_node!r}")
        object.__setattr__(self, "coefficient", float(self.coefficient))


@dataclass(frozen=True)
class LinearSEM:
    """Immutable DAG of nodes with variance budgets and weighted edges."""

    nodes: tuple[NodeSpec, ...]
    edges: tuple[EdgeSpec, ...]
    error_distribution: str = "normal"

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        names = [n.name for n in self.nodes]
        if len(set(names)) != len(names):
            raise ParseError("duplicate node names")
        name_set = set(names)
        seen_pairs = set()
        for e in self.edges:
            if e.from_node not in name_set:
                raise UnknownNode(f"edge references unknown node {e.from_node!r}")
            if e.to_node not in name_set:
                raise UnknownNode(f"edge references unknown node {e.to_node!r}")
            pair = (e.from_node, e.to_node)
            if pair in seen_pairs:
                raise ParseError(f"duplicate edge {e.from_node!r} -> {e.to_node!r}")
            seen_pairs.add(pair)
        if self.error_distribution not in ("normal", "uniform-rescaled"):
            raise ParseError(f"unknown error distribution {self.error_distribution!r}")
        self.topological_order()  # raises CycleError on cycles

    # -- basic structure ------------------------------------------------

    def node(self, name: str) -> NodeSpec:
        for n in self.nodes:
            if n.name == name:
                return n
        raise UnknownNode(f"no node named {name!r}")

    def node_names(self) -> list[str]:
        return [n.name for n in self.nodes]

    def parents_of(self, name: str) -> list[tuple[str, float]]:
        """(parent name, coefficient) pairs, in edge declaration order."""
        return [(e.from_node, e.coefficient) for e in self.edges if e.to_node == name]

    def edge(self, from_node: str, to_node: str) -> EdgeSpec:
        for e in self.edges:
            if e.from_node == from_node and e.to_node == to_node:
                return e
        raise UnknownNode(f"no edge {from_node!r} -> {to_node!r}")

    def edge_coefficient(self, from_node: str, to_node: str, default: float | None = None) -> float:
        for e in self.edges:
            if e.from_node == from_node and e.to_node == to_node:
                return e.coefficient
        if default is None:
            raise UnknownNode(f"no edge {from_node!r} -> {to_node!r}")
        return default

    def topological_order(self) -> list[str]:
        """Kahn's algorithm with declaration-order tie-breaking, so the
        order (and everything seeded from it) is deterministic."""
        names = self.node_names()
        indeg = {n: 0 for n in names}
        children: dict[str, list[str]] = {n: [] for n in names}
        for e in self.edges:
            indeg[e.to_node] += 1
            children[e.from_node].append(e.to_node)
        ready = [n for n in names if indeg[n] == 0]
        order: list[str] = []
        while ready:
            node = ready.pop(0)
            order.append(node)
            newly = []
            for c in children[node]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    newly.append(c)
            ready = sorted(ready + newly, key=names.index)
        if len(order) != len(names):
            stuck = sorted(n for n, d in indeg.items() if d > 0)
            raise CycleError(f"edges contain a cycle through {stuck}")
        return order

    def descendants_of(self, name: str) -> set[str]:
        children: dict[str, list[str]] = {n.name: [] for n in self.nodes}
        for e in self.edges:
            children[e.from_node].append(e.to_node)
        out: set[str] = set()
        stack = [name]
        while stack:
            for c in children[stack.pop()]:
                if c not in out:
                    out.add(c)
                    stack.append(c)
        return out

    def unobserved_names(self) -> set[str]:
        return {n.name for n in self.nodes if not n.observed}

    def is_resolved(self) -> bool:
        return all(n.error_variance != AUTO for n in self.nodes)

    def content_hash(self) -> str:
        """Stable hash of the model content, used for dataset provenance."""
        payload = {
            "nodes": [
                [n.name, n.target_variance, n.mean, n.kind, n.error_variance, n.observed]
                for n in self.nodes
            ],
            "edges": [[e.from_node, e.to_node, e.coefficient] for e in self.edges],
            "error_distribution": self.error_distribution,
        }
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def with_edge_coefficient(self, from_node: str, to_node: str, value: float) -> "LinearSEM":
        self.edge(from_node, to_node)
        new_edges = tuple(
            replace(e, coefficient=float(value))
            if (e.from_node, e.to_node) == (from_node, to_node)
            else e
            for e in self.edges
        )
        return LinearSEM(self.nodes, new_edges, self.error_distribution)


@dataclass(frozen=True)
class InterventionSpec:
    """An edge, one or more replacement coefficients, and a mode
    (``"fixed-variance"`` or ``"floating-variance"``)."""

    edge: tuple[str, str]
    values: tuple[float, ...]
    mode: str = "fixed-variance"

    def __post_init__(self):
        object.__setattr__(self, "edge", (str(self.edge[0]), str(self.edge[1])))
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ParseError("intervention sweep is empty")
        object.__setattr__(self, "values", vals)
        if self.mode not in ("fixed-variance", "floating-variance"):
            raise ParseError(f"unknown intervention mode {self.mode!r}")

    @staticmethod
    def sweep(edge: tuple[str, str], start: float, stop: float, step: float,
              mode: str = "fixed-variance") -> "InterventionSpec":
        if step <= 0:
            raise ParseError("sweep step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        if count < 1:
            raise ParseError("sweep is empty")
        values = tuple(start + i * step for i in range(count))
        return InterventionSpec(edge=edge, values=values, mode=mode)


@dataclass(frozen=True)
class FeasibleInterval:
    """Open interval of coefficient values keeping every downstream "auto"
    error variance positive. Unbounded ends are +/- inf."""

    edge: tuple[str, str]
    lower: float
    upper: float
    binding_constraints: tuple[str, ...] = field(default_factory=tuple)

    def contains(self, value: float) -> bool:
        return self.lower < value < self.upper

    def is_empty(self) -> bool:
        return not self.lower < self.upper


# --------------------------------------------------------------------------
# spec-document parsing
# --------------------------------------------------------------------------

def parse_spec(text: str) -> LinearSEM:
    """Parse the JSON model-spec format and return a solved LinearSEM.

    The document has top-level keys ``nodes`` and ``edges``::

        {"nodes": [{"name": "U", "variance": 1, "observed": false}, ...],
         "edges": [{"from": "U", "to": "A", "coef": 0.3}, ...]}

    Node keys: ``name``, ``variance`` (number or ``"free"``), optional
    ``mean``, ``error_variance`` (number or ``"auto"``), ``kind``
    (``"continuous"`` or ``"binary-threshold"``) and ``observed`` (bool).
    All "auto" error variances are solved before returning.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ParseError("spec document must be a JSON object")
    if "nodes" not in doc or "edges" not in doc:
        raise ParseError("spec document needs top-level 'nodes' and 'edges'")

    nodes = []
    for i, raw in enumerate(doc["nodes"]):
        if not isinstance(raw, dict) or "name" not in raw:
            raise ParseError(f"nodes[{i}] must be an object with a 'name'")
        known = {"name", "variance", "mean", "error_variance", "kind", "observed"}
        extra = set(raw) - known
        if extra:
            raise ParseError(f"nodes[{i}] has unknown keys {sorted(extra)}")
        nodes.append(
            NodeSpec(
                name=raw["name"],
                target_variance=raw.get("variance", 1.0),
                mean=float(raw.get("mean", 0.0)),
                kind=raw.get("kind", "continuous"),
                error_variance=raw.get("error_variance", AUTO),
                observed=bool(raw.get("observed", True)),
            )
        )
    edges = []
    for i, raw in enumerate(doc["edges"]):
        if not isinstance(raw, dict) or not {"from", "to", "coef"} <= set(raw):
            raise ParseError(f"edges[{i}] must be an object with 'from', 'to' and 'coef'")
        edges.append(EdgeSpec(from_node=raw["from"], to_node=raw["to"], coefficient=raw["coef"]))

    sem = LinearSEM(
        nodes=tuple(nodes),
        edges=tuple(edges),
        error_distribution=doc.get("error_distribution", "normal"),
    )
    return solve_error_variances(sem)


# --------------------------------------------------------------------------
# covariance algebra
# --------------------------------------------------------------------------

def _covariance_pass(sem: LinearSEM, check: bool = True):
    """One topological pass producing the joint covariance of all nodes and
    the error variance each auto node requires to hit its target.

    Returns ``(order, cov, solved)`` where ``solved`` maps every node name
    to its (resolved) error variance. With ``check`` the pass raises
    InfeasibleVariance as soon as a required error variance is negative, or
    a both-explicit node misses its target; without it, negative values are
    recorded so feasibility scans can interpolate them.
    """
    order = sem.topological_order()
    idx = {name: i for i, name in enumerate(order)}
    k = len(order)
    cov = np.zeros((k, k))
    solved: dict[str, float] = {}

    for name in order:
        i = idx[name]
        node = sem.node(name)
        parents = sem.parents_of(name)
        if parents:
            pidx = [idx[p] for p, _ in parents]
            b = np.array([c for _, c in parents])
            explained = float(b @ cov[np.ix_(pidx, pidx)] @ b)
            cov_with_prev = cov[pidx, :].T @ b  # cov(new node, every other node so far)
        else:
            explained = 0.0
            cov_with_prev = np.zeros(k)

        if node.auto_error:
            if node.target_variance == FREE:
                raise UnresolvedErrorVariance(
                    f"node {name!r} has free variance and auto error variance"
                )
            ev = float(node.target_variance) - explained
            if -_NEG_TOL < ev < 0.0:
                ev = 0.0
            if check and ev < 0.0:
                raise InfeasibleVariance(
                    f"node {name!r}: parents explain {explained:.6g} but the "
                    f"target variance is {node.target_variance:.6g} "
                    f"(deficit {explained - float(node.target_variance):.6g})"
                )
        else:
            ev = float(node.error_variance)
            if check and node.target_variance != FREE:
                tv = float(node.target_variance)
                if abs(explained + ev - tv) > 1e-9 * max(1.0, tv):
                    raise InfeasibleVariance(
                        f"node {name!r}: explicit error variance {ev:.6g} implies "
                        f"variance {explained + ev:.6g}, inconsistent with target {tv:.6g}"
                    )
        solved[name] = ev
        cov[i, :] = cov_with_prev
        cov[:, i] = cov_with_prev
        cov[i, i] = explained + ev

    return order, cov, solved


def solve_error_variances(sem: LinearSEM) -> LinearSEM:
    """Resolve every "auto" error variance so each node's implied variance
    equals its target, processing in topological order.

    Raises InfeasibleVariance, reporting the violated node and the deficit,
    when parents already explain more than the target allows.
    """
    _, _, solved = _covariance_pass(sem, check=True)
    new_nodes = tuple(
        replace(n, error_variance=solved[n.name]) if n.auto_error else n
        for n in sem.nodes
    )
    return LinearSEM(new_nodes, sem.edges, sem.error_distribution)


def _require_resolved(sem: LinearSEM):
    if not sem.is_resolved():
        pending = [n.name for n in sem.nodes if n.error_variance == AUTO]
        raise UnresolvedErrorVariance(f"error variances not resolved for {pending}")


def _resolved_covariance(sem: LinearSEM) -> tuple[list[str], np.ndarray]:
    """Joint covariance of a resolved SEM, from stored error variances only
    (variance targets play no role)."""
    _require_resolved(sem)
    order = sem.topological_order()
    idx = {name: i for i, name in enumerate(order)}
    k = len(order)
    cov = np.zeros((k, k))
    for name in order:
        i = idx[name]
        node = sem.node(name)
        parents = sem.parents_of(name)
        if parents:
            pidx = [idx[p] for p, _ in parents]
            b = np.array([c for _, c in parents])
            explained = float(b @ cov[np.ix_(pidx, pidx)] @ b)
            cov_with_prev = cov[pidx, :].T @ b
        else:
            explained = 0.0
            cov_with_prev = np.zeros(k)
        cov[i, :] = cov_with_prev
        cov[:, i] = cov_with_prev
        cov[i, i] = explained + float(node.error_variance)
    return order, cov


def implied_variance(sem: LinearSEM, node: str) -> float:
    """Var(node) from the recursive parent-covariance formula, using the
    stored error variances."""
    sem.node(node)
    order, cov = _resolved_covariance(sem)
    i = order.index(node)
    return float(cov[i, i])


def population_covariance(sem: LinearSEM, order: list[str] | None = None) -> tuple[list[str], np.ndarray]:
    """Exact joint covariance of all nodes.

    Returns ``(names, matrix)``. With ``order`` given, rows/columns follow
    it; otherwise node declaration order is used.
    """
    topo, cov = _resolved_covariance(sem)
    target = list(order) if order is not None else sem.node_names()
    for name in target:
        sem.node(name)
    pos = [topo.index(name) for name in target]
    return target, cov[np.ix_(pos, pos)]


def population_regression(sem: LinearSEM, outcome: str, regressors: list[str]) -> np.ndarray:
    """Probability limit of the OLS slope coefficients of ``outcome`` on
    ``regressors`` plus an intercept: Sigma_RR^{-1} Sigma_RY."""
    names = list(regressors) + [outcome]
    _, cov = population_covariance(sem, order=names)
    k = len(regressors)
    sigma_rr = cov[:k, :k]
    sigma_ry = cov[:k, k]
    cond = np.linalg.cond(sigma_rr)
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularRegressorCovariance(
            f"regressor covariance is numerically singular (cond={cond:.3e})"
        )
    try:
        # solve, not invert: amplification deliberately shrinks this matrix
        return np.linalg.solve(sigma_rr, sigma_ry)
    except np.linalg.LinAlgError as exc:
        raise SingularRegressorCovariance(str(exc)) from exc


# --------------------------------------------------------------------------
# feasibility and interventions
# --------------------------------------------------------------------------

def _error_variance_polynomials(sem: LinearSEM, edge: tuple[str, str]):
    """For each auto-error node at or downstream of the edge target, the
    required error variance as a function of the edge coefficient x under
    the fixed-variance regime.

    Each such function is a polynomial of degree <= 2 in x: the intervened
    node's own budget is concave quadratic, and every downstream budget is
    affine (pairwise covariances are affine in x once node variances are
    pinned). Three exact evaluations therefore pin each one down.
    """
    from_node, to_node = edge
    sem.edge(from_node, to_node)
    auto_nodes = {
        n.name for n in sem.nodes if n.auto_error and n.target_variance != FREE
    }
    relevant = auto_nodes & ({to_node} | sem.descendants_of(to_node))

    current = sem.edge_coefficient(from_node, to_node)
    xs = (current - 1.0, current, current + 1.0)
    probes = []
    for x in xs:
        probe = sem.with_edge_coefficient(from_node, to_node, x)
        probes.append(_covariance_pass(probe, check=False)[2])

    polys = {}
    for name in relevant:
        y0, y1, y2 = (probes[j][name] for j in range(3))
        a = (y0 - 2.0 * y1 + y2) / 2.0        # quadratic coefficient
        b = (y2 - y0) / 2.0                   # slope at the middle point
        polys[name] = (a, b, y1, xs[1])       # y(x) = a t^2 + b t + c, t = x - xs[1]
    return polys


def feasible_interval(sem: LinearSEM, edge: tuple[str, str]) -> FeasibleInterval:
    """Open interval of values for the edge coefficient that keep every
    downstream "auto" error variance positive, holding all other edges and
    all variance targets fixed. Reports which node constraints bind.

    An empty interval is reported, not raised. Endpoints are excluded: an
    error variance of exactly zero makes the model degenerate.
    """
    polys = _error_variance_polynomials(sem, edge)
    lower, upper = -math.inf, math.inf
    lower_by: str | None = None
    upper_by: str | None = None

    for name, (a, b, c, x_mid) in polys.items():
        if abs(a) < 1e-13:
            if abs(b) < 1e-13:
                if c <= 0.0:
                    return FeasibleInterval(edge=tuple(edge), lower=math.inf, upper=-math.inf,
                                            binding_constraints=(name,))
                continue  # budget does not depend on this edge
            root = x_mid - c / b
            if b > 0:
                if root > lower:
                    lower, lower_by = root, name
            else:
                if root < upper:
                    upper, upper_by = root, name
            continue
        disc = b * b - 4.0 * a * c
        if a < 0.0:
            if disc <= 0.0:
                return FeasibleInterval(edge=tuple(edge), lower=math.inf, upper=-math.inf,
                                        binding_constraints=(name,))
            sq = math.sqrt(disc)
            lo = x_mid + (-b + sq) / (2.0 * a)
            hi = x_mid + (-b - sq) / (2.0 * a)
            if lo > lower:
                lower, lower_by = lo, name
            if hi < upper:
                upper, upper_by = hi, name
        else:
            # Convex budgets cannot arise from a variance decomposition;
            # treat float-noise cases conservatively around the current value.
            if disc > 0.0:
                sq = math.sqrt(disc)
                lo = x_mid + (-b - sq) / (2.0 * a)
                hi = x_mid + (-b + sq) / (2.0 * a)
                current = sem.edge_coefficient(*edge)
                if current <= lo and lo < upper:
                    upper, upper_by = lo, name
                elif current >= hi and hi > lower:
                    lower, lower_by = hi, name

    binding = tuple(dict.fromkeys(n for n in (lower_by, upper_by) if n is not None))
    return FeasibleInterval(edge=tuple(edge), lower=lower, upper=upper, binding_constraints=binding)


def intervene(sem: LinearSEM, spec: InterventionSpec):
    """Apply an edge intervention; returns a LinearSEM, or a list of them
    for a sweep.

    fixed-variance replaces the coefficient and re-solves every "auto"
    error variance at or below the edge target so node variances keep
    their targets; the value must lie inside the feasible interval.
    floating-variance replaces the coefficient only, keeps all error
    variances, and re-labels each node's target with its drifted implied
    variance so the model stays internally consistent.
    """
    _require_resolved(sem)
    results = [_intervene_one(sem, spec.edge, v, spec.mode) for v in spec.values]
    if len(results) == 1:
        return results[0]
    return results


def _intervene_one(sem: LinearSEM, edge: tuple[str, str], value: float, mode: str) -> LinearSEM:
    changed = sem.with_edge_coefficient(edge[0], edge[1], value)
    if mode == "fixed-variance":
        affected = {edge[1]} | sem.descendants_of(edge[1])
        reopened_nodes = tuple(
            replace(n, error_variance=AUTO) if (n.auto_error and n.name in affected) else n
            for n in changed.nodes
        )
        reopened = LinearSEM(reopened_nodes, changed.edges, changed.error_distribution)
        try:
            return solve_error_variances(reopened)
        except InfeasibleVariance as exc:
            interval = feasible_interval(sem, edge)
            raise InfeasibleIntervention(
                f"value {value} for edge {edge[0]!r}->{edge[1]!r} is outside the "
                f"feasible interval ({interval.lower:.6g}, {interval.upper:.6g}): {exc}"
            ) from exc
    # floating-variance
    order, cov = _resolved_covariance(changed)
    new_nodes = tuple(
        replace(n, target_variance=float(cov[order.index(n.name), order.index(n.name)]))
        if n.target_variance != FREE
        else n
        for n in changed.nodes
    )
    return LinearSEM(new_nodes, changed.edges, changed.error_distribution)
