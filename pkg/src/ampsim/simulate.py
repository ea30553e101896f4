"""Reproducible dataset draws from a LinearSEM.

Variables are constructed in the downstream direction: exogenous errors are
drawn independently with their solved variances, then each child is
intercept + sum(coef * parent) + error in topological order.

Replication streams come from a counter-based generator keyed on
``(base_seed, replicate_index)``, so replicate i is bit-identical no matter
how many threads run or whether replicates j != i are drawn at all.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import NTooSmall, OutOfRange, UnknownColumn, UnresolvedErrorVariance
from .io_utils import atomic_write_text
from .sem import AUTO, LinearSEM

_SQRT3 = 1.7320508075688772


@dataclass(frozen=True)
class SeedPolicy:
    """Deterministic per-replicate stream identity."""

    base_seed: int
    replicate_index: int = 0

    def generator(self) -> np.random.Generator:
        key = np.array(
            [self.base_seed & 0xFFFFFFFFFFFFFFFF, self.replicate_index & 0xFFFFFFFFFFFFFFFF],
            dtype=np.uint64,
        )
        return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class Dataset:
    """Column-oriented numeric table: one column per SEM node (plus
    ``<node>__latent`` for binary-threshold nodes), n rows."""

    columns: dict[str, np.ndarray]
    n: int
    provenance: tuple[str, int, int]  # (sem hash, base seed, replicate index)

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise UnknownColumn(f"dataset has no column {name!r}")
        return self.columns[name]

    def names(self) -> list[str]:
        return list(self.columns)

    def write_csv(self, fileobj: io.TextIOBase):
        """CSV with a header row; floats use shortest round-trip formatting
        so exports are bit-faithful on re-import."""
        names = self.names()
        fileobj.write(",".join(names) + "\n")
        cols = [self.columns[name] for name in names]
        for i in range(self.n):
            fileobj.write(",".join(repr(float(c[i])) for c in cols) + "\n")

    def to_csv(self, path: str):
        buf = io.StringIO()
        self.write_csv(buf)
        atomic_write_text(path, buf.getvalue())


def read_csv_columns(fileobj: io.TextIOBase) -> dict[str, np.ndarray]:
    """Inverse of :meth:`Dataset.write_csv` (header + numeric rows)."""
    header = fileobj.readline().strip()
    if not header:
        raise OutOfRange("empty CSV")
    names = header.split(",")
    rows = [line.strip().split(",") for line in fileobj if line.strip()]
    data = np.array([[float(v) for v in row] for row in rows])
    if data.ndim != 2 or data.shape[1] != len(names):
        raise OutOfRange("CSV rows do not match header width")
    return {name: data[:, j].copy() for j, name in enumerate(names)}


def interior_uniform(rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniform draws strictly inside (0, 1): (k + 0.5) / 2^53 over 53-bit k.

    Plain ``rng.random`` can return exactly 0.0, which would put inverse-CDF
    transforms on a truncation boundary.
    """
    return (rng.integers(0, 1 << 53, size=n).astype(np.float64) + 0.5) * 2.0**-53


def latent_threshold_intercept(p_a: float) -> float:
    """Latent intercept making P(latent > 0) = p_a for a unit-variance
    latent index."""
    if not 0.0 < p_a < 1.0:
        raise OutOfRange(f"p_a must be in (0, 1), got {p_a}")
    return float(-ndtri(1.0 - p_a))


def _error_draw(rng: np.random.Generator, n: int, variance: float, distribution: str) -> np.ndarray:
    if variance == 0.0:
        return np.zeros(n)
    sd = float(np.sqrt(variance))
    if distribution == "normal":
        return rng.standard_normal(n) * sd
    # variance-matched uniform on [-sqrt(3)*sd, sqrt(3)*sd]
    return (rng.random(n) * 2.0 - 1.0) * (_SQRT3 * sd)


def draw_dataset(sem: LinearSEM, n: int, seed: SeedPolicy) -> Dataset:
    """Draw an n-row dataset from a resolved SEM.

    Binary-threshold nodes emit the indicator 1{latent > 0} under the node
    name and keep the latent column as ``<node>__latent``; children of such
    a node consume the indicator.
    """
    if not sem.is_resolved():
        pending = [x.name for x in sem.nodes if x.error_variance == AUTO]
        raise UnresolvedErrorVariance(f"error variances not resolved for {pending}")
    if n < 2:
        raise NTooSmall(f"need n >= 2, got {n}")

    rng = seed.generator()
    order = sem.topological_order()
    values: dict[str, np.ndarray] = {}
    latents: dict[str, np.ndarray] = {}

    for name in order:
        node = sem.node(name)
        col = np.full(n, node.mean)
        for parent, coef in sem.parents_of(name):
            col = col + coef * values[parent]
        col = col + _error_draw(rng, n, float(node.error_variance), sem.error_distribution)
        if node.kind == "binary-threshold":
            latents[name] = col
            values[name] = (col > 0.0).astype(np.float64)
        else:
            values[name] = col

    columns: dict[str, np.ndarray] = {}
    for node in sem.nodes:  # declaration order, latent right after its node
        columns[node.name] = values[node.name]
        if node.name in latents:
            columns[node.name + "__latent"] = latents[node.name]

    return Dataset(
        columns=columns,
        n=n,
        provenance=(sem.content_hash(), seed.base_seed, seed.replicate_index),
    )
