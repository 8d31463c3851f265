"""Weighted multiplier method: sample matrix, weights and root estimate."""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import EstimationError
from .intervals import (
    INTERVAL_TYPES,
    confidence_interval,
    percentile_interval,
    weighted_mean_var,
)
from .sampling import (
    DEFAULT_MAX_ATTEMPTS,
    plan_tree,
    realization_rng,
    sample_realization,
)
from .tree import Edge, PopTree, path_to_leaf

DEFAULT_SAMPLES = 10000
DEFAULT_MAX_COMBINATIONS = 4096
PINV_RCOND = 1e-12


def edge_key(edge: Edge) -> str:
    return f"{edge[0]}->{edge[1]}"


def parse_edge_key(key: str) -> Edge:
    parent, sep, child = key.partition("->")
    if not sep:
        raise ValueError(f"bad edge key {key!r}")
    return (parent, child)


def back_calculate(count, probabilities) -> float:
    """Multiplier-method root estimate ``count / prod(probabilities)``."""
    probabilities = list(probabilities)
    if not probabilities:
        raise ValueError("at least one path probability is required")
    if any(p <= 0 for p in probabilities):
        raise ValueError("path probabilities must be positive")
    return count / math.prod(probabilities)


@dataclass(frozen=True)
class SampleMatrix:
    """Back-calculated root estimates, one row per joint tree realization.

    ``row_weights`` are importance weights scaled so the largest is 1.
    ``edge_samples`` keeps the sampled branch probabilities (columns in
    ``edge_order``) for reporting.
    """

    values: np.ndarray
    row_weights: np.ndarray
    leaf_order: tuple[str, ...]
    edge_samples: np.ndarray | None = None
    edge_order: tuple[Edge, ...] = ()

    @property
    def log_values(self) -> np.ndarray:
        return np.log(self.values)

    @property
    def shape(self):
        return self.values.shape

    @classmethod
    def from_values(cls, values, leaf_order=None, row_weights=None) -> SampleMatrix:
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if leaf_order is None:
            leaf_order = tuple(f"L{i + 1}" for i in range(values.shape[1]))
        if row_weights is None:
            row_weights = np.ones(values.shape[0])
        return cls(values, np.asarray(row_weights, dtype=float), tuple(leaf_order))


@dataclass(frozen=True)
class WeightVector:
    labels: tuple[str, ...]
    values: np.ndarray
    degenerate: bool = False
    covariance: np.ndarray | None = field(default=None, repr=False)

    def __getitem__(self, label):
        return float(self.values[self.labels.index(label)])

    def as_dict(self) -> dict[str, float]:
        return {k: float(v) for k, v in zip(self.labels, self.values)}

    @property
    def precision(self) -> np.ndarray:
        return np.linalg.pinv(self.covariance, rcond=PINV_RCOND, hermitian=True)


def _covariance(columns, row_weights):
    # anchor on row 0 so constant columns give an exactly zero covariance
    columns = np.asarray(columns, dtype=float)
    columns = columns - columns[0]
    if row_weights is None or np.all(row_weights == row_weights[0]):
        cov = np.cov(columns, rowvar=False)
    else:
        cov = np.cov(columns, rowvar=False, aweights=row_weights)
    return np.atleast_2d(cov)


def combination_weights(columns, row_weights=None, labels=None) -> WeightVector:
    """Minimum-variance weights ``P 1 / (1' P 1)`` for log-scale columns.

    ``P`` is the Moore-Penrose pseudo-inverse of the (row-weighted) column
    covariance.  Falls back to uniform weights, flagged ``degenerate``, when
    ``1' P 1`` vanishes.
    """
    columns = np.asarray(columns, dtype=float)
    if columns.ndim == 1:
        columns = columns[:, None]
    m, k = columns.shape
    if labels is None:
        labels = tuple(f"L{i + 1}" for i in range(k))
    if m < 2:
        raise EstimationError("at least two sample rows are needed for weights")
    cov = _covariance(columns, row_weights)
    if k == 1:
        return WeightVector(tuple(labels), np.ones(1), covariance=cov)
    precision = np.linalg.pinv(cov, rcond=PINV_RCOND, hermitian=True)
    raw = precision.sum(axis=1)
    total = raw.sum()
    if not np.isfinite(total) or total <= 0:
        return WeightVector(tuple(labels), np.full(k, 1.0 / k), True, cov)
    return WeightVector(tuple(labels), raw / total, covariance=cov)


def min_variance_weights(matrix: SampleMatrix) -> WeightVector:
    return combination_weights(matrix.log_values, matrix.row_weights, matrix.leaf_order)


def _weights_from_logs(log_weights):
    log_weights = np.asarray(log_weights, dtype=float)
    top = log_weights.max()
    if not np.isfinite(top):
        raise EstimationError("every realization received zero importance weight")
    return np.exp(log_weights - top)


def build_sample_matrix(
    tree: PopTree,
    sample_length: int,
    seed: int = 0,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
) -> SampleMatrix:
    """Sample ``sample_length`` joint realizations and back-calculate the root.

    Realization ``m`` draws from its own stream derived from ``(seed, m)``.
    """
    if sample_length < 2:
        raise EstimationError("sample_length must be at least 2")
    leaves = tree.informative_leaves
    if not leaves:
        raise EstimationError("no informative paths: no leaf with a count is "
                              "connected to the root by estimated edges")
    paths = [path_to_leaf(tree, leaf) for leaf in leaves]
    for path in paths:
        if path.count <= 0:
            raise EstimationError(
                f"leaf {path.leaf} has count {path.count}; counts on "
                "informative leaves must be positive"
            )
    plans = plan_tree(tree)
    covered = {(p, c) for p, plan in plans.items()
               for c in (*plan.sampled, *plan.fixed)}
    edge_order = tuple(e for e in tree.edges if e in covered)
    col = {e: i for i, e in enumerate(edge_order)}

    edge_samples = np.empty((sample_length, len(edge_order)))
    log_weights = np.empty(sample_length)
    for m in range(sample_length):
        probs, log_w = sample_realization(
            tree, plans, realization_rng(seed, m), max_attempts
        )
        for e, i in col.items():
            edge_samples[m, i] = probs[e]
        log_weights[m] = log_w

    values = np.empty((sample_length, len(leaves)))
    for j, path in enumerate(paths):
        prod = np.prod(edge_samples[:, [col[e] for e in path.edges]], axis=1)
        if np.any(prod <= 0):
            raise EstimationError(
                f"a sampled path probability to {path.leaf} is zero; "
                "cannot back-calculate"
            )
        values[:, j] = path.count / prod
    return SampleMatrix(
        values, _weights_from_logs(log_weights), leaves, edge_samples, edge_order
    )


@dataclass(frozen=True)
class LeafSummary:
    count: float | None
    mean_estimate: float
    interval: tuple[float, float]
    samples: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class EstimateReport:
    root_estimate: float
    rounded_estimate: int
    interval: tuple[float, float]
    interval_type: str
    alpha: float
    log_estimates: np.ndarray = field(repr=False)
    weights: WeightVector
    row_weights: np.ndarray = field(repr=False)
    per_leaf: dict[str, LeafSummary] = field(repr=False)
    per_edge: dict[Edge, np.ndarray] = field(repr=False)
    seed: int | None = None
    samples: int = 0
    stage_two: dict | None = field(default=None, repr=False)

    @property
    def theta_hat(self) -> float:
        return weighted_mean_var(self.log_estimates, self.row_weights)[0]

    def leaf_means(self) -> dict[str, float]:
        return {leaf: s.mean_estimate for leaf, s in self.per_leaf.items()}

    def edge_means(self) -> dict[Edge, float]:
        w = self.row_weights
        return {e: float(np.dot(w, s) / w.sum()) for e, s in self.per_edge.items()}

    def to_dict(self, include_samples=True) -> dict:
        edge_means = self.edge_means()
        out = {
            "root_estimate": float(self.root_estimate),
            "rounded_estimate": int(self.rounded_estimate),
            "uncertainty": [float(x) for x in self.interval],
            "interval_type": self.interval_type,
            "alpha": self.alpha,
            "weights": self.weights.as_dict(),
            "weights_degenerate": bool(self.weights.degenerate),
            "log_estimates": [float(x) for x in self.log_estimates],
            "row_weights": [float(x) for x in self.row_weights],
            "per_leaf": {
                leaf: {
                    "count": s.count,
                    "mean_estimate": float(s.mean_estimate),
                    "interval": [float(x) for x in s.interval],
                    **({"samples": [float(x) for x in s.samples]}
                       if include_samples else {}),
                }
                for leaf, s in self.per_leaf.items()
            },
            "per_edge": {
                edge_key(e): {
                    "mean": edge_means[e],
                    **({"samples": [float(x) for x in s]} if include_samples else {}),
                }
                for e, s in self.per_edge.items()
            },
            "seed": self.seed,
            "samples": self.samples,
        }
        if self.stage_two is not None:
            out["stage_two"] = self.stage_two
        return out

    def to_json(self, include_samples=True) -> str:
        return json.dumps(self.to_dict(include_samples), indent=2) + "\n"


@dataclass(frozen=True)
class LoadedReport:
    """The parts of a serialized report needed after the fact (rendering)."""

    root_estimate: float
    rounded_estimate: int
    interval: tuple[float, float]
    interval_type: str
    weights: dict[str, float]
    leaf_mean_map: dict[str, float]
    leaf_counts: dict[str, float | None]
    edge_mean_map: dict[Edge, float]

    def leaf_means(self) -> dict[str, float]:
        return dict(self.leaf_mean_map)

    def edge_means(self) -> dict[Edge, float]:
        return dict(self.edge_mean_map)


def load_report(data: str | Mapping) -> LoadedReport:
    if isinstance(data, str):
        data = json.loads(data)
    try:
        return LoadedReport(
            root_estimate=float(data["root_estimate"]),
            rounded_estimate=int(data["rounded_estimate"]),
            interval=tuple(data["uncertainty"]),
            interval_type=data["interval_type"],
            weights=dict(data["weights"]),
            leaf_mean_map={k: v["mean_estimate"] for k, v in data["per_leaf"].items()},
            leaf_counts={k: v.get("count") for k, v in data["per_leaf"].items()},
            edge_mean_map={
                parse_edge_key(k): v["mean"] for k, v in data["per_edge"].items()
            },
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed report: {exc}") from exc


def _combine(values, logs, row_weights, labels, interval_type, alpha):
    """Weight log columns, combine rows and build the interval.

    The root estimate is anchored on row 0: ``Z = r_0 * exp(theta_hat -
    theta_0)`` with ``r_0 = prod_L M_{0,L}^{w_L}``, which equals
    ``exp(theta_hat)`` but is exact when every row agrees.
    """
    if interval_type not in INTERVAL_TYPES:
        raise ValueError(
            f"unknown interval type {interval_type!r}; choose from {INTERVAL_TYPES}"
        )
    weights = combination_weights(logs, row_weights, labels)
    w = weights.values
    theta = logs @ w
    v = row_weights
    shift = float(np.dot(v, theta - theta[0]) / v.sum())
    theta_hat = float(theta[0]) + shift
    row_estimates = np.prod(values**w, axis=1)
    root = float(row_estimates[0]) * math.exp(shift)
    interval = confidence_interval(
        theta,
        interval_type,
        alpha,
        weights=None if np.all(v == 1) else v,
        precision=weights.precision if interval_type == "var" else None,
        theta_hat=theta_hat,
        center=root,
        row_estimates=row_estimates,
    )
    return weights, theta, root, interval


def _summaries(matrix, alpha):
    v = matrix.row_weights
    unit = np.all(v == 1)
    per_leaf = {}
    for j, leaf in enumerate(matrix.leaf_order):
        col = matrix.values[:, j]
        per_leaf[leaf] = LeafSummary(
            count=None,
            mean_estimate=float(np.dot(v, col) / v.sum()),
            interval=percentile_interval(col, alpha, None if unit else v),
            samples=col,
        )
    per_edge = {}
    if matrix.edge_samples is not None:
        for i, e in enumerate(matrix.edge_order):
            per_edge[e] = matrix.edge_samples[:, i]
    return per_leaf, per_edge


def estimate_from_matrix(
    matrix: SampleMatrix,
    interval_type: str = "percentile",
    alpha: float = 0.05,
    seed: int | None = None,
    counts: Mapping[str, float] | None = None,
) -> EstimateReport:
    weights, theta, root, interval = _combine(
        matrix.values,
        matrix.log_values,
        matrix.row_weights,
        matrix.leaf_order,
        interval_type,
        alpha,
    )
    per_leaf, per_edge = _summaries(matrix, alpha)
    if counts:
        per_leaf = {
            leaf: LeafSummary(counts.get(leaf), s.mean_estimate, s.interval, s.samples)
            for leaf, s in per_leaf.items()
        }
    return EstimateReport(
        root_estimate=root,
        rounded_estimate=math.floor(root + 0.5),
        interval=tuple(float(x) for x in interval),
        interval_type=interval_type,
        alpha=alpha,
        log_estimates=theta,
        weights=weights,
        row_weights=matrix.row_weights,
        per_leaf=per_leaf,
        per_edge=per_edge,
        seed=seed,
        samples=matrix.shape[0],
    )


def wmm_estimate(
    tree: PopTree,
    sample_length: int = DEFAULT_SAMPLES,
    interval_type: str = "percentile",
    seed: int = 0,
    alpha: float = 0.05,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
) -> EstimateReport:
    """Estimate the root population size of ``tree``."""
    matrix = build_sample_matrix(tree, sample_length, seed, max_attempts)
    counts = {leaf: tree.count(leaf) for leaf in matrix.leaf_order}
    return estimate_from_matrix(matrix, interval_type, alpha, seed, counts)


def two_stage_estimate(
    tree: PopTree,
    alternate_sources: Mapping[Edge, Sequence[tuple[int, int]]],
    sample_length: int = DEFAULT_SAMPLES,
    interval_type: str = "percentile",
    seed: int = 0,
    alpha: float = 0.05,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    max_combinations: int = DEFAULT_MAX_COMBINATIONS,
) -> EstimateReport:
    """Combine estimates across every choice of branch evidence.

    ``alternate_sources`` lists, for each edge it names, the complete set of
    candidate ``(estimate, total)`` pairs; other edges keep the evidence in
    ``tree``.  Every combination is sampled with the same seed.  Per-leaf
    and per-edge summaries in the report come from the first combination.
    """
    for e, sources in alternate_sources.items():
        tree.record(e)
        if not sources:
            raise EstimationError(f"edge {edge_key(e)} has an empty source list")
    edges = [e for e in tree.edges if e in alternate_sources]
    n_combos = math.prod(len(alternate_sources[e]) for e in edges)
    if n_combos > max_combinations:
        raise EstimationError(
            f"{n_combos} evidence combinations exceed the cap of "
            f"{max_combinations}; prune alternate sources"
        )

    def variant(combo):
        t = tree
        for e, (a, n) in zip(edges, combo):
            t = t.with_evidence(e, a, n)
        return t

    combos = list(itertools.product(*(alternate_sources[e] for e in edges)))
    if len(combos) == 1:
        return wmm_estimate(
            variant(combos[0]), sample_length, interval_type, seed, alpha, max_attempts
        )

    thetas, row_ests, row_ws = [], [], []
    first = None
    for combo in combos:
        t = variant(combo)
        matrix = build_sample_matrix(t, sample_length, seed, max_attempts)
        w = min_variance_weights(matrix).values
        thetas.append(matrix.log_values @ w)
        row_ests.append(np.prod(matrix.values**w, axis=1))
        row_ws.append(matrix.row_weights / matrix.row_weights.sum())
        if first is None:
            counts = {leaf: t.count(leaf) for leaf in matrix.leaf_order}
            first = estimate_from_matrix(matrix, interval_type, alpha, seed, counts)

    labels = tuple(f"C{i + 1}" for i in range(len(combos)))
    stacked = np.column_stack(thetas)
    row_weights = np.mean(row_ws, axis=0)
    row_weights = row_weights / row_weights.max()
    weights, psi, root, interval = _combine(
        np.column_stack(row_ests), stacked, row_weights, labels, interval_type, alpha
    )
    stage_two = {
        "combinations": [
            {edge_key(e): list(src) for e, src in zip(edges, combo)} for combo in combos
        ],
        "weights": weights.as_dict(),
    }
    return EstimateReport(
        root_estimate=root,
        rounded_estimate=math.floor(root + 0.5),
        interval=tuple(float(x) for x in interval),
        interval_type=interval_type,
        alpha=alpha,
        log_estimates=psi,
        weights=first.weights,
        row_weights=row_weights,
        per_leaf=first.per_leaf,
        per_edge=first.per_edge,
        seed=seed,
        samples=sample_length,
        stage_two=stage_two,
    )


def dump_samples(report: EstimateReport, fh) -> None:
    """Write raw samples: one row per realization, leaves then edges then weight."""
    writer = csv.writer(fh, lineterminator="\n")
    leaves = list(report.per_leaf)
    edges = list(report.per_edge)
    writer.writerow([*leaves, *(edge_key(e) for e in edges), "row_weight"])
    cols = [report.per_leaf[l].samples for l in leaves]
    cols += [report.per_edge[e] for e in edges]
    cols.append(report.row_weights)
    for row in zip(*cols):
        writer.writerow([repr(float(x)) for x in row])
