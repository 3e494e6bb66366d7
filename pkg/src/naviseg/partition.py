"""Segment-partition solvers: interval-DAG optimum, brute-force oracle, baselines.

The optimal solver works on the interval DAG whose nodes are boundary
positions 0..N_V and whose edge (a, b) is one segment spanning views
a+1..b, weighted by its coded size times (mu + 1 - g + g * popularity
mass). Any source-to-sink path sums exactly the partition objective, so a
shortest path is a global minimizer over every segment count at once.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import backend
from .codec import RateTable, segment_cost, storage_cost
from .domain import Popularity
from .models import model_rate_cost


@dataclass(frozen=True)
class Partition:
    """Contiguous segments over views 1..N_V, stored as right boundaries.

    boundaries is strictly increasing and ends at N_V; segment k covers
    views boundaries[k-1]+1 .. boundaries[k] (with an implicit 0 in front).
    """

    boundaries: tuple[int, ...]

    def __post_init__(self):
        b = tuple(int(x) for x in self.boundaries)
        if not b:
            raise ValueError("a partition needs at least one segment")
        if b[0] < 1 or any(x >= y for x, y in zip(b, b[1:])):
            raise ValueError(f"boundaries must be strictly increasing, got {b}")
        object.__setattr__(self, "boundaries", b)

    @property
    def n_views(self) -> int:
        return self.boundaries[-1]

    @property
    def n_segments(self) -> int:
        return len(self.boundaries)

    def segments(self):
        """Yield (first_view, last_view) per segment, 1-based inclusive."""
        lo = 1
        for hi in self.boundaries:
            yield lo, hi
            lo = hi + 1

    def widths(self) -> np.ndarray:
        return np.diff(np.concatenate(([0], self.boundaries)))

    def segment_of_view(self, n: int) -> int:
        """Index (1-based) of the segment containing view n."""
        if not 1 <= n <= self.n_views:
            raise ValueError(f"view {n} outside [1, {self.n_views}]")
        return int(np.searchsorted(self.boundaries, n)) + 1

    def segments_overlapping(self, n_lo: int, n_hi: int) -> tuple[int, ...]:
        """1-based indices of all segments intersecting views n_lo..n_hi."""
        if n_lo > n_hi:
            raise ValueError("empty view range")
        k_lo = self.segment_of_view(max(n_lo, 1))
        k_hi = self.segment_of_view(min(n_hi, self.n_views))
        return tuple(range(k_lo, k_hi + 1))

    def segment_views(self, k: int) -> tuple[int, int]:
        """(first_view, last_view) of 1-based segment k."""
        if not 1 <= k <= self.n_segments:
            raise ValueError(f"segment {k} outside [1, {self.n_segments}]")
        lo = 1 if k == 1 else self.boundaries[k - 2] + 1
        return lo, self.boundaries[k - 1]


@dataclass(frozen=True)
class PartitionObjectiveParams:
    """Weights and context evaluated by the partitioning objective."""

    mu: float
    g: float
    popularity: Popularity
    table: RateTable
    width_cap: int | None = None

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("mu must be non-negative")
        if not 0.0 <= self.g <= 1.0:
            raise ValueError("g must lie in [0, 1]")
        if self.popularity.n_views != self.table.n_views:
            raise ValueError("popularity and rate table disagree on N_V")
        if self.width_cap is not None and self.width_cap < 1:
            raise ValueError("width_cap must be >= 1 when present")


def partition_objective(partition: Partition, params: PartitionObjectiveParams) -> float:
    """sum_k h(V_k) * (mu + 1 - g + g * mass_k), in popularity-weighted bits."""
    base = params.mu + 1.0 - params.g
    total = 0.0
    for a, b in partition.segments():
        h = segment_cost(params.table, a, b)
        total += h * (base + params.g * params.popularity.mass(a, b))
    return total


def solve_optimal(params: PartitionObjectiveParams, n_views: int) -> Partition:
    """Globally optimal partition via shortest path on the interval DAG.

    The segment count is an output. Exact-cost ties break toward fewer
    segments, then the lexicographically smallest boundary list.
    """
    if n_views != params.table.n_views:
        raise ValueError("n_views disagrees with the rate table")
    cap = params.width_cap if params.width_cap is not None else n_views
    hp_prefix = params.table.p_prefix()
    pop_prefix = np.zeros(n_views + 1)
    np.cumsum(params.popularity.weights, out=pop_prefix[1:])
    base = params.mu + 1.0 - params.g
    bounds, _cost = backend.solve_segment_dp(
        np.ascontiguousarray(params.table.h_i), hp_prefix, pop_prefix,
        base, params.g, int(cap))
    return Partition(tuple(int(b) for b in bounds))


def _all_partitions(n_views: int, width_cap: int | None):
    """Every contiguous partition of 1..n_views as a boundary tuple."""
    for mask in range(1 << (n_views - 1)):
        bounds = [b for b in range(1, n_views) if mask >> (b - 1) & 1]
        bounds.append(n_views)
        if width_cap is not None:
            if any(b - a > width_cap for a, b in zip([0] + bounds, bounds)):
                continue
        yield tuple(bounds)


def brute_force_optimal(params: PartitionObjectiveParams,
                        n_views: int) -> tuple[Partition, float]:
    """Exhaustive minimum over all 2^(N_V - 1) partitions; oracle for the solver.

    Uses the same tie-break as solve_optimal: cost, then segment count, then
    lexicographic boundaries.
    """
    if n_views > 20:
        raise ValueError("brute force is guarded to N_V <= 20")
    if n_views != params.table.n_views:
        raise ValueError("n_views disagrees with the rate table")
    best_key = None
    best: tuple[int, ...] | None = None
    best_cost = 0.0
    for bounds in _all_partitions(n_views, params.width_cap):
        part = Partition(bounds)
        cost = partition_objective(part, params)
        key = (cost, len(bounds), bounds)
        if best_key is None or key < best_key:
            best_key, best, best_cost = key, bounds, cost
    assert best is not None
    return Partition(best), best_cost


def equidistant_partition(n_views: int, n_segments: int) -> Partition:
    """Blind equal division into n_segments; the longer segments come first."""
    if not 1 <= n_segments <= n_views:
        raise ValueError(f"n_segments must lie in [1, {n_views}]")
    q, r = divmod(n_views, n_segments)
    widths = [q + 1] * r + [q] * (n_segments - r)
    return Partition(tuple(np.cumsum(widths)))


def select_baseline_nk(params: PartitionObjectiveParams, n_views: int,
                       mode: str) -> int:
    """Segment count minimising the objective over equidistant partitions.

    Both baselines score with a uniform popularity. mode 'fixed' ignores the
    navigation ball (delta = 0, hence g = 1) so the choice is identical for
    every navigation speed; mode 'nb' keeps the actual g. Ties pick the
    smaller count.
    """
    if mode not in ("fixed", "nb"):
        raise ValueError(f"unknown baseline mode {mode!r}")
    g = 1.0 if mode == "fixed" else params.g
    uniform = Popularity(np.full(n_views, 1.0 / n_views))
    score_params = PartitionObjectiveParams(
        mu=params.mu, g=g, popularity=uniform, table=params.table,
        width_cap=params.width_cap)
    best_nk = 1
    best_cost = None
    for nk in range(1, n_views + 1):
        cost = partition_objective(equidistant_partition(n_views, nk), score_params)
        if best_cost is None or cost < best_cost:
            best_cost, best_nk = cost, nk
    return best_nk


def partition_record(partition: Partition, params: PartitionObjectiveParams) -> dict:
    """JSON-ready cost breakdown for a solved partition."""
    return {
        "q_label": params.table.q_label,
        "mu": params.mu,
        "g": params.g,
        "boundaries": list(partition.boundaries),
        "cost_total": partition_objective(partition, params),
        "cost_rate": model_rate_cost(params.table, partition, params.popularity, params.g),
        "cost_storage": storage_cost(params.table, partition),
    }


def save_partition(partition: Partition, params: PartitionObjectiveParams,
                   path, extra: dict | None = None) -> None:
    """Write the partition JSON record, optionally merged with provenance keys."""
    record = partition_record(partition, params)
    if extra:
        record.update(extra)
    with open(path, "w") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_partition(path) -> Partition:
    with open(path) as fh:
        record = json.load(fh)
    return Partition(tuple(record["boundaries"]))
