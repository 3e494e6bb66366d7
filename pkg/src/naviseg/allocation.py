"""Per-request segment allocation.

Two policies: the fixed low-distortion allocation (every segment holding a
camera inside the navigation ball) and the real-time heuristic that samples
a shrunken sub-ball of radius t_S * delta, trading rate against distortion
through t_S. Segments are atomic: a request either ships a whole segment or
none of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .codec import RateTable, segment_cost
from .domain import (CameraRig, NavigationBall, Viewpoint, ball_view_range,
                     nearest_camera, nearest_camera_of_coords)
from .partition import Partition


@dataclass(frozen=True)
class AllocationConfig:
    """Knobs of the allocation step.

    t_s <= t_star is the heuristic's sub-ball delay; sample_count overrides
    the default sampling density ceil(2 * t_s * delta) + 1, which is just
    dense enough to hit every camera cell in the sub-ball. nu is kept as
    metadata only: the rate-distortion trade-off is steered through t_s.
    """

    t_star: float
    delta: float
    t_s: float | None = None
    sample_count: int | None = None
    memory_aware: bool = False
    nu: float | None = None

    def __post_init__(self):
        if self.t_star < 0 or self.delta < 0:
            raise ValueError("t_star and delta must be non-negative")
        if self.t_s is None:
            object.__setattr__(self, "t_s", self.t_star)
        if not 0 <= self.t_s <= self.t_star:
            raise ValueError("t_s must lie in [0, t_star]")
        if self.sample_count is not None and self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")

    @property
    def ball_radius(self) -> float:
        return self.t_star * self.delta

    @property
    def sub_ball_radius(self) -> float:
        return self.t_s * self.delta

    def effective_samples(self) -> int:
        if self.sample_count is not None:
            return self.sample_count
        return int(math.ceil(2.0 * self.sub_ball_radius)) + 1


@dataclass(frozen=True)
class AllocationDecision:
    """Segments shipped for one request, with their coded sizes.

    segment_bits is aligned with selected; transmitted_bits is its sum.
    """

    viewpoint: Viewpoint
    selected: tuple[int, ...]
    segment_bits: tuple[float, ...]
    transmitted_bits: float
    sample_refs: tuple[int, ...] = field(default=())


def _decision(r: Viewpoint, selected, partition: Partition, table: RateTable,
              sample_refs=()) -> AllocationDecision:
    sel = tuple(sorted(set(int(k) for k in selected)))
    bits = tuple(segment_cost(table, *partition.segment_views(k)) for k in sel)
    return AllocationDecision(viewpoint=r, selected=sel, segment_bits=bits,
                              transmitted_bits=sum(bits),
                              sample_refs=tuple(int(n) for n in sample_refs))


def allocate_s0(r: Viewpoint, partition: Partition, rig: CameraRig,
                cfg: AllocationConfig, table: RateTable) -> AllocationDecision:
    """Fixed low-distortion allocation: every segment holding a ball camera.

    The required views are the cameras within the navigation ball of radius
    t_star * delta; any segment intersecting that range ships whole.
    """
    ball = NavigationBall(center=r, radius=cfg.ball_radius)
    n_lo, n_hi = ball_view_range(ball, rig)
    selected = partition.segments_overlapping(n_lo, n_hi)
    return _decision(r, selected, partition, table,
                     sample_refs=range(n_lo, n_hi + 1))


def allocate_heuristic(r: Viewpoint, partition: Partition, rig: CameraRig,
                       cfg: AllocationConfig, table: RateTable) -> AllocationDecision:
    """Sampled sub-ball allocation with rate-distortion knob t_s.

    Samples the sub-ball of radius t_s * delta at equal spacing (endpoints
    inclusive), takes each sample's nearest camera and ships the segments
    containing them. Reference candidates are kept within the governing
    ball's view range, so with t_s = t_star and dense sampling the result
    coincides exactly with the fixed allocation.
    """
    m = cfg.effective_samples()
    radius = cfg.sub_ball_radius
    if m == 1 or radius == 0.0:
        samples = np.array([r.s])
    else:
        samples = np.linspace(r.s - radius, r.s + radius, m)
    refs = nearest_camera_of_coords(samples, rig.n_views)
    ball = NavigationBall(center=r, radius=cfg.ball_radius)
    n_lo, n_hi = ball_view_range(ball, rig)
    kept = refs[(refs >= n_lo) & (refs <= n_hi)]
    if kept.size == 0:
        kept = np.array([nearest_camera(r, rig)])
    selected = sorted({partition.segment_of_view(int(n)) for n in kept})
    return _decision(r, selected, partition, table, sample_refs=refs)


def dedup_against_memory(decision: AllocationDecision,
                         client_history) -> AllocationDecision:
    """Drop segments the client already holds and recount the bits."""
    pairs = [(k, h) for k, h in zip(decision.selected, decision.segment_bits)
             if k not in client_history]
    kept = tuple(k for k, _ in pairs)
    bits = tuple(h for _, h in pairs)
    return AllocationDecision(viewpoint=decision.viewpoint, selected=kept,
                              segment_bits=bits, transmitted_bits=sum(bits),
                              sample_refs=decision.sample_refs)


def render_reference_for(r: Viewpoint, transmitted_views) -> int:
    """Closest transmitted camera to r by manifold distance; ties to the lower index.

    Raises if nothing was transmitted, which signals starvation that a
    correctly sized ball makes impossible.
    """
    views = np.asarray(sorted(transmitted_views), dtype=np.float64)
    if views.size == 0:
        raise ValueError("no views transmitted: render starvation")
    pos = int(np.searchsorted(views, r.s))
    left = min(max(pos - 1, 0), views.size - 1)
    right = min(pos, views.size - 1)
    d_left = abs(r.s - views[left])
    d_right = abs(views[right] - r.s)
    return int(views[left] if d_left <= d_right else views[right])
