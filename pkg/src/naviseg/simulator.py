"""Stochastic navigation sessions and end-to-end evaluation.

A session draws requested viewpoints from the view popularity (each step
restricted to the ball reachable at the navigation speed), interpolates the
frames in between, allocates segments per request, and scores every frame:
reference view, hole area, synthesis distortion, starvation and success.
Everything is deterministic given the master seed; path i of a run is
reproducible in isolation through a spawn-key derived sub-seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend
from .allocation import (AllocationConfig, AllocationDecision, allocate_heuristic,
                         allocate_s0, dedup_against_memory)
from .codec import RateTable
from .domain import CameraRig, Popularity, Viewpoint
from .models import BallScheduleParams, SceneModel, expected_requests_alpha
from .partition import Partition


def path_seed(master_seed: int, path_index: int, stream: int = 0) -> np.random.SeedSequence:
    """Sub-seed for one path: SeedSequence(master, spawn_key=(path_index, stream)).

    stream 0 drives path generation, stream 1 the virtual-view shift.
    """
    return np.random.SeedSequence(entropy=master_seed, spawn_key=(path_index, stream))


@dataclass(frozen=True)
class NavigationPath:
    """One session's viewpoints: per-frame coordinates plus request anchors.

    anchors holds the N_e requested view indices and one extra tail anchor
    that only shapes the interpolation of the frames after the last request.
    frame_s[i * f_e] equals anchors[i] exactly.
    """

    anchors: np.ndarray
    frame_s: np.ndarray
    frame_off: np.ndarray
    request_interval: int

    @property
    def n_frames(self) -> int:
        return self.frame_s.size

    @property
    def n_requests(self) -> int:
        return self.n_frames // self.request_interval

    def request_viewpoint(self, i: int) -> Viewpoint:
        t = i * self.request_interval
        return Viewpoint(float(self.frame_s[t]), self.frame_off[t])


@dataclass(frozen=True)
class SessionConfig:
    """Everything a batch of sessions needs."""

    schedule: BallScheduleParams
    popularity: Popularity
    partition: Partition
    alloc: AllocationConfig
    rig: CameraRig
    scene: SceneModel
    table: RateTable
    allocator: str = "s0"
    path_count: int = 100
    seed: int = 0
    virtual_shift: tuple | None = None

    def __post_init__(self):
        if self.path_count < 1:
            raise ValueError("path_count must be >= 1")
        if self.allocator not in ("s0", "heuristic"):
            raise ValueError(f"unknown allocator {self.allocator!r}")
        n_v = self.rig.n_views
        if (self.popularity.n_views != n_v or self.table.n_views != n_v
                or self.partition.n_views != n_v):
            raise ValueError("popularity, table, partition and rig disagree on N_V")


@dataclass(frozen=True)
class SessionTrace:
    """Outcome of one simulated session."""

    path: NavigationPath
    decisions: tuple[AllocationDecision, ...]
    ref: np.ndarray
    omega: np.ndarray
    distortion: np.ndarray
    starved: np.ndarray
    success: np.ndarray
    total_bits: float
    total_distortion: float
    starved_frames: int
    success_count: int


def generate_path(popularity: Popularity, schedule: BallScheduleParams,
                  seed) -> NavigationPath:
    """Draw one navigation path along camera viewpoints.

    The first requested view is sampled from the popularity; every following
    one from the popularity restricted to the ball of radius
    delta * f_e / f around the previous view (renormalised). Frames between
    requests interpolate the manifold coordinate linearly; the frames after
    the last request interpolate toward one extra anchor drawn the same way.
    """
    rng = np.random.default_rng(seed)
    n_views = popularity.n_views
    weights = popularity.weights
    f_e = schedule.request_interval
    n_req = schedule.n_requests
    step_radius = schedule.delta * f_e / schedule.frame_rate
    idx = np.arange(1, n_views + 1)

    anchors = np.empty(n_req + 1, dtype=np.int64)
    anchors[0] = rng.choice(idx, p=weights)
    for i in range(1, n_req + 1):
        mask = np.abs(idx - anchors[i - 1]) <= step_radius
        w = weights * mask
        total = w.sum()
        if total == 0.0:
            raise ValueError(
                f"popularity has no mass within radius {step_radius} of view "
                f"{anchors[i - 1]}: unreachable support")
        anchors[i] = rng.choice(idx, p=w / total)

    frac = np.arange(f_e, dtype=np.float64) / f_e
    blocks = anchors[:-1, None] + (anchors[1:] - anchors[:-1])[:, None] * frac[None, :]
    frame_s = blocks.reshape(-1)
    frame_off = np.zeros((frame_s.size, 6))
    return NavigationPath(anchors=anchors, frame_s=frame_s, frame_off=frame_off,
                          request_interval=f_e)


def add_virtual_shift(path: NavigationPath, shift_magnitudes, seed) -> NavigationPath:
    """Add a uniform random 6-D offset within +/- magnitude per component."""
    mags = np.asarray(shift_magnitudes, dtype=np.float64)
    if mags.shape != (6,) or np.any(mags < 0):
        raise ValueError("shift magnitudes must be 6 non-negative values")
    rng = np.random.default_rng(seed)
    off = rng.uniform(-mags, mags, size=(path.n_frames, 6))
    return NavigationPath(anchors=path.anchors, frame_s=path.frame_s,
                          frame_off=off, request_interval=path.request_interval)


def _segment_view_array(partition: Partition, segments) -> np.ndarray:
    """Sorted camera indices covered by the given segments, as float64."""
    if not segments:
        return np.empty(0)
    parts = [np.arange(*_incl(partition.segment_views(k))) for k in sorted(segments)]
    return np.concatenate(parts).astype(np.float64)


def _incl(lo_hi):
    lo, hi = lo_hi
    return lo, hi + 1


def run_session(cfg: SessionConfig, path: NavigationPath) -> SessionTrace:
    """Allocate per request and score every frame of one path."""
    n_req = path.n_requests
    f_e = path.request_interval

    decisions: list[AllocationDecision] = []
    history: set[int] = set()
    cum_segments: set[int] = set()
    avail_arrays: list[np.ndarray] = []
    cum_arrays: list[np.ndarray] = []
    req_s = np.empty(n_req)
    for i in range(n_req):
        r = path.request_viewpoint(i)
        req_s[i] = r.s
        if cfg.allocator == "s0":
            decision = allocate_s0(r, cfg.partition, cfg.rig, cfg.alloc, cfg.table)
        else:
            decision = allocate_heuristic(r, cfg.partition, cfg.rig, cfg.alloc, cfg.table)
        full_selection = decision.selected
        if cfg.alloc.memory_aware:
            decision = dedup_against_memory(decision, history)
            history.update(full_selection)
        cum_segments.update(full_selection)
        decisions.append(decision)
        renderable = cum_segments if cfg.alloc.memory_aware else full_selection
        avail_arrays.append(_segment_view_array(cfg.partition, renderable))
        cum_arrays.append(_segment_view_array(cfg.partition, cum_segments))

    avail_ptr = np.zeros(n_req + 1, dtype=np.int64)
    np.cumsum([a.size for a in avail_arrays], out=avail_ptr[1:])
    cum_ptr = np.zeros(n_req + 1, dtype=np.int64)
    np.cumsum([a.size for a in cum_arrays], out=cum_ptr[1:])
    avail_flat = np.concatenate(avail_arrays) if avail_arrays else np.empty(0)
    cum_flat = np.concatenate(cum_arrays) if cum_arrays else np.empty(0)
    gov = np.repeat(np.arange(n_req, dtype=np.int64), f_e)

    scene = cfg.scene
    ref, omega, dist, starved, success = backend.evaluate_frames(
        np.ascontiguousarray(path.frame_s), np.ascontiguousarray(path.frame_off),
        gov, req_s, avail_flat, avail_ptr, cum_flat, cum_ptr,
        np.ascontiguousarray(cfg.rig.poses), scene.width, scene.height,
        scene.focal, scene.z_min, scene.d_inp, scene.d_rec,
        cfg.alloc.ball_radius)

    return SessionTrace(
        path=path, decisions=tuple(decisions), ref=ref, omega=omega,
        distortion=dist, starved=starved, success=success,
        total_bits=float(sum(d.transmitted_bits for d in decisions)),
        total_distortion=float(dist.sum()),
        starved_frames=int(starved.sum()),
        success_count=int(success.sum()),
    )


def run_sessions(cfg: SessionConfig) -> list[SessionTrace]:
    """Generate path_count paths from the master seed and run them all."""
    traces = []
    for i in range(cfg.path_count):
        path = generate_path(cfg.popularity, cfg.schedule, path_seed(cfg.seed, i, 0))
        if cfg.virtual_shift is not None:
            path = add_virtual_shift(path, cfg.virtual_shift, path_seed(cfg.seed, i, 1))
        traces.append(run_session(cfg, path))
    return traces


@dataclass(frozen=True)
class SessionSummary:
    """Aggregate metrics over a batch of session traces."""

    n_traces: int
    mean_rate_bits: float
    mean_distortion: float
    mean_hole_pixels: float
    success_rate: float
    starvation_rate: float


def aggregate_sessions(traces) -> SessionSummary:
    """Arithmetic means over traces: rate per request, distortion and hole
    pixels per path, success and starvation rates per frame."""
    traces = list(traces)
    if not traces:
        raise ValueError("need at least one trace")
    n = len(traces)
    rate = sum(t.total_bits / len(t.decisions) for t in traces) / n
    distortion = sum(t.total_distortion for t in traces) / n
    holes = sum(float(t.omega.sum()) for t in traces) / n
    frames = sum(t.path.n_frames for t in traces)
    succ = sum(t.success_count for t in traces) / frames
    starv = sum(t.starved_frames for t in traces) / frames
    return SessionSummary(n_traces=n, mean_rate_bits=rate, mean_distortion=distortion,
                          mean_hole_pixels=holes, success_rate=succ,
                          starvation_rate=starv)


def measure_empirical_alpha(traces, partition: Partition, popularity: Popularity,
                            g: float, n_requests: int):
    """Per-segment mean request counts, empirical and modelled.

    alpha_hat[k] is the average over paths of the number of requests whose
    allocation shipped segment k+1; alpha_model[k] comes from the
    ball-weighted popularity-mass model on the same inputs.
    """
    traces = list(traces)
    counts = np.zeros(partition.n_segments)
    for trace in traces:
        for decision in trace.decisions:
            for k in decision.selected:
                counts[k - 1] += 1.0
    alpha_hat = counts / len(traces)
    alpha_model = np.array([
        expected_requests_alpha(popularity.mass(a, b), g, n_requests)
        for a, b in partition.segments()])
    return alpha_hat, alpha_model


def sample_frame_viewpoints(popularity: Popularity, schedule: BallScheduleParams,
                            sample_count: int, seed: int, shift_magnitudes=None):
    """Frame viewpoints drawn from the path generator's stationary mix.

    Concatenates whole generated paths (with optional virtual shift) until
    sample_count frames are collected; used by the Monte-Carlo distortion
    estimator.
    """
    frames_s = []
    frames_off = []
    collected = 0
    i = 0
    while collected < sample_count:
        path = generate_path(popularity, schedule, path_seed(seed, i, 0))
        if shift_magnitudes is not None:
            path = add_virtual_shift(path, shift_magnitudes, path_seed(seed, i, 1))
        frames_s.append(path.frame_s)
        frames_off.append(path.frame_off)
        collected += path.n_frames
        i += 1
    frame_s = np.concatenate(frames_s)[:sample_count]
    frame_off = np.concatenate(frames_off)[:sample_count]
    return frame_s, frame_off


def trace_request_records(trace: SessionTrace, context: dict | None = None):
    """JSON-ready per-request records for the decision log."""
    records = []
    for i, decision in enumerate(trace.decisions):
        rec = {
            "request": i,
            "s": float(decision.viewpoint.s),
            "offset": [float(v) for v in decision.viewpoint.offset],
            "selected_segments": list(decision.selected),
            "bits": float(decision.transmitted_bits),
            "sample_refs": list(decision.sample_refs),
        }
        if context:
            rec.update(context)
        records.append(rec)
    return records
