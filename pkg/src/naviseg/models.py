"""Closed-form rate model with navigation ball and the analytic distortion model.

The rate model interpolates between a pure per-request rate (tiny balls) and
a storage-like cost (balls covering the whole domain) through the truncated
linear weight g. The distortion model splits a synthesized view into hole
pixels (inpainted at constant cost) and copied pixels (carrying only the
reconstruction distortion of the reference), with the hole area bounded
analytically from the 6-D pose change.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .domain import CameraRig, Popularity, Viewpoint, wrap_angle


@dataclass(frozen=True)
class BallScheduleParams:
    """Request scheduling and navigation-speed parameters of a session.

    frame_rate f is in frames/second, request_interval f_e in frames,
    tau_max in seconds, delta in camera-index units per second and the
    session duration T in seconds. N_f = T*f and N_e = N_f/f_e must come
    out integral.
    """

    frame_rate: float
    request_interval: int
    tau_max: float
    delta: float
    duration: float

    def __post_init__(self):
        if self.frame_rate <= 0 or self.duration <= 0:
            raise ValueError("frame rate and duration must be positive")
        if self.request_interval < 1:
            raise ValueError("request interval must be >= 1 frame")
        if self.tau_max < 0 or self.delta < 0:
            raise ValueError("tau_max and delta must be non-negative")
        n_f = self.duration * self.frame_rate
        if abs(n_f - round(n_f)) > 1e-9:
            raise ValueError(f"T*f = {n_f} is not an integer frame count")
        if round(n_f) % self.request_interval != 0:
            raise ValueError(
                f"N_f = {round(n_f)} is not a multiple of f_e = {self.request_interval}")

    @property
    def n_frames(self) -> int:
        return int(round(self.duration * self.frame_rate))

    @property
    def n_requests(self) -> int:
        return self.n_frames // self.request_interval


@dataclass(frozen=True)
class SceneModel:
    """Image geometry and per-pixel distortion constants for view synthesis."""

    width: float
    height: float
    focal: float
    z_min: float
    z_max: float
    d_inp: float
    d_rec: float

    def __post_init__(self):
        if min(self.width, self.height, self.focal) <= 0:
            raise ValueError("image dimensions and focal length must be positive")
        if not 0 < self.z_min <= self.z_max:
            raise ValueError("depth range must satisfy 0 < z_min <= z_max")
        if not self.d_inp >= self.d_rec >= 0:
            raise ValueError("distortions must satisfy d_inp >= d_rec >= 0")

    @property
    def pixels(self) -> float:
        return self.width * self.height


def t_star(params: BallScheduleParams) -> float:
    """Optimal tolerable delay: request period plus worst-case system delay.

    This is the smallest ball size (in seconds) that keeps every frame
    between two request arrivals inside the prefetched neighbourhood, so it
    minimises rate while guaranteeing starvation-free navigation.
    """
    return params.request_interval / params.frame_rate + params.tau_max


def g_factor(t_star_s: float, delta: float, n_views: int) -> float:
    """Truncated-linear rate weight: 1 with no ball, 0 once balls span the domain."""
    if t_star_s < 0 or delta < 0:
        raise ValueError("t_star and delta must be non-negative")
    return max(1.0 - 2.0 * t_star_s * delta / n_views, 0.0)


def expected_requests_alpha(seg_popularity_mass: float, g: float, n_requests: int) -> float:
    """Expected per-session request count of a segment with given popularity mass."""
    return (1.0 - g) * n_requests + g * n_requests * seg_popularity_mass


def model_rate_cost(table, partition, popularity: Popularity, g: float) -> float:
    """Model transmission rate in bits per request.

    (1-g) * sum_k h(V_k)  +  g * sum_k h(V_k) * mass_k. The per-path and
    per-request normalisations cancel, so the request count never enters.
    """
    from .codec import segment_cost
    storage_like = 0.0
    weighted = 0.0
    for a, b in partition.segments():
        h = segment_cost(table, a, b)
        storage_like += h
        weighted += h * popularity.mass(a, b)
    return (1.0 - g) * storage_like + g * weighted


def hole_area_bound(offset, scene: SceneModel) -> float:
    """Upper bound on hole pixels for a 6-D pose change, capped at W*H.

    The six components aggregate additively (an over-count of overlapping
    holes, hence an upper bound); the in-plane rotation term mirrors beyond
    pi/2 and uses the branch threshold 2*atan(H/W) from the actual image
    dimensions.
    """
    off = np.asarray(offset, dtype=np.float64)
    if off.shape != (6,):
        raise ValueError("offset must be a 6-vector")
    return float(backend.hole_area(
        off[0], off[1], off[2], off[3], off[4], off[5],
        scene.width, scene.height, scene.focal, scene.z_min))


def pose_difference(r: Viewpoint, ref_index: int, rig: CameraRig) -> np.ndarray:
    """Componentwise pose change from camera ref_index to the viewpoint r.

    The viewpoint pose is the rig pose interpolated at r.s plus r's offset;
    angular components are wrapped to [-pi, pi).
    """
    if not 1 <= ref_index <= rig.n_views:
        raise ValueError(f"reference index {ref_index} outside [1, {rig.n_views}]")
    diff = rig.pose_at(r.s) + r.offset - rig.poses[ref_index - 1]
    diff[3:] = wrap_angle(diff[3:])
    return diff


def view_distortion(r: Viewpoint, ref_index: int, rig: CameraRig,
                    scene: SceneModel) -> float:
    """Two-region synthesis distortion of r rendered from camera ref_index."""
    omega = hole_area_bound(pose_difference(r, ref_index, rig), scene)
    return scene.d_inp * omega + scene.d_rec * (scene.pixels - omega)


def expected_distortion_mc(popularity: Popularity, rig: CameraRig,
                           scene: SceneModel, schedule: BallScheduleParams,
                           sample_count: int, seed: int,
                           shift_magnitudes=None) -> float:
    """Monte-Carlo estimate of the expected per-session synthesis distortion.

    N_f * D_rec * W * H  +  N_f * (D_inp - D_rec) * E[hole area], with the
    expectation over frames of paths drawn by the session generator (each
    frame rendered from its nearest camera). Deterministic given the seed.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    from .domain import nearest_camera_of_coords
    from .simulator import sample_frame_viewpoints

    frame_s, frame_off = sample_frame_viewpoints(
        popularity, schedule, sample_count, seed, shift_magnitudes)
    refs = nearest_camera_of_coords(frame_s, rig.n_views)
    total = 0.0
    for s, off, ref in zip(frame_s, frame_off, refs):
        diff = rig.pose_at(float(s)) + off - rig.poses[ref - 1]
        diff[3:] = wrap_angle(diff[3:])
        total += backend.hole_area(diff[0], diff[1], diff[2], diff[3], diff[4],
                                   diff[5], scene.width, scene.height,
                                   scene.focal, scene.z_min)
    mean_omega = total / len(frame_s)
    n_f = schedule.n_frames
    return n_f * scene.d_rec * scene.pixels + n_f * (scene.d_inp - scene.d_rec) * mean_omega
