"""Camera-rig geometry, viewpoints, navigation balls and view popularity.

The camera poses live on a 1-D manifold and are indexed 1..N_V in manifold
order. A viewpoint is addressed by a continuous manifold coordinate ``s``
(measured in camera-index units, neighbouring cameras are one unit apart)
plus a 6-D pose offset relative to the pose interpolated at ``s``.
All distances on the manifold are coordinate differences in index units.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi

# pose vector layout: (x, y, z, theta, phi, psi)
POSE_DIM = 6


def wrap_angle(a):
    """Wrap an angle (scalar or array) into [-pi, pi)."""
    return a - TWO_PI * np.floor((a + math.pi) / TWO_PI)


@dataclass(frozen=True)
class CameraRig:
    """An ordered set of camera poses along a 1-D manifold.

    poses has shape (N_V, 6); row n-1 is the pose of camera n. Index order
    is the manifold order and neighbouring indices are one unit apart.
    """

    poses: np.ndarray

    def __post_init__(self):
        poses = np.asarray(self.poses, dtype=np.float64)
        if poses.ndim != 2 or poses.shape[1] != POSE_DIM:
            raise ValueError(f"poses must have shape (N_V, {POSE_DIM}), got {poses.shape}")
        if poses.shape[0] < 1:
            raise ValueError("a rig needs at least one camera")
        poses.setflags(write=False)
        object.__setattr__(self, "poses", poses)

    @property
    def n_views(self) -> int:
        return self.poses.shape[0]

    @classmethod
    def linear(cls, n_views: int, baseline: float = 1.0) -> "CameraRig":
        """Synthetic rig: cameras on a straight line along x, common orientation."""
        if n_views < 1:
            raise ValueError("n_views must be >= 1")
        poses = np.zeros((n_views, POSE_DIM))
        poses[:, 0] = np.arange(n_views, dtype=np.float64) * baseline
        return cls(poses)

    def pose_at(self, s: float) -> np.ndarray:
        """Pose linearly interpolated (in index) at manifold coordinate s."""
        if not 1.0 <= s <= self.n_views:
            raise ValueError(f"manifold coordinate {s} outside [1, {self.n_views}]")
        if self.n_views == 1:
            return self.poses[0].copy()
        si = s - 1.0
        i0 = min(int(math.floor(si)), self.n_views - 2)
        frac = si - i0
        return self.poses[i0] + frac * (self.poses[i0 + 1] - self.poses[i0])


@dataclass(frozen=True)
class Viewpoint:
    """A continuous viewpoint: manifold coordinate plus 6-D pose offset."""

    s: float
    offset: np.ndarray = field(default_factory=lambda: np.zeros(POSE_DIM))

    def __post_init__(self):
        off = np.asarray(self.offset, dtype=np.float64)
        if off.shape != (POSE_DIM,):
            raise ValueError(f"offset must have shape ({POSE_DIM},)")
        off = off.copy()
        off[3:] = wrap_angle(off[3:])
        off.setflags(write=False)
        object.__setattr__(self, "offset", off)
        object.__setattr__(self, "s", float(self.s))


@dataclass(frozen=True)
class NavigationBall:
    """Prefetch neighbourhood of radius tolerable-delay * speed around a viewpoint."""

    center: Viewpoint
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("ball radius must be non-negative")
        object.__setattr__(self, "radius", float(self.radius))


@dataclass(frozen=True)
class Popularity:
    """Per-view request probabilities p_n, n = 1..N_V, summing to one."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("weights must be a non-empty 1-D vector")
        if np.any(w < 0):
            raise ValueError("popularity weights must be non-negative")
        total = float(w.sum())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"popularity must sum to 1 (got {total!r})")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n_views(self) -> int:
        return self.weights.size

    def mass(self, lo: int, hi: int) -> float:
        """Total popularity of views lo..hi inclusive (1-based)."""
        return float(self.weights[lo - 1:hi].sum())


def distance(a: Viewpoint, b: Viewpoint) -> float:
    """Manifold distance between two viewpoints, in camera-index units."""
    return abs(a.s - b.s)


def nearest_camera(r: Viewpoint, rig: CameraRig) -> int:
    """Index of the camera closest to r; half-integer ties go to the lower index."""
    n = int(math.ceil(r.s - 0.5))
    return min(max(n, 1), rig.n_views)


def nearest_camera_of_coords(s, n_views: int):
    """Vectorised nearest_camera on raw manifold coordinates."""
    n = np.ceil(np.asarray(s, dtype=np.float64) - 0.5)
    return np.clip(n, 1, n_views).astype(np.int64)


def ball_view_range(ball: NavigationBall, rig: CameraRig) -> tuple[int, int]:
    """Camera indices [n_lo, n_hi] with |n - center.s| <= radius, clamped.

    Never empty: a degenerate ball still contains the nearest camera.
    """
    s, radius = ball.center.s, ball.radius
    n_lo = int(math.ceil(s - radius))
    n_hi = int(math.floor(s + radius))
    if n_lo > n_hi:
        n = nearest_camera(ball.center, rig)
        return n, n
    return max(n_lo, 1), min(n_hi, rig.n_views)


def make_popularity(kind: str, n_views: int, mean_frac: float | None = None,
                    std_frac: float | None = None,
                    weights=None) -> Popularity:
    """Build a view-popularity distribution.

    kind 'uniform' gives p_n = 1/N_V. 'center' and 'right' are discretised
    Gaussians over the index range [1, N_V] centred at fraction 0.5 and 1.0
    of the range respectively (default sigma N_V/6); a fraction t maps to
    index 1 + t*(N_V - 1). 'custom' normalises the provided weights.
    """
    if n_views < 1:
        raise ValueError("n_views must be >= 1")
    if kind == "uniform":
        return Popularity(np.full(n_views, 1.0 / n_views))
    if kind == "custom":
        if weights is None:
            raise ValueError("custom popularity needs explicit weights")
        w = np.asarray(weights, dtype=np.float64)
        if w.size != n_views or np.any(w < 0) or w.sum() <= 0:
            raise ValueError("custom weights must be non-negative, non-zero, length N_V")
        return Popularity(w / w.sum())
    if kind not in ("center", "right"):
        raise ValueError(f"unknown popularity kind {kind!r}")
    if mean_frac is None:
        mean_frac = 0.5 if kind == "center" else 1.0
    if std_frac is None:
        std_frac = 1.0 / 6.0
    if std_frac < 0:
        raise ValueError("stddev fraction must be non-negative")
    mean = 1.0 + mean_frac * (n_views - 1)
    sigma = std_frac * n_views
    idx = np.arange(1, n_views + 1, dtype=np.float64)
    if sigma == 0.0:
        w = np.zeros(n_views)
        w[int(math.ceil(mean - 0.5)) - 1] = 1.0
    else:
        w = np.exp(-0.5 * ((idx - mean) / sigma) ** 2)
    return Popularity(w / w.sum())


def save_popularity(pop: Popularity, path) -> None:
    """Write a popularity CSV with columns (index, p)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "p"])
        for n, p in enumerate(pop.weights, start=1):
            writer.writerow([n, repr(float(p))])


def load_popularity(path) -> Popularity:
    """Load a popularity CSV; renormalise if the sum is within 1% of 1, else reject."""
    rows: list[tuple[int, float]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(row for row in fh if not row.startswith("#"))
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["index", "p"]:
            raise ValueError(f"{path}: expected header 'index,p'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append((int(row[0]), float(row[1])))
            except (ValueError, IndexError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed row {row!r}") from exc
    if not rows:
        raise ValueError(f"{path}: no popularity rows")
    rows.sort()
    if [n for n, _ in rows] != list(range(1, len(rows) + 1)):
        raise ValueError(f"{path}: view indices must be exactly 1..{len(rows)}")
    w = np.array([p for _, p in rows])
    if np.any(w < 0):
        raise ValueError(f"{path}: negative popularity value")
    total = float(w.sum())
    if abs(total - 1.0) > 0.01:
        raise ValueError(f"{path}: popularity sums to {total}, more than 1% from 1")
    return Popularity(w / total)


def load_rig(path, n_views: int | None = None) -> CameraRig:
    """Load camera poses from a CSV with header (index, x, y, z, theta, phi, psi)."""
    rows: list[tuple[int, list[float]]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(row for row in fh if not row.startswith("#"))
        header = next(reader, None)
        expect = ["index", "x", "y", "z", "theta", "phi", "psi"]
        if header is None or [h.strip() for h in header[:7]] != expect:
            raise ValueError(f"{path}: expected header {','.join(expect)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append((int(row[0]), [float(v) for v in row[1:7]]))
            except (ValueError, IndexError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed row {row!r}") from exc
    rows.sort()
    if [n for n, _ in rows] != list(range(1, len(rows) + 1)):
        raise ValueError(f"{path}: camera indices must be exactly 1..{len(rows)}")
    if n_views is not None and len(rows) != n_views:
        raise ValueError(f"{path}: expected {n_views} cameras, found {len(rows)}")
    return CameraRig(np.array([pose for _, pose in rows]))
