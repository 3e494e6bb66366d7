"""NumPy fallback for the hot kernels.

Mirrors naviseg._speedups operation-for-operation: the arithmetic is written
with the exact same expression order so the two backends agree bit-for-bit
wherever only +,-,*,/ and comparisons are involved (notably the partition
DP). Branches touching libm transcendentals (the in-plane-rotation hole
term) may differ from the compiled kernel by a few ulp.
"""

from __future__ import annotations

import math

import numpy as np

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi


def hole_area(dx: float, dy: float, dz: float,
              dtheta: float, dphi: float, dpsi: float,
              width: float, height: float, focal: float, z_min: float) -> float:
    """Upper bound on hole pixels for a 6-D pose change, capped at width*height.

    Per-component areas: horizontal/vertical translation scale with
    focal*extent/z_min; backward motion (dz > 0) uncovers 2*W*H*dz/z_min of
    border; pitch/yaw uncover focal*extent*|angle|; in-plane rotation follows
    the image-geometry branches, mirrored beyond pi/2. Components are summed,
    which over-counts overlaps, hence the cap.
    """
    wh = width * height
    total = focal * height * abs(dx) / z_min
    total = total + focal * width * abs(dy) / z_min
    if dz > 0.0:
        total = total + 2.0 * wh * dz / z_min
    total = total + focal * width * abs(dtheta)
    total = total + focal * height * abs(dphi)
    a = abs(dpsi)
    if a > HALF_PI:
        a = math.pi - a
    if a > 0.0:
        if a < 2.0 * math.atan(height / width):
            t = math.tan(a)
            u = math.tan(0.5 * a)
            total = total + 0.25 * t * ((height * height + width * width)
                                        * (1.0 + u * u) - 4.0 * wh * u)
        else:
            total = total + (wh - height * height / math.sin(a))
    if total > wh:
        return wh
    return total


def _hole_area_vec(diff: np.ndarray, width: float, height: float,
                   focal: float, z_min: float) -> np.ndarray:
    """Vectorised hole_area over rows of a (N, 6) pose-difference array."""
    wh = width * height
    total = focal * height * np.abs(diff[:, 0]) / z_min
    total = total + focal * width * np.abs(diff[:, 1]) / z_min
    dz = diff[:, 2]
    total = total + np.where(dz > 0.0, 2.0 * wh * dz / z_min, 0.0)
    total = total + focal * width * np.abs(diff[:, 3])
    total = total + focal * height * np.abs(diff[:, 4])
    a = np.abs(diff[:, 5])
    a = np.where(a > HALF_PI, math.pi - a, a)
    thresh = 2.0 * math.atan(height / width)
    t = np.tan(a)
    u = np.tan(0.5 * a)
    wedge = 0.25 * t * ((height * height + width * width) * (1.0 + u * u) - 4.0 * wh * u)
    with np.errstate(divide="ignore"):
        crop = wh - height * height / np.sin(a)
    psi = np.where(a > 0.0, np.where(a < thresh, wedge, crop), 0.0)
    total = total + psi
    return np.minimum(total, wh)


def solve_segment_dp(h_i: np.ndarray, hp_prefix: np.ndarray,
                     pop_prefix: np.ndarray, base: float, g: float,
                     width_cap: int) -> tuple[np.ndarray, float]:
    """Min-cost contiguous partition over the interval DAG.

    Nodes are boundary positions 0..N_V; the edge (a, b) carries the cost of
    one segment spanning views a+1..b:
    (h_I[a+1] + sum h_P[a+2..b]) * (base + g * popularity mass). Solved right
    to left; the forward reconstruction resolves exact cost ties toward fewer
    segments, then the lexicographically smallest boundary list.

    Returns (boundaries ending at N_V, total cost).
    """
    n = h_i.size
    cap = int(width_cap)
    cost = np.zeros(n + 1)
    nseg = np.zeros(n + 1, dtype=np.int64)
    for a in range(n - 1, -1, -1):
        bmax = min(n, a + cap)
        b = np.arange(a + 1, bmax + 1)
        h = h_i[a] + (hp_prefix[b] - hp_prefix[a + 1])
        w = base + g * (pop_prefix[b] - pop_prefix[a])
        tot = h * w + cost[b]
        m = tot.min()
        cost[a] = m
        nseg[a] = nseg[b][tot == m].min() + 1
    bounds = []
    a = 0
    while a < n:
        bmax = min(n, a + cap)
        b = np.arange(a + 1, bmax + 1)
        h = h_i[a] + (hp_prefix[b] - hp_prefix[a + 1])
        w = base + g * (pop_prefix[b] - pop_prefix[a])
        tot = h * w + cost[b]
        ok = (tot == cost[a]) & (nseg[b] + 1 == nseg[a])
        a = int(b[ok][0])
        bounds.append(a)
    return np.array(bounds, dtype=np.int64), float(cost[0])


def _nearest_sorted(available: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Nearest value in a sorted float array for each query; ties pick the lower."""
    pos = np.searchsorted(available, s)
    left = np.clip(pos - 1, 0, available.size - 1)
    right = np.clip(pos, 0, available.size - 1)
    d_left = np.abs(s - available[left])
    d_right = np.abs(available[right] - s)
    return np.where(d_left <= d_right, available[left], available[right]).astype(np.int64)


def evaluate_frames(frame_s: np.ndarray, frame_off: np.ndarray, gov: np.ndarray,
                    req_s: np.ndarray, avail_flat: np.ndarray, avail_ptr: np.ndarray,
                    cum_flat: np.ndarray, cum_ptr: np.ndarray, poses: np.ndarray,
                    width: float, height: float, focal: float, z_min: float,
                    d_inp: float, d_rec: float, radius: float):
    """Render bookkeeping for every frame of one session.

    For each frame: pick its governing request (gov is the non-decreasing
    request index per frame), flag starvation when the frame leaves that
    request's ball, choose the reference view among the views renderable at
    that request (starved frames fall back to everything transmitted so far),
    and evaluate the hole-area bound and the two-region distortion against
    the interpolated rig pose plus the frame offset.

    Returns (ref, omega, distortion, starved, success) per-frame arrays.
    """
    n_f = frame_s.size
    n_v = poses.shape[0]
    ref = np.empty(n_f, dtype=np.int64)
    starved = np.zeros(n_f, dtype=bool)
    for e in range(req_s.size):
        f0 = int(np.searchsorted(gov, e, side="left"))
        f1 = int(np.searchsorted(gov, e, side="right"))
        if f0 == f1:
            continue
        s = frame_s[f0:f1]
        st = np.abs(s - req_s[e]) > radius
        av = avail_flat[avail_ptr[e]:avail_ptr[e + 1]].astype(np.float64)
        r = _nearest_sorted(av, s)
        if st.any():
            cu = cum_flat[cum_ptr[e]:cum_ptr[e + 1]].astype(np.float64)
            r[st] = _nearest_sorted(cu, s[st])
        ref[f0:f1] = r
        starved[f0:f1] = st

    si = frame_s - 1.0
    if n_v == 1:
        interp = np.broadcast_to(poses[0], (n_f, 6)).copy()
    else:
        i0 = np.clip(np.floor(si).astype(np.int64), 0, n_v - 2)
        frac = si - i0
        interp = poses[i0] + frac[:, None] * (poses[i0 + 1] - poses[i0])
    diff = interp + frame_off - poses[ref - 1]
    ang = diff[:, 3:]
    diff[:, 3:] = ang - TWO_PI * np.floor((ang + math.pi) / TWO_PI)

    omega = _hole_area_vec(diff, width, height, focal, z_min)
    wh = width * height
    dist = d_inp * omega + d_rec * (wh - omega)
    success = omega < 0.5 * wh
    return ref, omega, dist, starved, success
