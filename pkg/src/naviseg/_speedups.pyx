# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: partition DP, frame rendering loop, hole-area bound.

Arithmetic mirrors naviseg._reference expression-for-expression; the DP
(only +,-,*,/ and comparisons) is bit-identical to the fallback, the frame
loop may differ by ulps where libm transcendentals enter.
"""

from libc.math cimport atan, fabs, floor, sin, tan, M_PI

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef double TWO_PI = 2.0 * M_PI
cdef double HALF_PI = 0.5 * M_PI


cdef double _hole_area_c(double dx, double dy, double dz, double dtheta,
                         double dphi, double dpsi, double width, double height,
                         double focal, double z_min) noexcept nogil:
    cdef double wh = width * height
    cdef double total, a, t, u
    total = focal * height * fabs(dx) / z_min
    total = total + focal * width * fabs(dy) / z_min
    if dz > 0.0:
        total = total + 2.0 * wh * dz / z_min
    total = total + focal * width * fabs(dtheta)
    total = total + focal * height * fabs(dphi)
    a = fabs(dpsi)
    if a > HALF_PI:
        a = M_PI - a
    if a > 0.0:
        if a < 2.0 * atan(height / width):
            t = tan(a)
            u = tan(0.5 * a)
            total = total + 0.25 * t * ((height * height + width * width)
                                        * (1.0 + u * u) - 4.0 * wh * u)
        else:
            total = total + (wh - height * height / sin(a))
    if total > wh:
        return wh
    return total


def hole_area(double dx, double dy, double dz, double dtheta, double dphi,
              double dpsi, double width, double height, double focal,
              double z_min):
    """Upper bound on hole pixels for a 6-D pose change, capped at width*height."""
    return _hole_area_c(dx, dy, dz, dtheta, dphi, dpsi, width, height, focal, z_min)


def solve_segment_dp(h_i, hp_prefix, pop_prefix,
                     double base, double g, long width_cap):
    """Min-cost contiguous partition over the interval DAG (see the fallback)."""
    cdef const double[:] hi_v = h_i
    cdef const double[:] hp_v = hp_prefix
    cdef const double[:] pp_v = pop_prefix
    cdef long n = hi_v.shape[0]
    cdef long cap = width_cap
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cost = np.zeros(n + 1)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] nseg = np.zeros(n + 1, dtype=np.int64)
    cdef double[:] cost_v = cost
    cdef long[:] nseg_v = nseg
    cdef long a, b, bmax, best_n
    cdef double h, w, tot, best

    for a in range(n - 1, -1, -1):
        bmax = n if n < a + cap else a + cap
        best = 0.0
        best_n = 0
        for b in range(a + 1, bmax + 1):
            h = hi_v[a] + (hp_v[b] - hp_v[a + 1])
            w = base + g * (pp_v[b] - pp_v[a])
            tot = h * w + cost_v[b]
            if b == a + 1 or tot < best:
                best = tot
                best_n = nseg_v[b] + 1
            elif tot == best and nseg_v[b] + 1 < best_n:
                best_n = nseg_v[b] + 1
        cost_v[a] = best
        nseg_v[a] = best_n

    bounds = []
    a = 0
    while a < n:
        bmax = n if n < a + cap else a + cap
        for b in range(a + 1, bmax + 1):
            h = hi_v[a] + (hp_v[b] - hp_v[a + 1])
            w = base + g * (pp_v[b] - pp_v[a])
            tot = h * w + cost_v[b]
            if tot == cost_v[a] and nseg_v[b] + 1 == nseg_v[a]:
                bounds.append(b)
                a = b
                break
    return np.array(bounds, dtype=np.int64), float(cost_v[0])


cdef long _nearest_sorted_c(const double[:] flat, long start, long n, double s) noexcept nogil:
    cdef long lo = 0, hi = n, mid, left, right
    cdef double d_left, d_right
    while lo < hi:
        mid = (lo + hi) // 2
        if flat[start + mid] < s:
            lo = mid + 1
        else:
            hi = mid
    left = lo - 1
    if left < 0:
        left = 0
    elif left > n - 1:
        left = n - 1
    right = lo
    if right > n - 1:
        right = n - 1
    d_left = fabs(s - flat[start + left])
    d_right = fabs(flat[start + right] - s)
    if d_left <= d_right:
        return <long> flat[start + left]
    return <long> flat[start + right]


def evaluate_frames(frame_s, frame_off, gov, req_s, avail_flat, avail_ptr,
                    cum_flat, cum_ptr, poses,
                    double width, double height, double focal, double z_min,
                    double d_inp, double d_rec, double radius):
    """Render bookkeeping for every frame of one session (see the fallback)."""
    cdef const double[:] fs = frame_s
    cdef const double[:, :] fo = frame_off
    cdef const long[:] gov_v = gov
    cdef const double[:] rs = req_s
    cdef const double[:] av = avail_flat
    cdef const long[:] avp = avail_ptr
    cdef const double[:] cu = cum_flat
    cdef const long[:] cup = cum_ptr
    cdef const double[:, :] po = poses
    cdef long n_f = fs.shape[0]
    cdef long n_v = po.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ref = np.empty(n_f, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] omega = np.empty(n_f)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dist = np.empty(n_f)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] starved = np.zeros(n_f, dtype=np.uint8)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] success = np.zeros(n_f, dtype=np.uint8)
    cdef long[:] ref_v = ref
    cdef double[:] om_v = omega
    cdef double[:] di_v = dist
    cdef cnp.uint8_t[:] st_v = starved
    cdef cnp.uint8_t[:] su_v = success

    cdef double wh = width * height
    cdef double half_wh = 0.5 * wh
    cdef long t, e, r, i0, c
    cdef double s, si, frac, om, d0
    cdef double diff[6]
    cdef bint st

    with nogil:
        for t in range(n_f):
            s = fs[t]
            e = gov_v[t]
            st = fabs(s - rs[e]) > radius
            if st:
                st_v[t] = 1
                r = _nearest_sorted_c(cu, cup[e], cup[e + 1] - cup[e], s)
            else:
                r = _nearest_sorted_c(av, avp[e], avp[e + 1] - avp[e], s)
            ref_v[t] = r

            si = s - 1.0
            if n_v == 1:
                for c in range(6):
                    diff[c] = po[0, c] + fo[t, c] - po[r - 1, c]
            else:
                i0 = <long> floor(si)
                if i0 < 0:
                    i0 = 0
                elif i0 > n_v - 2:
                    i0 = n_v - 2
                frac = si - i0
                for c in range(6):
                    diff[c] = (po[i0, c] + frac * (po[i0 + 1, c] - po[i0, c])
                               + fo[t, c] - po[r - 1, c])
            for c in range(3, 6):
                diff[c] = diff[c] - TWO_PI * floor((diff[c] + M_PI) / TWO_PI)

            om = _hole_area_c(diff[0], diff[1], diff[2], diff[3], diff[4],
                              diff[5], width, height, focal, z_min)
            om_v[t] = om
            di_v[t] = d_inp * om + d_rec * (wh - om)
            if om < half_wh:
                su_v[t] = 1
    return ref, omega, dist, starved.astype(bool), success.astype(bool)
