# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-column kernels.

Inputs are laid out column-major with respect to the trace matrix: row ``s``
of ``xs`` holds the ``n`` trace values at time sample ``s``. Every column is
processed independently, so results do not depend on ``num_threads``.
"""
import numpy as np

from cython.parallel cimport prange
from libc.math cimport sqrt, exp, log1p, INFINITY
from libc.stdint cimport uint64_t, int64_t


cdef void _welch_one(const double* x, const double* y, Py_ssize_t n,
                     double* t, double* mx, double* my,
                     double* vx, double* vy, char* degenerate) noexcept nogil:
    cdef Py_ssize_t i
    cdef double sx = 0.0, sy = 0.0, dx, dy
    cdef double qx = 0.0, qy = 0.0, cx = 0.0, cy = 0.0
    cdef double se, diff
    for i in range(n):
        sx += x[i]
        sy += y[i]
    mx[0] = sx / n
    my[0] = sy / n
    for i in range(n):
        dx = x[i] - mx[0]
        dy = y[i] - my[0]
        qx += dx * dx
        qy += dy * dy
        cx += dx
        cy += dy
    # compensated two-pass: remove residual from an inexact mean
    vx[0] = (qx - cx * cx / n) / (n - 1)
    vy[0] = (qy - cy * cy / n) / (n - 1)
    if vx[0] < 0.0:
        vx[0] = 0.0
    if vy[0] < 0.0:
        vy[0] = 0.0
    # the residual sums also correct the means; the difference of the rounded
    # means is exact when they are close, so only the spread-sized part rounds
    diff = (mx[0] - my[0]) + (cx - cy) / n
    mx[0] += cx / n
    my[0] += cy / n
    se = sqrt(vx[0] / n + vy[0] / n)
    if se == 0.0:
        degenerate[0] = 1
        if diff == 0.0:
            t[0] = 0.0
        elif diff > 0.0:
            t[0] = INFINITY
        else:
            t[0] = -INFINITY
    else:
        degenerate[0] = 0
        t[0] = diff / se


def welch_columns(const double[:, ::1] xs, const double[:, ::1] ys, int num_threads=1):
    cdef Py_ssize_t n_cols = xs.shape[0], n = xs.shape[1], s
    t = np.empty(n_cols)
    mx = np.empty(n_cols)
    my = np.empty(n_cols)
    vx = np.empty(n_cols)
    vy = np.empty(n_cols)
    deg = np.zeros(n_cols, dtype=np.bool_)
    cdef double[::1] t_v = t, mx_v = mx, my_v = my, vx_v = vx, vy_v = vy
    cdef char[::1] deg_v = deg.view(np.int8)
    for s in prange(n_cols, nogil=True, num_threads=num_threads, schedule="static"):
        _welch_one(&xs[s, 0], &ys[s, 0], n, &t_v[s], &mx_v[s], &my_v[s],
                   &vx_v[s], &vy_v[s], &deg_v[s])
    return t, mx, my, vx, vy, deg


cdef double _ad_sorted(const double* bx, const double* by, Py_ssize_t n) noexcept nogil:
    # bx, by: each sample sorted ascending
    cdef Py_ssize_t i = 0, j = 0, k, upto = 0
    cdef Py_ssize_t two_n = 2 * n
    cdef double v, acc = 0.0, d
    for k in range(1, two_n):
        if i < n and (j >= n or bx[i] <= by[j]):
            v = bx[i]
            i += 1
        else:
            v = by[j]
            j += 1
        # x-values <= v, counting tied x not yet merged
        while upto < n and bx[upto] <= v:
            upto += 1
        d = <double>(2 * upto - k)
        acc += d * d / (<double>k * <double>(two_n - k))
    return acc


def ad_columns(const double[:, ::1] xs, const double[:, ::1] ys, int num_threads=1):
    cdef Py_ssize_t n_cols = xs.shape[0], n = xs.shape[1], s
    # numpy's vectorized sort beats std::sort; only the merge runs here
    cdef double[:, ::1] sx = np.sort(np.asarray(xs), axis=1)
    cdef double[:, ::1] sy = np.sort(np.asarray(ys), axis=1)
    a2 = np.empty(n_cols)
    cdef double[::1] a2_v = a2
    for s in prange(n_cols, nogil=True, num_threads=num_threads, schedule="static"):
        a2_v[s] = _ad_sorted(&sx[s, 0], &sy[s, 0], n)
    return a2


# --- limiting-distribution sampler -------------------------------------------

cdef inline uint64_t _mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t _rotl(uint64_t x, int k) noexcept nogil:
    return (x << k) | (x >> (64 - k))


cdef inline uint64_t _next(uint64_t* s) noexcept nogil:
    cdef uint64_t result = _rotl(s[1] * 5, 7) * 9
    cdef uint64_t t = s[1] << 17
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


cdef inline double _next_double(uint64_t* s) noexcept nogil:
    return (_next(s) >> 11) * (1.0 / 9007199254740992.0)


cdef double _normal_slow(uint64_t* s, int idx, uint64_t rabs, double x,
                         const uint64_t* ki, const double* wi, const double* fi,
                         double r) noexcept nogil:
    # rejection branch of the ziggurat, kept out of line so the fast path inlines
    cdef uint64_t u
    cdef double xx, yy
    while True:
        if idx == 0:
            while True:
                xx = -log1p(-_next_double(s)) / r
                yy = -log1p(-_next_double(s))
                if yy + yy > xx * xx:
                    if (rabs >> 8) & 1:
                        return -(r + xx)
                    return r + xx
        elif (fi[idx - 1] - fi[idx]) * _next_double(s) + fi[idx] < exp(-0.5 * x * x):
            return x
        u = _next(s)
        idx = <int>(u & 0xff)
        u >>= 8
        rabs = (u >> 1) & <uint64_t>0x000fffffffffffffULL
        x = <double>(<int64_t>rabs) * wi[idx]
        if u & 1:
            x = -x
        if rabs < ki[idx]:
            return x


cdef inline double _normal(uint64_t* s, const uint64_t* ki, const double* wi,
                           const double* fi, double r) noexcept nogil:
    cdef uint64_t u = _next(s)
    cdef int idx = <int>(u & 0xff)
    cdef uint64_t rabs
    cdef double x
    u >>= 8
    rabs = (u >> 1) & <uint64_t>0x000fffffffffffffULL
    # rabs < 2**52, so the signed conversion is exact and cheaper
    x = <double>(<int64_t>rabs) * wi[idx]
    if u & 1:
        x = -x
    if rabs < ki[idx]:
        return x
    return _normal_slow(s, idx, rabs, x, ki, wi, fi, r)


cdef inline void _seed_state(uint64_t* st, uint64_t key, uint64_t index) noexcept nogil:
    cdef uint64_t z = _mix64(key + _mix64(index + 1))
    cdef int i
    for i in range(4):
        z = z + <uint64_t>0x9E3779B97F4A7C15ULL
        st[i] = _mix64(z)


cdef double _a2inf_one(uint64_t key, uint64_t index, const double* coef, Py_ssize_t j_max,
                       const uint64_t* ki, const double* wi, const double* fi,
                       double r) noexcept nogil:
    # xoshiro state lives in scalars; it is spilled to ``st`` only for the
    # rare rejection branch so the hot loop stays in registers
    cdef uint64_t st[4]
    cdef uint64_t s0, s1, s2, s3, u, t, rabs
    cdef Py_ssize_t j
    cdef int idx
    cdef double acc = 0.0, g
    _seed_state(st, key, index)
    s0 = st[0]
    s1 = st[1]
    s2 = st[2]
    s3 = st[3]
    for j in range(j_max):
        u = _rotl(s1 * 5, 7) * 9
        t = s1 << 17
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        idx = <int>(u & 0xff)
        u >>= 8
        rabs = (u >> 1) & <uint64_t>0x000fffffffffffffULL
        # only g*g is used, so the sign bit is skipped (it is an unpredictable branch)
        g = <double>(<int64_t>rabs) * wi[idx]
        if rabs >= ki[idx]:
            st[0] = s0
            st[1] = s1
            st[2] = s2
            st[3] = s3
            g = _normal_slow(st, idx, rabs, g, ki, wi, fi, r)
            s0 = st[0]
            s1 = st[1]
            s2 = st[2]
            s3 = st[3]
        acc += coef[j] * (g * g)
    return acc


def a2inf_draws(Py_ssize_t n_draws, Py_ssize_t j_max, uint64_t key, Py_ssize_t start,
                const uint64_t[::1] ki, const double[::1] wi, const double[::1] fi,
                double r, int num_threads=1):
    """Draws ``start .. start + n_draws - 1`` of the truncated series."""
    out = np.empty(n_draws)
    cdef double[::1] out_v = out
    coef_arr = 1.0 / (np.arange(1, j_max + 1, dtype=np.float64) * np.arange(2, j_max + 2, dtype=np.float64))
    cdef double[::1] coef = coef_arr
    cdef Py_ssize_t d
    for d in prange(n_draws, nogil=True, num_threads=num_threads, schedule="static"):
        out_v[d] = _a2inf_one(key, <uint64_t>(start + d), &coef[0], j_max,
                              &ki[0], &wi[0], &fi[0], r)
    return out


def normal_stream(Py_ssize_t count, uint64_t key, Py_ssize_t index,
                  const uint64_t[::1] ki, const double[::1] wi, const double[::1] fi,
                  double r):
    """First ``count`` normals of stream ``index``; exposed for testing."""
    out = np.empty(count)
    cdef double[::1] out_v = out
    cdef uint64_t st[4]
    cdef Py_ssize_t i
    _seed_state(st, key, <uint64_t>index)
    for i in range(count):
        out_v[i] = _normal(st, &ki[0], &wi[0], &fi[0], r)
    return out
