"""Pure numpy versions of the kernels in ``_kernels.pyx``.

Same signatures and same column layout (rows are time samples). The
Monte Carlo sampler runs the identical xoshiro256** / ziggurat stream, one
numpy lane per draw.
"""
from concurrent.futures import ThreadPoolExecutor

import numpy as np

_BLOCK = 512


def _blocks(n_cols, num_threads, fn):
    # numpy releases the GIL inside sort and the reductions, so column blocks
    # can share a thread pool; the output is written by index, not appended.
    starts = range(0, n_cols, _BLOCK)
    if num_threads <= 1 or n_cols <= _BLOCK:
        for s in starts:
            fn(s, min(s + _BLOCK, n_cols))
        return
    with ThreadPoolExecutor(max_workers=num_threads) as pool:
        list(pool.map(lambda s: fn(s, min(s + _BLOCK, n_cols)), starts))


def welch_columns(xs, ys, num_threads=1):
    n_cols, n = xs.shape
    t = np.empty(n_cols)
    mx = np.empty(n_cols)
    my = np.empty(n_cols)
    vx = np.empty(n_cols)
    vy = np.empty(n_cols)
    deg = np.zeros(n_cols, dtype=bool)

    def run(lo, hi):
        x, y = xs[lo:hi], ys[lo:hi]
        ax = x.mean(axis=1)
        ay = y.mean(axis=1)
        dx = x - ax[:, None]
        dy = y - ay[:, None]
        cx = dx.sum(axis=1)
        cy = dy.sum(axis=1)
        wx = np.maximum((np.einsum("ij,ij->i", dx, dx) - cx * cx / n) / (n - 1), 0.0)
        wy = np.maximum((np.einsum("ij,ij->i", dy, dy) - cy * cy / n) / (n - 1), 0.0)
        diff = (ax - ay) + (cx - cy) / n
        ax = ax + cx / n
        ay = ay + cy / n
        se = np.sqrt(wx / n + wy / n)
        zero = se == 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            tt = diff / se
        tt[zero & (diff == 0.0)] = 0.0
        tt[zero & (diff > 0.0)] = np.inf
        tt[zero & (diff < 0.0)] = -np.inf
        t[lo:hi], mx[lo:hi], my[lo:hi] = tt, ax, ay
        vx[lo:hi], vy[lo:hi], deg[lo:hi] = wx, wy, zero

    _blocks(n_cols, num_threads, run)
    return t, mx, my, vx, vy, deg


def ad_columns(xs, ys, num_threads=1):
    n_cols, n = xs.shape
    two_n = 2 * n
    a2 = np.empty(n_cols)
    k = np.arange(1, two_n, dtype=np.float64)
    weight = 1.0 / (k * (two_n - k))

    def run(lo, hi):
        sx = np.sort(xs[lo:hi], axis=1)
        pooled = np.sort(np.concatenate([xs[lo:hi], ys[lo:hi]], axis=1), axis=1)
        z = pooled[:, :-1]
        # M_i = #{x <= Z_(i)} counted by value, so tied x-values all count
        m = np.empty(z.shape, dtype=np.int64)
        for r in range(hi - lo):
            m[r] = np.searchsorted(sx[r], z[r], side="right")
        d = 2.0 * m - k
        a2[lo:hi] = (d * d) @ weight

    _blocks(n_cols, num_threads, run)
    return a2


# --- limiting-distribution sampler -------------------------------------------

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLD = np.uint64(0x9E3779B97F4A7C15)
_MASK52 = np.uint64(0x000FFFFFFFFFFFFF)
_U = {k: np.uint64(k) for k in (1, 5, 7, 8, 9, 11, 17, 27, 30, 31, 45, 0xFF)}


def _mix64(z):
    z = (z ^ (z >> _U[30])) * _M1
    z = (z ^ (z >> _U[27])) * _M2
    return z ^ (z >> _U[31])


def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


class _Lanes:
    """xoshiro256** state for many independent streams."""

    def __init__(self, key, indices):
        with np.errstate(over="ignore"):
            z = _mix64(np.uint64(key) + _mix64(indices.astype(np.uint64) + _U[1]))
            self.s = np.empty((4, len(indices)), dtype=np.uint64)
            for i in range(4):
                z = z + _GOLD
                self.s[i] = _mix64(z)

    def next(self, sel):
        s0, s1, s2, s3 = (self.s[i, sel] for i in range(4))
        result = _rotl(s1 * _U[5], 7) * _U[9]
        t = s1 << _U[17]
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self.s[0, sel], self.s[1, sel], self.s[2, sel], self.s[3, sel] = s0, s1, s2, s3
        return result

    def next_double(self, sel):
        return (self.next(sel) >> _U[11]).astype(np.float64) * (1.0 / 9007199254740992.0)


def _normals(lanes, count, ki, wi, fi, r):
    """One normal per lane, with per-lane rejection retries."""
    out = np.empty(count)
    pending = np.arange(count)
    while pending.size:
        u = lanes.next(pending)
        idx = (u & _U[0xFF]).astype(np.intp)
        u = u >> _U[8]
        rabs = (u >> _U[1]) & _MASK52
        x = rabs.astype(np.float64) * wi[idx]
        x = np.where((u & _U[1]).astype(bool), -x, x)
        accept = rabs < ki[idx]
        out[pending[accept]] = x[accept]

        rest = ~accept
        base = rest & (idx == 0)
        wedge = rest & (idx != 0)
        done = accept.copy()

        if wedge.any():
            w_sel = pending[wedge]
            wi_idx = idx[wedge]
            xw = x[wedge]
            f_hi = fi[wi_idx - 1]
            f_lo = fi[wi_idx]
            ok = (f_hi - f_lo) * lanes.next_double(w_sel) + f_lo < np.exp(-0.5 * xw * xw)
            out[w_sel[ok]] = xw[ok]
            done[np.flatnonzero(wedge)[ok]] = True

        if base.any():
            b_pos = np.flatnonzero(base)
            b_sel = pending[b_pos]
            neg = ((rabs[base] >> _U[8]) & _U[1]).astype(bool)
            waiting = np.ones(b_sel.size, dtype=bool)
            while waiting.any():
                sel = b_sel[waiting]
                xx = -np.log1p(-lanes.next_double(sel)) / r
                yy = -np.log1p(-lanes.next_double(sel))
                ok = yy + yy > xx * xx
                hit = np.flatnonzero(waiting)[ok]
                val = r + xx[ok]
                out[b_sel[hit]] = np.where(neg[hit], -val, val)
                waiting[hit] = False
            done[b_pos] = True

        pending = pending[~done]
    return out


def a2inf_draws(n_draws, j_max, key, start, ki, wi, fi, r, num_threads=1):
    coef = 1.0 / (np.arange(1, j_max + 1, dtype=np.float64) * np.arange(2, j_max + 2, dtype=np.float64))
    out = np.empty(n_draws)
    chunk = 4096
    with np.errstate(over="ignore"):
        for lo in range(0, n_draws, chunk):
            hi = min(lo + chunk, n_draws)
            lanes = _Lanes(key, np.arange(start + lo, start + hi))
            acc = np.zeros(hi - lo)
            for j in range(j_max):
                g = _normals(lanes, hi - lo, ki, wi, fi, r)
                acc += coef[j] * (g * g)
            out[lo:hi] = acc
    return out


def normal_stream(count, key, index, ki, wi, fi, r):
    lanes = _Lanes(key, np.array([index]))
    with np.errstate(over="ignore"):
        return np.array([_normals(lanes, 1, ki, wi, fi, r)[0] for _ in range(count)])
