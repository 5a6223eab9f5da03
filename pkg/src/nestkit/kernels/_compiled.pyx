# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the kernels in ``_fallback.py``.

Semantics (including the order in which random numbers are consumed) match the
fallback exactly, so either backend produces bit-identical runs.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, log1p, exp, expm1, fmod, INFINITY

cnp.import_array()

cdef double NEG_INF = -INFINITY
cdef double LOG2 = log(2.0)


# -----------------------------------------------------------------------------
# Birth/death replay with a Fenwick tree over likelihood ranks

cdef inline void _fw_add(long long[::1] tree, Py_ssize_t i, long long delta) noexcept nogil:
    cdef Py_ssize_t n = tree.shape[0] - 1
    i += 1
    while i <= n:
        tree[i] += delta
        i += i & (-i)


cdef inline long long _fw_prefix(long long[::1] tree, Py_ssize_t i) noexcept nogil:
    # sum of counts at coordinates < i
    cdef long long s = 0
    while i > 0:
        s += tree[i]
        i -= i & (-i)
    return s


def replay(dead_ll, dead_birth, final_ll, final_birth):
    cdef cnp.ndarray[double, ndim=1] dl = np.ascontiguousarray(dead_ll, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] births = np.ascontiguousarray(np.concatenate(
        [np.asarray(dead_birth, dtype=np.float64), np.asarray(final_birth, dtype=np.float64)]))
    cdef cnp.ndarray[double, ndim=1] lls = np.ascontiguousarray(np.concatenate(
        [dl, np.asarray(final_ll, dtype=np.float64)]))
    cdef Py_ssize_t n_dead = dl.shape[0]
    cdef Py_ssize_t n_tot = lls.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] order = np.argsort(births, kind="stable").astype(np.int64)
    uniq = np.unique(lls)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] coord = np.searchsorted(uniq, lls).astype(np.int64)
    cdef Py_ssize_t m = uniq.shape[0]

    cdef long long[::1] tree = np.zeros(m + 1, dtype=np.int64)
    cdef long long[::1] cnt = np.zeros(m, dtype=np.int64)
    n_active_a = np.zeros(n_dead, dtype=np.int64)
    ins_index_a = np.full(n_tot, -1, dtype=np.int64)
    ins_base_a = np.zeros(n_tot, dtype=np.int64)
    cdef long long[::1] n_active = n_active_a
    cdef long long[::1] ins_index = ins_index_a
    cdef long long[::1] ins_base = ins_base_a

    cdef Py_ssize_t ptr = 0, end, i, j, q
    cdef long long n_live = 0, base
    cdef double b, limit
    cdef Py_ssize_t c

    with nogil:
        for i in range(n_dead + 1):
            if i < n_dead:
                limit = dl[i]
            else:
                limit = INFINITY
            # insert every batch born strictly below the next death contour
            # (or everything that is left once the deaths are exhausted)
            while ptr < n_tot:
                b = births[order[ptr]]
                if i < n_dead and b >= limit:
                    break
                end = ptr
                while end < n_tot and births[order[end]] == b:
                    end += 1
                base = n_live + 1
                if b != NEG_INF:
                    for q in range(ptr, end):
                        j = order[q]
                        ins_index[j] = _fw_prefix(tree, coord[j])
                        ins_base[j] = base
                for q in range(ptr, end):
                    j = order[q]
                    _fw_add(tree, coord[j], 1)
                    cnt[coord[j]] += 1
                    n_live += 1
                ptr = end
            if i == n_dead:
                break
            n_active[i] = n_live
            c = coord[i]
            if cnt[c] > 0:
                cnt[c] -= 1
                _fw_add(tree, c, -1)
                n_live -= 1
    return n_active_a, ins_index_a, ins_base_a


# -----------------------------------------------------------------------------
# Trapezium weights

cdef inline double _log_half_diff(double a, double b) noexcept nogil:
    if b == NEG_INF:
        if a != NEG_INF:
            return a - LOG2
        return NEG_INF
    if a <= b:
        return NEG_INF
    return a + log(-expm1(b - a)) - LOG2


cdef inline double _log_add(double a, double b) noexcept nogil:
    cdef double t
    if a < b:
        t = a
        a = b
        b = t
    if b == NEG_INF:
        return a
    return a + log1p(exp(b - a))


def log_trapezium_weights(log_x, bint closed):
    cdef cnp.ndarray[double, ndim=1] lx = np.ascontiguousarray(log_x, dtype=np.float64)
    cdef Py_ssize_t n = lx.shape[0], i
    out_a = np.empty(n)
    if n == 0:
        return out_a
    cdef double[::1] out = out_a
    cdef double[::1] ext = np.empty(n + 2)
    cdef double w
    ext[0] = 0.0
    for i in range(n):
        ext[i + 1] = lx[i]
    ext[n + 1] = NEG_INF if closed else lx[n - 1]
    with nogil:
        for i in range(n):
            w = _log_half_diff(ext[i], ext[i + 2])
            if i == 0:
                w = _log_add(w, _log_half_diff(0.0, ext[1]))
            if closed and i == n - 1:
                w = _log_add(w, ext[n] - LOG2)
            out[i] = w
    return out_a


# -----------------------------------------------------------------------------
# Step-sampler inner loops

cdef inline bint _inside(double[::1] x) noexcept nogil:
    cdef Py_ssize_t j
    for j in range(x.shape[0]):
        if x[j] < 0.0 or x[j] > 1.0:
            return False
    return True


def slice_walk(u0, axes, widths, double threshold, loglike_u, rng,
               Py_ssize_t n_steps, Py_ssize_t max_shrink):
    cdef double[:, ::1] ax = np.ascontiguousarray(axes, dtype=np.float64)
    cdef double[::1] wd = np.ascontiguousarray(widths, dtype=np.float64)
    cdef Py_ssize_t d = ax.shape[1], k_axes = wd.shape[0]
    x_a = np.array(u0, dtype=np.float64, copy=True)
    cdef double[::1] x = x_a
    cdef double[::1] v
    cdef double[::1] cv
    cdef double logl = NEG_INF, lc, w, tmin, tmax, lo, hi, r, left, right, t
    cdef Py_ssize_t ncall = 0, nshrink_total = 0, nshrink, s, j, k

    for s in range(n_steps):
        k = int(rng.integers(k_axes))
        v = ax[k]
        w = wd[k]
        tmin = -INFINITY
        tmax = INFINITY
        for j in range(d):
            if v[j] > 0.0:
                lo = (0.0 - x[j]) / v[j]
                hi = (1.0 - x[j]) / v[j]
            elif v[j] < 0.0:
                lo = (1.0 - x[j]) / v[j]
                hi = (0.0 - x[j]) / v[j]
            else:
                continue
            if lo > tmin:
                tmin = lo
            if hi < tmax:
                tmax = hi
        r = float(rng.random())
        left = -r * w
        right = left + w
        while left > tmin:
            ncall += 1
            cand = np.empty(d)
            cv = cand
            for j in range(d):
                cv[j] = x[j] + left * v[j]
            if loglike_u(cand) > threshold:
                left -= w
            else:
                break
        while right < tmax:
            ncall += 1
            cand = np.empty(d)
            cv = cand
            for j in range(d):
                cv[j] = x[j] + right * v[j]
            if loglike_u(cand) > threshold:
                right += w
            else:
                break
        if left < tmin:
            left = tmin
        if right > tmax:
            right = tmax
        nshrink = 0
        while True:
            t = left + float(rng.random()) * (right - left)
            cand = np.empty(d)
            cv = cand
            for j in range(d):
                cv[j] = x[j] + t * v[j]
            ncall += 1
            if _inside(cv):
                lc = loglike_u(cand)
            else:
                lc = NEG_INF
            if lc > threshold:
                for j in range(d):
                    x[j] = cv[j]
                logl = lc
                break
            if t < 0.0:
                left = t
            else:
                right = t
            nshrink += 1
            if nshrink > max_shrink:
                return np.array(x_a), logl, ncall, -1
        nshrink_total += nshrink
    return np.array(x_a), logl, ncall, nshrink_total


cdef inline double _reflect(double y) noexcept nogil:
    y = fmod(y, 2.0)
    if y < 0.0:
        y += 2.0
    if y > 1.0:
        y = 2.0 - y
    return y


def random_walk(u0, double logl0, double scale, double threshold, loglike_u, rng,
                Py_ssize_t n_steps):
    x_a = np.array(u0, dtype=np.float64, copy=True)
    cdef double[::1] x = x_a
    cdef Py_ssize_t d = x.shape[0], s, j
    cdef double[::1] zv
    cdef double[::1] pv
    cdef double logl = logl0, lp
    cdef Py_ssize_t nacc = 0
    for s in range(n_steps):
        z = rng.standard_normal(d)
        zv = z
        prop = np.empty(d)
        pv = prop
        for j in range(d):
            pv[j] = _reflect(x[j] + scale * zv[j])
        lp = loglike_u(prop)
        if lp > threshold:
            for j in range(d):
                x[j] = pv[j]
            logl = lp
            nacc += 1
    return np.array(x_a), logl, nacc, n_steps
