"""Pure-Python/numpy implementations of the hot kernels.

These define the reference semantics; ``_compiled.pyx`` must agree with them
bit for bit (tests compare the two directly).
"""

import math
from bisect import bisect_left, insort

import numpy as np

NEG_INF = -math.inf


def replay(dead_ll, dead_birth, final_ll, final_birth):
    """Sweep deaths in order, inserting particles at their birth contours.

    Particles born at contour ``c`` enter after every death at ``c``; all
    particles born at the same contour are ranked against the survivors only.
    """
    dead_ll = np.asarray(dead_ll, dtype=float)
    births = np.concatenate([np.asarray(dead_birth, float), np.asarray(final_birth, float)])
    lls = np.concatenate([dead_ll, np.asarray(final_ll, float)])
    n_dead = len(dead_ll)
    n_tot = len(lls)
    order = np.argsort(births, kind="stable")

    n_active = np.zeros(n_dead, dtype=np.int64)
    ins_index = np.full(n_tot, -1, dtype=np.int64)
    ins_base = np.zeros(n_tot, dtype=np.int64)

    live = []
    ptr = 0
    births_l = births.tolist()
    lls_l = lls.tolist()
    order_l = order.tolist()

    def insert_batches(limit, inclusive):
        nonlocal ptr
        while ptr < n_tot:
            b = births_l[order_l[ptr]]
            if b > limit or (b == limit and not inclusive):
                break
            end = ptr
            while end < n_tot and births_l[order_l[end]] == b:
                end += 1
            batch = order_l[ptr:end]
            base = len(live) + 1
            if b != NEG_INF:
                for j in batch:
                    ins_index[j] = bisect_left(live, lls_l[j])
                    ins_base[j] = base
            for j in batch:
                insort(live, lls_l[j])
            ptr = end

    dead_l = dead_ll.tolist()
    for i in range(n_dead):
        insert_batches(dead_l[i], inclusive=False)
        n_active[i] = len(live)
        k = bisect_left(live, dead_l[i])
        if k < len(live) and live[k] == dead_l[i]:
            del live[k]
    insert_batches(math.inf, inclusive=True)
    return n_active, ins_index, ins_base


def log_trapezium_weights(log_x, closed):
    """Log trapezium weights for nodes ``X_1..X_N`` with ``X_0 = 1``.

    The likelihood is extended flat to ``X = 1`` from the first node and, when
    ``closed``, flat to ``X = 0`` from the last, so constant likelihoods
    integrate exactly to ``X_0 - X_{N+1}``.
    """
    log_x = np.asarray(log_x, dtype=float)
    n = len(log_x)
    if n == 0:
        return np.empty(0)
    ext = np.empty(n + 2)
    ext[0] = 0.0
    ext[1:n + 1] = log_x
    ext[n + 1] = NEG_INF if closed else log_x[-1]
    out = np.empty(n)
    for i in range(n):
        w = _log_half_diff(ext[i], ext[i + 2])
        if i == 0:
            w = _log_add(w, _log_half_diff(0.0, ext[1]))
        if closed and i == n - 1:
            w = _log_add(w, ext[n] - math.log(2.0))
        out[i] = w
    return out


def _log_half_diff(a, b):
    # log((e^a - e^b) / 2) for a >= b
    if b == NEG_INF:
        return a - math.log(2.0) if a != NEG_INF else NEG_INF
    if a <= b:
        return NEG_INF
    return a + math.log(-math.expm1(b - a)) - math.log(2.0)


def _log_add(a, b):
    if a < b:
        a, b = b, a
    if b == NEG_INF:
        return a
    return a + math.log1p(math.exp(b - a))


def slice_walk(u0, axes, widths, threshold, loglike_u, rng, n_steps, max_shrink):
    """Constrained slice sampling along randomly chosen principal axes.

    Parameters
    ----------
    u0 : ndarray (d,)
        Start point inside the contour.
    axes : ndarray (k, d)
        Unit direction vectors to choose from.
    widths : ndarray (k,)
        Initial bracket width along each axis.
    loglike_u : callable
        Maps a unit-cube point to its log-likelihood.
    rng : numpy Generator
        Consumed in a fixed pattern so the compiled kernel reproduces it.

    Returns
    -------
    u, log_like, n_calls, n_shrink
    n_shrink is -1 when the shrink budget was exhausted.
    """
    d = len(u0)
    x = [float(v) for v in u0]
    logl = NEG_INF
    ncall = 0
    nshrink_total = 0
    k_axes = len(widths)
    for _ in range(n_steps):
        k = int(rng.integers(k_axes))
        v = [float(c) for c in axes[k]]
        w = float(widths[k])
        # segment limits keeping x + t v inside the unit cube
        tmin = -math.inf
        tmax = math.inf
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
        # step out
        while left > tmin:
            ncall += 1
            if loglike_u(np.array([x[j] + left * v[j] for j in range(d)])) > threshold:
                left -= w
            else:
                break
        while right < tmax:
            ncall += 1
            if loglike_u(np.array([x[j] + right * v[j] for j in range(d)])) > threshold:
                right += w
            else:
                break
        if left < tmin:
            left = tmin
        if right > tmax:
            right = tmax
        # shrink
        nshrink = 0
        while True:
            t = left + float(rng.random()) * (right - left)
            cand = np.array([x[j] + t * v[j] for j in range(d)])
            ncall += 1
            lc = loglike_u(cand) if _inside(cand) else NEG_INF
            if lc > threshold:
                x = [float(c) for c in cand]
                logl = lc
                break
            if t < 0.0:
                left = t
            else:
                right = t
            nshrink += 1
            if nshrink > max_shrink:
                return np.array(x), logl, ncall, -1
        nshrink_total += nshrink
    return np.array(x), logl, ncall, nshrink_total


def random_walk(u0, logl0, scale, threshold, loglike_u, rng, n_steps):
    """Gaussian random walk in the unit cube, reflected at the faces.

    A move is accepted iff the proposal's log-likelihood exceeds ``threshold``.

    Returns
    -------
    u, log_like, n_accept, n_calls
    """
    d = len(u0)
    x = [float(v) for v in u0]
    logl = float(logl0)
    nacc = 0
    for _ in range(n_steps):
        z = rng.standard_normal(d)
        prop = np.array([_reflect(x[j] + scale * float(z[j])) for j in range(d)])
        lp = loglike_u(prop)
        if lp > threshold:
            x = [float(c) for c in prop]
            logl = lp
            nacc += 1
    return np.array(x), logl, nacc, n_steps


def _reflect(y):
    # fold onto [0, 1]; period-2 triangle wave
    y = math.fmod(y, 2.0)
    if y < 0.0:
        y += 2.0
    if y > 1.0:
        y = 2.0 - y
    return y


def _inside(x):
    for c in x:
        if c < 0.0 or c > 1.0:
            return False
    return True
