"""Pure numpy implementations of the hot loops.

Mirrors ``_kernels.pyx``. The permutation kernel reproduces the compiled
one bit for bit (same counter-based generator, same summation order); the
quadrature kernel is backed by QUADPACK and agrees to the requested
tolerance.
"""

import numpy as np
from scipy import integrate

BACKEND = "python"

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_STREAM = np.uint64(0xD1B54A32D192ED03)
_MASK64 = (1 << 64) - 1
_INV53 = 1.0 / 9007199254740992.0


def _mix(x):
    # splitmix64 output function on uint64 arrays (wrapping arithmetic)
    x = x + _GOLDEN
    x = (x ^ (x >> np.uint64(30))) * _M1
    x = (x ^ (x >> np.uint64(27))) * _M2
    return x ^ (x >> np.uint64(31))


def stream_key(seed, location):
    with np.errstate(over="ignore"):
        s = _mix(np.array([int(seed) & _MASK64], dtype=np.uint64))
        return _mix(s ^ (np.uint64(location) * _STREAM))[0]


def _uniforms(key, counters):
    with np.errstate(over="ignore"):
        u = _mix(key + counters * _GOLDEN)
    return (u >> np.uint64(11)).astype(np.float64) * _INV53


def lisa_exceed_counts(z, indptr, indices, data, center, obs_dev, n_perm, seed):
    """Count conditional permutations at least as extreme as the observed value.

    For every location ``i`` with neighbors, ``n_perm`` draws assign distinct
    values from the other ``n - 1`` locations to the neighbor slots (partial
    Fisher-Yates on a virtual pool). A draw counts when
    ``|z_i * sum_t w_t z_draw[t] - center_i| >= obs_dev_i``. Island rows get -1.
    """
    z = np.asarray(z, dtype=np.float64)
    n = z.size
    m = n - 1
    counts = np.full(n, -1, dtype=np.int64)
    perms = np.arange(n_perm, dtype=np.uint64)
    rows = np.arange(n_perm)
    for i in range(n):
        lo, hi = indptr[i], indptr[i + 1]
        k = hi - lo
        if k == 0:
            continue
        if k > m:
            raise ValueError("more neighbors than other locations")
        w = data[lo:hi]
        key = stream_key(seed, i)
        # history of writes to the virtual pool: slot t always gets written at
        # step t, the picked slot j gets the old value of t
        slot_hist = np.empty((n_perm, 2 * k), dtype=np.int64)
        val_hist = np.empty((n_perm, 2 * k), dtype=np.int64)
        used = 0
        acc = np.zeros(n_perm)
        for t in range(k):
            u = _uniforms(key, perms * np.uint64(k) + np.uint64(t))
            j = t + (u * (m - t)).astype(np.int64)
            vj = _lookup(j, slot_hist, val_hist, used, rows)
            vt = _lookup(np.full(n_perm, t, dtype=np.int64), slot_hist, val_hist, used, rows)
            slot_hist[:, used] = j
            val_hist[:, used] = vt
            slot_hist[:, used + 1] = t
            val_hist[:, used + 1] = vj
            used += 2
            loc = vj + (vj >= i)
            acc += w[t] * z[loc]
        dev = np.abs(z[i] * acc - center[i])
        counts[i] = int(np.count_nonzero(dev >= obs_dev[i]))
    return counts


def _lookup(slots, slot_hist, val_hist, used, rows):
    vals = slots.copy()
    # later writes win, so scan oldest to newest
    for c in range(used):
        hit = slot_hist[:, c] == slots
        vals[hit] = val_hist[hit, c]
    return vals


def _real_roots(p0, p1, p2, lo, hi):
    if p2 == 0.0:
        roots = [] if p1 == 0.0 else [-p0 / p1]
    else:
        disc = p1 * p1 - 4.0 * p2 * p0
        if disc < 0.0:
            roots = []
        else:
            sq = np.sqrt(disc)
            q = -0.5 * (p1 + np.copysign(sq, p1)) if p1 != 0.0 else -0.5 * sq
            if q == 0.0:
                roots = [0.0]
            else:
                roots = [q / p2, p0 / q]
    return sorted(r for r in set(roots) if lo < r < hi)


def rational_abs_integrals(num, den, lo, hi, tol):
    """Integrate ``|P(x) / Q(x)|`` over ``[lo, hi]`` for each row.

    ``num`` and ``den`` are ``(m, 3)`` arrays of ascending coefficients
    ``c0 + c1 x + c2 x^2``; ``Q`` must not vanish on the interval. The range
    is split at the real roots of ``P`` so each panel is smooth.
    """
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    out = np.empty(num.shape[0])
    for r in range(num.shape[0]):
        p0, p1, p2 = num[r]
        q0, q1, q2 = den[r]
        if p0 == 0.0 and p1 == 0.0 and p2 == 0.0:
            out[r] = 0.0
            continue
        edges = [lo, *_real_roots(p0, p1, p2, lo, hi), hi]
        panels = len(edges) - 1

        def f(x):
            return abs((p0 + x * (p1 + x * p2)) / (q0 + x * (q1 + x * q2)))

        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            val, _ = integrate.quad(f, a, b, epsabs=tol / panels, epsrel=0.0, limit=200)
            total += val
        out[r] = total
    return out
