"""Numba event-driven kernel for the lattice dynamics.

Exact continuous-time simulation: bond rates live in a Fenwick (binary
indexed) tree so each event costs O(log L) for sampling and for the at most
three rate updates it triggers. No time discretization anywhere.
"""

import numpy as np
from numba import njit

# return codes of the kernel
OK = 0
BREACH_LEFT = 1
BREACH_RIGHT = 2


@njit(cache=True)
def seed_rng(seed):
    np.random.seed(seed)


@njit(cache=True, inline="always")
def bond_rate_nb(x, y, c, d):
    if x == 0 and y == 0:
        return c
    if x == 1 and y == -1:
        return 1.0
    if x == 0 and y == -1:
        return 0.5 * (1.0 - d)
    if x == 1 and y == 0:
        return 0.5 * (1.0 + d)
    return 0.0


@njit(cache=True)
def _fenwick_build(rates):
    m = rates.shape[0]
    tree = rates.copy()
    for i in range(m):
        j = i | (i + 1)
        if j < m:
            tree[j] += tree[i]
    return tree


@njit(cache=True, inline="always")
def _fenwick_add(tree, i, delta):
    m = tree.shape[0]
    while i < m:
        tree[i] += delta
        i |= i + 1


@njit(cache=True)
def _fenwick_total(tree):
    m = tree.shape[0]
    total = 0.0
    i = m - 1
    while i >= 0:
        total += tree[i]
        i = (i & (i + 1)) - 1
    return total


@njit(cache=True)
def _fenwick_sample(tree, u):
    """Smallest index i with prefix_sum(i) >= u (binary descend)."""
    m = tree.shape[0]
    pos = 0
    log = 1
    while (log << 1) <= m:
        log <<= 1
    r = log
    while r > 0:
        nxt = pos + r
        if nxt <= m and tree[nxt - 1] < u:
            u -= tree[nxt - 1]
            pos = nxt
        r >>= 1
    if pos >= m:
        pos = m - 1
    return pos


@njit(cache=True)
def evolve(sites, c, d, t_start, t_stop, active_lo, active_hi,
           guard_left, guard_right, bond_counts):
    """Advance the configuration from t_start to t_stop in place.

    Bonds j in [active_lo, active_hi] (connecting sites j and j+1) are
    active; everything outside is frozen. When guard_left/guard_right is
    set, an event on one of the two outermost active bonds on that side
    means the influence cone reached the boundary: the move is not applied
    and the kernel aborts with a breach code.

    bond_counts[j] accumulates the number of events at bond j (each event
    moves one unit of signed charge across the bond in the positive
    direction).

    Returns (time_reached, n_events, status).
    """
    m = active_hi - active_lo + 1
    rates = np.empty(m, dtype=np.float64)
    for k in range(m):
        j = active_lo + k
        rates[k] = bond_rate_nb(sites[j], sites[j + 1], c, d)
    tree = _fenwick_build(rates)

    t = t_start
    n_events = 0
    while True:
        total = _fenwick_total(tree)
        if total <= 1e-14:
            return t_stop, n_events, OK
        dt = np.random.exponential(1.0 / total)
        if t + dt > t_stop:
            return t_stop, n_events, OK
        t += dt
        u = np.random.random() * total
        k = _fenwick_sample(tree, u)
        # floating-point slack can land on a zero-rate bond; nudge to a
        # neighbor that carries rate
        if rates[k] <= 0.0:
            found = False
            for off in range(1, m):
                for kk in (k - off, k + off):
                    if 0 <= kk < m and rates[kk] > 0.0:
                        k = kk
                        found = True
                        break
                if found:
                    break
            if not found:
                return t, n_events, OK
        j = active_lo + k
        if guard_left and j <= active_lo + 1:
            return t, n_events, BREACH_LEFT
        if guard_right and j >= active_hi - 1:
            return t, n_events, BREACH_RIGHT
        sites[j] -= 1
        sites[j + 1] += 1
        bond_counts[j] += 1
        n_events += 1
        for kk in range(max(k - 1, 0), min(k + 1, m - 1) + 1):
            jj = active_lo + kk
            new = bond_rate_nb(sites[jj], sites[jj + 1], c, d)
            _fenwick_add(tree, kk, new - rates[kk])
            rates[kk] = new
