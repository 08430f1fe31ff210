"""Compiled hot loops: walk stepping, aggregation, occupation counting, BFS.

Every kernel draws from SplitMix64 streams over uint64 state, bit-identical
to streams.Stream (tested).  Graphs arrive as flat arrays:

  nbr_by_dir  (n, 2d) int32   neighbor row per direction (+x,-x,+y,-y,...), -1 if closed
  nbr_compact (n, 2d) int32   open neighbors packed left, direction order
  degree      (n,)    int32

A blind step draws one direction uniformly from the 2d slots and stays put
on a closed slot; a simple step draws uniformly from the open neighbors.
"""

from __future__ import annotations

import numpy as np
from numba import njit

U64 = np.uint64
_GOLDEN = U64(0x9E3779B97F4A7C15)
_MIX1 = U64(0xBF58476D1CE4E5B9)
_MIX2 = U64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = U64(30), U64(27), U64(31), U64(11)
_INV53 = 1.0 / float(1 << 53)

# stop reasons shared with walks.py
EXITED = 0
HIT = 1
CAPPED = 2
SHELL = 3


@njit(inline="always")
def _advance(s):
    s = s + _GOLDEN
    z = (s ^ (s >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    z = z ^ (z >> _S31)
    return s, float(z >> _S11) * _INV53


@njit(cache=True)
def splitmix_uniforms(key, n):
    """Reference draw sequence for stream-equality tests."""
    out = np.empty(n, dtype=np.float64)
    s = key
    for i in range(n):
        s, u = _advance(s)
        out[i] = u
    return out


@njit(inline="always")
def _step(nbr_by_dir, nbr_compact, degree, simple, v, u):
    if simple:
        return nbr_compact[v, int(u * degree[v])]
    nb = nbr_by_dir[v, int(u * nbr_by_dir.shape[1])]
    return nb if nb >= 0 else v


@njit(cache=True)
def walk_until_exit(nbr_by_dir, nbr_compact, degree, simple, inside, start, key, cap):
    """Walk from start (inside) until first vertex outside `inside` or cap.

    Returns (reason, steps, final, prev).
    """
    s = key
    v = start
    prev = start
    t = np.int64(0)
    while t < cap:
        s, u = _advance(s)
        prev = v
        v = _step(nbr_by_dir, nbr_compact, degree, simple, v, u)
        t += 1
        if not inside[v]:
            return EXITED, t, v, prev
    return CAPPED, t, v, prev


@njit(cache=True)
def walk_until_hit(nbr_by_dir, nbr_compact, degree, simple, target, start, key, cap):
    """Walk until the target set is hit; the start counts at t = 0."""
    if target[start]:
        return HIT, np.int64(0), start, start
    s = key
    v = start
    prev = start
    t = np.int64(0)
    while t < cap:
        s, u = _advance(s)
        prev = v
        v = _step(nbr_by_dir, nbr_compact, degree, simple, v, u)
        t += 1
        if target[v]:
            return HIT, t, v, prev
    return CAPPED, t, v, prev


@njit(cache=True)
def exit_time_batch(nbr_by_dir, nbr_compact, degree, inside, start, keys, cap):
    """Blind-walk exit times; capped walks report tau = cap.

    Returns (taus, n_capped).
    """
    n = keys.shape[0]
    taus = np.empty(n, dtype=np.int64)
    n_capped = 0
    for w in range(n):
        s = keys[w]
        v = start
        t = np.int64(0)
        while t < cap:
            s, u = _advance(s)
            v = _step(nbr_by_dir, nbr_compact, degree, False, v, u)
            t += 1
            if not inside[v]:
                break
        taus[w] = t
        if t >= cap and inside[v]:
            n_capped += 1
    return taus, n_capped


@njit(cache=True)
def hit_before_exit_batch(nbr_by_dir, nbr_compact, degree, inside, z, starts, keys, cap):
    """For each start: 1 if the blind walk hits z strictly before exiting, else 0.

    t = 0 counts, so a walk started at z hits immediately.
    Returns (hits uint8 array, n_capped).
    """
    n = starts.shape[0]
    hits = np.zeros(n, dtype=np.uint8)
    n_capped = 0
    for w in range(n):
        v = starts[w]
        if v == z:
            hits[w] = 1
            continue
        s = keys[w]
        t = np.int64(0)
        done = False
        while t < cap:
            s, u = _advance(s)
            v = _step(nbr_by_dir, nbr_compact, degree, False, v, u)
            t += 1
            if v == z:
                hits[w] = 1
                done = True
                break
            if not inside[v]:
                done = True
                break
        if not done:
            n_capped += 1
    return hits, n_capped


@njit(cache=True)
def green_batch(nbr_by_dir, nbr_compact, degree, inside, pos, m, source, keys, cap):
    """Occupation counts on the killed domain, one blind walk per key.

    pos maps vertex row -> domain slot (-1 outside).  Counts include t = 0
    and stays; the time index of the exit itself is not counted, so each
    walk's total count equals its tau exactly.

    Returns (count_sum, count_sq_sum, taus, n_capped).
    """
    n = keys.shape[0]
    count_sum = np.zeros(m, dtype=np.int64)
    count_sq = np.zeros(m, dtype=np.int64)
    taus = np.empty(n, dtype=np.int64)
    tmp = np.zeros(m, dtype=np.int64)
    touched = np.empty(m, dtype=np.int64)
    n_capped = 0
    for w in range(n):
        s = keys[w]
        v = source
        ntouch = 0
        t = np.int64(0)
        while True:
            p = pos[v]
            if tmp[p] == 0:
                touched[ntouch] = p
                ntouch += 1
            tmp[p] += 1
            s, u = _advance(s)
            v = _step(nbr_by_dir, nbr_compact, degree, False, v, u)
            t += 1
            if not inside[v]:
                break
            if t >= cap:
                n_capped += 1
                break
        taus[w] = t
        for i in range(ntouch):
            p = touched[i]
            c = tmp[p]
            count_sum[p] += c
            count_sq[p] += c * c
            tmp[p] = 0
    return count_sum, count_sq, taus, n_capped


@njit(cache=True)
def endpoint_batch(nbr_by_dir, nbr_compact, degree, on_shell, start, keys, n_steps):
    """Blind walks of exactly n_steps; abort if any walk touches the box shell.

    Returns (finals, ok).
    """
    n = keys.shape[0]
    finals = np.empty(n, dtype=np.int32)
    for w in range(n):
        s = keys[w]
        v = start
        for _ in range(n_steps):
            s, u = _advance(s)
            v = _step(nbr_by_dir, nbr_compact, degree, False, v, u)
            if on_shell[v]:
                return finals, False
        finals[w] = v
    return finals, True


@njit(cache=True)
def idla_batch(nbr_by_dir, nbr_compact, degree, occupied, origin, keys, cap):
    """Sequential aggregation: particle w settles at its first unoccupied vertex.

    Mutates occupied.  Returns (settle rows, per-particle steps,
    stalled particle index or -1).
    """
    n = keys.shape[0]
    settle = np.full(n, -1, dtype=np.int32)
    steps = np.zeros(n, dtype=np.int64)
    for w in range(n):
        s = keys[w]
        v = origin
        t = np.int64(0)
        stalled = False
        while occupied[v]:
            if t >= cap:
                stalled = True
                break
            s, u = _advance(s)
            v = _step(nbr_by_dir, nbr_compact, degree, False, v, u)
            t += 1
        if stalled:
            return settle, steps, w
        occupied[v] = True
        settle[w] = v
        steps[w] = t
    return settle, steps, -1


@njit(cache=True)
def idla_ml_batch(nbr_by_dir, nbr_compact, degree, occupied, origin, z, inside, keys, cap):
    """Aggregation with shadow continuation to the exit of the inside region.

    Each particle keeps walking on the same stream after settling until it
    leaves `inside`; hits of z are tallied while strictly before that exit.
    m counts walks hitting z at any such time, l only hits at or after the
    settle time.  Returns (settle, m, l, stalled_particle).
    """
    n = keys.shape[0]
    settle = np.full(n, -1, dtype=np.int32)
    m_count = np.int64(0)
    l_count = np.int64(0)
    for w in range(n):
        s = keys[w]
        v = origin
        t = np.int64(0)
        settled = False
        exited = False
        hit_any = False
        hit_after = False
        while True:
            if not exited and not inside[v]:
                exited = True
            if not settled and not occupied[v]:
                occupied[v] = True
                settle[w] = v
                settled = True
            if not exited and v == z:
                hit_any = True
                if settled:
                    hit_after = True
            if settled and exited:
                break
            if t >= cap:
                return settle, m_count, l_count, w
            s, u = _advance(s)
            v = _step(nbr_by_dir, nbr_compact, degree, False, v, u)
            t += 1
        if hit_any:
            m_count += 1
        if hit_after:
            l_count += 1
    return settle, m_count, l_count, np.int64(-1)


@njit(cache=True)
def escape_batch(nbr_by_dir, nbr_compact, degree, dist, x, r, keys, cap):
    """Simple walks from x: reach graph-distance r before returning to x.

    Returns (n_escaped, n_capped); capped walks count as non-escapes.
    """
    n = keys.shape[0]
    n_escaped = np.int64(0)
    n_capped = np.int64(0)
    for w in range(n):
        s = keys[w]
        v = x
        t = np.int64(0)
        done = False
        while t < cap:
            s, u = _advance(s)
            v = _step(nbr_by_dir, nbr_compact, degree, True, v, u)
            t += 1
            if dist[v] >= r:
                n_escaped += 1
                done = True
                break
            if v == x:
                done = True
                break
        if not done:
            n_capped += 1
    return n_escaped, n_capped


@njit(cache=True)
def bfs_distances(nbr_by_dir, source, limit):
    """Graph distances from source via BFS; -1 where unreachable or > limit."""
    n = nbr_by_dir.shape[0]
    twod = nbr_by_dir.shape[1]
    dist = np.full(n, -1, dtype=np.int32)
    queue = np.empty(n, dtype=np.int32)
    dist[source] = 0
    queue[0] = source
    head = 0
    tail = 1
    while head < tail:
        v = queue[head]
        head += 1
        dv = dist[v]
        if dv >= limit:
            continue
        for j in range(twod):
            nb = nbr_by_dir[v, j]
            if nb >= 0 and dist[nb] < 0:
                dist[nb] = dv + 1
                queue[tail] = nb
                tail += 1
    return dist
