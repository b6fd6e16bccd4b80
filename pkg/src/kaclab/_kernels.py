"""Compiled inner loops for McKean-tree sampling.

Every kernel consumes its Generator strictly sample by sample: first the
leaf count, then one (pick, angle) pair per split, then (optionally) one
uniform per leaf.  Batch boundaries therefore never change the stream.
"""

import math

import numba as nb
import numpy as np


@nb.njit(inline="always")
def _unit_pair(gen):
    # (cos 2phi, sin 2phi) for phi uniform, by disk rejection: no trig calls.
    while True:
        x = 2.0 * gen.random() - 1.0
        y = 2.0 * gen.random() - 1.0
        r2 = x * x + y * y
        if r2 <= 1.0 and r2 > 0.0:
            break
    inv = 1.0 / r2
    return (x * x - y * y) * inv, 2.0 * x * y * inv


@nb.njit(inline="always")
def _signed_pow(c, p, p_int):
    # c |c|^p
    if p_int >= 0:
        a = abs(c)
        out = c
        for _ in range(p_int):
            out *= a
        return out
    if c == 0.0:
        return 0.0
    return c * abs(c) ** p


@nb.njit(inline="always")
def _abs_pow(w, e):
    a = abs(w)
    if e == 1.0:
        return a
    if e == 2.0:
        return a * a
    if e == 0.5:
        return math.sqrt(a)
    if e == 4.0:
        a2 = a * a
        return a2 * a2
    if e == 0.25:
        return math.sqrt(math.sqrt(a))
    return a ** e


@nb.njit(inline="always")
def _draw_nu(gen, lq, nu_max):
    # lq = log(1 - e^{-t}); geometric on {1,2,...} by inversion
    u = 1.0 - gen.random()
    if lq == 0.0:
        return nu_max + 1
    x = math.floor(math.log(u) / lq)
    if x >= nu_max:
        return nu_max + 1
    return 1 + int(x)


@nb.njit(nogil=True, cache=True)
def draw_nu_batch(gen, lq, n, nu_max):
    out = np.empty(n, dtype=np.int64)
    for s in range(n):
        out[s] = _draw_nu(gen, lq, nu_max)
    return out


@nb.njit(nogil=True, cache=True)
def record_tree(gen, lq, p, p_int, nu_max):
    """One tree with the ordered (left-to-right) insertion rule.

    Returns (weights, picks, cos2phi, sin2phi); picks are 1-based.
    """
    nu = _draw_nu(gen, lq, nu_max)
    if nu > nu_max:
        return np.empty(0), np.empty(0, dtype=np.int64), np.empty(0), np.empty(0)
    w = np.empty(nu)
    picks = np.empty(nu - 1, dtype=np.int64)
    cs = np.empty(nu - 1)
    sn = np.empty(nu - 1)
    w[0] = 1.0
    for k in range(1, nu):
        i = int(gen.random() * k)
        c, s = _unit_pair(gen)
        picks[k - 1] = i + 1
        cs[k - 1] = c
        sn[k - 1] = s
        b = w[i]
        for j in range(k, i + 1, -1):
            w[j] = w[j - 1]
        w[i] = _signed_pow(c, p, p_int) * b
        w[i + 1] = _signed_pow(s, p, p_int) * b
    return w, picks, cs, sn


@nb.njit(nogil=True, cache=True)
def tree_sums(gen, lq, p, p_int, n, gammas, alpha, nu_max):
    """Per-tree functionals without storing leaves.

    Returns nu[n], power sums[n, len(gammas)], max|beta|[n] and
    |sum |beta|^alpha - 1|[n].  Uses the append rule: the split leaf keeps
    its slot and the sibling goes to the end.  Picking uniformly among the
    current leaves makes the leaf multiset independent of their labelling.
    """
    ng = gammas.shape[0]
    nus = np.empty(n, dtype=np.int64)
    sums = np.zeros((n, ng))
    wmax = np.empty(n)
    dev = np.empty(n)
    cap = 1024
    w = np.empty(cap)
    for s in range(n):
        nu = _draw_nu(gen, lq, nu_max)
        if nu > nu_max:
            nus[s] = -1
            return nus, sums, wmax, dev
        if nu > cap:
            while cap < nu:
                cap *= 2
            w = np.empty(cap)
        w[0] = 1.0
        for k in range(1, nu):
            i = int(gen.random() * k)
            c, sn = _unit_pair(gen)
            b = w[i]
            w[i] = _signed_pow(c, p, p_int) * b
            w[k] = _signed_pow(sn, p, p_int) * b
        acc = 0.0
        mx = 0.0
        for j in range(nu):
            a = abs(w[j])
            if a > mx:
                mx = a
            acc += _abs_pow(a, alpha)
        for g in range(ng):
            e = gammas[g]
            tot = 0.0
            for j in range(nu):
                tot += _abs_pow(w[j], e)
            sums[s, g] = tot
        nus[s] = nu
        wmax[s] = mx
        dev[s] = abs(acc - 1.0)
    return nus, sums, wmax, dev


@nb.njit(nogil=True, cache=True)
def tree_leaves(gen, lq, p, p_int, n, budget, nu_max, with_uniforms):
    """Flat leaf weights for up to n trees, stopping once budget leaves are stored.

    Returns (weights, uniforms, counts, done).  done < n means the caller
    should call again with the same generator for the remaining trees.
    """
    cap = max(budget, 16)
    w = np.empty(cap)
    u = np.empty(cap if with_uniforms else 1)
    counts = np.empty(n, dtype=np.int64)
    off = 0
    done = 0
    while done < n and off < budget:
        nu = _draw_nu(gen, lq, nu_max)
        if nu > nu_max:
            counts[done] = -1
            done += 1
            break
        if off + nu > cap:
            newcap = max(2 * cap, off + nu)
            w2 = np.empty(newcap)
            w2[:off] = w[:off]
            w = w2
            if with_uniforms:
                u2 = np.empty(newcap)
                u2[:off] = u[:off]
                u = u2
            cap = newcap
        w[off] = 1.0
        for k in range(1, nu):
            i = int(gen.random() * k)
            c, sn = _unit_pair(gen)
            b = w[off + i]
            w[off + i] = _signed_pow(c, p, p_int) * b
            w[off + k] = _signed_pow(sn, p, p_int) * b
        if with_uniforms:
            for j in range(nu):
                u[off + j] = gen.random()
        counts[done] = nu
        off += nu
        done += 1
    return w[:off], u[:off] if with_uniforms else u[:0], counts[:done], done


@nb.njit(nogil=True, cache=True)
def branch_from_pool(gen, lq, p, p_int, n, pool, nu_max):
    """V = sum_j beta_j Y_j with Y_j drawn uniformly from a previous-time pool."""
    out = np.empty(n)
    m = pool.shape[0]
    cap = 1024
    w = np.empty(cap)
    for s in range(n):
        nu = _draw_nu(gen, lq, nu_max)
        if nu > nu_max:
            out[s] = np.nan
            continue
        if nu > cap:
            while cap < nu:
                cap *= 2
            w = np.empty(cap)
        w[0] = 1.0
        for k in range(1, nu):
            i = int(gen.random() * k)
            c, sn = _unit_pair(gen)
            b = w[i]
            w[i] = _signed_pow(c, p, p_int) * b
            w[k] = _signed_pow(sn, p, p_int) * b
        acc = 0.0
        for j in range(nu):
            acc += w[j] * pool[int(gen.random() * m)]
        out[s] = acc
    return out
