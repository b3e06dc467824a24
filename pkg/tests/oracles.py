"""Independent reference implementations used to check the package.

Nothing here imports the code under test.  Each oracle trades speed for
obviousness: plain Python integers, brute force, exhaustive enumeration.
"""
from __future__ import annotations

import itertools
from fractions import Fraction

M64 = (1 << 64) - 1

# Philox4x64 round multipliers and key increments (Salmon et al., 2011)
_PHILOX_M0 = 0xD2E7470EE14C6C93
_PHILOX_M1 = 0xCA5A826395121157
_PHILOX_W0 = 0x9E3779B97F4A7C15
_PHILOX_W1 = 0xBB67AE8584CAA73B


def _mulhilo(a, b):
    p = a * b
    return p >> 64, p & M64


def philox4x64_block(counter, key, rounds=10):
    """One 4-word output block for a 4-word counter and 2-word key."""
    c = list(counter)
    k0, k1 = key
    for r in range(rounds):
        if r:
            k0 = (k0 + _PHILOX_W0) & M64
            k1 = (k1 + _PHILOX_W1) & M64
        hi0, lo0 = _mulhilo(_PHILOX_M0, c[0])
        hi1, lo1 = _mulhilo(_PHILOX_M1, c[2])
        c = [hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0]
    return c


def philox_stream(seed, n):
    """First ``n`` 64-bit outputs for a generator keyed by ``seed``.

    The counter starts at zero and is incremented before each block, so the
    first block is produced from counter value 1.
    """
    out = []
    ctr = 0
    while len(out) < n:
        ctr += 1
        words = [(ctr >> (64 * i)) & M64 for i in range(4)]
        out.extend(philox4x64_block(words, (seed & M64, 0)))
    return out[:n]


def philox_doubles(seed, n):
    return [(x >> 11) * 2.0 ** -53 for x in philox_stream(seed, n)]


def fisher_yates(n, seed):
    perm = list(range(n))
    if n < 2:
        return perm
    u = philox_doubles(seed, n - 1)
    step = 0
    for i in range(n - 1, 0, -1):
        j = int(u[step] * (i + 1))
        perm[i], perm[j] = perm[j], perm[i]
        step += 1
    return perm


# ------------------------------------------------------------- clustering

def brute_force_linkage(D, linkage="average"):
    """Agglomerative clustering by rescanning every cluster pair each step.

    Cluster distances are recomputed from the original leaf distances
    (mean, min or max over all cross pairs) in exact rationals.  Among equal
    distances the pair whose lowest leaf indices are lexicographically
    smallest wins.  Returns ``[(leaves_a, leaves_b, height)]`` with
    ``leaves_a`` the cluster holding the lower leaf.
    """
    n = len(D)
    F = [[Fraction(float(D[i][j])) for j in range(n)] for i in range(n)]
    clusters = [[i] for i in range(n)]
    out = []
    while len(clusters) > 1:
        best = None
        for a, b in itertools.combinations(range(len(clusters)), 2):
            cross = [F[i][j] for i in clusters[a] for j in clusters[b]]
            if linkage == "average":
                d = sum(cross) / len(cross)
            elif linkage == "single":
                d = min(cross)
            else:
                d = max(cross)
            lows = sorted((min(clusters[a]), min(clusters[b])))
            key = (d, lows[0], lows[1])
            if best is None or key < best[0]:
                best = (key, a, b)
        (d, _, _), a, b = best
        ca, cb = sorted((clusters[a], clusters[b]), key=min)
        out.append((sorted(ca), sorted(cb), d))
        clusters = [c for t, c in enumerate(clusters) if t not in (a, b)] + [ca + cb]
    return out


# --------------------------------------------------------------- wilcoxon

def _avg_ranks(values):
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        for t in range(i, j + 1):
            ranks[order[t]] = Fraction(i + j + 2, 2)
        i = j + 1
    return ranks


def wilcoxon_enumeration(a, b):
    """(P(W+ >= observed), P(W+ <= observed)) over all 2^n sign flips, exactly."""
    d = [x - y for x, y in zip(a, b) if x != y]
    r = _avg_ranks([abs(v) for v in d])
    obs = sum(rk for rk, v in zip(r, d) if v > 0)
    ge = le = 0
    for signs in itertools.product((0, 1), repeat=len(d)):
        w = sum(rk for rk, s in zip(r, signs) if s)
        ge += w >= obs
        le += w <= obs
    total = 2 ** len(d)
    return Fraction(ge, total), Fraction(le, total)
