"""Exact offline reference computations used by the test suite and the
`verify` CLI subcommand.

Everything here is brute force and deliberately independent of the
streaming modules: cell membership is computed by explicit integer
division against the shifted grid, tree distances by walking levels, and
the sampling law by enumerating the two-stage draw with exact counts.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

from .core import GridConfig
from .quadtree import ShiftVector


def _dist(a: Sequence[int], b: Sequence[float], p: float) -> float:
    if p == 2.0:
        return sum((x - y) ** 2 for x, y in zip(a, b)) ** 0.5
    return sum(abs(x - y) ** p for x, y in zip(a, b)) ** (1.0 / p)


def exact_q(points: Sequence[tuple], norm_p: float) -> Dict[tuple, float]:
    """q(x) = total distance from x to every point of the set."""
    out = {p: 0.0 for p in points}
    pts = list(points)
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            d = _dist(pts[i], pts[j], norm_p)
            out[pts[i]] += d
            out[pts[j]] += d
    return out


def exact_Q(points: Sequence[tuple], norm_p: float) -> float:
    return sum(exact_q(points, norm_p).values())


def _cell(x: tuple, level: int, shift: ShiftVector, cfg: GridConfig) -> tuple:
    side = 2 ** (cfg.depth + 1 - level)
    return tuple((c + s - 1) // side for c, s in zip(x, shift.coords))


def exact_tree_distance(x: tuple, y: tuple, shift: ShiftVector,
                        cfg: GridConfig) -> float:
    """Walk both leaves upward level by level until their cells agree,
    paying each crossed edge's weight twice."""
    d_root = cfg.dim ** (1.0 / cfg.norm_p)
    total = 0.0
    for level in range(cfg.depth + 1, 0, -1):
        if _cell(x, level, shift, cfg) == _cell(y, level, shift, cfg):
            break
        total += 2.0 * d_root * 2 ** (cfg.depth + 1 - level)
    return total


def exact_q_tree(x: tuple, points: Sequence[tuple], shift: ShiftVector,
                 cfg: GridConfig) -> float:
    return sum(exact_tree_distance(x, y, shift, cfg) for y in points)


def exact_cell_counts(points: Sequence[tuple], level: int, shift: ShiftVector,
                      cfg: GridConfig) -> Dict[tuple, int]:
    counts: Dict[tuple, int] = {}
    for p in points:
        c = _cell(p, level, shift, cfg)
        counts[c] = counts.get(c, 0) + 1
    return counts


def exact_critical_level(points: Sequence[tuple], shift: ShiftVector,
                         cfg: GridConfig, tau: float = 0.6) -> Tuple[int, List[tuple]]:
    """Largest level whose fullest cell holds at least tau * n points,
    together with the heavy cells h_1..h_k (ties to the smallest cell id).

    The root holds everything, so k >= 1; leaf cells hold single points
    and never qualify for n >= 2, so k <= depth."""
    n = len(points)
    if n < 1:
        raise ValueError("need a nonempty point set")
    k = 1
    heavy_k = _cell(points[0], 1, shift, cfg)
    for level in range(1, cfg.depth + 1):
        counts = exact_cell_counts(points, level, shift, cfg)
        best = max(counts.items(), key=lambda kv: (kv[1], tuple(-c for c in kv[0])))
        if best[1] >= tau * n:
            k = level
            heavy_k = best[0]
        else:
            break
    path = [tuple(c >> (k - j) for c in heavy_k) for j in range(1, k)] + [heavy_k]
    return k, path


@dataclass
class ExactProfile:
    """Everything Algorithm 1 would see with exact counts for one shift."""

    cfg: GridConfig
    shift: ShiftVector
    points: List[tuple]
    q: Dict[tuple, float]
    Q: float
    q_tree: Dict[tuple, float]
    Q_tree: float
    k: int
    heavy_path: List[tuple]          # h_1..h_k cell coordinates
    heavy_sizes: List[int]           # |X(h_j)| for j = 1..k
    betas: List[float]               # index 0..depth+1
    q_tilde: List[float]             # index j-1 holds q~_j, j = 1..k
    band: Dict[tuple, int]           # l(x) per point
    ext_sets: List[List[tuple]]      # X^ext_i for i = 1..k
    r: List[float]                   # r_i for i = 1..k


def exact_profile(points: Sequence[tuple], shift: ShiftVector, cfg: GridConfig,
                  tau: float = 0.6) -> ExactProfile:
    pts = sorted(set(tuple(p) for p in points))
    n = len(pts)
    if n < 2:
        raise ValueError("profile needs n >= 2")
    q = exact_q(pts, cfg.norm_p)
    Q = sum(q.values())
    qt = {x: exact_q_tree(x, pts, shift, cfg) for x in pts}
    k, path = exact_critical_level(pts, shift, cfg, tau)
    level_counts = [exact_cell_counts(pts, j, shift, cfg) for j in range(1, k + 1)]
    heavy_sizes = [level_counts[j - 1].get(path[j - 1], 0) for j in range(1, k + 1)]
    d_root = cfg.dim ** (1.0 / cfg.norm_p)
    betas = [d_root * 2 ** (cfg.depth + 1 - i) for i in range(cfg.depth + 2)]
    q_tilde = []
    running = 0.0
    for j in range(1, k + 1):
        running += betas[j] * (n - heavy_sizes[j - 1])
        q_tilde.append(n * betas[j] + running)
    band = {}
    for x in pts:
        ell = 0
        for j in range(1, k + 1):
            if _cell(x, j, shift, cfg) == path[j - 1]:
                ell = j
            else:
                break
        band[x] = ell
    ext_sets = []
    for i in range(1, k):
        ext_sets.append([x for x in pts if band[x] <= i])
    ext_sets.append([x for x in pts if band[x] == k])
    weights = [len(ext_sets[i]) * q_tilde[i] for i in range(k)]
    total = sum(weights)
    r = [w / total for w in weights]
    return ExactProfile(cfg, shift, pts, q, Q, qt, sum(qt.values()), k, path,
                        heavy_sizes, betas, q_tilde, band, ext_sets, r)


def exact_alg1_distribution(points: Sequence[tuple], shift: ShiftVector,
                            cfg: GridConfig, tau: float = 0.6) -> Dict[tuple, float]:
    """Exact two-stage law: draw band i with probability r_i, then a
    uniform element of X^ext_i. A point x contributes the r_i / |X^ext_i|
    terms of exactly the bands whose extended set contains it: i in
    [l(x), k-1] when l(x) < k, and {k} when l(x) = k."""
    prof = exact_profile(points, shift, cfg, tau)
    out = {}
    for x in prof.points:
        ell = prof.band[x]
        if ell == prof.k:
            out[x] = prof.r[prof.k - 1] / len(prof.ext_sets[prof.k - 1])
        else:
            out[x] = sum(prof.r[i - 1] / len(prof.ext_sets[i - 1])
                         for i in range(ell, prof.k))
    return out


def offline_alg1_draw(prof: ExactProfile, rng: random.Random) -> Tuple[tuple, float]:
    """One offline execution of the two-stage draw with exact counts;
    returns (z*, p*) where p* matches the exact law of z*."""
    u = rng.random()
    acc = 0.0
    i_star = prof.k
    for i in range(1, prof.k + 1):
        acc += prof.r[i - 1]
        if u < acc:
            i_star = i
            break
    z = rng.choice(prof.ext_sets[i_star - 1])
    ell = prof.band[z]
    if ell == prof.k:
        p_star = prof.r[prof.k - 1] / len(prof.ext_sets[prof.k - 1])
    else:
        p_star = sum(prof.r[i - 1] / len(prof.ext_sets[i - 1])
                     for i in range(ell, prof.k))
    return z, p_star


def exact_light_part(items: Sequence[int], partition) -> Tuple[int, List[int]]:
    """Heaviest part id (ties to the smallest id) and the items outside it."""
    sizes: Dict[int, int] = {}
    for i in items:
        pid = partition(i)
        sizes[pid] = sizes.get(pid, 0) + 1
    heavy = max(sizes.items(), key=lambda kv: (kv[1], -kv[0]))[0]
    return heavy, [i for i in items if partition(i) != heavy]


def exact_max_cut_bruteforce(points: Sequence[tuple], norm_p: float) -> float:
    """Independent exponential enumeration used to cross-check the main
    solver on small instances."""
    pts = list(points)
    n = len(pts)
    if n <= 1:
        return 0.0
    best = 0.0
    for mask in range(1 << (n - 1)):
        total = 0.0
        for i in range(n):
            side_i = (mask >> i) & 1 if i < n - 1 else 0
            for j in range(i + 1, n):
                side_j = (mask >> j) & 1 if j < n - 1 else 0
                if side_i != side_j:
                    total += _dist(pts[i], pts[j], norm_p)
        if total > best:
            best = total
    return best


def two_cluster_surrogate(cluster_a: Sequence[tuple], cluster_b: Sequence[tuple],
                          norm_p: float) -> float:
    """Max-Cut at cluster-aggregation granularity: enumerate how many
    points of each cluster sit on one side and price pairs by the exact
    mean intra/inter distances. Exact for exchangeable-within-cluster
    geometry; the acceptance surrogate for two-cluster instances."""
    a, b = list(cluster_a), list(cluster_b)
    na, nb = len(a), len(b)

    def mean_pairwise(pts):
        if len(pts) < 2:
            return 0.0
        s = sum(_dist(pts[i], pts[j], norm_p)
                for i in range(len(pts)) for j in range(i + 1, len(pts)))
        return s / (len(pts) * (len(pts) - 1) / 2)

    m_aa = mean_pairwise(a)
    m_bb = mean_pairwise(b)
    m_ab = (sum(_dist(x, y, norm_p) for x in a for y in b) / (na * nb)
            if na and nb else 0.0)
    best = 0.0
    for a1 in range(na + 1):
        for b1 in range(nb + 1):
            v = (a1 * (na - a1) * m_aa + b1 * (nb - b1) * m_bb
                 + (a1 * (nb - b1) + (na - a1) * b1) * m_ab)
            best = max(best, v)
    return best
