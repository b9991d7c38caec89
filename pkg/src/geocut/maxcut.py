"""Point-weighted sets, cut values, exact small-instance Max-Cut, and the
end-to-end streaming Max-Cut estimator.

A point-weighted sample multiset S of size m with weights w rescales
pairwise distances to dist(x, y) / (w(x) w(y)); Max-Cut(S) / m^2 is then
an estimator of Max-Cut of the underlying set when each weight is the
point's sampling probability.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .core import GridConfig, StreamUpdate, lp_distance
from .hashing import derive
from .importance_sampler import SamplerConfig, sampler_init

EXACT_CAP = 24  # 2^23 bipartitions; above this only local search


@dataclass(frozen=True)
class WeightedSample:
    point: tuple
    weight: float  # the reported sampling probability estimate, in (0, 1]

    def __post_init__(self):
        if not (self.weight > 0):
            raise ValueError("weight must be positive")


PointWeightedSet = List[WeightedSample]


def cut_value(points: Sequence[tuple], side: Sequence[tuple], norm_p: float) -> float:
    """Total distance across the bipartition (side, points minus side)."""
    side_set = set(side)
    if not side_set <= set(points):
        raise ValueError("side must be a subset of the point set")
    other = [p for p in points if p not in side_set]
    return sum(lp_distance(x, y, norm_p) for x in side_set for y in other)


def _distance_matrix(points: Sequence[tuple], norm_p: float,
                     weights: Optional[Sequence[float]] = None) -> np.ndarray:
    n = len(points)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            v = lp_distance(points[i], points[j], norm_p)
            if weights is not None:
                v /= weights[i] * weights[j]
            d[i, j] = d[j, i] = v
    return d


def max_cut_matrix(dist: np.ndarray) -> float:
    """Exact Max-Cut of a symmetric distance matrix by enumerating the
    2^(n-1) bipartitions with point n-1 pinned, walking them in Gray-code
    order so each step flips one point and updates the cut incrementally."""
    n = dist.shape[0]
    if n <= 1:
        return 0.0
    if n > EXACT_CAP:
        raise ValueError(f"exact solver capped at {EXACT_CAP} points")
    row_sums = dist.sum(axis=1)
    in_s = np.zeros(n, dtype=bool)
    # contrib[k] = total distance from k to the current side S
    contrib = np.zeros(n)
    cut = 0.0
    best = 0.0
    for step in range(1, 1 << (n - 1)):
        flip = (step & -step).bit_length() - 1
        if in_s[flip]:
            in_s[flip] = False
            contrib -= dist[flip]
            cut -= row_sums[flip] - 2.0 * contrib[flip]
        else:
            # moving flip into S: gains edges to outside, loses edges into S
            cut += row_sums[flip] - 2.0 * contrib[flip]
            contrib += dist[flip]
            in_s[flip] = True
        if cut > best:
            best = cut
    return best


def max_cut_exact(points, norm_p: float = 2.0) -> float:
    """Exact Max-Cut of a point set, or of a point-weighted sample multiset
    (WeightedSample entries use the weight-rescaled distance)."""
    pts = list(points)
    if pts and isinstance(pts[0], WeightedSample):
        coords = [s.point for s in pts]
        weights = [s.weight for s in pts]
        return max_cut_matrix(_distance_matrix(coords, norm_p, weights))
    return max_cut_matrix(_distance_matrix(pts, norm_p))


def local_search_max_cut(dist: np.ndarray, restarts: int = 20,
                         seed: int = 0) -> float:
    """1-swap local search; a non-certified fallback above the exact cap."""
    n = dist.shape[0]
    if n <= 1:
        return 0.0
    rng = random.Random(seed)
    best = 0.0
    for _ in range(restarts):
        side = np.array([rng.random() < 0.5 for _ in range(n)])
        improved = True
        while improved:
            improved = False
            for k in range(n):
                inside = dist[k][side].sum()
                outside = dist[k][~side].sum()
                # flipping k swaps its inside/outside cut contributions
                gain = (inside - outside) if side[k] else (outside - inside)
                if gain > 1e-12:
                    side[k] = not side[k]
                    improved = True
        val = dist[np.ix_(side, ~side)].sum()
        best = max(best, val)
    return best


@dataclass
class EstimateResult:
    eta: float
    status: str                      # "ok", "empty", or "failed"
    samples: PointWeightedSet
    outcomes: List[tuple]            # per finalized copy: (point or None, p*)
    exact: bool                      # solved by the exact enumerator
    n_hat: float = 0.0
    counter_words: int = 0


def estimate_max_cut(updates: Sequence[StreamUpdate], grid: GridConfig,
                     m: int, seed: int, eps: float = 0.2,
                     config: Optional[SamplerConfig] = None,
                     allow_local_search: bool = False) -> EstimateResult:
    """Run 2m importance-sampler copies over one shared shift, keep the
    first m successful outcomes as a point-weighted set with weights
    w = p*, and return Max-Cut(S) / m^2."""
    if m < 2:
        raise ValueError("m must be >= 2")
    if m > EXACT_CAP and not allow_local_search:
        raise ValueError("m above the exact-solver cap needs allow_local_search")
    cfg = config if config is not None else SamplerConfig(grid, eps=eps)
    states = sampler_init(cfg, 2 * m, seed)
    for u in updates:
        for st in states:
            st.update(u)
    outcomes = []
    samples: PointWeightedSet = []
    words = 0
    n_hat = 0.0
    for st in states:
        out, prof = st.finalize()
        words = max(words, st.counter_words())
        n_hat = max(n_hat, prof.n_hat)
        outcomes.append((out.point, out.p_star))
        if out.point is not None and len(samples) < m:
            samples.append(WeightedSample(out.point, out.p_star))
    if n_hat < 2.0:
        return EstimateResult(0.0, "empty", [], outcomes, True, n_hat, words)
    if len(samples) < m:
        return EstimateResult(0.0, "failed", samples, outcomes, True, n_hat,
                              words)
    coords = [s.point for s in samples]
    weights = [s.weight for s in samples]
    dist = _distance_matrix(coords, grid.norm_p, weights)
    if m <= EXACT_CAP:
        val = max_cut_matrix(dist)
        exact = True
    else:
        val = local_search_max_cut(dist, seed=derive(seed, 77))
        exact = False
    return EstimateResult(val / (m * m), "ok", samples, outcomes, exact,
                          n_hat, words)
