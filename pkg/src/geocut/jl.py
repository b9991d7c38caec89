"""Random projection to a lower dimension with distance-preservation and
Max-Cut-preservation verifiers.

The map is a d' x d matrix of independent standard Gaussians scaled by
1/sqrt(d'); pairwise Euclidean distances are preserved within (1 +- eps)
up to exponentially small tails, and the total pairwise distortion stays
an O(eps) fraction of the total distance, which bounds the change of
every cut value and hence of the Max-Cut.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .maxcut import max_cut_matrix


def jl_dimension(eps: float, delta: float, constant: float = 8.0) -> int:
    """Target dimension ceil(C * eps^-2 * ln(1/(eps*delta)))."""
    return math.ceil(constant * eps ** -2 * math.log(1.0 / (eps * delta)))


@dataclass(frozen=True)
class JLMap:
    target_dim: int
    source_dim: int
    seed: int

    def matrix(self) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        return rng.standard_normal((self.target_dim, self.source_dim)) \
            / math.sqrt(self.target_dim)


def jl_project(points: Sequence[Sequence[float]], target_dim: int,
               seed: int) -> List[tuple]:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise ValueError("points must form an (n, d) array")
    mat = JLMap(target_dim, pts.shape[1], seed).matrix()
    projected = pts @ mat.T
    return [tuple(row) for row in projected]


def _euclidean_matrix(points: Sequence[Sequence[float]]) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    diff = pts[:, None, :] - pts[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=2))


@dataclass
class PreservationReport:
    trials: int
    eps: float
    preserved_fraction: float        # trials with Max-Cut within (1 +- eps)
    distortion_ok_fraction: float    # trials with sum |d' - d| <= 3 eps sum d
    base_value: float
    values: List[float]


def verify_maxcut_preservation(points: Sequence[Sequence[float]], target_dim: int,
                               trials: int, eps: float, seed: int = 0) -> PreservationReport:
    """Project `trials` times and solve Max-Cut exactly on both sides."""
    pts = np.asarray(points, dtype=float)
    n = pts.shape[0]
    if n > 16:
        raise ValueError("exact verification capped at 16 points")
    base_dist = _euclidean_matrix(pts)
    base = max_cut_matrix(base_dist)
    total_dist = base_dist.sum() / 2.0
    preserved = 0
    distortion_ok = 0
    values = []
    for t in range(trials):
        proj = np.asarray(jl_project(pts, target_dim, seed * 1_000_003 + t))
        proj_dist = _euclidean_matrix(proj)
        val = max_cut_matrix(proj_dist)
        values.append(val)
        if base == 0.0:
            preserved += 1
            distortion_ok += 1
            continue
        if (1 - eps) * base <= val <= (1 + eps) * base:
            preserved += 1
        if np.abs(proj_dist - base_dist).sum() / 2.0 <= 3 * eps * total_dist:
            distortion_ok += 1
    return PreservationReport(trials, eps, preserved / trials,
                              distortion_ok / trials, base, values)
