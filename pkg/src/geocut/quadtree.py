"""Randomly shifted quadtree over [2*delta]^dim as an implicit structure.

A uniform shift in [1, delta]^dim is added to every point; the partition
grid itself stays fixed. Level 1 is the root cell of side 2*delta = 2^L;
level L+1 cells have side 1. The tree edge from a level-(i+1) cell to its
parent weighs beta_{i+1} = dim^(1/p) * 2^(L-i), the diameter scale of the
child cell.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .core import GridConfig, lp_distance, validate_point
from .hashing import derive


@dataclass(frozen=True)
class ShiftVector:
    coords: tuple  # dim integers, each in [1, delta]

    def validate(self, cfg: GridConfig) -> "ShiftVector":
        if len(self.coords) != cfg.dim:
            raise ValueError("shift dimension mismatch")
        for c in self.coords:
            if not (1 <= c <= cfg.delta):
                raise ValueError(f"shift coordinate {c} outside [1, {cfg.delta}]")
        return self


def random_shift(cfg: GridConfig, seed: int) -> ShiftVector:
    coords = tuple(derive(seed, 11, j) % cfg.delta + 1 for j in range(cfg.dim))
    return ShiftVector(coords).validate(cfg)


@dataclass(frozen=True)
class CellId:
    level: int
    coords: tuple  # cell coordinates in the level's partition of [2*delta]^dim


def edge_weight_table(cfg: GridConfig) -> list[float]:
    """beta_i = dim^(1/p) * 2^(L+1-i) for i in [0, L+1]; beta_i = 2*beta_{i+1}.

    Index L+1 is the leaf scale (side-1 cells), included so that the
    leaf-to-parent edge has a weight.
    """
    d_root = cfg.dim ** (1.0 / cfg.norm_p)
    return [d_root * (2 ** (cfg.depth + 1 - i)) for i in range(cfg.depth + 2)]


def shifted_coords(x: Sequence[int], shift: ShiftVector, cfg: GridConfig) -> tuple:
    """0-based position of the shifted point inside [0, 2*delta)."""
    return tuple(c + s - 1 for c, s in zip(x, shift.coords))


def ancestor_cell(x: Sequence[int], level: int, shift: ShiftVector,
                  cfg: GridConfig) -> CellId:
    """The level-`level` cell containing x; side 2^(L+1-level)."""
    if not (1 <= level <= cfg.depth + 1):
        raise ValueError(f"level {level} outside [1, {cfg.depth + 1}]")
    bits = cfg.depth + 1 - level
    return CellId(level, tuple(c >> bits for c in shifted_coords(x, shift, cfg)))


def lca_level(x: Sequence[int], y: Sequence[int], shift: ShiftVector,
              cfg: GridConfig) -> int:
    """Deepest level at which x and y share a cell (L+1 when x == y)."""
    sx = shifted_coords(x, shift, cfg)
    sy = shifted_coords(y, shift, cfg)
    split = max((a ^ b).bit_length() for a, b in zip(sx, sy))
    return cfg.depth + 1 - split


def tree_distance(x: Sequence[int], y: Sequence[int], shift: ShiftVector,
                  cfg: GridConfig) -> float:
    """Leaf-to-leaf distance in the shifted quadtree.

    Both leaves climb to their lowest common ancestor at level a, crossing
    edges beta_{a+1} .. beta_{L+1} once each way:
    2 * sum = 2 * dim^(1/p) * (2^(L+1-a) - 1).
    """
    a = lca_level(x, y, shift, cfg)
    return 2.0 * (cfg.dim ** (1.0 / cfg.norm_p)) * ((1 << (cfg.depth + 1 - a)) - 1)


def q_tree(x: Sequence[int], points: Sequence[Sequence[int]], shift: ShiftVector,
           cfg: GridConfig) -> float:
    """Total tree distance from x to a point set, computed per level from
    ancestor-cell occupancies: 2 * sum_{i=1}^{L+1} beta_i * (n - |X(anc_i(x))|).

    Equals sum_y tree_distance(x, y) exactly. The virtual super-root
    (level 0) holds all points, so its term vanishes and the sum may start
    at level 1; the leaf level contributes beta_{L+1} * (n - 1).
    """
    validate_point(x, cfg)
    betas = edge_weight_table(cfg)
    n = len(points)
    shifted = [shifted_coords(y, shift, cfg) for y in points]
    sx = shifted_coords(x, shift, cfg)
    total = 0.0
    for level in range(1, cfg.depth + 2):
        bits = cfg.depth + 1 - level
        cx = tuple(c >> bits for c in sx)
        inside = sum(1 for sy in shifted
                     if all((c >> bits) == cc for c, cc in zip(sy, cx)))
        total += betas[level] * (n - inside)
    return 2.0 * total


@dataclass(frozen=True)
class DistortionStats:
    mean_ratio: float       # mean over shifts and pairs of dist_T / dist
    max_ratio: float
    success_fraction: float  # shifts with Q_T <= C * dim * log2(delta) * Q
    trials: int


def distortion_stats(points: Sequence[Sequence[int]], cfg: GridConfig,
                     trials: int, seed: int = 0, c_factor: float = 8.0) -> DistortionStats:
    """Monte Carlo over random shifts: per-pair tree/metric distance ratios
    and how often the total tree weight stays within C * dim * log2(delta)
    of the metric total."""
    pts = [validate_point(p, cfg) for p in points]
    if len(pts) < 2:
        raise ValueError("need at least 2 points")
    pairs = [(i, j) for i in range(len(pts)) for j in range(i + 1, len(pts))]
    dists = {(i, j): lp_distance(pts[i], pts[j], cfg.norm_p) for i, j in pairs}
    budget = c_factor * cfg.dim * max(cfg.log2_delta, 1)
    ratio_sum = 0.0
    ratio_count = 0
    max_ratio = 0.0
    successes = 0
    for t in range(trials):
        shift = random_shift(cfg, derive(seed, 13, t))
        q_sum = 0.0
        qt_sum = 0.0
        for (i, j) in pairs:
            d = dists[(i, j)]
            dt = tree_distance(pts[i], pts[j], shift, cfg)
            q_sum += d
            qt_sum += dt
            if d > 0:
                r = dt / d
                ratio_sum += r
                ratio_count += 1
                if r > max_ratio:
                    max_ratio = r
        if q_sum == 0 or qt_sum <= budget * q_sum:
            successes += 1
    return DistortionStats(ratio_sum / max(ratio_count, 1), max_ratio,
                           successes / trials, trials)


def pack_cell(cell: CellId, cfg: GridConfig) -> int:
    """Injective integer id for a cell, usable as a partition part id."""
    side_bits = cfg.depth + 1  # coordinates fit in depth+1 bits at any level
    packed = cell.level
    for c in cell.coords:
        packed = (packed << side_bits) | c
    return packed
