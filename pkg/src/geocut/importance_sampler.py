"""One-pass importance sampler for points of a dynamic geometric stream.

Each sampler copy maintains, over one shared random quadtree shift:
  - a support-size estimator for n = |X|,
  - a pool of independent uniform point samplers (profile pool) used to
    locate, per tree level, the fullest cell and its occupancy fraction,
  - a separate fresh draw pool used only for the conditional uniform draw
    from the critical cell,
  - per tree level 2..L, a light sampler whose partition is the level's
    cell id, giving a uniform sample of X minus that level's heavy cell
    together with a size estimate of that complement.

Finalization picks the critical level k (deepest level whose fullest cell
kept at least a tau fraction of the pool samples), forms the level scores
q~_i and band weights r_i, draws a band, draws a uniform point from the
band's extended set, and reports the point together with its exact
two-stage sampling probability computed from the same estimates.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np
from typing import List, Optional, Sequence, Tuple

from .core import GridConfig, StreamUpdate, decode_point, encode_point
from .hashing import MASK64, derive
from .light_sampler import LightSampler
from .quadtree import ShiftVector, random_shift, shifted_coords
from .sketches import L0Estimator, SamplerBank


@dataclass(frozen=True)
class SamplerConfig:
    grid: GridConfig
    eps: float = 0.2
    pool_multiplier: int = 200       # profile pool = multiplier * ceil(dim * log2(2 delta))
    draw_pool: int = 48
    light_eps: float = 0.25
    light_delta: float = 0.2
    sigma: float = 0.05
    tau: float = 0.6
    sigma_minus: float = 0.55
    sigma_plus: float = 0.65
    est_eps: float = 0.1
    est_delta: float = 0.05
    pool_delta: float = 0.05

    def __post_init__(self):
        if not (0.5 < self.sigma_minus <= self.sigma_plus <= 1.0):
            raise ValueError("need 0.5 < sigma_minus <= sigma_plus <= 1")
        if not (self.sigma_minus < self.tau < self.sigma_plus):
            raise ValueError("tau must lie strictly between sigma_minus and sigma_plus")
        if self.pool_multiplier < 1 or self.draw_pool < 1:
            raise ValueError("pool sizes must be positive")

    @property
    def pool_size(self) -> int:
        bits = math.ceil(self.grid.dim * math.log2(2 * self.grid.delta))
        return self.pool_multiplier * bits


@dataclass(frozen=True)
class SampleOutcome:
    point: Optional[tuple]   # z*, or None on failure
    p_star: float            # estimated Pr[z* = point]; > 0 whenever point is set


@dataclass
class LevelProfile:
    """What one finalization saw: per-level majority cells and fractions
    from the profile pool, the critical level, and the band statistics."""

    n_hat: float
    sample_points: List[Optional[tuple]]            # raw profile pool outputs
    fractions: List[float] = field(default_factory=list)       # index i-1: level i
    majority_cells: List[Optional[tuple]] = field(default_factory=list)
    k: int = 0
    degenerate: bool = False
    heavy_path: List[tuple] = field(default_factory=list)      # h_1..h_k coords
    heavy_sizes: List[float] = field(default_factory=list)     # |X(h_j)| estimates
    q_tilde: List[float] = field(default_factory=list)
    ext_sizes: List[float] = field(default_factory=list)       # |X^ext_i| estimates
    r: List[float] = field(default_factory=list)
    light_verified: List[bool] = field(default_factory=list)   # levels 2..k


def find_critical_level(level_cells: Sequence[Tuple[float, Optional[tuple]]],
                        tau: float = 0.6) -> Tuple[int, List[tuple], bool]:
    """From per-level (majority fraction, majority cell) pairs for levels
    1..L, the largest level whose fraction reaches tau, with the heavy
    cells h_1..h_k materialized as the critical cell's ancestor chain
    (each ancestor of a majority cell is itself a majority cell).

    Returns (k, heavy path, degenerate flag); degenerate only when no
    level qualifies, which cannot happen with nonempty samples since the
    root keeps fraction 1."""
    k = 0
    heavy_k: Optional[tuple] = None
    for level in range(1, len(level_cells) + 1):
        frac, cell = level_cells[level - 1]
        if cell is not None and frac >= tau:
            k, heavy_k = level, cell
    if heavy_k is None:
        return 1, [], True
    path = [tuple(c >> (k - j) for c in heavy_k) for j in range(1, k)] + [heavy_k]
    return k, path, False


def compute_q_tilde(n: float, heavy_sizes: Sequence[float], betas: Sequence[float],
                    i: int) -> float:
    """Level score q~_i = n * beta_i + sum_{j <= i} beta_j * (n - |X(h_j)|)."""
    return n * betas[i] + sum(betas[j] * max(n - heavy_sizes[j - 1], 0.0)
                              for j in range(1, i + 1))


class SamplerState:
    def __init__(self, cfg: SamplerConfig, shift: ShiftVector, seed: int):
        self.cfg = cfg
        self.grid = cfg.grid
        self.shift = shift
        self.seed = seed & MASK64
        n_dom = self.grid.domain_size
        self.pool = SamplerBank(cfg.pool_size + cfg.draw_pool, n_dom,
                                cfg.pool_delta, derive(self.seed, 1))
        self.n_est = L0Estimator(n_dom, cfg.est_eps, cfg.est_delta,
                                 derive(self.seed, 2))
        depth = self.grid.depth
        self.lights = {
            lev: LightSampler(n_dom, self._partition_fn(lev), cfg.light_eps,
                              cfg.light_delta, cfg.sigma, derive(self.seed, 3, lev))
            for lev in range(2, depth + 1)
        }
        self._cell_cache: dict[int, tuple] = {}

    def _partition_fn(self, level: int):
        grid, shift = self.grid, self.shift

        def part(i: int) -> int:
            coords = shifted_coords(decode_point(i, grid), shift, grid)
            return _pack(tuple(c >> (grid.depth + 1 - level) for c in coords),
                         grid)
        return part

    def _shifted(self, i: int) -> tuple:
        cached = self._cell_cache.get(i)
        if cached is None:
            cached = shifted_coords(decode_point(i, self.grid), self.shift,
                                    self.grid)
            self._cell_cache[i] = cached
        return cached

    def update(self, u: StreamUpdate) -> "SamplerState":
        i = encode_point(u.point, self.grid)
        self.pool.update(i, u.sign)
        self.n_est.update(i, u.sign)
        sc = self._shifted(i)
        depth = self.grid.depth
        for lev, light in self.lights.items():
            cell = tuple(c >> (depth + 1 - lev) for c in sc)
            light.update(i, u.sign, part=_pack(cell, self.grid))
        return self

    def finalize(self) -> Tuple[SampleOutcome, LevelProfile]:
        cfg, grid = self.cfg, self.grid
        n_hat = self.n_est.query()
        outcomes = self.pool.query_all()
        profile_idx = outcomes[:cfg.pool_size]
        draw_idx = outcomes[cfg.pool_size:]
        points = [decode_point(i, grid) if i is not None else None
                  for i in profile_idx]
        prof = LevelProfile(n_hat=n_hat, sample_points=points)
        if n_hat < 2.0:
            prof.degenerate = True
            return SampleOutcome(None, 0.0), prof
        valid = [i for i in profile_idx if i is not None]
        if not valid:
            prof.degenerate = True
            return SampleOutcome(None, 0.0), prof
        depth = grid.depth
        shifted = np.array([self._shifted(i) for i in valid], dtype=np.int64)
        # pack each cell into one integer key; row-major packing keeps the
        # smallest key = lexicographically smallest cell for tie-breaking
        mults = np.array([(2 * grid.delta) ** (grid.dim - 1 - j)
                          for j in range(grid.dim)], dtype=np.int64)
        level_keys = []
        level_cells: List[Tuple[float, Optional[tuple]]] = []
        for lev in range(1, depth + 1):
            keys = (shifted >> (depth + 1 - lev)) @ mults
            level_keys.append(keys)
            vals, counts = np.unique(keys, return_counts=True)
            top = counts.max()
            best_key = int(vals[counts == top].min())
            level_cells.append((top / len(valid), _unpack(best_key, grid)))
        prof.fractions = [fc[0] for fc in level_cells]
        prof.majority_cells = [fc[1] for fc in level_cells]
        k, path, degenerate = find_critical_level(level_cells, cfg.tau)
        prof.k, prof.heavy_path, prof.degenerate = k, path, degenerate
        if degenerate:
            return SampleOutcome(None, 0.0), prof
        def cell_key(cell: tuple) -> int:
            return int(sum(c * int(m) for c, m in zip(cell, mults)))

        prof.heavy_sizes = [
            int((level_keys[j - 1] == cell_key(path[j - 1])).sum())
            / len(valid) * n_hat
            for j in range(1, k + 1)]
        d_root = grid.dim ** (1.0 / grid.norm_p)
        betas = [d_root * 2 ** (depth + 1 - i) for i in range(depth + 2)]
        prof.q_tilde = [compute_q_tilde(n_hat, prof.heavy_sizes, betas, i)
                        for i in range(1, k + 1)]
        light_results = {lev: self.lights[lev].query()
                         for lev in range(2, k + 1)}
        prof.light_verified = [light_results[lev].verified
                               for lev in range(2, k + 1)]
        ext = []
        for i in range(1, k):
            ext.append(max(light_results[i + 1].size, 0.0))
        ext.append(max(prof.heavy_sizes[k - 1], 0.0))
        prof.ext_sizes = ext
        weights = [ext[i - 1] * prof.q_tilde[i - 1] for i in range(1, k + 1)]
        total = sum(weights)
        if total <= 0:
            return SampleOutcome(None, 0.0), prof
        prof.r = [w / total for w in weights]
        rng = random.Random(derive(self.seed, 9))
        u = rng.random()
        acc = 0.0
        i_star = k
        for i in range(1, k + 1):
            acc += prof.r[i - 1]
            if u < acc:
                i_star = i
                break
        if i_star < k:
            z_idx = light_results[i_star + 1].index
        else:
            z_idx = None
            bits = depth + 1 - k
            for cand in draw_idx:
                if cand is None:
                    continue
                sc = self._shifted(cand)
                if tuple(c >> bits for c in sc) == path[k - 1]:
                    z_idx = cand
                    break
        if z_idx is None:
            return SampleOutcome(None, 0.0), prof
        z_sc = self._shifted(z_idx)
        ell = 0
        for j in range(1, k + 1):
            if tuple(c >> (depth + 1 - j) for c in z_sc) == path[j - 1]:
                ell = j
            else:
                break
        if ell == 0:
            # the drawn point contradicts the heavy path (stale estimate)
            return SampleOutcome(None, 0.0), prof
        if ell == k:
            bands = [k]
        else:
            bands = list(range(ell, k))
        p_star = 0.0
        for i in bands:
            if ext[i - 1] > 0:
                p_star += prof.r[i - 1] / ext[i - 1]
        if p_star <= 0:
            return SampleOutcome(None, 0.0), prof
        return SampleOutcome(decode_point(z_idx, grid), p_star), prof

    def counter_words(self) -> int:
        return (self.pool.counter_words() + self.n_est.counter_words()
                + sum(l.counter_words() for l in self.lights.values()))


def _unpack(key: int, grid: GridConfig) -> tuple:
    base = 2 * grid.delta
    coords = []
    for _ in range(grid.dim):
        coords.append(key % base)
        key //= base
    return tuple(reversed(coords))


def _pack(cell: tuple, grid: GridConfig) -> int:
    bits = grid.depth + 1
    packed = 1
    for c in cell:
        packed = (packed << bits) | c
    return packed


def sampler_init(cfg: SamplerConfig, copies: int, master_seed: int) -> List[SamplerState]:
    """All copies share one shift (initialization coins); everything else
    is seeded independently per copy."""
    if copies < 1:
        raise ValueError("copies must be >= 1")
    shift = random_shift(cfg.grid, derive(master_seed, 100))
    return [SamplerState(cfg, shift, derive(master_seed, 101, c))
            for c in range(copies)]


def sampler_update(state: SamplerState, u: StreamUpdate) -> SamplerState:
    return state.update(u)


def sampler_finalize(state: SamplerState) -> SampleOutcome:
    return state.finalize()[0]
