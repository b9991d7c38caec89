"""One-pass sampling from the support minus its heaviest partition class.

Given a partition P of the domain, s pairwise-independent hashes route
each part into one of two buckets. Per (hash, bucket) the state keeps a
seed-shared uniform sampler, a seed-shared support estimator, and an exact
element counter. At query time each hash discards its fuller bucket
(which contains the heavy part whenever it holds a majority), and the
surviving sub-sketches are summed across hashes into one combined sampler
and estimator whose support is, with probability >= 1 - delta, exactly
the light part: a fixed light element survives a single hash with
probability 1/2, so it is missed by all s hashes with probability 2^-s.

All sub-sketches share one seed, so cross-hash summation is plain
counter addition; the state is held in dense numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .hashing import (
    FINGERPRINT_MOD,
    MASK64,
    MERSENNE61,
    derive,
    item_hash,
    np_derive,
)
from .sketches import (
    _fingerprint,
    _level_of,
    _num_levels,
    _sub_seeds,
    decode_sampler_cells,
    estimate_from_occupancy,
    estimator_buckets,
    estimator_reps,
    np_keyed_hash,
    sampler_buckets,
)


@dataclass(frozen=True)
class LightSample:
    index: Optional[int]     # uniform element of the light part, or None
    size: float              # (1 +- eps) estimate of the light part's size
    verified: bool           # every hash saw its kept-out bucket hold >= (0.5 + sigma) of the items


class LightSampler:
    """Streaming state for light-part sampling under a fixed partition."""

    def __init__(self, domain_size: int, partition: Callable[[int], int],
                 eps: float, delta: float, sigma: float, seed: int):
        if not (0 < eps < 1) or not (0 < delta < 1) or not (0 < sigma <= 0.5):
            raise ValueError("eps, delta in (0,1); sigma in (0, 0.5]")
        self.domain_size = domain_size
        self.partition = partition
        self.eps = eps
        self.delta = delta
        self.sigma = sigma
        self.seed = seed & MASK64
        # s hashes make Pr[light element missed everywhere] <= 2^-s <= delta/N
        self.s = max(1, math.ceil(math.log2(domain_size / delta)))
        self.levels = _num_levels(domain_size)
        # sub-sketch failure budget split across the 4s summed components
        sub_delta = delta / (4 * self.s)
        self.samp_buckets = sampler_buckets(sub_delta)
        self.est_buckets = estimator_buckets(eps)
        self.reps = estimator_reps(delta)
        # one shared seed for every (hash, bucket) sub-sketch
        sub = derive(self.seed, 21)
        self._lvl, self._rank, self._fp, self._bkt = _sub_seeds(sub, 0, self.levels)
        reps_arange = np.arange(self.reps, dtype=np.uint64)
        levs_arange = np.arange(self.levels, dtype=np.uint64)
        self._est_bkt = np_derive(
            np_derive(np.uint64(sub), 4)[None], reps_arange[:, None],
            levs_arange[None, :])  # (reps, levels)
        self._est_fp = np_derive(np.uint64(sub), 5, reps_arange)
        # pairwise part hashes into {0, 1}
        t_seeds = np_derive(np.uint64(self.seed), 20,
                            np.arange(self.s, dtype=np.uint64))
        self._ha = [int(x) % (MERSENNE61 - 1) + 1
                    for x in np_derive(t_seeds, 1)]
        self._hb = [int(x) % MERSENNE61 for x in np_derive(t_seeds, 2)]
        self._part_cache: dict[int, np.ndarray] = {}
        self._t_idx = np.arange(self.s)
        self._r_idx = np.arange(self.reps)
        self._bkt_np = np.array(self._bkt, dtype=np.uint64)
        # broadcast index templates for the fused per-update scatters
        self._t2 = self._t_idx[None, :]
        self._t3 = self._t_idx[None, :, None]
        self._r3 = self._r_idx[None, None, :]
        self._lev2 = [np.arange(top)[:, None] for top in range(self.levels + 1)]
        self._lev3 = [a[:, :, None] for a in self._lev2]
        self.counts = np.zeros((self.s, 2), dtype=np.int64)
        self.samp = np.zeros((self.s, 2, self.levels, self.samp_buckets, 3),
                             dtype=np.int64)
        self.est = np.zeros((self.s, 2, self.reps, self.levels, self.est_buckets),
                            dtype=np.int64)

    def part_buckets(self, part: int) -> np.ndarray:
        """Bucket in {0,1} that each of the s hashes assigns to a part."""
        cached = self._part_cache.get(part)
        if cached is None:
            cached = np.array(
                [((a * part + b) % MERSENNE61) & 1
                 for a, b in zip(self._ha, self._hb)], dtype=np.int64)
            self._part_cache[part] = cached
        return cached

    def update(self, i: int, delta: int, part: int | None = None) -> "LightSampler":
        if part is None:
            part = self.partition(i)
        j = self.part_buckets(part)
        self.counts[self._t_idx, j] += delta
        top = _level_of(self._lvl, i, self.levels)
        f = delta * _fingerprint(self._fp, i)
        di = delta * i
        fr = delta * ((np_keyed_hash(self._est_fp, i)
                       % np.uint64(FINGERPRINT_MOD - 1)).astype(np.int64) + 1)
        cell_delta = np.array((delta, di, f), dtype=np.int64)
        # one scatter per structure covering all subsampling levels 0..top;
        # the broadcast (level, hash[, rep]) index tuples are distinct
        b = (np_keyed_hash(self._bkt_np[:top + 1], i)
             % np.uint64(self.samp_buckets)).astype(np.int64)
        eb = (np_keyed_hash(self._est_bkt[:, :top + 1], i)
              % np.uint64(self.est_buckets)).astype(np.int64)  # (reps, top+1)
        self.samp[self._t2, j[None, :], self._lev2[top + 1],
                  b[:, None]] += cell_delta
        self.est[self._t3, j[None, :, None], self._r3, self._lev3[top + 1],
                 eb.T[:, None, :]] += fr
        return self

    def _j_star(self) -> np.ndarray:
        # fuller bucket per hash; ties to bucket 0 (argmax picks the first)
        return np.argmax(self.counts, axis=1)

    def bucket_size_estimates(self) -> np.ndarray:
        """Per (hash, bucket) support-size estimates from the estimator
        sub-sketches; provided so j* selection by estimate (rather than
        by exact counter) can be exercised in tests."""
        out = np.zeros((self.s, 2))
        for t in range(self.s):
            for jj in range(2):
                occ = (self.est[t, jj] != 0).sum(axis=2)
                out[t, jj] = estimate_from_occupancy(occ, self.est_buckets)
        return out

    def query(self) -> LightSample:
        total = int(self.counts[0].sum())
        if total <= 0:
            return LightSample(None, 0.0, False)
        j_star = self._j_star()
        kept = 1 - j_star
        verified = bool(
            (self.counts[self._t_idx, j_star] >= (0.5 + self.sigma) * total).all())
        combined_samp = self.samp[self._t_idx, kept].sum(axis=0)
        combined_est = self.est[self._t_idx, kept].sum(axis=0)
        idx = decode_sampler_cells(combined_samp, self._lvl, self._rank,
                                   self._fp, self.domain_size)
        occ = (combined_est != 0).sum(axis=2)
        size = estimate_from_occupancy(occ, self.est_buckets)
        return LightSample(idx, size, verified)

    def light_support(self, items) -> list:
        """Debug hook (small domains): the exact support of the combined
        sketches, i.e. every item that at least one hash routes away from
        its fuller bucket."""
        j_star = self._j_star()
        out = []
        for i in items:
            j = self.part_buckets(self.partition(i))
            if (j != j_star).any():
                out.append(i)
        return out

    def counter_words(self) -> int:
        return int(self.counts.size + self.samp.size + self.est.size)


def light_update(st: LightSampler, i: int, delta: int) -> LightSampler:
    return st.update(i, delta)


def light_query(st: LightSampler) -> tuple:
    s = st.query()
    return s.index, s.size
