"""Mergeable turnstile linear sketches: support-size estimation and
uniform support sampling.

Both sketches are linear in the frequency vector, so two states built under
the same seed add coordinate-wise ("merge"). The scalar classes store
counters sparsely; SamplerBank holds many independent samplers in dense
numpy arrays with bit-identical hash math, which the streaming samplers
need for throughput.

Sampler recovery: geometric subsampling assigns each index a level
(Pr[level >= l] = 2^-l); each level keeps a row of buckets carrying
(count, index-weighted sum, fingerprint sum). A bucket is verified
1-sparse when its weighted sum factors through its count and the
fingerprint of the implied index reproduces the stored sum. The query
takes the deepest level whose buckets are all empty or verified, and
returns the recovered index minimizing an independent rank hash; the
recovered set {i : level(i) >= l*} is a symmetric function of the level
hashes, so conditioned on success the output is exactly uniform.
"""
from __future__ import annotations

import math
import struct
from typing import Optional, Sequence

import numpy as np

from .hashing import (
    FINGERPRINT_MOD,
    GOLDEN,
    MASK64,
    derive,
    item_hash,
    np_derive,
    np_splitmix64,
    splitmix64,
    trailing_zeros64,
)

_BANK_DOMAIN_CAP = 1 << 52  # bank index sums must stay exact in int64


def _num_levels(domain_size: int) -> int:
    return max(domain_size, 2).bit_length()


def sampler_buckets(delta: float) -> int:
    return 8 + 4 * max(1, math.ceil(math.log2(1.0 / delta)))


def estimator_buckets(eps: float) -> int:
    return math.ceil(9.0 / (eps * eps))


def estimator_reps(delta: float) -> int:
    return max(3, math.ceil(math.log2(1.0 / delta)))


def _sub_seeds(seed: int, copy: int, levels: int):
    """Derived seeds for one sketch copy: level hash, rank hash,
    fingerprint, and one bucket hash per level."""
    lvl = derive(seed, 0, copy)
    rank = derive(seed, 1, copy)
    fp = derive(seed, 2, copy)
    buckets = [derive(seed, 3, copy, lev) for lev in range(levels)]
    return lvl, rank, fp, buckets


def _fingerprint(fp_seed: int, i: int) -> int:
    return item_hash(fp_seed, i) % (FINGERPRINT_MOD - 1) + 1


def _level_of(lvl_seed: int, i: int, levels: int) -> int:
    return min(trailing_zeros64(item_hash(lvl_seed, i)), levels - 1)


def np_keyed_hash(seeds, items):
    """Vectorized item_hash; seeds and items broadcast as uint64."""
    if np.ndim(items) == 0:
        mixed = np.uint64((int(items) * GOLDEN) & MASK64)
    else:
        mixed = np.asarray(items, dtype=np.uint64) * np.uint64(GOLDEN)
    x = np.asarray(seeds, dtype=np.uint64) ^ mixed
    if x.ndim == 0:
        return np.uint64(splitmix64(int(x)))
    return np_splitmix64(x)


def decode_sampler_cells(cells: np.ndarray, lvl_seed: int, rank_seed: int,
                         fp_seed: int, domain_size: int) -> Optional[int]:
    """Recover a uniform support index from a (levels, K, 3) cell array,
    or None when no level is verifiably clean and nonempty."""
    levels = cells.shape[0]
    c = cells[:, :, 0]
    ix = cells[:, :, 1]
    fp = cells[:, :, 2]
    nonzero = (c != 0) | (ix != 0) | (fp != 0)
    if not nonzero.any():
        return None
    positive = c > 0
    safe_c = np.where(positive, c, 1)
    cand = ix // safe_c
    ok = positive & (ix % safe_c == 0) & (cand >= 0) & (cand < domain_size)
    if ok.any():
        cand_ok = cand[ok]
        f = np_keyed_hash(np.uint64(fp_seed), cand_ok) % np.uint64(FINGERPRINT_MOD - 1) + np.uint64(1)
        ok_vals = fp[ok] == c[ok] * f.astype(np.int64)
        # the implied index must also subsample to at least this level
        lev_idx = np.nonzero(ok)[0]
        hv = np_keyed_hash(np.uint64(lvl_seed), cand_ok)
        low = hv & (np.uint64(0) - hv)
        tz = np.full(cand_ok.shape, levels - 1, dtype=np.int64)
        nz = hv != 0
        tz[nz] = np.minimum(
            np.log2(low[nz].astype(np.float64)).astype(np.int64), levels - 1)
        ok_vals &= tz >= lev_idx
        verified = np.zeros_like(ok)
        verified[ok] = ok_vals
    else:
        verified = np.zeros_like(ok)
    dirty = nonzero & ~verified
    good_level = ~dirty.any(axis=1) & verified.any(axis=1)
    if not good_level.any():
        return None
    lev = levels - 1 - int(np.argmax(good_level[::-1]))
    items = np.unique(cand[lev][verified[lev]])
    ranks = np_keyed_hash(np.uint64(rank_seed), items)
    return int(items[int(np.argmin(ranks))])


def estimate_from_occupancy(occupancy: np.ndarray, buckets: int) -> float:
    """Median over repetitions of the occupancy-inverted support size.

    occupancy has shape (reps, levels); each repetition uses the
    shallowest level with load factor <= 0.7 and inverts the expected
    fraction of hit buckets: t = 2^level * (-K ln(1 - V/K)).
    """
    reps, levels = occupancy.shape
    estimates = []
    for r in range(reps):
        est = 0.0
        for lev in range(levels):
            v = occupancy[r, lev]
            if v <= 0.7 * buckets:
                if v > 0:
                    est = (2.0 ** lev) * (-buckets * math.log1p(-v / buckets))
                break
        else:
            est = float((2.0 ** (levels - 1)) * buckets)
        estimates.append(est)
    return float(np.median(estimates))


class L0Estimator:
    """(1 +- eps) support-size estimator for a turnstile stream, failure
    probability delta per query; copies independent queries available."""

    def __init__(self, domain_size: int, eps: float, delta: float, seed: int,
                 copies: int = 1, max_multiplicity: int = 1):
        if domain_size < 1 or copies < 1:
            raise ValueError("domain_size and copies must be >= 1")
        if not (0 < eps < 1) or not (0 < delta < 1):
            raise ValueError("eps and delta must lie in (0, 1)")
        self.domain_size = domain_size
        self.eps = eps
        self.delta = delta
        self.seed = seed & MASK64
        self.copies = copies
        self.max_multiplicity = max_multiplicity
        self.buckets = estimator_buckets(eps)
        self.reps = estimator_reps(delta)
        self.levels = _num_levels(domain_size)
        self._queries_used = 0
        # per copy: level seed shared across reps; bucket/fp seeds per rep
        self._lvl = [derive(self.seed, 0, c) for c in range(copies)]
        self._fp = [[derive(self.seed, 2, c, r) for r in range(self.reps)]
                    for c in range(copies)]
        self._bkt = [[[derive(self.seed, 3, c, r, lev) for lev in range(self.levels)]
                      for r in range(self.reps)] for c in range(copies)]
        # sparse counters: {(copy, rep, level, bucket): fingerprint sum}
        self.cells: dict[tuple, int] = {}

    def update(self, i: int, delta: int) -> "L0Estimator":
        if i < 0 or i >= self.domain_size:
            raise ValueError(f"index {i} outside domain [0, {self.domain_size})")
        cells = self.cells
        for c in range(self.copies):
            top = _level_of(self._lvl[c], i, self.levels)
            for r in range(self.reps):
                f = delta * _fingerprint(self._fp[c][r], i)
                bseeds = self._bkt[c][r]
                for lev in range(top + 1):
                    b = item_hash(bseeds[lev], i) % self.buckets
                    key = (c, r, lev, b)
                    v = cells.get(key, 0) + f
                    if v:
                        cells[key] = v
                    else:
                        cells.pop(key, None)
        return self

    def query(self, copy: int | None = None) -> float:
        if copy is None:
            copy = self._queries_used % self.copies
            self._queries_used += 1
        occ = np.zeros((self.reps, self.levels), dtype=np.int64)
        for (c, r, lev, _b), v in self.cells.items():
            if c == copy and v:
                occ[r, lev] += 1
        return estimate_from_occupancy(occ, self.buckets)

    def merge(self, other: "L0Estimator") -> "L0Estimator":
        _check_mergeable(self, other, ("domain_size", "eps", "delta", "seed",
                                       "copies"))
        out = L0Estimator(self.domain_size, self.eps, self.delta, self.seed,
                          self.copies, self.max_multiplicity)
        out.cells = dict(self.cells)
        for k, v in other.cells.items():
            s = out.cells.get(k, 0) + v
            if s:
                out.cells[k] = s
            else:
                out.cells.pop(k, None)
        return out

    def counter_words(self) -> int:
        return len(self.cells)

    _MAGIC = b"GCE1"

    def to_bytes(self) -> bytes:
        head = struct.pack("<4sQddQQQ", self._MAGIC, self.domain_size,
                          self.eps, self.delta, self.seed, self.copies,
                          self.max_multiplicity)
        body = [struct.pack("<Q", len(self.cells))]
        for key in sorted(self.cells):
            body.append(struct.pack("<4Iq", *key, self.cells[key]))
        return head + b"".join(body)

    @classmethod
    def from_bytes(cls, blob: bytes) -> "L0Estimator":
        magic, n, eps, dlt, seed, copies, m = struct.unpack_from("<4sQddQQQ", blob)
        if magic != cls._MAGIC:
            raise ValueError("bad estimator blob")
        off = struct.calcsize("<4sQddQQQ")
        (count,) = struct.unpack_from("<Q", blob, off)
        off += 8
        out = cls(n, eps, dlt, seed, copies, m)
        for _ in range(count):
            c, r, lev, b, v = struct.unpack_from("<4Iq", blob, off)
            off += struct.calcsize("<4Iq")
            out.cells[(c, r, lev, b)] = v
        return out


class L0Sampler:
    """Uniform sampler over the support of a turnstile stream; each query
    consumes one independent copy and fails (None) with probability <= delta."""

    def __init__(self, domain_size: int, delta: float, seed: int,
                 copies: int = 1, max_multiplicity: int = 1):
        if domain_size < 1 or copies < 1:
            raise ValueError("domain_size and copies must be >= 1")
        if not (0 < delta < 1):
            raise ValueError("delta must lie in (0, 1)")
        self.domain_size = domain_size
        self.delta = delta
        self.seed = seed & MASK64
        self.copies = copies
        self.max_multiplicity = max_multiplicity
        self.buckets = sampler_buckets(delta)
        self.levels = _num_levels(domain_size)
        self._queries_used = 0
        self._seeds = [_sub_seeds(self.seed, c, self.levels) for c in range(copies)]
        # sparse cells: {(copy, level, bucket): [count, index sum, fp sum]}
        self.cells: dict[tuple, list] = {}

    def update(self, i: int, delta: int) -> "L0Sampler":
        if i < 0 or i >= self.domain_size:
            raise ValueError(f"index {i} outside domain [0, {self.domain_size})")
        cells = self.cells
        for c in range(self.copies):
            lvl_seed, _rank, fp_seed, bseeds = self._seeds[c]
            top = _level_of(lvl_seed, i, self.levels)
            f = delta * _fingerprint(fp_seed, i)
            di = delta * i
            for lev in range(top + 1):
                b = item_hash(bseeds[lev], i) % self.buckets
                key = (c, lev, b)
                cell = cells.get(key)
                if cell is None:
                    cells[key] = [delta, di, f]
                else:
                    cell[0] += delta
                    cell[1] += di
                    cell[2] += f
                    if cell[0] == 0 and cell[1] == 0 and cell[2] == 0:
                        del cells[key]
        return self

    def _dense(self, copy: int) -> np.ndarray:
        arr = np.zeros((self.levels, self.buckets, 3), dtype=object)
        for (c, lev, b), cell in self.cells.items():
            if c == copy:
                arr[lev, b, 0] = cell[0]
                arr[lev, b, 1] = cell[1]
                arr[lev, b, 2] = cell[2]
        return arr.astype(np.int64) if self.domain_size <= _BANK_DOMAIN_CAP \
            else arr

    def query(self, copy: int | None = None) -> Optional[int]:
        if copy is None:
            copy = self._queries_used % self.copies
            self._queries_used += 1
        lvl_seed, rank_seed, fp_seed, _ = self._seeds[copy]
        if self.domain_size > _BANK_DOMAIN_CAP:
            return self._query_bigint(copy)
        return decode_sampler_cells(self._dense(copy), lvl_seed, rank_seed,
                                    fp_seed, self.domain_size)

    def _query_bigint(self, copy: int) -> Optional[int]:
        # exact-integer fallback for domains too wide for int64 index sums
        lvl_seed, rank_seed, fp_seed, _ = self._seeds[copy]
        by_level: dict[int, list] = {}
        for (c, lev, b), cell in self.cells.items():
            if c == copy and any(cell):
                by_level.setdefault(lev, []).append(cell)
        if not by_level:
            return None
        for lev in range(self.levels - 1, -1, -1):
            cells = by_level.get(lev)
            if not cells:
                continue
            recovered = []
            clean = True
            for cnt, ixsum, fpsum in cells:
                if cnt <= 0 or ixsum % cnt != 0:
                    clean = False
                    break
                cand = ixsum // cnt
                if not (0 <= cand < self.domain_size) or \
                        fpsum != cnt * _fingerprint(fp_seed, cand) or \
                        _level_of(lvl_seed, cand, self.levels) < lev:
                    clean = False
                    break
                recovered.append(cand)
            if clean and recovered:
                return min(set(recovered), key=lambda i: item_hash(rank_seed, i))
        return None

    def merge(self, other: "L0Sampler") -> "L0Sampler":
        _check_mergeable(self, other, ("domain_size", "delta", "seed", "copies"))
        out = L0Sampler(self.domain_size, self.delta, self.seed, self.copies,
                        self.max_multiplicity)
        out.cells = {k: list(v) for k, v in self.cells.items()}
        for k, v in other.cells.items():
            cell = out.cells.get(k)
            if cell is None:
                out.cells[k] = list(v)
            else:
                for j in range(3):
                    cell[j] += v[j]
                if cell[0] == 0 and cell[1] == 0 and cell[2] == 0:
                    del out.cells[k]
        return out

    def counter_words(self) -> int:
        return 3 * len(self.cells)

    _MAGIC = b"GCS1"

    def to_bytes(self) -> bytes:
        head = struct.pack("<4sQdQQQ", self._MAGIC, self.domain_size,
                          self.delta, self.seed, self.copies,
                          self.max_multiplicity)
        body = [struct.pack("<Q", len(self.cells))]
        for key in sorted(self.cells):
            c, lev, b = key
            cnt, ix, fp = self.cells[key]
            body.append(struct.pack("<3I3q", c, lev, b, cnt, ix, fp))
        return head + b"".join(body)

    @classmethod
    def from_bytes(cls, blob: bytes) -> "L0Sampler":
        magic, n, dlt, seed, copies, m = struct.unpack_from("<4sQdQQQ", blob)
        if magic != cls._MAGIC:
            raise ValueError("bad sampler blob")
        off = struct.calcsize("<4sQdQQQ")
        (count,) = struct.unpack_from("<Q", blob, off)
        off += 8
        out = cls(n, dlt, seed, copies, m)
        for _ in range(count):
            c, lev, b, cnt, ix, fp = struct.unpack_from("<3I3q", blob, off)
            off += struct.calcsize("<3I3q")
            out.cells[(c, lev, b)] = [cnt, ix, fp]
        return out


def _check_mergeable(a, b, fields: Sequence[str]):
    if type(a) is not type(b):
        raise ValueError("cannot merge sketches of different types")
    for f in fields:
        if getattr(a, f) != getattr(b, f):
            raise ValueError(f"merge requires matching {f}")


def sketch_merge(a, b):
    """Additive composition of two same-seed, same-parameter sketches."""
    return a.merge(b)


class SamplerBank:
    """Many independent uniform support samplers held in one dense array.

    Each bank member gets its own derived seed; hash values are computed
    for all members at once via numpy uint64 arithmetic, matching the
    scalar L0Sampler bit for bit (member j of a bank seeded with s behaves
    exactly like L0Sampler(seed=derive(s, 7, j))).
    """

    def __init__(self, count: int, domain_size: int, delta: float, seed: int):
        if domain_size > _BANK_DOMAIN_CAP:
            raise ValueError("bank domains must fit exact int64 index sums")
        if count < 1:
            raise ValueError("count must be >= 1")
        self.count = count
        self.domain_size = domain_size
        self.delta = delta
        self.seed = seed & MASK64
        self.buckets = sampler_buckets(delta)
        self.levels = _num_levels(domain_size)
        # member j's seed chain matches L0Sampler(seed=derive(seed, 7, j))
        members = np_derive(np.uint64(derive(self.seed, 7)),
                            np.arange(count, dtype=np.uint64))
        levs = np.arange(self.levels, dtype=np.uint64)
        self._lvl = np_derive(members, 0, 0)
        self._rank = np_derive(members, 1, 0)
        self._fp = np_derive(members, 2, 0)
        self._bkt = np_derive(members[:, None], 3, 0, levs[None, :])
        self.state = np.zeros((count, self.levels, self.buckets, 3), dtype=np.int64)

    def member_seed(self, j: int) -> int:
        return derive(self.seed, 7, j)

    def update(self, i: int, delta: int):
        hv = np_keyed_hash(self._lvl, i)
        low = hv & (np.uint64(0) - hv)
        lv = np.full(self.count, self.levels - 1, dtype=np.int64)
        nz = hv != 0
        lv[nz] = np.minimum(np.log2(low[nz].astype(np.float64)).astype(np.int64),
                            self.levels - 1)
        f = (np_keyed_hash(self._fp, i) % np.uint64(FINGERPRINT_MOD - 1)
             ).astype(np.int64) + 1
        di = delta * i
        # one scatter over the (member, level <= lv[member]) pairs; the
        # (member, level, bucket) triples are distinct, so fancy += is safe
        touched = lv + 1
        total = int(touched.sum())
        members = np.repeat(np.arange(self.count), touched)
        levels = np.arange(total) - np.repeat(np.cumsum(touched) - touched, touched)
        b = (np_keyed_hash(self._bkt[members, levels], i)
             % np.uint64(self.buckets)).astype(np.int64)
        self.state[members, levels, b, 0] += delta
        self.state[members, levels, b, 1] += di
        self.state[members, levels, b, 2] += delta * f[members]

    def query_all(self) -> list:
        """Decode every member at once; same recovery rule as
        decode_sampler_cells, vectorized over members."""
        st = self.state
        c = st[:, :, :, 0]
        ix = st[:, :, :, 1]
        fp = st[:, :, :, 2]
        nonzero = (c != 0) | (ix != 0) | (fp != 0)
        pos = c > 0
        safe = np.where(pos, c, 1)
        cand = ix // safe
        ok = pos & (ix % safe == 0) & (cand >= 0) & (cand < self.domain_size)
        m_idx, l_idx, _b_idx = np.nonzero(ok)
        cands = cand[ok]
        f = (np_keyed_hash(self._fp[m_idx], cands)
             % np.uint64(FINGERPRINT_MOD - 1)).astype(np.int64) + 1
        match = fp[ok] == c[ok] * f
        hv = np_keyed_hash(self._lvl[m_idx], cands)
        low = hv & (np.uint64(0) - hv)
        tz = np.full(cands.shape, self.levels - 1, dtype=np.int64)
        nz = hv != 0
        tz[nz] = np.minimum(np.log2(low[nz].astype(np.float64)).astype(np.int64),
                            self.levels - 1)
        match &= tz >= l_idx
        verified = np.zeros(ok.shape, dtype=bool)
        verified[ok] = match
        good = ~(nonzero & ~verified).any(axis=2) & verified.any(axis=2)
        valid = good.any(axis=1)
        lev = self.levels - 1 - np.argmax(good[:, ::-1], axis=1)
        rows = np.arange(self.count)
        cand_at = cand[rows, lev]
        ver_at = verified[rows, lev]
        ranks = np_keyed_hash(self._rank[:, None], cand_at)
        ranks = np.where(ver_at, ranks, np.uint64(MASK64))
        best = np.argmin(ranks, axis=1)
        items = cand_at[rows, best]
        return [int(items[j]) if valid[j] else None for j in range(self.count)]

    def counter_words(self) -> int:
        return int(self.state.size)
