"""Domain types, point/index encoding, and the dynamic-stream data model.

Points live on the integer grid [1, delta]^dim and are streamed as signed
updates (+1 insert, -1 delete) whose net frequencies stay in {0, 1}.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence


@dataclass(frozen=True)
class GridConfig:
    """The grid [delta]^dim with an lp norm and the derived tree depth.

    delta must be a power of two. depth = 1 + log2(delta): a level-1 root
    cell has side 2*delta and level-(depth+1) cells have side 1.
    """

    delta: int
    dim: int
    norm_p: float = 2.0

    def __post_init__(self):
        if self.delta < 1 or (self.delta & (self.delta - 1)) != 0:
            raise ValueError("delta must be a positive power of two")
        if self.dim < 1:
            raise ValueError("dim must be a positive integer")
        if self.norm_p < 1:
            raise ValueError("norm_p must be >= 1")
        # index arithmetic stays exact only below 128 bits
        if self.dim * self.log2_delta > 127:
            raise ValueError("dim * log2(delta) must be <= 127")

    @property
    def log2_delta(self) -> int:
        return self.delta.bit_length() - 1

    @property
    def depth(self) -> int:
        return 1 + self.log2_delta

    @property
    def domain_size(self) -> int:
        return self.delta ** self.dim


Point = tuple  # d integers, each in [1, delta]


def validate_point(p: Sequence[int], cfg: GridConfig) -> tuple:
    pt = tuple(p)
    if len(pt) != cfg.dim:
        raise ValueError(f"point has {len(pt)} coordinates, expected {cfg.dim}")
    for c in pt:
        if not isinstance(c, int) or c < 1 or c > cfg.delta:
            raise ValueError(f"coordinate {c!r} outside [1, {cfg.delta}]")
    return pt


@dataclass(frozen=True)
class StreamUpdate:
    point: tuple
    sign: int  # +1 insert, -1 delete

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")


def encode_point(p: Sequence[int], cfg: GridConfig) -> int:
    """Bijective row-major index in [0, delta^dim), first coordinate most
    significant. Rejects out-of-range coordinates."""
    pt = validate_point(p, cfg)
    idx = 0
    for c in pt:
        idx = idx * cfg.delta + (c - 1)
    return idx


def decode_point(idx: int, cfg: GridConfig) -> tuple:
    if idx < 0 or idx >= cfg.domain_size:
        raise ValueError(f"index {idx} outside [0, {cfg.domain_size})")
    coords = []
    for _ in range(cfg.dim):
        coords.append(idx % cfg.delta + 1)
        idx //= cfg.delta
    return tuple(reversed(coords))


def lp_distance(a: Sequence[int], b: Sequence[int], norm_p: float) -> float:
    """(sum_j |a_j - b_j|^p)^(1/p). Symmetric, zero iff a == b."""
    if len(a) != len(b):
        raise ValueError("dimension mismatch")
    if norm_p == 2.0:
        s = 0.0
        for x, y in zip(a, b):
            d = x - y
            s += d * d
        return s ** 0.5
    if norm_p == 1.0:
        return float(sum(abs(x - y) for x, y in zip(a, b)))
    s = 0.0
    for x, y in zip(a, b):
        s += abs(x - y) ** norm_p
    return s ** (1.0 / norm_p)


# --- stream text format -------------------------------------------------
# One update per line: "+ x1 x2 ... xd" or "- x1 x2 ... xd".
# Lines starting with "#" are comments; blank lines are skipped.

def parse_update_line(line: str) -> StreamUpdate | None:
    stripped = line.strip()
    if not stripped or stripped.startswith("#"):
        return None
    parts = stripped.split()
    if parts[0] == "+":
        sign = 1
    elif parts[0] == "-":
        sign = -1
    else:
        raise ValueError(f"update line must start with + or -: {line!r}")
    try:
        coords = tuple(int(t) for t in parts[1:])
    except ValueError:
        raise ValueError(f"non-integer coordinate in line: {line!r}") from None
    if not coords:
        raise ValueError(f"update line has no coordinates: {line!r}")
    return StreamUpdate(coords, sign)


def read_stream(lines: Iterable[str], cfg: GridConfig | None = None) -> list[StreamUpdate]:
    """Parse a stream; if cfg is given, validate coordinates and the
    net-frequency-in-{0,1} invariant."""
    updates = []
    net: dict[tuple, int] = {}
    for line in lines:
        u = parse_update_line(line)
        if u is None:
            continue
        if cfg is not None:
            validate_point(u.point, cfg)
            f = net.get(u.point, 0) + u.sign
            if f not in (0, 1):
                raise ValueError(f"net frequency of {u.point} leaves {{0,1}}")
            net[u.point] = f
        updates.append(u)
    return updates


def write_stream(updates: Iterable[StreamUpdate]) -> str:
    out = []
    for u in updates:
        sign = "+" if u.sign > 0 else "-"
        out.append(sign + " " + " ".join(str(c) for c in u.point))
    return "\n".join(out) + ("\n" if out else "")


def stream_from_points(points: Iterable[Sequence[int]]) -> list[StreamUpdate]:
    return [StreamUpdate(tuple(p), 1) for p in points]


def apply_stream(updates: Iterable[StreamUpdate]) -> set:
    """The point set defined by a stream (net frequencies must be 0/1)."""
    net: dict[tuple, int] = {}
    for u in updates:
        f = net.get(u.point, 0) + u.sign
        if f not in (0, 1):
            raise ValueError(f"net frequency of {u.point} leaves {{0,1}}")
        net[u.point] = f
    return {p for p, f in net.items() if f == 1}
