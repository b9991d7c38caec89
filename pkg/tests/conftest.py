import random

from geocut.core import GridConfig


def distinct_points(rng: random.Random, n: int, cfg: GridConfig) -> list:
    """n distinct points drawn uniformly from the grid."""
    if n > cfg.domain_size:
        raise ValueError("not enough grid points")
    out = set()
    while len(out) < n:
        out.add(tuple(rng.randrange(1, cfg.delta + 1) for _ in range(cfg.dim)))
    return sorted(out)
