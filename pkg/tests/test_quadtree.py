import itertools
import random

import pytest

from conftest import distinct_points
from geocut import oracle
from geocut.core import GridConfig, lp_distance
from geocut.hashing import derive
from geocut.quadtree import (
    ShiftVector,
    ancestor_cell,
    distortion_stats,
    edge_weight_table,
    lca_level,
    pack_cell,
    q_tree,
    random_shift,
    shifted_coords,
    tree_distance,
)

CFG = GridConfig(16, 2)


def test_random_shift_range_and_determinism():
    for seed in range(20):
        s = random_shift(CFG, seed)
        assert all(1 <= c <= 16 for c in s.coords)
        assert s == random_shift(CFG, seed)
    assert random_shift(CFG, 0) != random_shift(CFG, 1)


def test_shift_validation():
    with pytest.raises(ValueError):
        ShiftVector((0, 1)).validate(CFG)
    with pytest.raises(ValueError):
        ShiftVector((1,)).validate(CFG)


def test_edge_weights_halve_per_level():
    cfg = GridConfig(16, 3, norm_p=1.0)
    betas = edge_weight_table(cfg)
    assert len(betas) == cfg.depth + 2
    for i in range(len(betas) - 1):
        assert betas[i] == pytest.approx(2 * betas[i + 1])
    assert betas[cfg.depth + 1] == pytest.approx(3.0)  # dim^(1/p) at leaf scale
    assert betas[1] == pytest.approx(3.0 * 2 * cfg.delta)


def test_ancestor_cells_nest():
    shift = random_shift(CFG, 3)
    for x in [(1, 1), (7, 12), (16, 16)]:
        cells = [ancestor_cell(x, lev, shift, CFG) for lev in range(1, CFG.depth + 2)]
        assert cells[0].coords == (0,) * CFG.dim
        for parent, child in zip(cells, cells[1:]):
            assert parent.coords == tuple(c >> 1 for c in child.coords)
        assert cells[-1].coords == shifted_coords(x, shift, CFG)
    with pytest.raises(ValueError):
        ancestor_cell((1, 1), 0, shift, CFG)


def test_lca_level_matches_cell_comparison():
    rng = random.Random(1)
    for t in range(50):
        shift = random_shift(CFG, derive(4, t))
        x, y = distinct_points(rng, 2, CFG)
        a = lca_level(x, y, shift, CFG)
        for lev in range(1, CFG.depth + 2):
            same = ancestor_cell(x, lev, shift, CFG) == \
                ancestor_cell(y, lev, shift, CFG)
            assert same == (lev <= a)
        assert lca_level(x, x, shift, CFG) == CFG.depth + 1


def test_tree_distance_is_a_metric_dominating_lp():
    rng = random.Random(2)
    for t in range(30):
        shift = random_shift(CFG, derive(5, t))
        pts = distinct_points(rng, 5, CFG)
        for x, y in itertools.combinations(pts, 2):
            dt = tree_distance(x, y, shift, CFG)
            assert dt == pytest.approx(tree_distance(y, x, shift, CFG))
            assert dt >= lp_distance(x, y, CFG.norm_p) - 1e-9
            assert dt == pytest.approx(
                oracle.exact_tree_distance(x, y, shift, CFG))
        for x, y, z in itertools.combinations(pts, 3):
            assert tree_distance(x, z, shift, CFG) <= \
                tree_distance(x, y, shift, CFG) + \
                tree_distance(y, z, shift, CFG) + 1e-9
        assert tree_distance(pts[0], pts[0], shift, CFG) == 0.0


def test_q_tree_equals_pairwise_sum():
    rng = random.Random(3)
    for t in range(20):
        cfg = GridConfig(16, rng.choice((1, 2, 3)),
                         norm_p=rng.choice((1.0, 2.0)))
        pts = distinct_points(rng, rng.randrange(2, 9), cfg)
        shift = random_shift(cfg, derive(6, t))
        for x in pts:
            direct = sum(tree_distance(x, y, shift, cfg) for y in pts)
            assert q_tree(x, pts, shift, cfg) == pytest.approx(direct, rel=1e-12)
            assert oracle.exact_q_tree(x, pts, shift, cfg) == \
                pytest.approx(direct, rel=1e-12)


def test_distortion_budget_holds_on_average():
    rng = random.Random(4)
    pts = distinct_points(rng, 10, CFG)
    stats = distortion_stats(pts, CFG, trials=200, seed=9)
    assert stats.trials == 200
    assert stats.success_fraction >= 0.9
    assert stats.mean_ratio <= 8.0 * CFG.dim * CFG.log2_delta
    assert stats.max_ratio >= stats.mean_ratio


def test_pack_cell_is_injective_per_level():
    shift = random_shift(CFG, 8)
    for lev in range(1, CFG.depth + 2):
        packed = {}
        for x in itertools.product(range(1, 17), repeat=2):
            cell = ancestor_cell(x, lev, shift, CFG)
            key = pack_cell(cell, CFG)
            assert packed.setdefault(key, cell) == cell
