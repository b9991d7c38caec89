import math

import numpy as np
import pytest

from geocut.jl import (
    JLMap,
    _euclidean_matrix,
    jl_dimension,
    jl_project,
    verify_maxcut_preservation,
)
from geocut.maxcut import max_cut_matrix


def test_dimension_formula():
    assert jl_dimension(0.25, 0.1) == math.ceil(8 / 0.0625 * math.log(40))
    assert jl_dimension(0.5, 0.5, constant=4.0) == \
        math.ceil(16 * math.log(4.0))


def test_projection_shape_determinism_linearity():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(6, 20))
    out = jl_project(pts, 10, seed=4)
    assert len(out) == 6 and len(out[0]) == 10
    assert out == jl_project(pts, 10, seed=4)
    assert out != jl_project(pts, 10, seed=5)
    scaled = jl_project(3.0 * pts, 10, seed=4)
    for row, ref in zip(scaled, out):
        assert row == pytest.approx(tuple(3.0 * x for x in ref))
    with pytest.raises(ValueError):
        jl_project(pts[0], 10, seed=0)


def test_map_preserves_norms_in_expectation():
    x = np.ones(30)
    vals = []
    for seed in range(300):
        m = JLMap(16, 30, seed).matrix()
        vals.append(float(((m @ x) ** 2).sum()))
    assert np.mean(vals) == pytest.approx(30.0, rel=0.1)


def test_two_point_distance_preservation_rate():
    pts = np.array([[0.0] * 20, [1.0] * 20])
    d = _euclidean_matrix(pts)[0, 1]
    hits = 0
    trials = 400
    for seed in range(trials):
        proj = np.asarray(jl_project(pts, 64, seed))
        dp = _euclidean_matrix(proj)[0, 1]
        if abs(dp / d - 1.0) <= 0.25:
            hits += 1
    assert hits / trials >= 0.95


def test_identity_scale_projection_is_exact():
    rng = np.random.default_rng(1)
    pts = rng.normal(size=(8, 12))
    base = max_cut_matrix(_euclidean_matrix(pts))
    # a seed-free exact check: projecting with the identity map preserves
    # the metric, so the verifier logic must report full preservation
    proj_dist = _euclidean_matrix(pts)
    assert max_cut_matrix(proj_dist) == pytest.approx(base)


def test_verifier_reports_high_preservation():
    rng = np.random.default_rng(2)
    pts = rng.normal(size=(10, 40)) * 5
    rep = verify_maxcut_preservation(pts, jl_dimension(0.3, 0.2), 25, 0.3,
                                     seed=6)
    assert rep.trials == 25 and len(rep.values) == 25
    assert rep.preserved_fraction >= 0.9
    assert rep.distortion_ok_fraction >= 0.9
    assert rep.base_value > 0


def test_verifier_degenerate_and_cap():
    pts = np.zeros((3, 5))
    rep = verify_maxcut_preservation(pts, 4, 5, 0.25, seed=0)
    assert rep.preserved_fraction == 1.0 and rep.base_value == 0.0
    with pytest.raises(ValueError):
        verify_maxcut_preservation(np.zeros((17, 5)), 4, 1, 0.25)
