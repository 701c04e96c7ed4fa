import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from expcircle import (
    BranchId,
    branch_contraction_check,
    branch_ids,
    circle_distance,
    deep_preimages,
    distortion_ratio,
    evaluate,
    inverse_weight_sum,
    preimages,
    pullback,
    pullback_orbit,
)

unit = st.floats(min_value=0, max_value=1, exclude_max=True)


def forward(m, y, n):
    for _ in range(n):
        y = evaluate(m, y)
    return y


def test_branch_id_validation():
    with pytest.raises(ValueError):
        BranchId(2, (0,))
    with pytest.raises(ValueError):
        BranchId(0, ())
    with pytest.raises(ValueError):
        BranchId(1, (-1,))


def test_branch_ids_enumeration():
    ids = branch_ids(2, 3)
    assert len(ids) == 8
    assert ids[0].path == (0, 0, 0)
    assert ids[-1].path == (1, 1, 1)
    # lexicographic in path
    paths = [b.path for b in ids]
    assert paths == sorted(paths)
    with pytest.raises(ValueError):
        branch_ids(2, 13)


def test_doubling_preimages_of_half(doubling):
    got = preimages(doubling, 0.5)
    assert [round(y, 15) for _, y in got] == [0.25, 0.75]
    assert [b.path for b, _ in got] == [(0,), (1,)]


def test_preimages_map_forward(doubling, tripling, bent):
    for m in (doubling, tripling, bent):
        for x in (0.0, 0.1, 0.5, 0.9321):
            ys = preimages(m, x)
            assert len(ys) == m.winding
            for _, y in ys:
                assert circle_distance(evaluate(m, y), x) < 1e-12


def test_perturbed_preimage_matches_closed_form(bent):
    # T(1/4) = 0.55 exactly, so 1/4 must appear among the preimages of 0.55
    ys = [y for _, y in preimages(bent, 0.55)]
    assert min(abs(y - 0.25) for y in ys) < 1e-12


def test_pullback_branch_convention(doubling):
    # path[0] acts on the point itself: 0.5 -> (0.5+1)/2 -> 0.75/2
    assert pullback(doubling, 0.5, BranchId(2, (1, 0))) == pytest.approx(
        0.375, abs=1e-15
    )
    assert pullback(doubling, 0.5, BranchId(2, (0, 1))) == pytest.approx(
        0.625, abs=1e-15
    )


def test_pullback_orbit_shape_and_roundtrip(bent):
    bid = BranchId(4, (1, 0, 1, 1))
    xs = np.linspace(0, 0.99, 7)
    orbit = pullback_orbit(bent, xs, bid)
    assert orbit.shape == (4, 7)
    assert np.allclose(orbit[-1], pullback(bent, xs, bid), atol=1e-15)
    back = forward(bent, orbit[-1], 4)
    assert np.max(circle_distance(back, xs)) < 1e-10


def test_deep_preimages_are_distinct_and_complete(bent):
    for depth in (1, 2, 4):
        pairs = deep_preimages(bent, 0.3, depth)
        assert len(pairs) == 2**depth
        assert [b.path for b, _ in pairs] == sorted(b.path for b, _ in pairs)
        ys = np.array([y for _, y in pairs])
        assert len(set(np.round(ys, 10))) == 2**depth
        back = forward(bent, ys, depth)
        assert np.max(circle_distance(back, 0.3)) < 1e-10


def test_inverse_weight_sum_linear_is_pointwise_one(doubling, tripling):
    xs = np.linspace(0, 0.999, 41)
    for m in (doubling, tripling):
        for depth in (1, 2, 5):
            assert np.max(np.abs(inverse_weight_sum(m, xs, depth) - 1.0)) < 1e-12


def test_inverse_weight_sum_perturbed_has_unit_mean(bent):
    xs = np.arange(512) / 512
    w = inverse_weight_sum(bent, xs, 3)
    assert abs(w.mean() - 1.0) < 1e-10
    # curvature makes it genuinely non-constant
    assert w.max() - w.min() > 1e-3


@given(unit, st.integers(min_value=1, max_value=8), st.integers(min_value=0))
@settings(max_examples=150)
def test_doubling_pullback_is_exact_halving(x, depth, raw_path):
    m_path = tuple((raw_path >> k) & 1 for k in range(depth))
    bid = BranchId(depth, m_path)
    from expcircle import linear_map

    m = linear_map(2)
    y = pullback(m, x, bid)
    assert circle_distance(forward(m, y, depth), x) < 1e-12


def test_branch_contraction_bound(bent):
    rng = np.random.Generator(np.random.Philox(key=7))
    x = rng.random(200)
    y = rng.random(200)
    for bid in branch_ids(2, 3):
        lhs, rhs, ok = branch_contraction_check(bent, x, y, 3, bid)
        assert ok
        assert np.all(lhs <= rhs + 1e-10)


def test_distortion_ratio_within_exponential_band(bent):
    omega = bent.d2_sup / (bent.lam * (bent.lam - 1.0))
    rng = np.random.Generator(np.random.Philox(key=8))
    x = rng.random(200)
    y = rng.random(200)
    for depth in (1, 3, 5):
        for bid in branch_ids(2, depth)[:: max(1, 2**depth // 8)]:
            r = distortion_ratio(bent, x, y, depth, bid)
            d = circle_distance(x, y)
            assert np.all(r <= np.exp(omega * d) + 1e-9)
            assert np.all(r >= np.exp(-omega * d) - 1e-9)


def test_distortion_ratio_is_one_for_linear(doubling):
    x = np.linspace(0, 0.9, 10)
    y = np.linspace(0.05, 0.95, 10)
    r = distortion_ratio(doubling, x, y, 2, BranchId(2, (1, 0)))
    assert np.allclose(r, 1.0, atol=1e-15)


def test_depth_validation(bent):
    with pytest.raises(ValueError):
        pullback(bent, 0.5, BranchId(13, (0,) * 13))
    with pytest.raises(ValueError):
        pullback(bent, 0.5, BranchId(1, (5,)))
    with pytest.raises(ValueError):
        branch_contraction_check(bent, 0.1, 0.2, 2, BranchId(1, (0,)))
