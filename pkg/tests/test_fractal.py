import json
import math
from collections import deque
from itertools import product

import numpy as np
import pytest

from fracperc.errors import BadAxis, TooLarge
from fracperc.fractal import (
    FractalSpec,
    RetainedSet,
    _rle_decode,
    _rle_encode,
    exact_crossing_prob,
    fractal_crossing,
    fractal_shell_crossing,
    retained_component_diameter,
    retained_from_json_obj,
    retained_to_json_obj,
    sample_fractal,
    soup_fractal_coupling_q,
    tile_full_space,
)
from fracperc.raster import Adjacency, rasterize
from fracperc.rng import Stream
from fracperc.soup import thin_to


def spec(N=2, dim=2, p=0.5, depth=1, seed=0):
    return FractalSpec(N=N, dim=dim, p=p, depth=depth, seed=seed)


def manual_set(mask, N, depth, extra_levels=()):
    levels = tuple(np.asarray(lv, dtype=bool) for lv in (*extra_levels, mask))
    return RetainedSet(spec(N=N, depth=depth), levels, (1,) * levels[-1].ndim)


def tiny_cross(cells, side, adj):
    """Own BFS over explicit cell tuples; crossing along axis 0."""
    dq = deque(c for c in cells if c[0] == 0)
    seen = set(dq)
    while dq:
        u = dq.popleft()
        if u[0] == side - 1:
            return True
        for dx, dy in product((-1, 0, 1), repeat=2):
            if (dx, dy) == (0, 0):
                continue
            if adj is Adjacency.FACE and abs(dx) + abs(dy) != 1:
                continue
            v = (u[0] + dx, u[1] + dy)
            if v in cells and v not in seen:
                seen.add(v)
                dq.append(v)
    return False


def enumerate_level1(p, adj):
    cells4 = list(product(range(2), repeat=2))
    total = 0.0
    for bits in range(16):
        cells = {c for i, c in enumerate(cells4) if bits >> i & 1}
        if tiny_cross(cells, 2, adj):
            r = len(cells)
            total += p ** r * (1 - p) ** (4 - r)
    return total


def test_spec_validation():
    for kw in (dict(N=1), dict(dim=1), dict(p=-0.1), dict(p=1.1), dict(depth=0)):
        with pytest.raises(ValueError):
            spec(**kw)


def test_retention_extremes():
    full = sample_fractal(spec(p=1.0, depth=3))
    assert all(lv.all() for lv in full.levels)
    none = sample_fractal(spec(p=0.0, depth=2))
    assert not none.levels[0].any()
    assert not none.levels[1].any()


def test_level_accessor_bounds():
    rs = sample_fractal(spec(depth=2))
    assert rs.level().shape == (4, 4)
    assert rs.level(1).shape == (2, 2)
    with pytest.raises(ValueError):
        rs.level(3)
    with pytest.raises(ValueError):
        rs.level(0)


def test_mean_retained_count():
    p = 0.35
    trials = 10_000
    total = 0
    for i in range(trials):
        rs = sample_fractal(spec(p=p), Stream(201, i))
        total += int(rs.levels[0].sum())
    mean = total / trials
    assert abs(mean - 4 * p) <= 3.5 * math.sqrt(4 * p * (1 - p) / trials)


def test_nesting_invariant():
    for seed in range(5):
        rs = sample_fractal(spec(N=2, p=0.7, depth=4, seed=seed))
        N = rs.spec.N
        for parent, child in zip(rs.levels, rs.levels[1:]):
            d = child.ndim
            sh = []
            for n in parent.shape:
                sh.extend([n, N])
            blocks = child.reshape(sh)
            order = list(range(0, 2 * d, 2)) + list(range(1, 2 * d, 2))
            has_child = blocks.transpose(order).reshape(
                parent.shape + (N ** d,)).any(axis=-1)
            assert np.all(parent | ~has_child)


def test_same_stream_couples_across_p():
    # the u-field is shared, so raising p only adds cells
    for seed in range(10):
        lo = sample_fractal(spec(p=0.4, depth=3, seed=seed))
        hi = sample_fractal(spec(p=0.8, depth=3, seed=seed))
        for a, b in zip(lo.levels, hi.levels):
            assert np.all(b | ~a)


def test_determinism():
    a = sample_fractal(spec(p=0.6, depth=3, seed=9))
    b = sample_fractal(spec(p=0.6, depth=3, seed=9))
    for x, y in zip(a.levels, b.levels):
        assert np.array_equal(x, y)
    c = sample_fractal(spec(p=0.6, depth=3, seed=10))
    assert any(not np.array_equal(x, y) for x, y in zip(a.levels, c.levels))


def test_too_large_guard():
    with pytest.raises(TooLarge):
        sample_fractal(spec(depth=15))


def test_crossing_depth_monotone():
    # deeper levels are spatial subsets, so crossings can only vanish
    for seed in range(20):
        rs = sample_fractal(spec(p=0.85, depth=5, seed=seed))
        for adj in Adjacency:
            vals = [fractal_crossing(rs, 0, adj, level=k) for k in range(1, 6)]
            for shallow, deep in zip(vals, vals[1:]):
                assert not (deep and not shallow)


def test_crossing_corner_contact_fixture():
    mask = np.zeros((2, 2), dtype=bool)
    mask[0, 1] = True
    mask[1, 0] = True
    rs = manual_set(mask, N=2, depth=1)
    assert fractal_crossing(rs, 0, Adjacency.VERTEX)
    assert not fractal_crossing(rs, 0, Adjacency.FACE)
    with pytest.raises(BadAxis):
        fractal_crossing(rs, 2)


def test_crossing_empty_and_full():
    assert not fractal_crossing(manual_set(np.zeros((2, 2), bool), 2, 1))
    assert fractal_crossing(manual_set(np.ones((2, 2), bool), 2, 1))


def test_shell_crossing_trivials():
    assert fractal_shell_crossing(sample_fractal(spec(N=3, p=1.0)))
    assert not fractal_shell_crossing(sample_fractal(spec(N=3, p=0.0)))


def test_shell_crossing_middle_row():
    # the middle row spans the square and meets the inner cube head-on
    mask = np.zeros((3, 3), dtype=bool)
    mask[:, 1] = True
    rs = manual_set(mask, N=3, depth=1)
    assert fractal_shell_crossing(rs, Adjacency.FACE)
    assert fractal_shell_crossing(rs, Adjacency.VERTEX)


def test_shell_crossing_corner_cell_depends_on_inner_anchor():
    # the corner cell [0,1/3]^2 touches the centered inner cube at one point
    # but stays clear of the corner-anchored variant
    mask = np.zeros((3, 3), dtype=bool)
    mask[0, 0] = True
    rs = manual_set(mask, N=3, depth=1)
    assert fractal_shell_crossing(rs, corner_anchored=False)
    assert not fractal_shell_crossing(rs, corner_anchored=True)


def test_shell_crossing_strict_interior_is_cut():
    # at N=3, depth 2, only cell block (4,4) lies strictly inside the inner
    # cube; a set retained only there cannot cross
    lvl1 = np.zeros((3, 3), dtype=bool)
    lvl1[1, 1] = True
    lvl2 = np.zeros((9, 9), dtype=bool)
    lvl2[4, 4] = True
    rs = RetainedSet(spec(N=3, depth=2), (lvl1, lvl2), (1, 1))
    assert not fractal_shell_crossing(rs, level=2)
    # a radial path from the boundary to the inner cube does cross
    lvl1b = np.zeros((3, 3), dtype=bool)
    lvl1b[0, 1] = lvl1b[1, 1] = True
    lvl2b = np.zeros((9, 9), dtype=bool)
    lvl2b[0:4, 4] = True
    rs2 = RetainedSet(spec(N=3, depth=2), (lvl1b, lvl2b), (1, 1))
    assert fractal_shell_crossing(rs2, Adjacency.FACE, level=2)


def test_shell_crossing_monotone_in_p():
    for seed in range(20):
        lo = sample_fractal(spec(N=3, p=0.55, depth=2, seed=seed))
        hi = sample_fractal(spec(N=3, p=0.9, depth=2, seed=seed))
        if fractal_shell_crossing(lo):
            assert fractal_shell_crossing(hi)


def test_shell_crossing_rejects_tiles():
    rs = tile_full_space(spec(p=1.0), (2, 1))
    with pytest.raises(ValueError):
        fractal_shell_crossing(rs)


def test_exact_crossing_prob_literals():
    assert exact_crossing_prob(p=0.5, adj=Adjacency.FACE) == pytest.approx(7 / 16)
    assert exact_crossing_prob(p=0.5, adj=Adjacency.VERTEX) == pytest.approx(9 / 16)
    for depth in (1, 2):
        assert exact_crossing_prob(depth=depth, p=1.0) == pytest.approx(1.0)
        assert exact_crossing_prob(depth=depth, p=0.0) == 0.0


def test_exact_crossing_prob_face_polynomial():
    for p in (0.3, 0.5, 0.7, 0.9):
        q = 1 - p
        want = 2 * p ** 2 * q ** 2 + 4 * p ** 3 * q + p ** 4
        assert exact_crossing_prob(p=p, adj=Adjacency.FACE) == pytest.approx(
            want, rel=1e-12)


def test_exact_crossing_prob_matches_independent_enumeration():
    for p in (0.3, 0.5, 0.7, 0.9):
        for adj in Adjacency:
            assert exact_crossing_prob(p=p, adj=adj) == pytest.approx(
                enumerate_level1(p, adj), rel=1e-12)


def test_exact_crossing_prob_depth2_properties():
    for adj in Adjacency:
        prev = None
        for p in (0.3, 0.5, 0.7, 0.9):
            v2 = exact_crossing_prob(depth=2, p=p, adj=adj)
            v1 = exact_crossing_prob(depth=1, p=p, adj=adj)
            assert 0.0 <= v2 <= v1
            if prev is not None:
                assert v2 >= prev
            prev = v2


def test_exact_crossing_prob_guards():
    with pytest.raises(TooLarge):
        exact_crossing_prob(depth=3)
    with pytest.raises(TooLarge):
        exact_crossing_prob(N=3, depth=2)
    with pytest.raises(BadAxis):
        exact_crossing_prob(axis=2)
    with pytest.raises(ValueError):
        exact_crossing_prob(p=1.5)


def test_tile_full_space():
    one = tile_full_space(spec(p=0.7, depth=2, seed=4), (1, 1))
    ref = sample_fractal(spec(p=0.7, depth=2, seed=4))
    for a, b in zip(one.levels, ref.levels):
        assert np.array_equal(a, b)
    full = tile_full_space(spec(p=1.0), (2, 1))
    assert full.levels[0].shape == (4, 2)
    assert full.levels[0].all()
    assert fractal_crossing(full, 0)
    empty = tile_full_space(spec(p=0.0), (2, 3))
    assert not empty.levels[0].any()
    with pytest.raises(ValueError):
        tile_full_space(spec(), (2,))
    with pytest.raises(ValueError):
        tile_full_space(spec(), (0, 2))


def test_tile_first_tile_matches_single_sample():
    rs = tile_full_space(spec(p=0.6, depth=2, seed=12), (2, 2))
    single = sample_fractal(spec(p=0.6, depth=2, seed=12))
    for j, lv in enumerate(single.levels):
        m = lv.shape[0]
        assert np.array_equal(rs.levels[j][:m, :m], lv)


def test_retained_component_diameter():
    full = sample_fractal(spec(p=1.0, depth=2))
    # 4x4 lattice of centers spans sqrt(2) * 3/4
    assert retained_component_diameter(full) == pytest.approx(
        math.sqrt(2) * 0.75)
    assert retained_component_diameter(sample_fractal(spec(p=0.0))) == 0.0


def test_rle_round_trip():
    rng = np.random.default_rng(5)
    for _ in range(20):
        flat = rng.random(int(rng.integers(0, 40))) < rng.uniform(0, 1)
        runs = _rle_encode(flat)
        assert np.array_equal(_rle_decode(runs, flat.size), flat)
    assert _rle_encode(np.zeros(0, dtype=bool)) == []
    assert _rle_encode(np.ones(3, dtype=bool)) == [0, 3]
    assert _rle_encode(np.zeros(3, dtype=bool)) == [3]
    with pytest.raises(ValueError):
        _rle_decode([2, 2], 3)


def test_retained_json_round_trip():
    rs = tile_full_space(spec(N=2, p=0.6, depth=3, seed=7), (2, 1))
    obj = json.loads(json.dumps(retained_to_json_obj(rs)))
    back = retained_from_json_obj(obj)
    assert back.spec == rs.spec
    assert back.copies == rs.copies
    for a, b in zip(back.levels, rs.levels):
        assert np.array_equal(a, b)


def test_coupling_q_vanishes_at_tiny_intensity():
    est = soup_fractal_coupling_q(1e-4, n=50, seed=3, h=1.0 / 32.0)
    assert est.successes == 0
    assert est.p_hat == 0.0


def test_coupling_q_monotone_in_intensity():
    lo = soup_fractal_coupling_q(0.2, n=40, seed=5, h=1.0 / 32.0)
    hi = soup_fractal_coupling_q(8.0, n=40, seed=5, h=1.0 / 32.0)
    assert lo.p_hat <= hi.p_hat


def test_coupling_q_thinning_is_exact_per_trial():
    # thinning the high-intensity soup can only shrink coverage, so the
    # covered-square indicator is nondecreasing in intensity per realization
    from fracperc.geometry import Box, ShapeKind, unit_box
    from fracperc.soup import SoupMode, SoupSpec, sample_soup

    sp = SoupSpec(dim=2, intensity=6.0, kind=ShapeKind.BALL, dia_min=2 / 3,
                  dia_max=2.0, window=unit_box(2),
                  mode=SoupMode.FULL_SPACE_RESTRICTED, seed=0)
    for i in range(40):
        shapes = sample_soup(sp, Stream(71, i))
        thin = thin_to(shapes, 2.0, Stream(72, i))
        g_hi = rasterize(shapes, sp.window, 1 / 32)
        g_lo = rasterize(thin, sp.window, 1 / 32)
        assert np.all(g_hi.covered | ~g_lo.covered)
        if g_lo.covered.all():
            assert g_hi.covered.all()
