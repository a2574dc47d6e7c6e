import io
import math

import numpy as np
import pytest

from fracperc.errors import InsufficientSamples, WindowTooSmall
from fracperc.geometry import Box, ShapeKind, shell_new
from fracperc.renorm import (
    RenormSpec,
    XField,
    correlations_by_distance,
    dependence_range_check,
    extract_x_field,
    field_summary,
    independence_threshold,
    sample_fields,
    site_marginals,
    write_field_csv,
)
from fracperc.rng import Stream
from fracperc.soup import (
    SoupMode,
    SoupSpec,
    empty_shape_set,
    sample_soup,
    thin_to,
)

TEMPLATE = shell_new(Box((0.0, 0.0), (3.0, 3.0)), Box((1.0, 1.0), (2.0, 2.0)))


def soup(intensity=0.35, window_hi=0.6, dia_min=0.02, dia_max=0.1, seed=0):
    return SoupSpec(dim=2, intensity=intensity, kind=ShapeKind.BALL,
                    dia_min=dia_min, dia_max=dia_max,
                    window=Box((0.0, 0.0), (window_hi, window_hi)),
                    mode=SoupMode.FULL_SPACE_RESTRICTED, seed=seed)


def renorm_spec(intensity=0.35, extent=(3, 3), s=0.1, window_hi=0.6, **kw):
    return RenormSpec(TEMPLATE, s, extent, soup(intensity, window_hi, **kw))


def test_spec_validation():
    with pytest.raises(ValueError):
        RenormSpec(TEMPLATE, 0.0, (2, 2), soup())
    with pytest.raises(ValueError):
        RenormSpec(TEMPLATE, 1.0, (2, 2), soup())
    with pytest.raises(ValueError):
        RenormSpec(TEMPLATE, 0.1, (2,), soup())
    with pytest.raises(ValueError):
        RenormSpec(TEMPLATE, 0.1, (2, 0), soup())
    with pytest.raises(ValueError):
        RenormSpec(TEMPLATE, 0.1, (2, 2),
                   SoupSpec(dim=2, intensity=1.0, kind=ShapeKind.BALL,
                            dia_min=0.02, dia_max=0.1,
                            window=Box((0.0, 0.0), (1.0, 1.0)),
                            mode=SoupMode.CONTAINED_IN_DOMAIN, seed=0))
    # soup shapes must fit under the shrink scale
    with pytest.raises(ValueError):
        renorm_spec(dia_max=0.2)
    with pytest.raises(WindowTooSmall):
        renorm_spec(window_hi=0.4)


def test_spacing_and_site_shells():
    spec = renorm_spec()
    assert spec.spacing == pytest.approx(0.1)
    base = spec.site_shell((0, 0))
    assert base.outer.lo == (0.0, 0.0)
    assert base.outer.hi == pytest.approx((0.3, 0.3))
    assert base.inner.lo == pytest.approx((0.1, 0.1))
    assert base.inner.hi == pytest.approx((0.2, 0.2))
    shifted = spec.site_shell((2, 1))
    assert shifted.outer.lo == pytest.approx((0.2, 0.1))
    assert list(spec.sites()) == [(i, j) for i in range(3) for j in range(3)]


def test_independence_threshold_value():
    spec = renorm_spec()
    assert independence_threshold(spec) == pytest.approx(3 * math.sqrt(2) + 2)


def test_empty_sample_gives_all_ones():
    spec = renorm_spec()
    field = extract_x_field(empty_shape_set(ShapeKind.BALL, 2), spec)
    assert field.values.shape == (3, 3)
    assert field.values.all()


def test_xfield_shape_guard():
    spec = renorm_spec()
    with pytest.raises(ValueError):
        XField(np.zeros((2, 2), dtype=bool), spec)


def test_sample_fields_deterministic_and_threaded():
    spec = renorm_spec(extent=(2, 2), window_hi=0.5)
    a = sample_fields(spec, 10, seed=3)
    b = sample_fields(spec, 10, seed=3, threads=3)
    for fa, fb in zip(a, b):
        assert np.array_equal(fa.values, fb.values)
    c = sample_fields(spec, 10, seed=4)
    assert any(not np.array_equal(fa.values, fc.values) for fa, fc in zip(a, c))
    with pytest.raises(ValueError):
        sample_fields(spec, 0, seed=1)


def test_field_is_monotone_under_thinning():
    # removing shapes frees cells, so every site bit can only turn on
    spec = renorm_spec(intensity=0.6, extent=(2, 2), window_hi=0.5)
    for i in range(25):
        shapes = sample_soup(spec.soup_spec, Stream(81, i))
        dense = extract_x_field(shapes, spec)
        sparse = extract_x_field(thin_to(shapes, 0.2, Stream(82, i)), spec)
        assert np.all(sparse.values | ~dense.values)


def test_stationarity_of_marginals():
    spec = renorm_spec(extent=(3, 3))
    fields = sample_fields(spec, 400, seed=7, threads=4)
    marg = site_marginals(fields)
    assert marg.shape == (3, 3)
    pooled = float(marg.mean())
    assert 0.05 < pooled < 0.95
    sigma = math.sqrt(2 * pooled * (1 - pooled) / len(fields))
    for val in marg.ravel():
        assert abs(val - pooled) < 5 * sigma


def test_scale_invariance_of_marginals():
    # shrinking s with the soup band and window scaled alike leaves the
    # field's law unchanged
    big = renorm_spec(extent=(2, 2), s=0.1, window_hi=0.5,
                      dia_min=0.02, dia_max=0.1)
    small = renorm_spec(extent=(2, 2), s=0.05, window_hi=0.25,
                        dia_min=0.01, dia_max=0.05)
    n = 300
    m_big = float(site_marginals(sample_fields(big, n, seed=13, threads=4)).mean())
    m_small = float(site_marginals(sample_fields(small, n, seed=14, threads=4)).mean())
    sigma = math.sqrt(2 * 0.25 / n)
    assert abs(m_big - m_small) < 4 * sigma


def test_dependence_range_check_same_site_and_guards():
    spec = renorm_spec(extent=(2, 2), window_hi=0.5)
    fields = sample_fields(spec, 1000, seed=5, threads=4)
    est = dependence_range_check(fields, (0, 0), (0, 0))
    assert est.r == 1.0
    assert (est.ci_lo, est.ci_hi) == (1.0, 1.0)
    assert not est.degenerate
    assert est.n == 1000
    with pytest.raises(InsufficientSamples):
        dependence_range_check(fields[:999], (0, 0), (0, 1))


def test_dependence_range_check_degenerate_site():
    spec = renorm_spec(intensity=0.0, extent=(2, 2), window_hi=0.5)
    fields = sample_fields(spec, 1000, seed=6, threads=4)
    est = dependence_range_check(fields, (0, 0), (1, 1))
    assert est.degenerate
    assert math.isnan(est.r)
    stats_by_d = correlations_by_distance(fields)
    for entry in stats_by_d.values():
        assert entry["degenerate_pairs"] == entry["n_pairs"]
        assert "mean_r" not in entry


def test_neighbor_sites_positively_correlated():
    # adjacent translates share shapes, so their bits move together
    spec = renorm_spec(extent=(2, 1), window_hi=0.5)
    fields = sample_fields(spec, 1200, seed=8, threads=4)
    est = dependence_range_check(fields, (0, 0), (1, 0))
    assert not est.degenerate
    assert est.ci_lo > 0.0


def test_correlations_by_distance_structure():
    spec = renorm_spec(extent=(3, 3))
    fields = sample_fields(spec, 60, seed=9, threads=4)
    out = correlations_by_distance(fields)
    assert set(out) <= {1, 2}
    # 3x3 lattice: 20 pairs at max-norm distance 1, 16 at distance 2
    assert out[1]["n_pairs"] == 20
    assert out[2]["n_pairs"] == 16
    if "mean_r" in out[1]:
        assert out[1]["min_r"] <= out[1]["mean_r"] <= out[1]["max_r"]


def test_field_summary_and_csv():
    spec = renorm_spec(extent=(2, 2), window_hi=0.5)
    fields = sample_fields(spec, 30, seed=10)
    doc = field_summary(fields)
    assert doc["lattice_extent"] == [2, 2]
    assert doc["n_fields"] == 30
    assert np.asarray(doc["site_marginals"]).shape == (2, 2)
    assert doc["independence_threshold"] == pytest.approx(3 * math.sqrt(2) + 2)
    buf = io.StringIO()
    write_field_csv(fields, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "field,site_0,site_1,x"
    assert len(lines) == 1 + 30 * 4
    assert lines[1].startswith("0,0,0,")
    assert set(line.rsplit(",", 1)[1] for line in lines[1:]) <= {"0", "1"}
