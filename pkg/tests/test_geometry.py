import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robinlab.errors import Degenerate, NegativeOffset, NonUnitDirection, NotConvex, TooFewVertices, BadParameter
from robinlab.geometry import (
    distance_moments,
    distance_to_boundary,
    inner_parallel,
    metrics,
    parallel_profile,
    polygon_from_json,
    polygon_to_json,
    random_convex_polygon,
    read_polygon,
    rectangle,
    regular_polygon,
    sample_uniform,
    support_width,
    validate_polygon,
    write_polygon,
)

seeds = st.integers(min_value=0, max_value=10_000)
vcounts = st.integers(min_value=3, max_value=16)
aspects = st.floats(min_value=0.05, max_value=1.0)


def random_shapes(count, start=0):
    rng = np.random.default_rng(start)
    for seed in range(start, start + count):
        yield random_convex_polygon(seed, int(rng.integers(3, 17)), float(rng.uniform(0.05, 1.0)))


# --- validation ------------------------------------------------------------


def test_unit_square_is_canonical(square):
    assert len(square) == 4
    np.testing.assert_array_equal(square.vertices, [[0, 0], [1, 0], [1, 1], [0, 1]])


def test_clockwise_input_gives_same_polygon(square):
    assert validate_polygon([(0, 0), (0, 1), (1, 1), (1, 0)]) == square


def test_rotated_start_gives_same_polygon(square):
    assert validate_polygon([(1, 1), (0, 1), (0, 0), (1, 0)]) == square


def test_reflex_vertex_rejected():
    with pytest.raises(NotConvex):
        validate_polygon([(0, 0), (2, 0), (1, 1), (1, -1)])


def test_too_few_vertices():
    with pytest.raises(TooFewVertices):
        validate_polygon([(0, 0), (1, 0)])


def test_collinear_points_are_degenerate():
    with pytest.raises((Degenerate, TooFewVertices)):
        validate_polygon([(0, 0), (1, 0), (2, 0)])


def test_collinear_vertex_removed():
    p = validate_polygon([(0, 0), (0.5, 0), (1, 0), (1, 1), (0, 1)])
    assert len(p) == 4


@given(seeds, vcounts, aspects)
def test_canonical_form_invariants(seed, m, aspect):
    p = random_convex_polygon(seed, m, aspect)
    v = p.vertices
    e = np.roll(v, -1, axis=0) - v
    cross = e[:, 0] * np.roll(e[:, 1], -1) - e[:, 1] * np.roll(e[:, 0], -1)
    assert len(v) >= 3
    assert np.all(cross > 0)
    assert tuple(v[0]) == min(map(tuple, v))
    assert validate_polygon(v[::-1]) == p


# --- metrics ---------------------------------------------------------------


def test_square_metrics(square):
    m = metrics(square)
    assert m.area == pytest.approx(1.0, abs=1e-15)
    assert m.perimeter == pytest.approx(4.0)
    assert m.inradius == pytest.approx(0.5)
    assert m.diameter == pytest.approx(math.sqrt(2))
    assert m.min_width == pytest.approx(1.0)
    assert m.remainder_R == pytest.approx(1.0)
    assert m.remainder_A == pytest.approx(1 / math.sqrt(2))


def test_345_triangle_metrics(triangle345):
    m = metrics(triangle345)
    assert m.area == pytest.approx(6.0)
    assert m.perimeter == pytest.approx(12.0)
    assert m.inradius == pytest.approx(1.0, abs=1e-12)
    assert m.incenter == pytest.approx((1.0, 1.0), abs=1e-12)
    assert m.diameter == pytest.approx(5.0)
    assert m.min_width == pytest.approx(2.4)
    assert m.remainder_R == pytest.approx(1.0, abs=1e-9)


def test_thin_rectangle_metrics():
    m = metrics(rectangle(0.25, 1.0))
    assert (m.inradius, m.perimeter, m.area) == pytest.approx((0.125, 2.5, 0.25))
    assert m.remainder_R == pytest.approx(0.25)
    assert m.remainder_A == pytest.approx(0.25 / math.sqrt(1.0625))


def brute_inradius(poly, n=400):
    lo, hi = poly.vertices.min(axis=0), poly.vertices.max(axis=0)
    xs = np.linspace(lo[0], hi[0], n)
    ys = np.linspace(lo[1], hi[1], n)
    X, Y = np.meshgrid(xs, ys)
    d = distance_to_boundary(poly, np.column_stack([X.ravel(), Y.ravel()]))
    return float(d.max()), float(max(xs[1] - xs[0], ys[1] - ys[0]))


def test_metric_invariants_and_grid_inradius_on_200_shapes():
    for p in random_shapes(200):
        m = metrics(p)
        assert m.area > 0 and m.perimeter > 0
        assert 0 < m.inradius <= m.min_width / 2 + 1e-12 <= m.diameter / 2 + 1e-12
        pr = m.perimeter * m.inradius / m.area
        assert 1 < pr <= m.dimension_n + 1e-9
        assert 0 < m.remainder_A <= 1
        r_grid, cell = brute_inradius(p)
        assert abs(r_grid - m.inradius) <= 2 * cell


@given(seeds)
def test_triangles_have_unit_remainder(seed):
    p = random_convex_polygon(seed, 3, 1.0)
    assert metrics(p).remainder_R == pytest.approx(1.0, abs=1e-9)


@given(seeds, vcounts, aspects)
def test_perimeter_diameter_and_width_bounds(seed, m, aspect):
    g = metrics(random_convex_polygon(seed, m, aspect))
    assert g.perimeter <= math.pi * g.diameter * (1 + 1e-12)
    assert g.min_width / 2 >= g.inradius * (1 - 1e-12)
    assert g.inradius >= g.min_width / 3 * (1 - 1e-12)


def test_min_width_matches_direction_scan():
    for p in random_shapes(20, start=500):
        th = np.linspace(0, np.pi, 20001)
        w = min(support_width(p, (math.cos(t), math.sin(t))) for t in th)
        g = metrics(p)
        # the scan can only overshoot, by at most diam * angular step
        assert g.min_width <= w * (1 + 1e-12)
        assert w - g.min_width <= g.diameter * (th[1] - th[0])


# --- support width -----------------------------------------------------------


def test_support_width_examples(square, triangle345):
    assert support_width(square, (1, 0)) == pytest.approx(1.0)
    assert support_width(square, (1 / math.sqrt(2), 1 / math.sqrt(2))) == pytest.approx(math.sqrt(2))
    assert support_width(triangle345, (0, 1)) == pytest.approx(3.0)


def test_support_width_rejects_non_unit(square):
    with pytest.raises(NonUnitDirection):
        support_width(square, (1, 1))


# --- inner parallel sets ---------------------------------------------------------


def test_inner_parallel_square(square):
    inner = inner_parallel(square, 0.1)
    assert metrics(inner).area == pytest.approx(0.64)
    assert inner_parallel(square, 0.5) is None


def test_inner_parallel_triangle_matches_grid(triangle345):
    inner = inner_parallel(triangle345, 0.5)
    assert metrics(inner).area == pytest.approx(1.5, rel=1e-12)
    # brute force: fraction of grid points with d > t
    n = 1200
    xs = (np.arange(n) + 0.5) * 4 / n
    ys = (np.arange(n) + 0.5) * 3 / n
    X, Y = np.meshgrid(xs, ys)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    d = distance_to_boundary(triangle345, pts)
    inside = 3 * pts[:, 0] + 4 * pts[:, 1] < 12
    area = np.count_nonzero(inside & (d > 0.5)) * 12 / n**2
    assert area == pytest.approx(1.5, rel=5e-3)


def test_inner_parallel_negative_offset(square):
    with pytest.raises(NegativeOffset):
        inner_parallel(square, -0.1)


# --- profile ---------------------------------------------------------------


def test_square_profile(square):
    pr = parallel_profile(square)
    np.testing.assert_allclose(pr.event_times, [0.0, 0.5], atol=1e-12)
    assert pr.I0 == pytest.approx(1 / 6, abs=1e-10)
    assert pr.I1 == pytest.approx(1 / 48, abs=1e-10)
    assert pr.J == pytest.approx(1 / 32, abs=1e-10)
    t = np.linspace(0, 0.5, 11)
    np.testing.assert_allclose(pr.mu(t), (1 - 2 * t) ** 2, atol=1e-12)
    np.testing.assert_allclose(pr.perimeter_at(t), 4 - 8 * t, atol=1e-12)


def test_triangle_profile(triangle345):
    pr = parallel_profile(triangle345)
    np.testing.assert_allclose(pr.event_times, [0.0, 1.0], atol=1e-12)
    assert (pr.I0, pr.I1, pr.J) == pytest.approx((2.0, 0.5, 0.75), abs=1e-10)
    t = np.linspace(0, 1, 7)
    np.testing.assert_allclose(pr.mu(t), 6 * (1 - t) ** 2, atol=1e-11)
    np.testing.assert_allclose(pr.perimeter_at(t), 12 * (1 - t), atol=1e-11)


def test_rectangle_profile():
    a, b = 0.25, 1.0
    pr = parallel_profile(rectangle(a, b))
    assert pr.event_times[-1] == pytest.approx(a / 2)
    t = np.linspace(0, a / 2, 9)
    np.testing.assert_allclose(pr.mu(t), (a - 2 * t) * (b - 2 * t), atol=1e-12)
    np.testing.assert_allclose(pr.perimeter_at(t), 2 * (a + b) - 8 * t, atol=1e-12)


def check_profile(p):
    m = metrics(p)
    pr = parallel_profile(p)
    r = m.inradius
    assert pr.mu(0.0) == pytest.approx(m.area, rel=1e-10)
    assert abs(pr.mu(r)) <= 1e-10 * m.area
    t = np.linspace(0, r, 100)
    mu, P = pr.mu(t), pr.perimeter_at(t)
    assert np.all(np.diff(mu) < 0)
    assert np.all(np.diff(P) <= 1e-10 * m.perimeter)
    assert np.all(mu >= m.area - m.perimeter * t - 1e-10 * m.area)
    assert np.all(mu <= P * (r - t) + 1e-10 * m.area)
    # mu' = -P at interval midpoints; central differences are exact on a quadratic
    ev = pr.event_times
    mids = 0.5 * (ev[:-1] + ev[1:])
    h = 0.25 * (ev[1:] - ev[:-1])
    fd = (pr.mu(mids + h) - pr.mu(mids - h)) / (2 * h)
    np.testing.assert_allclose(fd, -pr.perimeter_at(mids), rtol=1e-8)
    # continuity across events and concavity of P
    inner = ev[1:-1]
    if len(inner):
        k = np.arange(1, len(ev) - 1)

        def quad(c, x):
            return c[:, 0] + c[:, 1] * x + c[:, 2] * x**2

        def lin(c, x):
            return c[:, 0] + c[:, 1] * x

        du = inner - ev[k - 1]
        np.testing.assert_allclose(quad(pr.mu_coeffs[k - 1], du), pr.mu_coeffs[k, 0], atol=1e-10 * m.area)
        np.testing.assert_allclose(lin(pr.perimeter_coeffs[k - 1], du), pr.perimeter_coeffs[k, 0], atol=1e-9 * m.perimeter)
        slopes = pr.perimeter_coeffs[:, 1]
        assert np.all(np.diff(slopes) <= 1e-9 * np.abs(slopes).max())
    # profile sampled against exact offsets
    for tt in t[1:-1:9]:
        inner_p = inner_parallel(p, tt)
        if inner_p is not None:
            assert pr.mu(tt) == pytest.approx(metrics(inner_p).area, rel=1e-9, abs=1e-12 * m.area)


def test_profile_invariants_on_random_shapes():
    for p in random_shapes(60, start=1000):
        check_profile(p)


@settings(max_examples=15)
@given(seeds, vcounts, aspects)
def test_profile_invariants_property(seed, m, aspect):
    check_profile(random_convex_polygon(seed, m, aspect))


@given(seeds, vcounts, aspects)
def test_q1_q2_bounds(seed, m, aspect):
    p = random_convex_polygon(seed, m, aspect)
    g = metrics(p)
    pr = parallel_profile(p)
    tb = g.area / g.perimeter
    assert tb < g.inradius
    assert pr.mu(tb) >= g.remainder_R / (6 * g.dimension_n) * g.area
    assert pr.perimeter_at(tb) <= g.perimeter / (1 + g.remainder_R / g.dimension_n) * (1 + 1e-12)
    assert pr.s_bar * g.perimeter == pytest.approx(float(pr.mu(tb)))


# --- distance moments --------------------------------------------------------------


def test_square_moments(square):
    m1, m2 = distance_moments(parallel_profile(square))
    assert (m1, m2) == pytest.approx((1 / 6, 1 / 24), abs=1e-12)


def test_triangle_moments(triangle345):
    m1, m2 = distance_moments(parallel_profile(triangle345))
    assert (m1, m2) == pytest.approx((2.0, 1.0), abs=1e-10)


def monte_carlo_moments(p, n, seed):
    rng = np.random.default_rng(seed)
    d = distance_to_boundary(p, sample_uniform(p, n, rng))
    a = metrics(p).area
    return (a * d.mean(), a * d.std(ddof=1) / math.sqrt(n)), (a * (d**2).mean(), a * (d**2).std(ddof=1) / math.sqrt(n))


def test_triangle_moments_monte_carlo(triangle345):
    (e1, s1), (e2, s2) = monte_carlo_moments(triangle345, 2_000_000, 7)
    assert abs(e1 - 2.0) <= 3 * s1
    assert abs(e2 - 1.0) <= 3 * s2


def test_moments_monte_carlo_on_20_shapes():
    for k, p in enumerate(random_shapes(20, start=2000)):
        m1, m2 = distance_moments(parallel_profile(p))
        (e1, s1), (e2, s2) = monte_carlo_moments(p, 400_000, k)
        assert abs(e1 - m1) <= 3 * s1
        assert abs(e2 - m2) <= 3 * s2


# --- constructors, io -----------------------------------------------------------


def test_random_polygon_determinism():
    assert random_convex_polygon(1, 8, 1.0) == random_convex_polygon(1, 8, 1.0)
    assert len(random_convex_polygon(1, 8, 1.0)) >= 3


def test_random_triangle_and_thin_polygon():
    assert metrics(random_convex_polygon(1, 3, 1.0)).remainder_R == pytest.approx(1.0, abs=1e-9)
    assert metrics(random_convex_polygon(2, 16, 0.05)).remainder_A < 0.2


@pytest.mark.parametrize("args", [(1, 2, 1.0), (1, 8, 0.0), (1, 8, 1.5)])
def test_random_polygon_bad_parameters(args):
    with pytest.raises(BadParameter):
        random_convex_polygon(*args)


def test_regular_polygon_area():
    p = regular_polygon(64, area=1.0)
    assert metrics(p).area == pytest.approx(1.0)
    assert len(p) == 64


def test_json_round_trip(tmp_path):
    p = random_convex_polygon(5, 9, 0.4)
    assert polygon_from_json(polygon_to_json(p)) == p
    path = tmp_path / "p.json"
    write_polygon(p, path)
    assert read_polygon(path) == p
