import cmath
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import dblquad

from rectixform.fourier import (
    BACKENDS,
    BackendUnavailable,
    FcfsPlan,
    _step_2d,
    alpha,
    build_sparse_signals,
    c_fft2d,
    cfs_by_rectangles,
    cfs_direct,
    cfs_query,
    choose_plan,
    fcfs_complexity,
    fcfs_transform,
    fft_complexity,
    fft_discrete,
    goertzel_complexity,
    tune_plan,
    tuned_plans,
)
from rectixform.geometry import Polygon, Rect, Tile, rasterize, validate_polygon
from rectixform.pruned_dft import InvalidPlan, divisors

from conftest import UNIT_SQUARE, generated_tiles, polygons, tiles


def square_tile(n=4):
    return Tile(n, n, [validate_polygon(UNIT_SQUARE)])


def all_kl(t):
    return np.meshgrid(np.arange(t.n_x), np.arange(t.n_y), indexing="ij")


# ---------------------------------------------------------------- alpha and direct evaluation


def test_alpha_cases():
    assert alpha(0, 0, 8, 8) == 1 / 8
    assert cmath.isclose(alpha(1, 0, 8, 8), 1j / (2 * math.pi))
    assert cmath.isclose(alpha(0, 2, 4, 16), 1j / (4 * math.pi) * 2)
    assert cmath.isclose(alpha(2, 3, 4, 4), -1 / (6 * math.pi**2))


def test_alpha_vectorizes():
    k, l = np.arange(-2, 3), np.array([0, 1, 0, -1, 2])
    assert np.allclose(alpha(k, l, 8, 4), [alpha(int(a), int(b), 8, 4) for a, b in zip(k, l)])


def test_full_tile_direct():
    t = Tile(8, 8, [Polygon.from_rect(Rect(0, 0, 8, 8))])
    k, l = all_kl(t)
    F = cfs_direct(t, k, l)
    assert F[0, 0] == 8
    F[0, 0] = 0
    assert np.abs(F).max() < 1e-12


@given(tiles())
def test_direct_dc_is_scaled_area(t):
    assert cfs_direct(t, 0, 0) == t.area / math.sqrt(t.n_x * t.n_y)


def test_unit_square_quadrature():
    f = lambda y, x, part: part(np.exp(-2j * np.pi * (x + y) / 8) / 8)
    re = dblquad(f, 0, 1, 0, 1, args=(np.real,), epsabs=1e-14, epsrel=1e-13)[0]
    im = dblquad(f, 0, 1, 0, 1, args=(np.imag,), epsabs=1e-14, epsrel=1e-13)[0]
    t = Tile(8, 8, [validate_polygon(UNIT_SQUARE)])
    assert cmath.isclose(cfs_direct(t, 1, 1), complex(re, im), rel_tol=1e-9, abs_tol=1e-12)
    assert cmath.isclose(cfs_by_rectangles(t, 1, 1), complex(re, im), rel_tol=1e-9, abs_tol=1e-12)


@given(tiles(sizes=(8, 16, 32)), st.integers(0, 2**32 - 1))
def test_direct_matches_rectangle_integrals(t, seed):
    rng = np.random.default_rng(seed)
    k = rng.integers(-3 * t.n_x, 3 * t.n_x, 12)
    l = rng.integers(-3 * t.n_y, 3 * t.n_y, 12)
    np.testing.assert_allclose(cfs_direct(t, k, l), cfs_by_rectangles(t, k, l), rtol=1e-9, atol=1e-12)


# ---------------------------------------------------------------- sparse signals


def test_sparse_signals_unit_square():
    s = build_sparse_signals(square_tile())
    # vertical edges (1,1)->(1,0) and (0,0)->(0,1) contribute y_i - y_(i+1)
    assert s.f_x.to_dict() == {0: -1.0, 1: 1.0}
    assert s.f_y.to_dict() == {0: -1.0, 1: 1.0}
    assert s.f_xy.to_dict() == {(1, 1): 1.0, (0, 1): -1.0, (0, 0): 1.0, (1, 0): -1.0}
    assert s.area == 1


def test_sparse_signals_empty():
    s = build_sparse_signals(Tile(8, 8))
    assert s.f_x.nnz == s.f_y.nnz == s.f_xy.nnz == 0
    assert s.area == 0


@given(tiles())
def test_sparse_signals_conserve(t):
    s = build_sparse_signals(t)
    assert s.f_x.values.sum() == 0
    assert s.f_y.values.sum() == 0
    assert s.f_xy.values.sum() == 0
    assert s.f_x.nnz <= t.K // 2 and s.f_y.nnz <= t.K // 2 and s.f_xy.nnz <= t.K
    assert s.area == t.area


def test_boundary_vertices_wrap_to_zero():
    t = Tile(8, 8, [Polygon.from_rect(Rect(5, 6, 8, 8))])
    s = build_sparse_signals(t)
    assert set(s.f_x.to_dict()) == {0, 5}
    for b in BACKENDS:
        k, l = all_kl(t)
        np.testing.assert_allclose(fcfs_transform(t, b).F, cfs_direct(t, k, l), rtol=1e-9, atol=1e-12)


# ---------------------------------------------------------------- fcfs_transform


@pytest.mark.parametrize("backend", BACKENDS)
@given(t=tiles(sizes=(8, 16, 32)))
def test_backends_match_direct(backend, t):
    k, l = all_kl(t)
    np.testing.assert_allclose(fcfs_transform(t, backend).F, cfs_direct(t, k, l), rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
def test_non_square_composite_tiles(backend):
    ps = [Polygon.from_rect(Rect(1, 2, 5, 9)), validate_polygon([(6, 17), (10, 17), (10, 12), (11, 12), (11, 3),
                                                                   (6, 3)])]
    t = Tile(12, 18, ps)
    k, l = all_kl(t)
    np.testing.assert_allclose(fcfs_transform(t, backend).F, cfs_direct(t, k, l), rtol=1e-9, atol=1e-12)


def test_full_tile_spectrum():
    for b in BACKENDS:
        F = fcfs_transform(Tile(16, 16, [Polygon.from_rect(Rect(0, 0, 16, 16))]), b).F.copy()
        assert F[0, 0] == 16
        F[0, 0] = 0
        assert np.abs(F).max() < 1e-12


@given(polygons(max_side=6), polygons(max_side=6))
def test_linearity(p, q):
    q = q.translate(0, 32)
    F = lambda ps: fcfs_transform(Tile(32, 64, ps), "pruned").F
    np.testing.assert_allclose(F([p, q]), F([p]) + F([q]), atol=1e-12)


@given(tiles(), st.integers(0, 4))
def test_translation(t, dx):
    t2 = Tile(t.n_x + 4, t.n_y, t.polygons)
    moved = Tile(t.n_x + 4, t.n_y, [p.translate(dx, 0) for p in t.polygons])
    k, l = all_kl(t2)
    phase = np.exp(-2j * np.pi * k * dx / t2.n_x)
    np.testing.assert_allclose(fcfs_transform(moved, "dense").F, phase * fcfs_transform(t2, "dense").F,
                               rtol=1e-9, atol=1e-12)


@given(tiles())
def test_dc_exact(t):
    s = fcfs_transform(t)
    assert s.area == t.area
    assert s.F[0, 0] == t.area / math.sqrt(t.n_x * t.n_y)


def test_prime_side_pruned_unavailable():
    t = Tile(7, 7, [Polygon.from_rect(Rect(1, 1, 3, 4))])
    with pytest.raises(BackendUnavailable):
        fcfs_transform(t, "pruned")
    k, l = all_kl(t)
    for b in ("dense", "goertzel"):
        np.testing.assert_allclose(fcfs_transform(t, b).F, cfs_direct(t, k, l), atol=1e-12)


def test_explicit_plans():
    t = generated_tiles("staircase_mix", 16, 2)[0]
    k, l = all_kl(t)
    ref = cfs_direct(t, k, l)
    for P in divisors(16):
        plan = FcfsPlan(16, 16, P, 16 // P, P, 16 // P)
        np.testing.assert_allclose(fcfs_transform(t, "pruned", plan).F, ref, rtol=1e-9, atol=1e-12)
    with pytest.raises(InvalidPlan):
        fcfs_transform(t, "pruned", FcfsPlan(32, 32, 2, 2, 2, 2))
    with pytest.raises(ValueError):
        fcfs_transform(t, "pruned", "fastest")
    with pytest.raises(ValueError):
        fcfs_transform(t, "fftw")


# ---------------------------------------------------------------- signed queries


def test_query_examples():
    t = generated_tiles("random_rects", 16, 5)[0]
    s = fcfs_transform(t)
    assert cmath.isclose(s.query(-1, 0), s.F[1, 0].conjugate(), abs_tol=1e-12)
    assert cmath.isclose(s.query(-1, 0), alpha(-1, 0, 16, 16) * s.dft_x[15], abs_tol=1e-12)
    assert abs(s.query(16, 0)) < 1e-12
    assert abs(cfs_by_rectangles(t, 16, 0)) < 1e-12
    assert cmath.isclose(s.query(3, -2), cfs_direct(t, 3, -2), rel_tol=1e-9, abs_tol=1e-12)
    assert cmath.isclose(cfs_query(t, 3, -2), cfs_direct(t, 3, -2), rel_tol=1e-9, abs_tol=1e-12)


@given(tiles(), st.integers(0, 2**32 - 1))
def test_query_conjugate_symmetry(t, seed):
    rng = np.random.default_rng(seed)
    k = rng.integers(-3 * t.n_x, 3 * t.n_x, 50)
    l = rng.integers(-3 * t.n_y, 3 * t.n_y, 50)
    s = fcfs_transform(t)
    q = s.query(k, l)
    np.testing.assert_allclose(q, np.conj(s.query(-k, -l)), rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(q, cfs_direct(t, k, l), rtol=1e-9, atol=1e-12)


def test_dft_xy_layer_matches_sparse_dft():
    t = generated_tiles("staircase_mix", 16, 1)[0]
    s = fcfs_transform(t)
    np.testing.assert_allclose(s.dft_xy, np.fft.fft2(s.signals.f_xy.dense()), atol=1e-9)


# ---------------------------------------------------------------- discrete baseline


def test_fft_discrete_examples():
    F = fft_discrete(np.ones((8, 8)))
    assert F[0, 0] == 8
    F[0, 0] = 0
    assert np.abs(F).max() < 1e-12
    img = rasterize(Tile(8, 8, [validate_polygon(UNIT_SQUARE)]))
    np.testing.assert_allclose(fft_discrete(img), np.full((8, 8), 1 / 8), atol=1e-15)


@given(st.integers(0, 2**32 - 1), st.sampled_from([(8, 8), (16, 6), (5, 12)]))
def test_fft_discrete_matches_numpy(seed, shape):
    img = np.random.default_rng(seed).integers(0, 2, shape)
    np.testing.assert_allclose(fft_discrete(img), np.fft.fft2(img) / math.sqrt(img.size), atol=1e-12)


def test_aliasing_is_visible():
    t = generated_tiles("staircase_mix", 32, 0)[0]
    err = np.abs(fft_discrete(rasterize(t)) - fcfs_transform(t).F).max()
    assert err > 0


# ---------------------------------------------------------------- complexity models


def test_step1_and_goertzel():
    r = fcfs_complexity(4, 1, 4, 4)
    assert r.step1 == 5
    assert goertzel_complexity(4, 1, 4, 4) == 93
    assert r.goertzel_total == 93
    assert r.fft_baseline == 64 == fft_complexity(4, 4)
    assert c_fft2d(4, 4) == 128


@given(st.integers(2, 40).map(lambda h: 2 * h), st.integers(1, 10))
def test_step1_formula(K, M):
    assert fcfs_complexity(K, M, 16, 16).step1 == 3 * K / 2 - M


def test_report_totals():
    r = fcfs_complexity(12, 2, 64, 32)
    assert r.total == r.step1 + r.step2 + r.step3 + r.step4
    assert (r.Q_x2 * r.plan.P_x2, r.Q_y2 * r.plan.P_y2) == (64, 32)
    with pytest.raises(InvalidPlan):
        FcfsPlan(16, 16, 3, 1, 1, 1)
    with pytest.raises(InvalidPlan):
        fcfs_complexity(4, 1, 16, 16, FcfsPlan(8, 8, 1, 1, 1, 1))


def test_choose_plan_tiny():
    p = choose_plan(4, 2, 2)
    costs = {(a, b): _step_2d(4, 2, 2, a, b) for a in (1, 2) for b in (1, 2)}
    assert costs[p.P_x2, p.P_y2] == min(costs.values())


@pytest.mark.parametrize("N", [8, 16, 64])
def test_choose_plan_dense_input(N):
    # the 1D steps and the x axis of the 2D step degenerate to full FFTs; along y
    # the (Q/2 + 1) half-spectrum term makes a few offsets cheaper than Q = 1
    K = 2 * N * N
    p = choose_plan(K, N, N)
    assert (p.P_x1, p.P_y1, p.P_x2) == (N, N, N)
    assert N // p.P_y2 <= 4
    assert _step_2d(K, N, N, p.P_x2, p.P_y2) <= _step_2d(K, N, N, N, N)


@given(st.integers(2, 64).map(lambda h: 2 * h), st.sampled_from([8, 12, 16, 64, 256]))
def test_choose_plan_never_worse_than_full_fft(K, N):
    p = choose_plan(K, N, N)
    assert fcfs_complexity(K, 1, N, N, p).total <= fcfs_complexity(K, 1, N, N, FcfsPlan(N, N, N, N, N, N)).total


def test_choose_plan_tie_break_smallest():
    p = choose_plan(4, 8, 8)
    for P in divisors(8):
        if P < p.P_x2:
            assert _step_2d(4, 8, 8, P, p.P_y2) > _step_2d(4, 8, 8, p.P_x2, p.P_y2)


def test_tune_plan_small_tiles_use_model():
    assert tune_plan(12, 32, 32) == choose_plan(16, 32, 32)


def test_tune_plan_is_memoized_and_thread_safe():
    with ThreadPoolExecutor(4) as ex:
        plans = list(ex.map(lambda _: tune_plan(20, 128, 128), range(8)))
    assert all(p is plans[0] for p in plans)
    assert tuned_plans()[32, 128, 128] is plans[0]
    assert tune_plan(30, 128, 128) is plans[0]
    assert (plans[0].N_x, plans[0].N_y) == (128, 128)
