import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ghogdefect.gabor import GaborParams
from ghogdefect.ghog import (
    GradientField, assemble_feature_matrix, block_histogram, block_histograms,
    compute_gradients, filtered_maps_with_margin, gamma_rectify, image_feature_matrix,
    l2_normalize_rows, map_histograms, quantize_orientation,
)
from ghogdefect.image import BlockGrid, make_block_grid
from ghogdefect.synth import motif_image


def test_gamma_rectify_cases():
    np.testing.assert_array_equal(gamma_rectify(np.full((4, 4), 3.0)), 0)
    m = np.array([[0.0, 0.25, 1.0]])
    np.testing.assert_allclose(gamma_rectify(m), [[0, 0.5, 1]])
    np.testing.assert_allclose(gamma_rectify(m * 4 - 2, gamma=1), m)
    with pytest.raises(ValueError):
        gamma_rectify(m, gamma=0)


def test_gamma_rectify_sign_preserving_with_range():
    out = gamma_rectify(np.array([-1.0, 0.0, 3.0]), 0.5, value_range=(0.0, 1.0))
    np.testing.assert_allclose(out, [-1.0, 0.0, np.sqrt(3.0)])


def test_gradients_constant_and_ramps():
    g = compute_gradients(np.full((6, 6), 0.7))
    assert np.all(g.mag == 0)
    yy, xx = np.mgrid[:8, :8].astype(float)
    gx = compute_gradients(xx)
    np.testing.assert_allclose(gx.mag[1:-1, 1:-1], 2)
    np.testing.assert_allclose(gx.angle[1:-1, 1:-1], 0)
    gy = compute_gradients(yy)
    np.testing.assert_allclose(gy.mag[1:-1, 1:-1], 2)
    np.testing.assert_allclose(gy.angle[1:-1, 1:-1], np.pi / 2)
    # one-sided differences at the border
    np.testing.assert_allclose(gx.mag[:, 0], 1)


def test_gradients_too_small():
    with pytest.raises(ValueError):
        compute_gradients(np.zeros((2, 5)))


@given(st.floats(0, 2 * np.pi, exclude_max=True))
def test_gradient_angle_range(a):
    h = np.cos(a) * np.arange(5)[None, :] + np.sin(a) * np.arange(5)[:, None]
    g = compute_gradients(h)
    assert np.all((g.angle >= 0) & (g.angle < 2 * np.pi)) and np.all(g.mag >= 0)


@pytest.mark.parametrize("angle,n,want", [
    (0.0, 8, 0), (7 * np.pi / 4, 8, 7), (2 * np.pi - 0.01, 8, 0), (np.pi / 8 - 1e-9, 8, 0),
    (np.pi / 8 + 1e-9, 8, 1), (3.0, 1, 0),
])
def test_quantize(angle, n, want):
    assert quantize_orientation(angle, n) == want


@given(st.floats(0, 2 * np.pi, exclude_max=True), st.integers(1, 16))
def test_quantize_range(angle, n):
    assert 0 <= quantize_orientation(angle, n) < n


def test_single_bin_block():
    f = GradientField(np.ones((16, 16)), np.zeros((16, 16)))
    h = block_histogram(f, (slice(0, 16), slice(0, 16)), 8)
    np.testing.assert_array_equal(h, [256] + [0] * 7)
    z = block_histogram(GradientField(np.zeros((16, 16)), np.zeros((16, 16))),
                        (slice(0, 16), slice(0, 16)), 8)
    assert np.all(z == 0)


def _loop_histogram(mag, angle, n):
    h = np.zeros(n)
    for m, a in zip(mag.ravel(), angle.ravel()):
        j = int(np.mod(np.floor(a / (2 * np.pi / n) + 0.5), n))
        h[j] += m
    return h


def test_diagonal_ramp_vs_loop():
    yy, xx = np.mgrid[:16, :16].astype(float)
    f = compute_gradients(xx + yy)
    h = block_histogram(f, (slice(0, 16), slice(0, 16)), 8)
    np.testing.assert_allclose(h, _loop_histogram(f.mag, f.angle, 8), rtol=1e-12)


def test_vectorized_histograms_vs_loop(rng):
    h = rng.random((48, 32))
    f = compute_gradients(h)
    grid = BlockGrid(16, 3, 2)
    hist = block_histograms(f, grid, 8)
    for i in range(grid.K):
        sl = grid.block_slice(i)
        np.testing.assert_allclose(hist[i], _loop_histogram(f.mag[sl], f.angle[sl], 8),
                                   rtol=1e-12)


def test_mass_conservation(rng):
    img = rng.random((64, 64))
    grid = make_block_grid(img, 16)
    maps = filtered_maps_with_margin(img, grid, GaborParams(wavelength=4))
    raw = map_histograms(maps, grid, 8, margin=1)
    for o, m in enumerate(maps):
        core = m[1:-1, 1:-1]
        g = compute_gradients(gamma_rectify(m, 0.5, (core.min(), core.max())))
        mag = g.mag[1:-1, 1:-1]
        for i in range(grid.K):
            want = mag[grid.block_slice(i)].sum()
            assert raw[o, i].sum() == pytest.approx(want, rel=1e-9)


def test_l2_normalize_rows():
    out = l2_normalize_rows(np.array([[3.0, 4.0], [0.0, 0.0]]))
    np.testing.assert_allclose(out, [[0.6, 0.8], [0, 0]])


def test_feature_matrix_dimensions_and_norms(rng):
    img = rng.random((128, 96))
    grid = make_block_grid(img, 16)
    F = image_feature_matrix(img, grid, GaborParams())
    assert F.shape == (64, grid.K)
    norms = np.linalg.norm(F.reshape(8, 8, grid.K), axis=1)
    assert np.all(np.isclose(norms, 1) | (norms == 0))


def test_column_layout(rng):
    maps = rng.random((3, 34, 34))
    grid = BlockGrid(16, 2, 2)
    raw = map_histograms(maps, grid, 5, margin=1)
    F = assemble_feature_matrix(maps, grid, 5, margin=1)
    assert F.shape == (15, 4)
    k, o = 3, 2
    np.testing.assert_allclose(F[o * 5:(o + 1) * 5, k], raw[o, k] / np.linalg.norm(raw[o, k]))


def test_map_grid_mismatch():
    with pytest.raises(ValueError):
        assemble_feature_matrix(np.zeros((8, 30, 30)), BlockGrid(16, 2, 2))


@pytest.mark.parametrize("motif", ["stripes", "checker", "dots"])
def test_identical_blocks_rank_one(motif):
    img = motif_image(motif, 16, 128)
    F = image_feature_matrix(img, make_block_grid(img, 16), GaborParams())
    np.testing.assert_array_equal(F, np.repeat(F[:, :1], F.shape[1], axis=1))
    assert np.linalg.matrix_rank(F) == 1


def test_intensity_shift_invariance(rng):
    img = 0.2 + 0.5 * rng.random((64, 64))
    grid = make_block_grid(img, 16)
    p = GaborParams()
    np.testing.assert_allclose(image_feature_matrix(img + 0.25, grid, p),
                               image_feature_matrix(img, grid, p), atol=1e-9)


def test_permutation_equivariance(rng):
    img = rng.random((64, 64))
    grid = make_block_grid(img, 16)
    maps = filtered_maps_with_margin(img, grid, GaborParams())
    F = assemble_feature_matrix(maps, grid, 8, margin=1)
    perm = rng.permutation(grid.K)
    cols = []
    for i in perm:
        parts = []
        for m in maps:
            core = m[1:-1, 1:-1]
            g = compute_gradients(gamma_rectify(m, 0.5, (core.min(), core.max())))
            f = GradientField(g.mag[1:-1, 1:-1], g.angle[1:-1, 1:-1])
            h = block_histogram(f, grid.block_slice(i), 8)
            parts.append(h / np.linalg.norm(h))
        cols.append(np.concatenate(parts))
    np.testing.assert_allclose(np.stack(cols, axis=1), F[:, perm], atol=1e-12)


def test_descriptor_locality(rng):
    # flat random texture plus one high-contrast corner block that pins every
    # map's min and max, so a mild edit elsewhere cannot change the rescale
    img = 0.5 + 0.01 * rng.random((128, 128))
    img[:32, :32] = rng.random((32, 32)) > 0.5
    edited = img.copy()
    edited[80:96, 80:96] += 0.01 * rng.standard_normal((16, 16))
    grid = make_block_grid(img, 16)
    p = GaborParams()
    m0 = filtered_maps_with_margin(img, grid, p)
    m1 = filtered_maps_with_margin(edited, grid, p)
    inner = (slice(None), slice(1, -1), slice(1, -1))
    assert np.array_equal(m0[inner].min((1, 2)), m1[inner].min((1, 2)))
    assert np.array_equal(m0[inner].max((1, 2)), m1[inner].max((1, 2)))
    F0 = assemble_feature_matrix(m0, grid, 8, margin=1)
    F1 = assemble_feature_matrix(m1, grid, 8, margin=1)
    # kernel radius 14 plus the gradient stencil reaches one block further
    reach = {(r, c) for r in range(4, 7) for c in range(4, 7)}
    for k in range(grid.K):
        if divmod(k, grid.cols) not in reach:
            np.testing.assert_allclose(F1[:, k], F0[:, k], atol=1e-12)
    assert not np.allclose(F1[:, 5 * 8 + 5], F0[:, 5 * 8 + 5])
