import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import NaivePrior
from shipprior.core import DimensionMismatch, SseConfig
from shipprior.integral import build_integral
from shipprior.sse import (
    background_weight,
    block_stats,
    dissimilarity,
    encode_prior,
    quantize_prior,
    sse_extract,
    sse_multi_scale,
    sse_single_scale,
)

EPS = 1e-6


def hot_pixel_image(size=64, at=(30, 27), value=255.0):
    img = np.zeros((size, size))
    img[at[1], at[0]] = value
    return img


# --- block_stats ---------------------------------------------------------------

def test_block_stats_constant():
    stats = block_stats(build_integral(np.full((20, 20), 3.0)), (10, 10), 2)
    assert stats.diffs == (0.0,) * 8
    assert stats.variation == 0.0


def test_block_stats_piecewise_constant():
    img = np.zeros((30, 30))
    # n = 3 patch centred on (15, 15) spans 14..16
    img[14:17, 14:17] = 10.0
    stats = block_stats(build_integral(img), (15, 15), 3)
    assert stats.diffs == (10.0,) * 8
    assert stats.variation == 10.0


def test_block_stats_matches_oracle(rng):
    img = rng.uniform(0, 255, (32, 32))
    t = build_integral(img)
    naive = NaivePrior(img)
    for _ in range(20):
        cx, cy = rng.integers(4, 28, 2)
        stats = block_stats(t, (int(cx), int(cy)), 2)
        d, v = naive.block(int(cx), int(cy), 2)
        np.testing.assert_allclose(stats.diffs, d, rtol=1e-9, atol=1e-9)
        assert stats.variation == pytest.approx(v, rel=1e-9)


def test_block_stats_variation_is_mean_abs(rng):
    t = build_integral(rng.uniform(0, 1, (16, 16)))
    stats = block_stats(t, (3, 12), 1)
    assert stats.variation == sum(abs(d) for d in stats.diffs) / 8


# --- dissimilarity / background_weight ----------------------------------------

def test_dissimilarity_uniform():
    assert dissimilarity([1] * 8) == 1


def test_dissimilarity_second_largest():
    # products d_k * d_{k+4} = (4, 2, 3, 1)
    assert dissimilarity([4, 2, 3, 1, 1, 1, 1, 1]) == 3


def test_dissimilarity_one_sided_contrast_suppressed():
    # products (-25, 0, 0, 0): second largest is 0
    assert dissimilarity([5, 0, 0, 0, -5, 0, 0, 0]) == 0


def test_dissimilarity_needs_eight():
    with pytest.raises(ValueError):
        dissimilarity([1, 2, 3])


def test_background_weight():
    assert background_weight(8, [2] * 8, EPS) == 0.5
    assert background_weight(0, [1, 5, 0, 0, 0, 0, 0, 0], EPS) == 0
    assert background_weight(255, [0] * 8, EPS) == pytest.approx(2.55e8)


# --- single / multi scale ------------------------------------------------------

def test_single_scale_constant_is_zero(backend):
    for n in (1, 2, 3):
        assert not sse_single_scale(np.full((25, 31), 42.0), n, backend=backend).any()


@pytest.mark.parametrize("n", [1, 2, 3])
def test_hot_pixel(backend, n):
    img = hot_pixel_image()
    out = sse_single_scale(img, n, backend=backend)
    x, y = 30, 27
    if n == 1:
        # all eight opposed products are 255**2, the centre block varies by 255,
        # and the surrounding blocks see nothing, so the weight is 255 / eps
        assert out[y, x] == pytest.approx(255.0 ** 2 * 255.0 / EPS, rel=1e-12)
    yy, xx = np.mgrid[:64, :64]
    far = np.maximum(abs(xx - x), abs(yy - y)) >= 3 * n
    assert not out[far].any()
    # for n > 1 the target sits inside the centre patch of n*n pixels, which tie
    assert out[y, x] == out.max()


def test_hot_pixel_unique_maximum_multi_scale(backend):
    out = sse_multi_scale(hot_pixel_image(), [1, 2, 3], backend=backend)
    assert out.argmax() == 27 * 64 + 30
    assert np.sum(out == out.max()) == 1


def test_single_scale_matches_oracle_48(backend):
    img = np.random.default_rng(5).uniform(0, 255, (48, 48))
    ref = NaivePrior(img).single_scale(1)
    got = sse_single_scale(img, 1, backend=backend)
    np.testing.assert_allclose(got, ref, rtol=1e-6, atol=1e-9)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_single_scale_matches_oracle_small_and_degenerate(backend, n):
    rng = np.random.default_rng(n)
    for shape in [(1, 1), (1, 7), (6, 1), (3, 4), (11, 9), (17, 23)]:
        img = rng.uniform(0, 255, shape)
        ref = NaivePrior(img).single_scale(n)
        np.testing.assert_allclose(sse_single_scale(img, n, backend=backend), ref, rtol=1e-6, atol=1e-9)


def test_multi_scale_single_is_identity(rng, backend):
    img = rng.uniform(0, 255, (20, 20))
    np.testing.assert_array_equal(
        sse_multi_scale(img, [2], backend=backend), sse_single_scale(img, 2, backend=backend))


def test_multi_scale_dominates(rng, backend):
    img = rng.uniform(0, 255, (24, 24))
    multi = sse_multi_scale(img, [1, 2], backend=backend)
    for n in (1, 2):
        assert np.all(multi >= sse_single_scale(img, n, backend=backend))


def test_multi_scale_picks_matching_scale_for_3x3_target(backend):
    img = np.full((45, 45), 20.0)
    img[21:24, 21:24] = 200.0
    naive = NaivePrior(img)
    per_scale = [naive.pixel(22, 22, n) for n in (1, 2, 3)]
    assert int(np.argmax(per_scale)) == 2
    assert per_scale[0] == 0.0
    multi = sse_multi_scale(img, [1, 2, 3], backend=backend)
    assert multi[22, 22] == pytest.approx(max(per_scale), rel=1e-9)


def test_multi_scale_requires_scales():
    with pytest.raises(ValueError):
        sse_multi_scale(np.zeros((4, 4)), [])


# --- encoding ------------------------------------------------------------------

@pytest.mark.parametrize("value, low, high", [(300, 44, 1), (0, 0, 0), (1e9, 255, 255)])
def test_encode_examples(value, low, high):
    enc = encode_prior(np.full((2, 2), float(value)), np.zeros((2, 2)), SseConfig())
    assert (enc.low == low).all() and (enc.high == high).all()


def test_encode_rounds_half_up():
    q = quantize_prior(np.array([0.49, 0.5, 1.5, 2.5, 65534.6]))
    assert q.tolist() == [0, 1, 2, 3, 65535]


def test_encode_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        encode_prior(np.zeros((3, 3)), np.zeros((3, 4)))


@settings(max_examples=100)
@given(st.lists(st.floats(0, 1e12), min_size=1, max_size=64))
def test_encoding_reconstruction(values):
    prior = np.asarray(values).reshape(1, -1)
    enc = encode_prior(prior, np.zeros_like(prior))
    np.testing.assert_array_equal(enc.high * 256 + enc.low, quantize_prior(prior))
    assert enc.low.min() >= 0 and enc.low.max() < 256
    assert enc.high.max() <= 65535 // 256


def test_encoding_custom_alpha():
    enc = encode_prior(np.array([[1000.0]]), np.zeros((1, 1)), SseConfig(alpha1=10, alpha2=100))
    assert enc.low[0, 0] == 0 and enc.high[0, 0] == 10


# --- sse_extract ---------------------------------------------------------------

def test_extract_constant():
    img = np.full((16, 16), 9.0)
    enc = sse_extract(img)
    np.testing.assert_array_equal(enc.image, img)
    assert not enc.low.any() and not enc.high.any()


def test_extract_hot_pixel_saturates():
    enc = sse_extract(hot_pixel_image())
    assert enc.high[27, 30] == 255 and enc.low[27, 30] == 255


def test_extract_is_composition(rng, backend):
    img = rng.uniform(0, 255, (64, 64))
    cfg = SseConfig()
    enc = sse_extract(img, cfg, backend=backend)
    ref = encode_prior(sse_multi_scale(img, cfg.scales, cfg.epsilon, backend=backend), img, cfg)
    np.testing.assert_array_equal(enc.stack(), ref.stack())


# --- invariants ----------------------------------------------------------------

def test_brightness_shift_invariance(rng):
    for _ in range(10):
        img = rng.uniform(0, 255, (20, 24))
        c = rng.uniform(-500, 500)
        a = sse_multi_scale(img, [1, 2, 3])
        b = sse_multi_scale(img + c, [1, 2, 3])
        assert np.max(np.abs(a - b)) <= 1e-6


def test_scale_covariance(rng):
    for _ in range(10):
        img = rng.uniform(0, 255, (20, 24))
        k = rng.uniform(0.1, 10)
        a = sse_multi_scale(img, [1, 2, 3])
        b = sse_multi_scale(k * img, [1, 2, 3])
        np.testing.assert_allclose(b, k * k * a, rtol=1e-6, atol=1e-9)


@pytest.mark.parametrize("axis", [0, 1])
def test_step_edge_zero_everywhere(axis, backend):
    img = np.zeros((40, 40))
    if axis == 0:
        img[:, 20:] = 255.0
    else:
        img[20:, :] = 255.0
    for n in (1, 2, 3):
        assert not sse_single_scale(img, n, backend=backend).any()


def test_backends_bit_identical():
    from shipprior import available_backends

    if "compiled" not in available_backends():
        pytest.skip("compiled extension not built")
    rng = np.random.default_rng(11)
    for shape in [(1, 1), (2, 9), (13, 5), (37, 41), (64, 64)]:
        img = rng.uniform(0, 65535, shape)
        img[rng.uniform(size=shape) < 0.3] = 0.0
        for n in (1, 2, 3, 4):
            a = sse_single_scale(img, n, backend="numpy")
            b = sse_single_scale(img, n, backend="compiled")
            np.testing.assert_array_equal(a, b)
