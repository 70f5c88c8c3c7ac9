import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pnlm.metrics import NoiseSpec, add_gaussian, mse, psnr, quality, ssim

imgs = arrays(np.float64, (12, 13), elements=st.floats(0, 255))


def test_zero_sigma_identity():
    x = np.random.default_rng(0).uniform(0, 255, (5, 5))
    out = add_gaussian(x, NoiseSpec(0.0, 7))
    assert np.array_equal(out, x) and out is not x


def test_seed_reproducible_and_distinct():
    x = np.zeros((8, 8))
    a = add_gaussian(x, NoiseSpec(10, 5))
    assert np.array_equal(a, add_gaussian(x, NoiseSpec(10, 5)))
    assert not np.array_equal(a, add_gaussian(x, NoiseSpec(10, 6)))


def test_noise_pinned_generator():
    # PCG64 + ziggurat normals, row-major
    expect = 20 * np.random.Generator(np.random.PCG64(99)).standard_normal((3, 4))
    np.testing.assert_array_equal(add_gaussian(np.zeros((3, 4)), NoiseSpec(20, 99)), expect)


def test_noise_moments():
    n = add_gaussian(np.zeros((1000, 1000)), NoiseSpec(20, 1))
    assert abs(n.mean()) < 0.1
    assert abs(n.std() - 20) < 0.1


def test_noise_not_clipped():
    n = add_gaussian(np.zeros((50, 50)), NoiseSpec(30, 2))
    assert n.min() < 0


def test_negative_sigma_rejected():
    with pytest.raises(ValueError):
        NoiseSpec(-1.0)


def test_mse_examples():
    assert mse(np.ones((3, 3)), np.ones((3, 3))) == 0
    assert mse(np.zeros((4, 4)), np.full((4, 4), 255.0)) == 65025
    r = np.random.default_rng(3)
    a, b = r.uniform(0, 255, (2, 6, 7))
    ref = sum((a[i, j] - b[i, j]) ** 2 for i in range(6) for j in range(7)) / 42
    assert mse(a, b) == pytest.approx(ref, rel=1e-14)
    with pytest.raises(ValueError):
        mse(np.zeros((2, 2)), np.zeros((2, 3)))


@settings(max_examples=30, deadline=None)
@given(imgs, imgs, st.floats(-1e3, 1e3))
def test_mse_translation(a, b, c):
    assert mse(a + c, b + c) == pytest.approx(mse(a, b), rel=1e-6, abs=1e-6)


def test_psnr_examples():
    assert psnr(65025) == pytest.approx(0.0, abs=1e-12)
    assert psnr(65.025) == pytest.approx(30.0, abs=1e-12)
    assert psnr(0.0) == math.inf
    with pytest.raises(ValueError):
        psnr(-1)


def test_psnr_of_noise_concentrates():
    x = np.random.default_rng(0).uniform(0, 255, (256, 256))
    y = add_gaussian(x, NoiseSpec(20, 11))
    assert psnr(mse(x, y)) == pytest.approx(10 * math.log10(255 ** 2 / 400), abs=0.2)


def test_ssim_identical_is_one():
    x = np.random.default_rng(1).uniform(0, 255, (20, 20))
    assert ssim(x, x) == 1.0


@pytest.mark.parametrize("c, d", [(100.0, 10.0), (0.0, 50.0), (200.0, -30.0)])
def test_ssim_constant_images(c, d):
    c1 = (0.01 * 255) ** 2
    expect = (2 * c * (c + d) + c1) / (c * c + (c + d) ** 2 + c1)
    assert ssim(np.full((16, 16), c), np.full((16, 16), c + d)) == pytest.approx(expect, rel=1e-9)


def test_ssim_matches_skimage():
    from skimage.metrics import structural_similarity

    r = np.random.default_rng(2)
    a = r.uniform(0, 255, (40, 37))
    b = a + r.normal(0, 25, a.shape)
    ref = structural_similarity(a, b, data_range=255, gaussian_weights=True, sigma=1.5,
                                use_sample_covariance=False)
    assert ssim(a, b) == pytest.approx(ref, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(imgs, imgs)
def test_ssim_symmetric_and_bounded(a, b):
    v = ssim(a, b)
    assert v == pytest.approx(ssim(b, a), rel=1e-12, abs=1e-12)
    assert -1 - 1e-12 <= v <= 1 + 1e-12


def test_ssim_small_image_rejected():
    with pytest.raises(ValueError):
        ssim(np.zeros((10, 20)), np.zeros((10, 20)))


def test_quality_report():
    x = np.zeros((12, 12))
    q = quality(x + 1, x)
    assert q.mse == 1 and q.psnr == pytest.approx(20 * math.log10(255))
    assert q.ssim_x100 == pytest.approx(100 * q.ssim)
