import numpy as np
import pytest

from ctrf.ring import tr_init
from ctrf.signatures import arrange_pixels, signature_analysis


def two_class_pixels(bands=20, per_class=50, seed=0):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((bands, 4)))
    bases = [q[:, :2], q[:, 2:]]
    pixels = np.vstack([(b @ rng.standard_normal((2, per_class))).T for b in bases])
    labels = np.repeat([0, 1], per_class)
    return pixels, labels, bases


def test_arrange_pixels():
    pixels = np.arange(12, dtype=float).reshape(6, 2)
    labels = np.array([1, 0, 1, 0, 1, 0])
    cube, classes, pixel_class = arrange_pixels(pixels, labels)
    assert cube.shape[2] == 2 and cube.shape[0] * cube.shape[1] == 6
    np.testing.assert_array_equal(classes, [0, 1])
    np.testing.assert_array_equal(pixel_class, [0, 0, 0, 1, 1, 1])
    np.testing.assert_array_equal(cube.reshape(6, 2)[:3], pixels[[1, 3, 5]])
    assert arrange_pixels(np.zeros((100, 191)), np.repeat([0, 1], 50), (10, 10))[0].shape == (10, 10, 191)


def test_arrange_pixels_errors():
    with pytest.raises(ValueError):
        arrange_pixels(np.zeros((5, 3)), np.array([0, 0, 0, 1, 1]))
    with pytest.raises(ValueError):
        arrange_pixels(np.zeros((4, 3)), np.array([0, 0, 1]))


def test_spectral_core_shape_for_100_pixels():
    cube, _, _ = arrange_pixels(np.ones((100, 191)), np.repeat([0, 1], 50), (10, 10))
    ring = tr_init(cube.shape, (2, 10, 2), seed=0)
    assert ring[2].shape == (2, 191, 2)


def test_single_class_identical_pixels():
    spectrum = np.linspace(1.0, 2.0, 12)
    pixels = np.tile(spectrum, (16, 1))
    report = signature_analysis(pixels, np.zeros(16), (1, 4, 1), iters=50, restarts=1)
    assert len(report) == 1 and report[0].max_angle < 1e-4


@pytest.mark.slow
def test_two_orthogonal_classes():
    pixels, labels, bases = two_class_pixels()
    report = signature_analysis(pixels, labels, (2, 10, 2), iters=300, restarts=3)
    assert [r.label for r in report] == [0, 1]
    for r, basis in zip(report, bases):
        assert r.tr_basis.shape == (20, 2)
        assert r.max_angle < 5.0
