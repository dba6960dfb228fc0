import numpy as np
import pytest
from scipy.ndimage import gaussian_filter

from core.exceptions import ShapeError, ValidationError
from detection.superpixels import (
    binarize, positions_of, reconstruct_from_skeleton, select_superpixels, skeleton_subsets, skeletonize,
)


def _shift_stack(x):
    padded = np.pad(x, 1, constant_values=False)
    h, w = x.shape
    return np.stack([padded[dy:dy + h, dx:dx + w] for dy in range(3) for dx in range(3)])


def naive_erode(x):
    return _shift_stack(x).all(axis=0)


def naive_dilate(x):
    return _shift_stack(x).any(axis=0)


def naive_skeleton(x):
    out = np.zeros_like(x)
    eroded = x.copy()
    while eroded.any():
        out |= eroded & ~naive_dilate(naive_erode(eroded))
        eroded = naive_erode(eroded)
    return out


def random_blob(seed, size=64):
    rng = np.random.default_rng(seed)
    field = gaussian_filter(rng.uniform(size=(size, size)), rng.uniform(1.5, 4.0))
    return field > np.quantile(field, rng.uniform(0.4, 0.8))


class TestBinarize:
    def test_strict_threshold(self):
        out = binarize(np.array([[0.2, 0.21], [0.0, 1.0]]), 0.2)
        np.testing.assert_array_equal(out, [[False, True], [False, True]])

    def test_all_zero(self):
        assert not binarize(np.zeros((4, 4)), 0.2).any()

    @pytest.mark.parametrize("threshold", [-0.1, 1.0])
    def test_threshold_range(self, threshold):
        with pytest.raises(ValidationError):
            binarize(np.zeros((2, 2)), threshold)


class TestSkeleton:
    def test_single_pixel(self):
        x = np.zeros((7, 7), dtype=bool)
        x[3, 4] = True
        np.testing.assert_array_equal(skeletonize(x), x)

    def test_empty(self):
        assert not skeletonize(np.zeros((5, 5), dtype=bool)).any()
        assert skeleton_subsets(np.zeros((5, 5), dtype=bool)) == []

    def test_filled_square(self):
        x = np.zeros((9, 9), dtype=bool)
        x[2:7, 2:7] = True
        expected = np.zeros_like(x)
        expected[4, 4] = True
        np.testing.assert_array_equal(skeletonize(x), expected)
        np.testing.assert_array_equal(naive_skeleton(x), expected)

    @pytest.mark.parametrize("seed", range(20))
    def test_matches_direct_formula(self, seed):
        x = random_blob(seed, 48)
        np.testing.assert_array_equal(skeletonize(x), naive_skeleton(x))

    def test_subset_of_input(self):
        x = random_blob(99)
        assert not np.any(skeletonize(x) & ~x)

    @pytest.mark.slow
    def test_reconstruction_on_random_blobs(self):
        for seed in range(200):
            x = random_blob(seed, int(np.random.default_rng(seed).integers(16, 65)))
            np.testing.assert_array_equal(reconstruct_from_skeleton(skeleton_subsets(x), x.shape), x)

    def test_reconstruction(self):
        x = random_blob(7)
        np.testing.assert_array_equal(reconstruct_from_skeleton(skeleton_subsets(x), x.shape), x)


class TestSelectSuperpixels:
    @staticmethod
    def _pair(distance):
        skel = np.zeros((30, 40), dtype=bool)
        conf = np.zeros((30, 40))
        skel[10, 10] = skel[10, 10 + distance] = True
        conf[10, 10], conf[10, 10 + distance] = 0.8, 0.9
        return skel, conf

    def test_close_pair_keeps_stronger(self):
        sps = select_superpixels(*self._pair(5), min_distance=10)
        assert [(sp.x, sp.y, sp.confidence) for sp in sps] == [(15, 10, 0.9)]

    def test_distant_pair_keeps_both(self):
        sps = select_superpixels(*self._pair(11), min_distance=10)
        assert [(sp.x, sp.y) for sp in sps] == [(21, 10), (10, 10)]

    def test_exact_distance_is_blocked(self):
        assert len(select_superpixels(*self._pair(10), min_distance=10)) == 1

    def test_horizontal_line(self):
        skel = np.zeros((5, 100), dtype=bool)
        skel[2, :] = True
        sps = select_superpixels(skel, np.full(skel.shape, 0.7), min_distance=10)
        assert 9 <= len(sps) <= 10
        pts = positions_of(sps)
        gaps = np.hypot(*(pts[:, None, :] - pts[None, :, :]).transpose(2, 0, 1))
        assert np.all(gaps[~np.eye(len(pts), dtype=bool)] > 10)

    def test_greedy_maximal(self, rng):
        skel = rng.uniform(size=(60, 60)) > 0.9
        conf = rng.uniform(size=(60, 60))
        d = 6.0
        sps = select_superpixels(skel, conf, d)
        pts = positions_of(sps)
        confidences = np.array([sp.confidence for sp in sps])
        assert np.all(np.diff(confidences) <= 0)
        for y, x in zip(*np.nonzero(skel)):
            dist = np.hypot(pts[:, 0] - x, pts[:, 1] - y)
            assert np.any((dist <= d) & (confidences >= conf[y, x]))
        gaps = np.hypot(*(pts[:, None, :] - pts[None, :, :]).transpose(2, 0, 1))
        assert np.all(gaps[~np.eye(len(pts), dtype=bool)] > d)

    def test_empty_skeleton(self):
        assert select_superpixels(np.zeros((4, 4), dtype=bool), np.zeros((4, 4)), 10) == []
        assert positions_of([]).shape == (0, 2)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            select_superpixels(np.zeros((4, 4), dtype=bool), np.zeros((4, 5)), 10)
