import math

import numpy as np
import pytest
from scipy.ndimage import binary_dilation

from core.constants import DeformKind, SynthStyle
from core.exceptions import ValidationError
from core.types import PolyChain
from groundtruth.deformation import affine_from_corners, apply_affine, deform
from groundtruth.oracle import render_oracle_maps, render_page_image
from groundtruth.pixel_gt import chain_interline_distance, generate_pixel_gt
from groundtruth.synthesis import (
    MAX_SPACING, MIN_SPACING, SynthPage, synth_corpus, synth_page, synth_two_column_page,
)
from conftest import horizontal_chain


@pytest.fixture
def small_page():
    chains = (horizontal_chain(40, 20, 180), horizontal_chain(80, 20, 180))
    return SynthPage(width=200, height=120, baselines=chains, seed=3, spacing=40.0)


class TestInterlineDistance:
    def test_parallel_lines(self):
        a = PolyChain.from_points([(0, 100), (200, 100)])
        b = PolyChain.from_points([(0, 150), (200, 150)])
        assert chain_interline_distance(a, [a, b]) == pytest.approx(50.0)

    def test_single_chain_default(self):
        a = PolyChain.from_points([(0, 100), (200, 100)])
        assert chain_interline_distance(a, [a], default=64.0) == 64.0

    def test_slanted_neighbor(self):
        a = PolyChain.from_points([(0, 100), (100, 0)])
        b = PolyChain.from_points([(10, 110), (110, 10)])
        assert chain_interline_distance(a, [a, b]) == pytest.approx(math.hypot(10, 10), abs=1e-6)

    def test_collinear_neighbor_ignored(self):
        left = PolyChain.from_points([(0, 100), (100, 100)])
        right = PolyChain.from_points([(110, 100), (200, 100)])
        assert chain_interline_distance(left, [left, right], default=64.0) == 64.0


class TestPixelGT:
    def test_no_chains(self):
        gt = generate_pixel_gt((20, 30), [])
        assert gt.other.all()
        assert not gt.baseline.any() and not gt.separator.any()

    def test_single_chain(self):
        chain = PolyChain.from_points([(10, 20), (50, 20)])
        gt = generate_pixel_gt((40, 60), [chain], interline=[6.0])
        np.testing.assert_array_equal(gt.planes.sum(axis=0), 1)
        assert gt.baseline[20, 30] and gt.baseline[19, 30] and gt.baseline[21, 30]
        assert not gt.baseline[18, 30] and not gt.baseline[22, 30]
        assert gt.separator[20, 10] and not gt.baseline[20, 10]
        assert gt.separator[20, 50]
        assert gt.separator[:, 10].sum() == 9
        assert not gt.separator[:, 30].any()

    def test_stroke_length_follows_interline(self):
        a = PolyChain.from_points([(20, 50), (100, 50)])
        b = PolyChain.from_points([(20, 90), (100, 90)])
        gt = generate_pixel_gt((150, 130), [a, b])
        assert gt.separator[29, 20]
        assert not gt.separator[27, 20]
        assert gt.separator[111, 100]
        assert not gt.separator[113, 100]

    def test_separator_never_overwritten(self, small_page):
        gt = generate_pixel_gt(small_page.dims, small_page.baselines)
        assert not np.any(gt.baseline & gt.separator)
        np.testing.assert_array_equal(gt.planes.sum(axis=0), 1)


class TestSynthesis:
    def test_deterministic(self):
        assert synth_corpus(3, seed=7) == synth_corpus(3, seed=7)

    def test_seed_matters(self):
        assert synth_corpus(2, seed=7) != synth_corpus(2, seed=8)

    def test_straight_pages(self):
        for page in synth_corpus(5, seed=1):
            assert 5 <= len(page.baselines) <= 30
            assert MIN_SPACING <= page.spacing <= MAX_SPACING
            for chain in page.baselines:
                assert np.ptp(chain.array[:, 1]) == 0.0

    @pytest.mark.parametrize("style", [SynthStyle.STRAIGHT, SynthStyle.CURVED, SynthStyle.ROTATED])
    def test_chains_inside_page(self, style):
        for page in synth_corpus(4, seed=2, style=style):
            for chain in page.baselines:
                pts = chain.array
                assert pts.min() >= 0.0
                assert np.all(pts[:, 0] <= page.width) and np.all(pts[:, 1] <= page.height)

    def test_curved_amplitude(self):
        for page in synth_corpus(4, seed=3, style=SynthStyle.CURVED):
            amplitude, wavelength, _ = page.meta['warp']
            assert amplitude <= 0.5 * page.spacing
            assert wavelength > 0
            assert any(np.ptp(c.array[:, 1]) > 0 for c in page.baselines)

    def test_rotated_by_right_angle(self):
        page = synth_corpus(1, seed=4, style=SynthStyle.ROTATED, angle=math.pi / 2)[0]
        for chain in page.baselines:
            assert np.ptp(chain.array[:, 0]) < 1e-6

    def test_rotation_within_range(self):
        for page in synth_corpus(5, seed=5, style=SynthStyle.ROTATED, rotation_range=math.radians(10)):
            assert abs(page.meta['angle']) <= math.radians(10)

    def test_mixed_cycles_styles(self):
        styles = [page.style for page in synth_corpus(6, seed=6, style=SynthStyle.MIXED)]
        assert styles == ['straight', 'curved', 'rotated'] * 2

    def test_mixed_single_page_rejected(self):
        with pytest.raises(ValidationError):
            synth_page(1, SynthStyle.MIXED)

    def test_needs_pages(self):
        with pytest.raises(ValidationError):
            synth_corpus(0, seed=1)

    def test_two_column_gap(self):
        page = synth_two_column_page(n_lines=4, spacing=40.0)
        assert len(page.baselines) == 8
        split = page.meta['column_split']
        for chain in page.baselines:
            xs = chain.array[:, 0]
            assert np.all(xs < split) or np.all(xs > split)


class TestDeformation:
    @pytest.mark.parametrize("kind", list(DeformKind))
    def test_zero_magnitude_is_identity(self, small_page, kind):
        out = deform(small_page, kind, 0.0, seed=9)
        for a, b in zip(small_page.baselines, out.baselines):
            np.testing.assert_allclose(a.array, b.array, atol=1e-9)

    def test_half_turn(self, small_page):
        out = deform(small_page, DeformKind.ROTATION, math.pi)
        for a, b in zip(small_page.baselines, out.baselines):
            expected = np.column_stack([small_page.width - a.array[:, 0], small_page.height - a.array[:, 1]])
            np.testing.assert_allclose(b.array, expected, atol=1e-9)

    def test_affine_solve(self):
        matrix = np.array([[1.02, 0.01, 3.0], [-0.02, 0.98, -1.5]])
        src = np.array([[0.0, 0.0], [400.0, 0.0], [0.0, 300.0]])
        np.testing.assert_allclose(affine_from_corners(src, apply_affine(matrix, src)), matrix, atol=1e-9)

    @pytest.mark.parametrize("kind,magnitude", [(DeformKind.AFFINE, 0.025), (DeformKind.ELASTIC, 4.0)])
    def test_preserves_point_counts(self, small_page, kind, magnitude):
        out = deform(small_page, kind, magnitude, seed=1)
        assert [len(c) for c in out.baselines] == [len(c) for c in small_page.baselines]
        assert out == deform(small_page, kind, magnitude, seed=1)
        for a, b in zip(small_page.baselines, out.baselines):
            assert np.all(np.diff(b.array[:, 0]) > 0)

    def test_elastic_bounded(self, small_page):
        out = deform(small_page, DeformKind.ELASTIC, 3.0, seed=2)
        for a, b in zip(small_page.baselines, out.baselines):
            assert np.max(np.abs(a.array - b.array)) <= 3.0 + 1e-9

    def test_negative_magnitude(self, small_page):
        with pytest.raises(ValidationError):
            deform(small_page, DeformKind.AFFINE, -1.0)


class TestOracle:
    def test_unblurred_equals_gt(self, small_page):
        maps = render_oracle_maps(small_page, blur_sigma=0.0, noise_amp=0.0)
        gt = generate_pixel_gt(small_page.dims, small_page.baselines)
        np.testing.assert_array_equal(maps.baseline, gt.baseline.astype(float))
        np.testing.assert_array_equal(maps.separator, gt.separator.astype(float))

    def test_blurred_peak_on_baseline(self, small_page):
        maps = render_oracle_maps(small_page, blur_sigma=1.5)
        gt = generate_pixel_gt(small_page.dims, small_page.baselines)
        band = binary_dilation(gt.baseline, iterations=3)
        assert maps.baseline[gt.baseline].max() >= maps.baseline[~band].max()

    def test_noise_keeps_baselines_bright(self, small_page):
        maps = render_oracle_maps(small_page, blur_sigma=1.5, noise_amp=0.2, seed=4)
        assert maps.baseline[40, 60:140].min() >= 0.8
        assert maps.baseline[80, 60:140].min() >= 0.8

    def test_deterministic(self, small_page):
        a = render_oracle_maps(small_page, noise_amp=0.1, seed=5)
        b = render_oracle_maps(small_page, noise_amp=0.1, seed=5)
        np.testing.assert_array_equal(a.baseline, b.baseline)
        np.testing.assert_array_equal(a.separator, b.separator)

    def test_invalid_noise(self, small_page):
        with pytest.raises(ValidationError):
            render_oracle_maps(small_page, noise_amp=0.5)

    def test_page_image(self, small_page):
        image = render_page_image(small_page, seed=1)
        assert image.shape == (120, 200)
        assert image.min() >= 0.0 and image.max() <= 1.0
        assert image[36:40, 30:170].mean() < image[5:15, :].mean()
