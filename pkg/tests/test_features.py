"""features: Canny edges, keypoint subsampling, HOG descriptors."""

import numpy as np
import pytest
from scipy import ndimage

from repseg import Keypoint, canny, describe, describe_all, sample_keypoints
from repseg.errors import InvalidParam
from repseg.features import DESCRIPTOR_DIM, is_degenerate

from conftest import checkerboard, step_image


class TestCanny:
    def test_constant_image_has_no_edges(self):
        edges = canny(np.full((32, 32), 77, dtype=np.uint8), 50, 150)
        assert not edges.any()

    def test_vertical_step_edge_matches_sobel_oracle(self):
        img = step_image(32, 32, col=16)
        edges = canny(img, 50, 150)
        assert edges.any()
        # Oracle: column of maximum Sobel magnitude after the same smoothing.
        sm = ndimage.gaussian_filter(img.astype(np.float64), 1.4, mode="nearest")
        mag = np.hypot(ndimage.sobel(sm, axis=1, mode="nearest"),
                       ndimage.sobel(sm, axis=0, mode="nearest"))
        best_col = int(np.argmax(mag[16]))
        cols = np.unique(np.nonzero(edges)[1])
        assert all(abs(c - best_col) <= 1 for c in cols)

    def test_checkerboard_edges_hug_square_boundaries(self):
        img = checkerboard(square=32, tiles=2)
        edges = canny(img, 50, 150)
        assert edges.any()
        ys, xs = np.nonzero(edges)
        # Distance to the nearest square boundary line (x=32 or y=32),
        # ignoring pixels near the image border.
        for y, x in zip(ys, xs):
            if 2 <= y < 62 and 2 <= x < 62:
                assert min(abs(x - 31.5), abs(y - 31.5)) <= 1.5

    def test_low_above_high_rejected(self):
        with pytest.raises(InvalidParam):
            canny(np.zeros((8, 8), dtype=np.uint8), 100, 50)

    def test_rgb_input_rejected(self):
        with pytest.raises(InvalidParam):
            canny(np.zeros((8, 8, 3), dtype=np.uint8), 50, 150)

    def test_brightness_shift_invariance(self, rng):
        img = rng.integers(60, 180, (48, 48)).astype(np.uint8)
        shifted = (img.astype(np.int32) + 50).clip(0, 255).astype(np.uint8)
        assert (shifted == img + 50).all()  # no clamping happened
        assert (canny(img, 50, 150) == canny(shifted, 50, 150)).all()


class TestSampleKeypoints:
    def test_empty_edge_map_gives_no_keypoints(self):
        assert sample_keypoints(np.zeros((8, 8), dtype=bool), 4, 100) == []

    def test_100px_row_with_stride_10_gives_10(self):
        edges = np.zeros((3, 100), dtype=bool)
        edges[1] = True
        kps = sample_keypoints(edges, 10, 1000)
        assert len(kps) == 10
        assert [kp.x for kp in kps] == list(range(0, 100, 10))

    def test_max_n_truncates_in_scan_order(self):
        edges = np.zeros((1, 100), dtype=bool)
        edges[0, ::10] = True  # 10 well-separated candidates
        kps = sample_keypoints(edges, 5, 5)
        assert [kp.x for kp in kps] == [0, 10, 20, 30, 40]

    def test_chebyshev_spacing_invariant(self, rng):
        edges = rng.random((64, 64)) < 0.2
        kps = sample_keypoints(edges, 4, 10000)
        assert all(edges[kp.y, kp.x] for kp in kps)
        pts = np.array([[kp.x, kp.y] for kp in kps])
        for i in range(len(pts)):
            cheb = np.abs(pts - pts[i]).max(axis=1)
            cheb[i] = 999
            assert cheb.min() >= 4

    def test_ids_are_sequential(self, rng):
        edges = rng.random((32, 32)) < 0.3
        kps = sample_keypoints(edges, 3, 100)
        assert [kp.id for kp in kps] == list(range(len(kps)))

    def test_invalid_stride_rejected(self):
        with pytest.raises(InvalidParam):
            sample_keypoints(np.zeros((4, 4), dtype=bool), 0, 10)


class TestDescribe:
    def test_identical_patches_give_zero_distance(self, rng):
        tile = rng.integers(0, 256, (16, 16)).astype(np.uint8)
        img = np.tile(tile, (2, 4))  # same content at x and x+16
        a = describe(img, Keypoint(x=16, y=16, id=0))
        b = describe(img, Keypoint(x=32, y=16, id=1))
        assert np.linalg.norm(a - b) == 0.0

    def test_constant_patch_is_degenerate(self):
        img = np.full((32, 32), 99, dtype=np.uint8)
        d = describe(img, Keypoint(x=16, y=16, id=0))
        assert (d == 0).all()
        assert is_degenerate(d[None, :])[0]

    def test_brightness_shift_leaves_descriptor_unchanged(self, rng):
        img = rng.integers(30, 170, (32, 32)).astype(np.uint8)
        shifted = (img + 50).astype(np.uint8)
        kp = Keypoint(x=16, y=16, id=0)
        assert np.array_equal(describe(img, kp), describe(shifted, kp))

    def test_unit_norm_when_not_degenerate(self, rng):
        img = rng.integers(0, 256, (64, 64)).astype(np.uint8)
        for x, y in [(0, 0), (63, 63), (5, 40), (32, 32)]:
            d = describe(img, Keypoint(x=x, y=y, id=0))
            assert abs(np.linalg.norm(d) - 1.0) < 1e-6

    def test_dimension_is_128(self, rng):
        img = rng.integers(0, 256, (32, 32)).astype(np.uint8)
        assert describe(img, Keypoint(x=10, y=10, id=0)).shape == (DESCRIPTOR_DIM,)

    def test_describe_all_stacks_rows(self, rng):
        img = rng.integers(0, 256, (32, 32)).astype(np.uint8)
        kps = [Keypoint(x=4, y=4, id=0), Keypoint(x=20, y=9, id=1)]
        mat = describe_all(img, kps)
        assert mat.shape == (2, DESCRIPTOR_DIM)
        assert np.array_equal(mat[0], describe(img, kps[0]))
        assert np.array_equal(mat[1], describe(img, kps[1]))

    def test_odd_patch_rejected(self, rng):
        img = rng.integers(0, 256, (32, 32)).astype(np.uint8)
        with pytest.raises(InvalidParam):
            describe(img, Keypoint(x=10, y=10, id=0), patch=15)
