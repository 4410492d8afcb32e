"""estimator: sklearn API surface, fitted state, tau monotonicity."""

import numpy as np
import pytest
from sklearn.base import clone

from repseg import RepetitionSegmenter
from repseg.errors import InvalidParam
from repseg.evalkit import synth


class TestSklearnApi:
    def test_get_set_params_round_trip(self):
        est = RepetitionSegmenter()
        params = est.get_params()
        assert params["r"] == 16.0
        assert params["tau"] == 0.4
        est.set_params(r=32.0, tau=0.2)
        assert est.get_params()["r"] == 32.0
        assert est.get_params()["tau"] == 0.2

    def test_clone_copies_params_not_state(self):
        img, _ = synth("cross", 2, 2, 64, 0, 192, seed=0)
        est = RepetitionSegmenter(n_superpixels=200)
        est.fit(img)
        dup = clone(est)
        assert dup.get_params() == est.get_params()
        assert not hasattr(dup, "labels_")

    def test_unknown_param_rejected(self):
        with pytest.raises(ValueError):
            RepetitionSegmenter().set_params(bananas=3)


class TestFit:
    def test_fit_exposes_every_stage(self):
        img, _ = synth("cross", 3, 3, 64, 0, 256, seed=0)
        est = RepetitionSegmenter().fit(img)
        assert est.edges_.dtype == bool
        assert len(est.keypoints_) == len(est.descriptors_)
        assert est.superpixels_.count >= 1
        assert est.labels_.shape == img.shape
        assert set(est.timings_) == {"features", "splash", "accumulator",
                                     "superpixel", "propagate"}
        stats = est.run_stats()
        assert stats["keypoints"] == len(est.keypoints_)
        assert stats["hotspots"] == len(est.hotspots_)

    def test_no_fitted_state_before_fit(self):
        est = RepetitionSegmenter()
        assert not hasattr(est, "labels_")
        assert not hasattr(est, "timings_")

    def test_blank_image_yields_empty_mask(self):
        img = np.full((64, 64), 200, dtype=np.uint8)
        mask = RepetitionSegmenter().fit_predict(img)
        assert (mask == 0).all()

    def test_invalid_tau_rejected_at_fit(self):
        img, _ = synth("cross", 2, 2, 64, 0, 192, seed=0)
        with pytest.raises(InvalidParam):
            RepetitionSegmenter(tau=-0.1).fit(img)

    def test_nonzero_pixels_shrink_as_tau_grows(self):
        img, _ = synth("cross", 3, 3, 64, 0, 256, seed=0)
        masks = {}
        for tau in (0.2, 0.5, 0.8):
            masks[tau] = RepetitionSegmenter(tau=tau, n_superpixels=400) \
                .fit_predict(img)
        fg_02 = masks[0.2] > 0
        fg_05 = masks[0.5] > 0
        fg_08 = masks[0.8] > 0
        assert (fg_05 & ~fg_02).sum() == 0
        assert (fg_08 & ~fg_05).sum() == 0

    def test_half_extent_defaults_to_min_side(self):
        img, _ = synth("cross", 2, 2, 64, 0, 192, seed=0)
        est = RepetitionSegmenter(n_superpixels=200).fit(img)
        assert est.accumulator_.half_extent == 192
