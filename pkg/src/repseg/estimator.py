"""Scikit-learn style front end for the repetition segmentation pipeline."""

from __future__ import annotations

import time

import numpy as np
from scipy import ndimage
from sklearn.base import BaseEstimator

from . import accumulator as acc_mod
from . import features, propagate, splash, superpixel
from .errors import EmptyInput
from .imagecore import check_image, to_gray


class RepetitionSegmenter(BaseEstimator):
    """Unsupervised segmentation of repeated visual patterns.

    ``fit`` runs edge keypoints -> descriptors -> splashes -> accumulator
    filtering -> SLIC -> component propagation on a single image and
    exposes the intermediate artifacts; ``labels_`` is the resulting
    category mask (0 = background).
    """

    def __init__(self, canny_low=50.0, canny_high=150.0, gauss_sigma=1.4,
                 stride=1, max_keypoints=5000, patch=16,
                 k=8, r=16.0, d_max=0.45,
                 vote_sigma=3.0, vote_bin=2, half_extent=None, tau=0.4,
                 n_superpixels=4500, compactness=10.0, slic_iters=10,
                 min_support=1):
        self.canny_low = canny_low
        self.canny_high = canny_high
        self.gauss_sigma = gauss_sigma
        self.stride = stride
        self.max_keypoints = max_keypoints
        self.patch = patch
        self.k = k
        self.r = r
        self.d_max = d_max
        self.vote_sigma = vote_sigma
        self.vote_bin = vote_bin
        self.half_extent = half_extent
        self.tau = tau
        self.n_superpixels = n_superpixels
        self.compactness = compactness
        self.slic_iters = slic_iters
        self.min_support = min_support

    def fit(self, X, y=None):
        img = check_image(X)
        gray = to_gray(img)
        h, w = gray.shape
        timings: dict[str, float] = {}

        t0 = time.perf_counter()
        self.edges_ = features.canny(gray, self.canny_low, self.canny_high,
                                     self.gauss_sigma)
        self.keypoints_ = features.sample_keypoints(self.edges_, self.stride,
                                                    self.max_keypoints)
        # Descriptors are computed on the smoothed luma so they share the
        # edge detector's noise tolerance.
        smoothed = ndimage.gaussian_filter(gray.astype(np.float64),
                                           self.gauss_sigma, mode="nearest")
        smooth_u8 = np.clip(np.floor(smoothed + 0.5), 0, 255).astype(np.uint8)
        self.descriptors_ = features.describe_all(smooth_u8, self.keypoints_,
                                                  self.patch)
        timings["features"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        params = splash.SplashParams(k=self.k, r=self.r, d_max=self.d_max)
        try:
            self.splashes_ = splash.make_splashes(self.keypoints_,
                                                  self.descriptors_, params)
        except EmptyInput:
            self.splashes_ = []
        timings["splash"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        half = self.half_extent if self.half_extent is not None else min(h, w)
        if self.splashes_:
            self.accumulator_ = acc_mod.vote(self.splashes_, self.vote_sigma,
                                             self.vote_bin, half)
            self.hotspots_ = acc_mod.select_hotspots(self.accumulator_,
                                                     self.splashes_, self.tau)
        else:
            self.accumulator_ = None
            self.hotspots_ = []
        timings["accumulator"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        # The requested count is a density target; tiny images get at most
        # one superpixel per pixel.
        n_spx = min(self.n_superpixels, h * w)
        self.superpixels_ = superpixel.slic(img, n_spx, self.compactness,
                                            self.slic_iters)
        timings["superpixel"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        self.graph_ = propagate.build_graph(self.superpixels_, self.hotspots_,
                                            self.splashes_, self.keypoints_,
                                            self.min_support)
        self.components_ = propagate.connected_components(self.graph_)
        self.labels_ = propagate.render_mask(self.superpixels_, self.components_)
        timings["propagate"] = time.perf_counter() - t0

        self.timings_ = timings
        return self

    def fit_predict(self, X, y=None):
        """Run the pipeline and return the category mask."""
        return self.fit(X).labels_

    def run_stats(self) -> dict:
        """Counts and timings of the last fit, for run reports."""
        return {
            "keypoints": len(self.keypoints_),
            "splashes": len(self.splashes_),
            "hotspots": len(self.hotspots_),
            "superpixels": self.superpixels_.count,
            "graph_nodes": len(self.graph_.nodes),
            "graph_edges": len(self.graph_.edges),
            "components": max(self.components_.values(), default=0),
            "timings_ms": {k: round(v * 1000, 2) for k, v in self.timings_.items()},
        }
