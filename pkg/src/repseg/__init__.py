"""repseg: unsupervised repeated-pattern discovery and segmentation."""

from .accumulator import AccumulatorSpace, Hotspot, score_splash, select_hotspots, vote
from .errors import (DimensionMismatch, EmptyInput, FormatError, InvalidParam,
                     IoError, RepsegError)
from .estimator import RepetitionSegmenter
from .evalkit import (GroundTruth, LevelSpec, corrupt, evaluate_image,
                      instance_components, load_dataset, score, sweep, synth)
from .features import Keypoint, canny, describe, describe_all, sample_keypoints
from .imagecore import load_image, read_mask_png, to_gray, write_mask_png
from .propagate import SuperpixelGraph, build_graph, connected_components, render_mask
from .splash import NeighborIndex, Splash, SplashParams, build_index, make_splashes, query_similar
from .superpixel import SuperpixelMap, slic

__version__ = "0.1.0"

__all__ = [
    "AccumulatorSpace", "Hotspot", "score_splash", "select_hotspots", "vote",
    "DimensionMismatch", "EmptyInput", "FormatError", "InvalidParam",
    "IoError", "RepsegError",
    "RepetitionSegmenter",
    "GroundTruth", "LevelSpec", "corrupt", "evaluate_image",
    "instance_components", "load_dataset", "score", "sweep", "synth",
    "Keypoint", "canny", "describe", "describe_all", "sample_keypoints",
    "load_image", "read_mask_png", "to_gray", "write_mask_png",
    "SuperpixelGraph", "build_graph", "connected_components", "render_mask",
    "NeighborIndex", "Splash", "SplashParams", "build_index", "make_splashes",
    "query_similar",
    "SuperpixelMap", "slic",
]
