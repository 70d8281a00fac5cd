"""Guided cost aggregation for stereo matching, in numpy."""
from .errors import (
    ConfigError, DimensionError, EmptyGroundTruthError, NumericError, ParseError,
    StereoError, TrainingError, WriteError,
)
from .grid import DIRECTIONS, DisparityMap, Direction, volume_new, volume_slice_d
from .matching import MatchConfig, build_cost_volume, census_transform
from .classical import FilterKernel, SgmParams, cost_filter, scanline_energy_min, sgm, sgm_aggregate_dir, sgm_fuse
from .sga import (
    SgaTape, normalize_logits, sga_backward, sga_forward, sga_forward_dir, sga_fuse_max,
    sga_layer, sga_layer_backward,
)
from .lga import lga_backward, lga_forward, lga_layer, lga_layer_backward, lga_normalize
from .head import Metrics, disparity_regress, evaluate, regress_backward, smooth_l1
from .bench import FlopModel, flops, time_kernel
from .trainer import TrainConfig, make_scene, train

__version__ = "0.1.0"
