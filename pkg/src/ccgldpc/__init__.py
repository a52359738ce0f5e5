"""Erasure-channel analysis of regular GLDPC ensembles with convolutional constraint nodes."""

from .density import DEConfig, DEResult, de_run, de_run_coupled, de_run_uncoupled, extrinsic_exit
from .ensemble import Coupled, EnsembleSpec, make_spec
from .thresholds import ExitCurve, ThresholdResult, bp_threshold, exit_curve, map_threshold
from .transfer import build_subset_chain, eval_transfer, mc_transfer_oracle
from .trellis import GeneratorSpec, build_trellis, encode_terminated
from .weights import (PuncturePattern, WeightSpectrum, component_spectrum_conv,
                      component_spectrum_ldpc, dmin_bound, dmin_curve,
                      ensemble_avg_single_edge)

__version__ = "0.1.0"

__all__ = [
    "Coupled", "DEConfig", "DEResult", "EnsembleSpec", "ExitCurve", "GeneratorSpec",
    "PuncturePattern", "ThresholdResult", "WeightSpectrum", "bp_threshold",
    "build_subset_chain", "build_trellis", "component_spectrum_conv",
    "component_spectrum_ldpc", "de_run", "de_run_coupled", "de_run_uncoupled",
    "dmin_bound", "dmin_curve", "encode_terminated", "ensemble_avg_single_edge",
    "eval_transfer", "exit_curve", "extrinsic_exit", "make_spec", "map_threshold",
    "mc_transfer_oracle",
]
