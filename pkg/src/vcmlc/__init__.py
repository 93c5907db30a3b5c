"""Multidimensional Voronoi constellations with two-level multilevel coding,
compared against 16QAM with bit-interleaved coded modulation."""

from .channel import AwgnChannel, McfChannelModel, awgn_apply, effective_snr, launch_to_snr, mcf_apply
from .fec import OuterCodeModel, info_rate, ldpc_build, ldpc_decode, ldpc_encode
from .lattice import Lattice, closest_point, coset_count, quantize
from .pipeline import (BicmConfig, BlockResult, MlcConfig, bicm_demap_decode, bicm_encode,
                       make_bicm, make_mlc, mlc_decode, mlc_encode)
from .sim import SweepConfig, run_sweep, threshold_crossing, throughput
from .vc import VcSpec, decode, encode, vc_default_16d, vc_toy

__version__ = "0.1.0"
