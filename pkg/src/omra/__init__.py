"""Hierarchical B-frame video codec with online motion resolution adaptation."""

from .engine import (EncoderConfig, RdCandidate, VARIANT_A, VARIANT_B,
                     VARIANT_FIXED, VARIANT_OMRA, decode_sequence,
                     encode_sequence, parse_stream, select_scale)
from .errors import BitstreamError, DataError, OmraError
from .flow import EstimatorConfig, FlowField, estimate_flow, predict_flows, \
    synthesize_predictor, warp
from .frames import Frame, Sequence, crop, load_sequence, mse, save_sequence
from .gop import FrameKind, GopPlan, build_plan, reference_distance
from .metrics import RdCurve, RdPoint, bd_rate, psnr
from .resample import downsample_frame, upsample_flow, upsample_frame
from .synth import SynthSpec, synth

__version__ = "0.1.0"
