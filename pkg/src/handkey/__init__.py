"""Symmetric key agreement from the motion of a handshake.

Two wrist-worn devices record the same handshake, extract the dominant
motion component, quantise it into bits, reconcile the bits they both trust
and end up with the same 128-bit key. A simulated radio channel lets the
devices find their handshake partner among other nearby pairs, and an
evaluation harness measures how well mimicking adversaries fare.
"""
from .config import Config
from .errors import HandkeyError
from .feature import FeatureSeries, coherence, project_first_pc
from .keygen import (
    PositionVector,
    QuantizedBits,
    SymmetricKey,
    assemble_key,
    bit_rate,
    position_vector,
    quantize,
    reconcile,
)
from .trace import MotionTrace, align_window, detect_anchor, load_trace, squared_magnitude, write_trace

__version__ = "0.1.0"
