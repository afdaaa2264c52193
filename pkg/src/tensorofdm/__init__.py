"""Tensor-structured MIMO-OFDM transceivers and a Monte Carlo SER harness."""

from .channel import FreqChannelViews, PowerDelayProfile, draw_channel, ped_a, pilot_channel_estimate
from .constellation import Constellation, make_constellation, psk, qam
from .linalg import lskrf, pinv
from .receivers import (
    ReceiverOutput,
    StopRule,
    flop_estimate,
    ilsp,
    kr_ls_receiver,
    kr_receiver,
    rc_kr_als_receiver,
    rc_kr_receiver,
    rlsp,
    zf_receiver,
)
from .transmit import PilotPattern, build_grid, kr_encode, rc_encode, transmit

__version__ = "0.1.0"
