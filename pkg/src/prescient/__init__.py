"""Prescient downlink precoding for heterogeneous dynamic-spectrum-access networks.

An underlay transmitter shapes its beamformer to serve its own receivers
while raising the energy-detection probability of nearby interweave
radios, under a primary-receiver interference cap.
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0"

from .network import ChannelSet, CsiView, NetworkConfig, draw_channels
from .sensing import SensingModel

__all__ = ["ChannelSet", "CsiView", "NetworkConfig", "SensingModel", "draw_channels", "__version__"]
