"""Event-driven CSI feedback control for transmit beamforming."""

from ._fbctl import *  # noqa: F401,F403
from ._fbctl import __doc__  # noqa: F401

__version__ = "0.1.0"
