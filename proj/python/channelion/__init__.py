"""Python bindings for the channelion simulation suite."""

from ._channelion import *  # noqa: F401,F403
from ._channelion import __version__  # noqa: F401
