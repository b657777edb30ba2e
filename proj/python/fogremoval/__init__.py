"""Grayscale-guided fog removal with structure and uncertainty feedback."""

from ._core import *  # noqa: F401,F403
from ._core import CheckpointError, ImageFormatError  # noqa: F401
