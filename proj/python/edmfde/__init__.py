"""GNSS fault detection and exclusion: EDM, residual and solution-separation methods."""

from ._edmfde import *  # noqa: F401,F403
from ._edmfde import __doc__  # noqa: F401

METHODS = ("edm", "edm2021", "residual", "ss")
