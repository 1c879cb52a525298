"""Weighted multi-phase grid partitions.

Arrays use shape (ny, nx) with row 0 at the bottom of the domain.
"""

from ._wpart import *  # noqa: F401,F403
from ._wpart import __doc__  # noqa: F401
