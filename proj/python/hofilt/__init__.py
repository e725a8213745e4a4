"""High-order likelihood discretizations for nonlinear filtering."""

from ._hofilt import *  # noqa: F401,F403
from ._hofilt import __doc__  # noqa: F401
