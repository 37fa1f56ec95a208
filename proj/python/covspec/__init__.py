"""Spectral and subspace diagnostics of rolling covariance matrices."""

from ._covspec import *  # noqa: F401,F403
from ._covspec import __doc__  # noqa: F401
