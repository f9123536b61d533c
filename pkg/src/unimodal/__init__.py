"""Numerical toolkit for S-unimodal interval maps.

Modules: ``maps`` (the quadratic family and custom maps), ``geometry``
(hyperbolic length, Koebe and expansion checks), ``cascade`` (nice points and
central-interval cascades), ``telemann`` (critical-orbit decomposition),
``analysis`` (summability, audits, statistics, classifier) and ``cli``.
"""

from .errors import InputError, NumericalFailure, UnimodalError
from .maps import UnimodalMap, fixed_point_positive, quadratic

__all__ = ["UnimodalMap", "quadratic", "fixed_point_positive", "UnimodalError",
           "InputError", "NumericalFailure"]
__version__ = "0.1.0"
