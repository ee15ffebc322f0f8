"""Bayesian spatial interaction model.

Truncated-Gaussian store attraction fields, customer visit probabilities and
revenue prediction, with variational and MCMC posterior inference. The heavy
lifting lives in the compiled extension module.
"""

from bsim._core import *  # noqa: F401,F403
from bsim._core import __doc__ as _core_doc

__all__ = [name for name in dir() if not name.startswith("_")]
__doc__ = _core_doc
