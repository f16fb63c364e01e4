"""Finite-horizon laboratory for learning in the limit from positive data."""

from . import kernel
from .criteria import CheckConfig, Status, Verdict
from .learners import Learner, Trace, make_learner, trace

__all__ = ["kernel", "CheckConfig", "Status", "Verdict", "Learner", "Trace", "make_learner", "trace"]
__version__ = "0.1.0"
