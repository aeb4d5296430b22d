"""Time-varying additive hazard regression with total-variation penalties.

Thin python surface over the C++ core: domain types, penalty/prox kernels,
likelihoods, the prox-SVRG solver and the synthetic campaign simulator.
"""

from ._hazreg import *  # noqa: F401,F403
from ._hazreg import __doc__ as _core_doc  # noqa: F401
