"""Geometric bulk-growth mechanics.

Material metrics, their curvature, radial residual-stress problems,
stress-free growth fields, metric kinetics, surface-of-revolution
embeddings and the linearized theory. Compiled kernels are used when
available (see ``growthmech._kernels.BACKEND``).
"""
__version__ = "0.1.0"

from . import errors  # noqa: E402
from .errors import *  # noqa: E402,F401,F403
from .fields import ScalarField  # noqa: E402

__all__ = ["ScalarField", "__version__"] + [n for n in dir(errors) if n.endswith("Error")]
