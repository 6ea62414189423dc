"""Constrained estimation via stochastic proximal distance iterations.

Thin wrapper over the C++ core: projections, loss families, the proximal
solvers, the outer iteration drivers and the synthetic data generators.
"""

try:
    from ._core import *  # noqa: F401,F403  (installed layout)
    from . import _core as core  # noqa: F401
except ImportError:  # build-tree layout: extension next to the package on sys.path
    from _core import *  # noqa: F401,F403
    import _core as core  # noqa: F401

__all__ = [name for name in dir(core) if not name.startswith("_")]
__version__ = "0.1.0"
