"""Desk-scale toolkit for two-bubble dynamics of the energy-critical focusing NLS.

The equation is i u_t + Delta u + |u|^{4/(N-2)} u = 0 for radial u on R^N,
N >= 7.  The package provides the closed-form bubble calculus, the discrete
linearized operators L+/L- with their internal mode, modulation decomposition
into two bubbles plus remainder, the truncated virial machinery, a split-step
radial evolver, and a CLI exposing every experiment.
"""

__version__ = "0.1.0"

from .grid import RadialGrid, geometric_grid, gauss_grid
from .fields import ComplexRadialField, ScalePhase
from . import bubble
