"""Numerical laboratory for the Beltrami equation on planar Lipschitz domains.

Submodules
----------
grid          uniform grids, complex fields, spectral derivatives and file formats
singular_ops  Beurling, Cauchy and T^gamma operators, localizations
geometry      Lipschitz domains, Whitney coverings, chains and maximal functions
norms         discrete Lebesgue, Sobolev, Holder and boundary Besov norms
beltrami      Neumann-series solver and the principal solution
identities    contour-quadrature verification of kernel identities
cli           batch command-line front end
"""

from .errors import LabError
from .grid import ComplexField, GridSpec, make_grid, sample, wirtinger

__all__ = ["ComplexField", "GridSpec", "LabError", "make_grid", "sample", "wirtinger"]
__version__ = "0.1.0"
