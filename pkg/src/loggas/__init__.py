"""loggas: simulation and verification toolkit for 1D log-gases.

Ordered particle systems on the line with quadratic confinement and
logarithmic pair repulsion: exact spectral samplers (tridiagonal and
dense Gaussian models), the associated interacting diffusion, the exact
symmetric-polynomial eigenstructure of its generator, and Monte Carlo
checks of the spectral-gap, log-Sobolev, and concentration inequalities
those models satisfy.
"""

__version__ = "0.1.0"

from .kernels import active_lane  # noqa: F401
