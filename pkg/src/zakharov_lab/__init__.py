"""Numerical laboratory for blow-up rates of the Zakharov system.

Modules:
  spectral   periodic grids, Fourier multipliers, Sobolev norms
  zakharov   split-step integrator, conserved quantities, norm series
  profiles   radial self-similar profile equations and exact/asymptotic solutions
  blowup     exponent table, blow-up time and rate fitting, verdicts
  bourgain   X^{s,b} norms, trilinear forms, parameter bookkeeping
  io, config, cli   persistence, configuration and the command line
"""

__version__ = "0.1.0"

from . import blowup, bourgain, io, profiles, spectral, zakharov  # noqa: F401
