"""rotflow: pseudo-spectral simulation and limit-verification tooling for
rotating variable-density incompressible flow on the 2-D torus."""

__version__ = "0.1.0"
