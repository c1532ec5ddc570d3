"""Numerical laboratory for the cubic Schrodinger equation on the 2-torus
with a time-modulated dispersion coefficient.

Subpackages cover lattice parallelogram combinatorics, modulation paths and
their oscillatory integrals, the spectral representation and propagator,
p-variation norms, a Duhamel fixed-point solver, and space-time L^4 benches.
"""

__version__ = "0.1.0"

from modnls.kernels import backend_name

__all__ = ["__version__", "backend_name"]
