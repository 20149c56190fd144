"""Numerical laboratory for the cubic-quintic nonlinear Schrodinger equation

    i u_t + (1/2) Laplacian u = -|u|^2 u + |u|^4 u

in dimensions 1 to 3: solitary wave profiles, split-step time evolution,
conservation and identity diagnostics, linearized spectra, and batch
experiments around orbital stability and scattering.
"""

__version__ = "0.1.0"
