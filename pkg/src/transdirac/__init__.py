"""Exact verification of transverse Dirac geometry on homogeneous foliated
frame models, plus magnetic lattice spectra on flat tori."""

__version__ = "0.1.0"
