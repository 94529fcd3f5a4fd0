"""Exact symbolic checks for derived critical loci of lattice Yang-Mills theory
on finite rectangular windows of the square lattice."""
from .lattice import Window, WindowError, build_model
from .dgcore import Report

__all__ = ["Window", "WindowError", "build_model", "Report"]
__version__ = "0.1.0"
