"""Masking quantum information: maskers, defects, no-masking witnesses, protocols."""

from ._kernels import BACKEND

__all__ = ["BACKEND"]
__version__ = "0.1.0"
