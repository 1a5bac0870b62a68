"""Wodzicki-Chern-Simons forms for loop spaces of 3- and 5-manifolds."""

from .tensor import SIGN_CONVENTION, AlgCurvature, Jet2
from .wcsform import default_constant

__all__ = ["AlgCurvature", "Jet2", "SIGN_CONVENTION", "default_constant"]
