"""Numerical construction and verification of glued special Lagrangian surfaces."""

from __future__ import annotations

__version__ = "0.1.0"

from .config import Config
from .errors import SlagError
from .gluing import GluedSurface, glue
from .lawlor import LawlorNeck, get_neck, match_angles
from .symplectic import characteristic_angles

__all__ = ["Config", "GluedSurface", "LawlorNeck", "SlagError", "characteristic_angles",
           "get_neck", "glue", "match_angles", "__version__"]
