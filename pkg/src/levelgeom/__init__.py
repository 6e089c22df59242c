"""Curvature and coarea identities for level hypersurfaces, checked numerically."""

__version__ = "0.1.0"
