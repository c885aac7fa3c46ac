"""drops2d: capacitary energies and shape optimization of planar charged drops."""

__version__ = "0.1.0"
