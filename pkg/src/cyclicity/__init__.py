"""Cyclicity of monodromic singular points from inverse integrating factors."""

__version__ = "0.1.0"
