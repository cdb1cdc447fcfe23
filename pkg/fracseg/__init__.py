"""Segmentation of scale-free textures into regions of constant local regularity."""

__version__ = "1.0.0"
