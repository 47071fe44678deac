"""Frame-based pseudo-Riemannian geometry engine for geodesic foliations."""

__version__ = "0.1.0"
