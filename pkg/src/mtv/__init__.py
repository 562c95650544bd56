"""Markov transversals and symbolic codings for affine partially
hyperbolic torus maps."""

from . import (catmap, coding, errors, product_family, refinement, regions,
               shadowing, symbolic, systems, torus, transversal)

__version__ = "0.1.0"

__all__ = [
    "catmap", "coding", "errors", "product_family", "refinement", "regions",
    "shadowing", "symbolic", "systems", "torus", "transversal", "__version__",
]
