"""
Utils package - Random streams, distributions, configuration and file I/O.

``config`` and ``persistence`` depend on the systems package and are
imported from their modules directly.
"""

from .random_generator import RandomGenerator

__all__ = ["RandomGenerator"]
