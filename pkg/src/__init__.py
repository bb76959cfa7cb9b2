"""
NLFS - Bayesian spline regression with non-linear functional shrinkage.
"""

__version__ = "0.1.0"
