"""
NLFS - Bayesian spline regression with non-linear functional shrinkage.
Main entry point; see ``python main.py --help``.
"""

import sys

from src.cli import main


if __name__ == "__main__":
    sys.exit(main())
