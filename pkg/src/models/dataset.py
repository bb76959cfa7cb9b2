"""
Dataset model - Paired covariates and responses.
"""

from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from ..errors import DataError, InvalidArgumentError


@dataclass(frozen=True)
class CovariateScaling:
    """
    Affine map of the covariate range [lo, hi] onto [0, 1].

    Attributes:
        lo (float): Original minimum
        hi (float): Original maximum
    """
    lo: float = 0.0
    hi: float = 1.0

    def forward(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.lo) / (self.hi - self.lo)

    def inverse(self, u) -> np.ndarray:
        return self.lo + np.asarray(u, dtype=float) * (self.hi - self.lo)

    @property
    def is_identity(self) -> bool:
        return self.lo == 0.0 and self.hi == 1.0

    def to_dict(self) -> Dict:
        """Serialize to dictionary."""
        return {'lo': self.lo, 'hi': self.hi}

    @staticmethod
    def from_dict(data: Dict) -> 'CovariateScaling':
        """Deserialize from dictionary."""
        return CovariateScaling(float(data['lo']), float(data['hi']))


@dataclass(frozen=True)
class Dataset:
    """
    Observations y_i = g(x_i) + noise.

    Attributes:
        x (ndarray): Covariates
        y (ndarray): Responses
    """
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        if x.shape != y.shape or x.ndim != 1:
            raise InvalidArgumentError(f"x and y must be equal-length vectors, got {x.shape} and {y.shape}")
        if x.size == 0:
            raise DataError("dataset is empty")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise DataError("dataset contains non-finite values")
        object.__setattr__(self, 'x', x)
        object.__setattr__(self, 'y', y)

    @property
    def n(self) -> int:
        return len(self.x)

    def rescaled(self) -> Tuple['Dataset', CovariateScaling]:
        """
        Map the covariates onto [0, 1].

        Returns:
            (rescaled dataset, the scaling used)

        Raises:
            DataError: If all covariates are equal
        """
        lo, hi = float(self.x.min()), float(self.x.max())
        if not hi > lo:
            raise DataError("covariate is constant; cannot rescale to [0, 1]")
        scaling = CovariateScaling(lo, hi)
        u = np.clip(scaling.forward(self.x), 0.0, 1.0)
        return Dataset(u, self.y), scaling

    def __repr__(self):
        return f"Dataset(n={self.n})"
