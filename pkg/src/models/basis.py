"""
Basis model - Clamped B-spline bases and their design matrices.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from ..errors import InvalidArgumentError, OutOfDomainError


@dataclass(frozen=True)
class KnotVector:
    """
    Knot placement for a clamped B-spline basis.

    The full knot sequence repeats each boundary knot ``order`` times and
    puts the interior knots in between. With ``order`` j and k* interior
    knots the basis has k = k* + j functions. ``order`` is degree + 1, so
    cubic splines use order 4.

    Attributes:
        boundary (tuple): Domain endpoints (lo, hi)
        internal (tuple): Strictly increasing interior knots inside (lo, hi)
        order (int): Spline order j (degree + 1)
    """
    boundary: Tuple[float, float] = (0.0, 1.0)
    internal: Tuple[float, ...] = ()
    order: int = 4

    def __post_init__(self):
        lo, hi = self.boundary
        if not lo < hi:
            raise InvalidArgumentError(f"degenerate domain [{lo}, {hi}]")
        if self.order < 1:
            raise InvalidArgumentError(f"spline order must be >= 1, got {self.order}")
        inner = np.asarray(self.internal, dtype=float)
        if inner.size:
            if inner[0] <= lo or inner[-1] >= hi:
                raise InvalidArgumentError("interior knots must lie strictly inside the domain")
            if np.any(np.diff(inner) <= 0):
                raise InvalidArgumentError("interior knots must be strictly increasing")

    @property
    def n_internal(self) -> int:
        return len(self.internal)

    @property
    def full_knots(self) -> np.ndarray:
        """Clamped knot sequence of length k* + 2j."""
        lo, hi = self.boundary
        return np.concatenate([
            np.full(self.order, lo, dtype=float),
            np.asarray(self.internal, dtype=float),
            np.full(self.order, hi, dtype=float),
        ])

    def to_dict(self) -> Dict:
        """Serialize to dictionary."""
        return {
            'boundary': list(self.boundary),
            'internal': list(self.internal),
            'order': self.order
        }

    @staticmethod
    def from_dict(data: Dict) -> 'KnotVector':
        """Deserialize from dictionary."""
        return KnotVector(
            boundary=tuple(data['boundary']),
            internal=tuple(data['internal']),
            order=int(data['order'])
        )

    def __repr__(self):
        return f"KnotVector({self.boundary}, n_internal={self.n_internal}, order={self.order})"


def make_knots(n_internal: int = 15, order: int = 4, domain: Tuple[float, float] = (0.0, 1.0)) -> KnotVector:
    """
    Build a clamped knot vector with equally spaced interior knots.

    Args:
        n_internal: Number of interior knots k*
        order: Spline order j (4 for cubic)
        domain: Interval (lo, hi)

    Returns:
        KnotVector with interior knots at lo + i (hi - lo) / (k* + 1), i = 1..k*
    """
    if n_internal < 0:
        raise InvalidArgumentError(f"n_internal must be >= 0, got {n_internal}")
    lo, hi = float(domain[0]), float(domain[1])
    if not lo < hi:
        raise InvalidArgumentError(f"degenerate domain [{lo}, {hi}]")
    steps = np.arange(1, n_internal + 1, dtype=float) / (n_internal + 1)
    internal = tuple(float(v) for v in lo + (hi - lo) * steps)
    return KnotVector(boundary=(lo, hi), internal=internal, order=order)


@dataclass(frozen=True)
class SplineBasis:
    """
    A B-spline basis, optionally without its first function.

    Dropping the first basis function removes the constant from the column
    space of the design matrix, so an intercept can be modelled separately.

    Attributes:
        knots (KnotVector): Knot placement
        drop_intercept (bool): Remove the first basis column
    """
    knots: KnotVector = field(default_factory=make_knots)
    drop_intercept: bool = False

    @property
    def k(self) -> int:
        """Size of the full basis, k* + j."""
        return self.knots.n_internal + self.knots.order

    @property
    def dimension(self) -> int:
        """Number of design-matrix columns."""
        return self.k - 1 if self.drop_intercept else self.k

    @property
    def domain(self) -> Tuple[float, float]:
        return self.knots.boundary

    def greville(self) -> np.ndarray:
        """
        Knot averages of the full basis.

        With these as coefficients the spline reproduces x exactly, so
        coefficients a + b * greville give the straight line a + b x.
        """
        t = self.knots.full_knots
        p = self.knots.order - 1
        return np.array([t[j + 1:j + 1 + p].mean() for j in range(self.k)])

    def design_matrix(self, x) -> np.ndarray:
        """Shortcut for :func:`design_matrix`."""
        return design_matrix(self, x)

    def to_dict(self) -> Dict:
        """Serialize to dictionary."""
        return {'knots': self.knots.to_dict(), 'drop_intercept': self.drop_intercept}

    @staticmethod
    def from_dict(data: Dict) -> 'SplineBasis':
        """Deserialize from dictionary."""
        return SplineBasis(
            knots=KnotVector.from_dict(data['knots']),
            drop_intercept=bool(data['drop_intercept'])
        )

    def __repr__(self):
        return f"SplineBasis(k={self.k}, dimension={self.dimension}, order={self.knots.order})"


def design_matrix(basis: SplineBasis, x) -> np.ndarray:
    """
    Evaluate every basis function at every covariate (Cox-de Boor recursion).

    The right domain endpoint belongs to the last non-empty knot span so the
    basis stays a partition of unity on the closed domain.

    Args:
        basis: The spline basis
        x: Covariates inside the closed domain

    Returns:
        Matrix of shape (n, basis.dimension)

    Raises:
        OutOfDomainError: If any x lies outside the domain
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    lo, hi = basis.domain
    outside = (x < lo) | (x > hi) | ~np.isfinite(x)
    if np.any(outside):
        bad = x[outside][0]
        raise OutOfDomainError(f"covariate {bad} outside basis domain [{lo}, {hi}]")

    t = basis.knots.full_knots
    order = basis.knots.order
    n_spans = len(t) - 1

    # order 1: indicator of the half-open span [t_i, t_{i+1})
    left = t[:-1][None, :]
    right = t[1:][None, :]
    values = ((x[:, None] >= left) & (x[:, None] < right)).astype(float)
    last_span = int(np.nonzero(t[1:] > t[:-1])[0][-1])
    at_end = x == hi
    values[at_end, :] = 0.0
    values[at_end, last_span] = 1.0

    for p in range(2, order + 1):
        count = n_spans - p + 1
        t_i = t[:count]
        t_ip = t[p - 1:p - 1 + count]
        t_i1 = t[1:1 + count]
        t_ip1 = t[p:p + count]
        denom_left = t_ip - t_i
        denom_right = t_ip1 - t_i1
        w_left = np.divide(x[:, None] - t_i, denom_left,
                           out=np.zeros((len(x), count)), where=denom_left > 0)
        w_right = np.divide(t_ip1 - x[:, None], denom_right,
                            out=np.zeros((len(x), count)), where=denom_right > 0)
        values = w_left * values[:, :count] + w_right * values[:, 1:count + 1]

    if basis.drop_intercept:
        values = values[:, 1:]
    return values


@dataclass(frozen=True)
class PenaltyMatrix:
    """
    Difference penalty K = R^T R on spline coefficients.

    Attributes:
        K (ndarray): k x k symmetric positive semi-definite penalty
        rank (int): k - difference order
        order (int): Difference order (2 for P-splines)
    """
    K: np.ndarray
    rank: int
    order: int = 2

    def quadratic_form(self, beta: np.ndarray) -> float:
        return float(beta @ self.K @ beta)

    def __repr__(self):
        return f"PenaltyMatrix(k={self.K.shape[0]}, rank={self.rank}, order={self.order})"


def difference_penalty(k: int, order: int = 2, abscissae: Optional[np.ndarray] = None) -> PenaltyMatrix:
    """
    Build the difference penalty for k coefficients.

    Without abscissae the rows are plain differences of the given order.
    With abscissae they are divided differences over those points, scaled by
    order! * h^order with h the widest spacing; on uniform spacing the two
    coincide.

    Args:
        k: Number of coefficients
        order: Difference order
        abscissae: Strictly increasing location of each coefficient, e.g. SplineBasis.greville()

    Returns:
        PenaltyMatrix whose null space holds polynomials of degree < order in the
        coefficient index, or in the abscissae when given
    """
    if k <= order:
        raise InvalidArgumentError(f"need more than {order} coefficients for a difference penalty")
    if abscissae is None:
        R = np.diff(np.eye(k), n=order, axis=0)
    else:
        xi = np.asarray(abscissae, dtype=float)
        if xi.shape != (k,) or np.any(np.diff(xi) <= 0):
            raise InvalidArgumentError(f"abscissae must be {k} strictly increasing values")
        R = np.eye(k)
        for level in range(1, order + 1):
            R = (R[1:] - R[:-1]) / (xi[level:] - xi[:-level])[:, None]
        R *= math.factorial(order) * float(np.max(np.diff(xi))) ** order
    return PenaltyMatrix(K=R.T @ R, rank=k - order, order=order)
