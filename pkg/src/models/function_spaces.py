"""
Function spaces - Parametric shapes (Hill, power), their Jacobians, and the
projection onto the column space of a Jacobian.

The projection is what the shrinkage prior penalises against: a spline fit
is pulled toward the linearisation of the parametric space at the current
non-linear parameters.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from ..errors import InvalidArgumentError, SingularEvaluationError
from ..utils.distributions import (
    LogNormalSpec,
    TruncNormalSpec,
    log_lognormal_pdf,
    log_normal_pdf,
    log_trunc_normal_pdf,
    lognormal_from_moments,
)


@dataclass(frozen=True)
class HillParams:
    """
    Parameters of the Hill curve theta1 + theta2 x^theta4 / (theta3^theta4 + x^theta4).

    Attributes:
        theta1 (float): Background response at x = 0
        theta2 (float): Maximal change in the response
        theta3 (float): Covariate value of the half-maximal change (> 0)
        theta4 (float): Steepness (> 0)
    """
    theta1: float = 0.0
    theta2: float = 1.0
    theta3: float = 0.5
    theta4: float = 3.0

    def __post_init__(self):
        _check_hill(self.theta3, self.theta4)

    def to_dict(self) -> Dict:
        """Serialize to dictionary."""
        return {'theta1': self.theta1, 'theta2': self.theta2,
                'theta3': self.theta3, 'theta4': self.theta4}


@dataclass(frozen=True)
class PowerParams:
    """
    Parameters of the power curve theta1 + theta2 x^theta3.

    Attributes:
        theta1 (float): Intercept
        theta2 (float): Scale
        theta3 (float): Exponent
    """
    theta1: float = 0.0
    theta2: float = 1.0
    theta3: float = 0.5

    def to_dict(self) -> Dict:
        """Serialize to dictionary."""
        return {'theta1': self.theta1, 'theta2': self.theta2, 'theta3': self.theta3}


def _check_hill(theta3: float, theta4: float):
    if not (theta3 > 0 and theta4 > 0):
        raise InvalidArgumentError(f"Hill requires theta3 > 0 and theta4 > 0, got ({theta3}, {theta4})")


def _as_covariates(x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x < 0):
        raise InvalidArgumentError("covariates must be non-negative")
    return x


def _hill_fraction(x: np.ndarray, theta3: float, theta4: float) -> np.ndarray:
    """x^theta4 / (theta3^theta4 + x^theta4), exactly 0 at x = 0."""
    q = np.zeros_like(x)
    pos = x > 0
    q[pos] = special.expit(theta4 * (np.log(x[pos]) - math.log(theta3)))
    return q


def hill_mean(x, p: HillParams) -> np.ndarray:
    """
    Evaluate the Hill curve.

    Args:
        x: Non-negative covariates
        p: Hill parameters

    Returns:
        theta1 + theta2 x^theta4 / (theta3^theta4 + x^theta4); exactly theta1 at x = 0
    """
    x = _as_covariates(x)
    return p.theta1 + p.theta2 * _hill_fraction(x, p.theta3, p.theta4)


def hill_jacobian(x, theta3: float, theta4: float) -> np.ndarray:
    """
    Jacobian of the Hill curve with the theta2 factor dropped.

    Columns are d/dtheta1, d/dtheta2, and d/dtheta3, d/dtheta4 divided by
    theta2. Scaling columns leaves the spanned space unchanged, so the
    projection built from it does not depend on theta2.

    With q = x^theta4 / (theta3^theta4 + x^theta4) and s = q (1 - q):
    [1, q, -(theta4 / theta3) s, log(x / theta3) s]. Rows at x = 0 are
    (1, 0, 0, 0), the limit as x -> 0+.

    Returns:
        Matrix of shape (n, 4)
    """
    _check_hill(theta3, theta4)
    x = _as_covariates(x)
    q = _hill_fraction(x, theta3, theta4)
    s = q * (1.0 - q)
    log_ratio = np.zeros_like(x)
    pos = x > 0
    log_ratio[pos] = np.log(x[pos]) - math.log(theta3)
    H = np.empty((len(x), 4))
    H[:, 0] = 1.0
    H[:, 1] = q
    H[:, 2] = -(theta4 / theta3) * s
    H[:, 3] = log_ratio * s
    H[~pos, 1:] = 0.0
    return H


def _power_term(x: np.ndarray, theta3: float) -> np.ndarray:
    zero = x == 0
    if np.any(zero) and not theta3 > 0:
        raise SingularEvaluationError(
            f"x^theta3 is singular at x = 0 for theta3 = {theta3}",
            diagnostics={'theta3': theta3}
        )
    out = np.zeros_like(x)
    out[~zero] = np.exp(theta3 * np.log(x[~zero]))
    return out


def power_mean(x, p: PowerParams) -> np.ndarray:
    """
    Evaluate the power curve theta1 + theta2 x^theta3 (0^theta3 = 0 for theta3 > 0).

    Raises:
        SingularEvaluationError: If some x = 0 and theta3 <= 0
    """
    x = _as_covariates(x)
    return p.theta1 + p.theta2 * _power_term(x, p.theta3)


def power_jacobian(x, theta3: float) -> np.ndarray:
    """
    Jacobian of the power curve, columns [1, x^theta3, log(x) x^theta3].

    The theta2 factor of the last column is dropped (same argument as for
    the Hill Jacobian). Rows at x = 0 are (1, 0, 0).

    Returns:
        Matrix of shape (n, 3)
    """
    x = _as_covariates(x)
    term = _power_term(x, theta3)
    H = np.empty((len(x), 3))
    H[:, 0] = 1.0
    H[:, 1] = term
    H[:, 2] = 0.0
    pos = x > 0
    H[pos, 2] = np.log(x[pos]) * term[pos]
    return H


class PriorKind(Enum):
    """Families available for non-linear parameter priors."""
    NORMAL = 'normal'
    TRUNC_NORMAL = 'trunc_normal'
    LOGNORMAL = 'lognormal'


@dataclass(frozen=True)
class ParameterPrior:
    """
    Prior on one non-linear parameter.

    Attributes:
        name (str): Parameter name (theta3, theta4)
        kind (PriorKind): Distribution family
        mean (float): Mean (normal, truncated normal before truncation) or log-mean
        var (float): Variance, or log-variance for log-normal priors
    """
    name: str
    kind: PriorKind
    mean: float
    var: float

    @property
    def lower(self) -> Optional[float]:
        """Support lower bound (None for the whole real line)."""
        return None if self.kind is PriorKind.NORMAL else 0.0

    def log_pdf(self, value: float) -> float:
        if self.kind is PriorKind.NORMAL:
            return float(log_normal_pdf(value, self.mean, self.var))
        if self.kind is PriorKind.TRUNC_NORMAL:
            return log_trunc_normal_pdf(value, TruncNormalSpec(self.mean, self.var, 0.0))
        return log_lognormal_pdf(value, LogNormalSpec(self.mean, self.var))

    def center(self) -> float:
        """A starting value: the prior mean (log-normal: its natural-scale mean)."""
        if self.kind is PriorKind.LOGNORMAL:
            return LogNormalSpec(self.mean, self.var).mean
        return self.mean

    def scale_variance(self) -> float:
        """Prior variance on the parameter's natural scale."""
        if self.kind is PriorKind.LOGNORMAL:
            return LogNormalSpec(self.mean, self.var).variance
        return self.var

    @staticmethod
    def normal(name: str, mean: float, var: float) -> 'ParameterPrior':
        return ParameterPrior(name, PriorKind.NORMAL, mean, var)

    @staticmethod
    def trunc_normal(name: str, mean: float, var: float) -> 'ParameterPrior':
        return ParameterPrior(name, PriorKind.TRUNC_NORMAL, mean, var)

    @staticmethod
    def lognormal(name: str, spec: LogNormalSpec) -> 'ParameterPrior':
        return ParameterPrior(name, PriorKind.LOGNORMAL, spec.log_mu, spec.log_var)

    def to_dict(self) -> Dict:
        """Serialize to dictionary."""
        return {'name': self.name, 'kind': self.kind.value, 'mean': self.mean, 'var': self.var}

    @staticmethod
    def from_dict(data: Dict) -> 'ParameterPrior':
        """Deserialize from dictionary."""
        return ParameterPrior(data['name'], PriorKind(data['kind']), float(data['mean']), float(data['var']))


class SpaceKind(Enum):
    """Parametric families a function space can be built from."""
    HILL = 'hill'
    POWER = 'power'
    COMBINED = 'combined'


def default_hill_priors() -> Tuple[ParameterPrior, ParameterPrior]:
    """theta3 ~ N+(0.5, 0.05), theta4 log-normal with mean 3 and variance 3."""
    return (
        ParameterPrior.trunc_normal('theta3', 0.5, 0.05),
        ParameterPrior.lognormal('theta4', lognormal_from_moments(3.0, 3.0)),
    )


def default_power_priors() -> Tuple[ParameterPrior]:
    """theta3 ~ N(0.5, 0.25), centred on a concave shape."""
    return (ParameterPrior.normal('theta3', 0.5, 0.25),)


@dataclass(frozen=True)
class FunctionSpace:
    """
    A parametric function space used as the shrinkage target.

    Simple spaces (Hill, power) carry priors for their non-linear
    parameters. A combined space concatenates the Jacobians of its members
    and keeps a single intercept column.

    Attributes:
        kind (SpaceKind): Hill, power or combined
        priors (tuple): Non-linear parameter priors (simple spaces)
        members (tuple): Member spaces (combined spaces)
    """
    kind: SpaceKind
    priors: Tuple[ParameterPrior, ...] = ()
    members: Tuple['FunctionSpace', ...] = ()

    def __post_init__(self):
        if self.kind is SpaceKind.COMBINED:
            if len(self.members) < 2:
                raise InvalidArgumentError("a combined space needs at least two member spaces")
            if any(m.kind is SpaceKind.COMBINED for m in self.members):
                raise InvalidArgumentError("combined spaces cannot be nested")
        else:
            expected = 2 if self.kind is SpaceKind.HILL else 1
            if len(self.priors) != expected:
                raise InvalidArgumentError(f"{self.kind.value} space needs {expected} priors")

    @staticmethod
    def hill(priors: Optional[Sequence[ParameterPrior]] = None) -> 'FunctionSpace':
        return FunctionSpace(SpaceKind.HILL, tuple(priors or default_hill_priors()))

    @staticmethod
    def power(priors: Optional[Sequence[ParameterPrior]] = None) -> 'FunctionSpace':
        return FunctionSpace(SpaceKind.POWER, tuple(priors or default_power_priors()))

    @staticmethod
    def combined(spaces: Sequence['FunctionSpace']) -> 'FunctionSpace':
        return FunctionSpace(SpaceKind.COMBINED, members=tuple(spaces))

    @staticmethod
    def from_name(name: str) -> 'FunctionSpace':
        """Build 'hill', 'power' or a '+'-joined combination such as 'hill+power'."""
        parts = [p.strip().lower() for p in name.split('+') if p.strip()]
        builders = {'hill': FunctionSpace.hill, 'power': FunctionSpace.power}
        unknown = [p for p in parts if p not in builders]
        if not parts or unknown:
            raise InvalidArgumentError(f"unknown function space '{name}'")
        spaces = [builders[p]() for p in parts]
        return spaces[0] if len(spaces) == 1 else FunctionSpace.combined(spaces)

    @property
    def name(self) -> str:
        if self.kind is SpaceKind.COMBINED:
            return '+'.join(m.name for m in self.members)
        return self.kind.value

    @property
    def simple_spaces(self) -> Tuple['FunctionSpace', ...]:
        return self.members if self.kind is SpaceKind.COMBINED else (self,)

    @property
    def all_priors(self) -> Tuple[ParameterPrior, ...]:
        return tuple(p for s in self.simple_spaces for p in s.priors)

    @property
    def parameter_names(self) -> List[str]:
        """Qualified names of the non-linear parameters, e.g. ['hill_theta3', 'hill_theta4']."""
        return [f"{s.kind.value}_{p.name}" for s in self.simple_spaces for p in s.priors]

    @property
    def n_nonlinear(self) -> int:
        return len(self.all_priors)

    def split_theta(self, theta_nl: Sequence[float]) -> List[Tuple['FunctionSpace', Tuple[float, ...]]]:
        """Pair each simple space with its slice of the non-linear parameter vector."""
        theta_nl = tuple(float(v) for v in theta_nl)
        if len(theta_nl) != self.n_nonlinear:
            raise InvalidArgumentError(
                f"expected {self.n_nonlinear} non-linear parameters, got {len(theta_nl)}")
        pairs, start = [], 0
        for space in self.simple_spaces:
            stop = start + len(space.priors)
            pairs.append((space, theta_nl[start:stop]))
            start = stop
        return pairs

    def jacobian(self, x, theta_nl: Sequence[float]) -> np.ndarray:
        """Jacobian at the given non-linear parameters (single intercept column)."""
        pairs = self.split_theta(theta_nl)
        if len(pairs) == 1:
            space, params = pairs[0]
            return _simple_jacobian(space, x, params)
        return combined_jacobian(pairs, x)

    def log_prior(self, theta_nl: Sequence[float]) -> float:
        return float(sum(p.log_pdf(v) for p, v in zip(self.all_priors, theta_nl)))

    def initial_theta(self) -> np.ndarray:
        return np.array([p.center() for p in self.all_priors], dtype=float)

    def to_dict(self) -> Dict:
        """Serialize to dictionary."""
        if self.kind is SpaceKind.COMBINED:
            return {'kind': self.kind.value, 'members': [m.to_dict() for m in self.members]}
        return {'kind': self.kind.value, 'priors': [p.to_dict() for p in self.priors]}

    @staticmethod
    def from_dict(data: Dict) -> 'FunctionSpace':
        """Deserialize from dictionary."""
        kind = SpaceKind(data['kind'])
        if kind is SpaceKind.COMBINED:
            return FunctionSpace.combined([FunctionSpace.from_dict(m) for m in data['members']])
        return FunctionSpace(kind, tuple(ParameterPrior.from_dict(p) for p in data['priors']))

    def __repr__(self):
        return f"FunctionSpace({self.name}, params={self.parameter_names})"


def _simple_jacobian(space: FunctionSpace, x, params: Sequence[float]) -> np.ndarray:
    if space.kind is SpaceKind.HILL:
        return hill_jacobian(x, params[0], params[1])
    return power_jacobian(x, params[0])


def combined_jacobian(spaces: Sequence[Tuple[FunctionSpace, Sequence[float]]], x) -> np.ndarray:
    """
    Concatenate member Jacobians, keeping only the first intercept column.

    For Hill + power this gives n x 6: the shared intercept, three Hill
    columns and two power columns. Rank deficiency (for example a space
    listed twice) is left to the rank-revealing projection.

    Args:
        spaces: (simple space, non-linear parameters) pairs
        x: Covariates

    Returns:
        The combined Jacobian
    """
    if len(spaces) < 2:
        raise InvalidArgumentError("combined_jacobian needs at least two spaces")
    blocks = []
    for i, (space, params) in enumerate(spaces):
        H = _simple_jacobian(space, x, params)
        blocks.append(H if i == 0 else H[:, 1:])
    return np.hstack(blocks)


@dataclass(frozen=True)
class ProjectionOperator:
    """
    Orthogonal projection P = Q Q^T onto the numerical column space of a matrix.

    P is never formed explicitly; it is applied through its orthonormal
    factor Q (n x rank).

    Attributes:
        basis_matrix (ndarray): Q, orthonormal columns
        effective_rank (int): Number of retained singular directions
    """
    basis_matrix: np.ndarray
    effective_rank: int

    def apply(self, v: np.ndarray) -> np.ndarray:
        """P v (v may be a vector or a matrix of column vectors)."""
        Q = self.basis_matrix
        return Q @ (Q.T @ v)

    def residual(self, v: np.ndarray) -> np.ndarray:
        """(I - P) v."""
        return v - self.apply(v)

    def penalty_gram(self, Phi: np.ndarray) -> np.ndarray:
        """Phi^T (I - P) Phi, computed as R^T R with R = (I - P) Phi."""
        R = self.residual(Phi)
        return R.T @ R

    def matrix(self) -> np.ndarray:
        """Dense n x n projection matrix (for checks on small problems)."""
        Q = self.basis_matrix
        return Q @ Q.T

    def __repr__(self):
        return f"ProjectionOperator(n={self.basis_matrix.shape[0]}, rank={self.effective_rank})"


def projection(H: np.ndarray) -> ProjectionOperator:
    """
    Build the projection onto col(H) with a rank-revealing SVD.

    Singular values below max(n, s) * eps * sigma_max are dropped, which
    also collapses duplicated or nearly collinear Jacobian columns.

    Raises:
        InvalidArgumentError: If H does not have more rows than columns
    """
    H = np.asarray(H, dtype=float)
    if H.ndim == 1:
        H = H[:, None]
    n, s = H.shape
    if n <= s:
        raise InvalidArgumentError(f"projection needs more rows than columns, got {n} x {s}")
    U, sv, _ = np.linalg.svd(H, full_matrices=False)
    if sv.size == 0 or sv[0] == 0.0:
        return ProjectionOperator(np.zeros((n, 0)), 0)
    tol = max(n, s) * np.finfo(float).eps * sv[0]
    keep = sv > tol
    return ProjectionOperator(U[:, keep], int(keep.sum()))
