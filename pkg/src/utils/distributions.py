"""
Distributions - Sampling and log-density primitives used by the samplers.

Every sampler takes an explicit ``numpy.random.Generator``; nothing here
touches global random state.
"""

import math
from dataclasses import dataclass
from typing import Dict

import numpy as np
from scipy import linalg, special, stats

from ..errors import DegenerateTruncationError, InvalidArgumentError, NumericalError

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class TruncNormalSpec:
    """
    Normal distribution N(mu, var) truncated to [lower, inf).

    Attributes:
        mu (float): Mean before truncation
        var (float): Variance before truncation
        lower (float): Truncation point
    """
    mu: float
    var: float
    lower: float = 0.0

    def __post_init__(self):
        if not self.var > 0:
            raise InvalidArgumentError(f"truncated normal variance must be > 0, got {self.var}")

    @property
    def sd(self) -> float:
        return math.sqrt(self.var)

    def to_dict(self) -> Dict:
        """Serialize to dictionary."""
        return {'mu': self.mu, 'var': self.var, 'lower': self.lower}

    @staticmethod
    def from_dict(data: Dict) -> 'TruncNormalSpec':
        """Deserialize from dictionary."""
        return TruncNormalSpec(**data)


@dataclass(frozen=True)
class LogNormalSpec:
    """
    Log-normal distribution given by the mean and variance of log X.

    Attributes:
        log_mu (float): Mean of log X
        log_var (float): Variance of log X
    """
    log_mu: float
    log_var: float

    def __post_init__(self):
        if not self.log_var > 0:
            raise InvalidArgumentError(f"log-normal log-variance must be > 0, got {self.log_var}")

    @property
    def mean(self) -> float:
        return math.exp(self.log_mu + self.log_var / 2.0)

    @property
    def variance(self) -> float:
        return (math.exp(self.log_var) - 1.0) * math.exp(2.0 * self.log_mu + self.log_var)

    def to_dict(self) -> Dict:
        """Serialize to dictionary."""
        return {'log_mu': self.log_mu, 'log_var': self.log_var}

    @staticmethod
    def from_dict(data: Dict) -> 'LogNormalSpec':
        """Deserialize from dictionary."""
        return LogNormalSpec(**data)


def sample_mvn_precision(
    mean_rhs: np.ndarray,
    precision: np.ndarray,
    rng: np.random.Generator
) -> np.ndarray:
    """
    Draw from N(precision^-1 mean_rhs, precision^-1).

    With precision = L L^T the draw is L^-T (L^-1 mean_rhs + z), z ~ N(0, I).

    Args:
        mean_rhs: Canonical mean vector b
        precision: Symmetric positive definite precision matrix Q
        rng: Random stream

    Returns:
        One draw as a 1-D array

    Raises:
        NumericalError: If Q is not numerically positive definite
    """
    try:
        chol = linalg.cholesky(precision, lower=True, check_finite=True)
    except (linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(
            "posterior precision is not positive definite",
            diagnostics=precision_diagnostics(precision)
        ) from exc
    w = linalg.solve_triangular(chol, mean_rhs, lower=True)
    z = rng.standard_normal(len(mean_rhs))
    return linalg.solve_triangular(chol, w + z, lower=True, trans='T')


def precision_diagnostics(matrix: np.ndarray) -> Dict:
    """Condition summary attached to Cholesky failures."""
    try:
        eig = np.linalg.eigvalsh(0.5 * (matrix + matrix.T))
        return {
            'min_eigenvalue': float(eig[0]),
            'max_eigenvalue': float(eig[-1]),
            'condition': float(abs(eig[-1] / eig[0])) if eig[0] != 0 else math.inf,
        }
    except np.linalg.LinAlgError:
        return {'finite': bool(np.all(np.isfinite(matrix)))}


TAIL_REJECTION_Z = 5.0


def _exponential_tail(a: float, rng: np.random.Generator) -> float:
    """
    Standard normal draw conditioned on z >= a for large a.

    Exponential proposals a + Exp(alpha) with alpha = (a + sqrt(a^2 + 4)) / 2,
    accepted with probability exp(-(z - alpha)^2 / 2).
    """
    alpha = 0.5 * (a + math.sqrt(a * a + 4.0))
    while True:
        z = a + rng.exponential(1.0 / alpha)
        if math.log(rng.uniform()) <= -0.5 * (z - alpha) ** 2:
            return z


def sample_trunc_normal(spec: TruncNormalSpec, rng: np.random.Generator) -> float:
    """
    Draw from a lower-truncated normal.

    Inversion: l = P(X < lower) for X ~ N(mu, var), u ~ Unif[l, 1], return
    the u-quantile. Bounds above the mean are inverted on the survival scale,
    and bounds more than five sds above the mean use exponential rejection,
    where the quantile function has lost its precision.

    Raises:
        DegenerateTruncationError: If no mass (numerically) lies above the bound
    """
    z_lower = (spec.lower - spec.mu) / spec.sd
    if not special.ndtr(-z_lower) > 0.0:
        raise DegenerateTruncationError(
            "no probability mass above truncation point",
            diagnostics=spec.to_dict()
        )
    if z_lower > TAIL_REJECTION_Z:
        z = _exponential_tail(z_lower, rng)
    elif z_lower > 0:
        # u = l + (1 - l) v inverted on the survival scale: 1 - u = sf(lower) (1 - v)
        z = -special.ndtri(special.ndtr(-z_lower) * (1.0 - rng.uniform()))
    else:
        lower_cdf = special.ndtr(z_lower)
        z = special.ndtri(lower_cdf + (1.0 - lower_cdf) * rng.uniform())
    return float(max(spec.mu + spec.sd * z, spec.lower))


def trunc_normal_mean(spec: TruncNormalSpec) -> float:
    """Closed-form mean of the truncated normal."""
    alpha = (spec.lower - spec.mu) / spec.sd
    return spec.mu + spec.sd * stats.norm.pdf(alpha) / stats.norm.sf(alpha)


def lognormal_from_moments(mean: float, var: float) -> LogNormalSpec:
    """
    Moment-match a log-normal to a given mean and variance.

    log_var = log(1 + var / mean^2), log_mu = log(mean) - log_var / 2.
    """
    if not (mean > 0 and var > 0):
        raise InvalidArgumentError("log-normal moments require mean > 0 and var > 0")
    log_var = math.log1p(var / mean ** 2)
    return LogNormalSpec(log_mu=math.log(mean) - log_var / 2.0, log_var=log_var)


def sample_inverse_gamma(shape: float, scale: float, rng: np.random.Generator) -> float:
    """Draw from IG(shape, scale) as scale / Gamma(shape, 1)."""
    while True:
        draw = rng.gamma(shape, 1.0)
        # tiny shapes underflow the gamma draw to 0 or a denormal; redraw
        if draw > 0.0:
            value = scale / draw
            if math.isfinite(value):
                return float(value)


def sample_ig_auxiliary(scale_sq: float, rng: np.random.Generator) -> float:
    """
    Auxiliary variable of the half-Cauchy inverse-gamma ladder.

    For s ~ C+(0, 1) written as s^2 | a ~ IG(1/2, 1/a), a ~ IG(1/2, 1), the
    conditional of the auxiliary is a | s^2 ~ IG(1, 1 + 1/s^2).
    """
    return sample_inverse_gamma(1.0, 1.0 + 1.0 / scale_sq, rng)


def sample_half_cauchy_sq(n_terms: float, sum_sq: float, auxiliary: float,
                          rng: np.random.Generator) -> float:
    """
    Conditional draw of a squared half-Cauchy scale under the ladder.

    s^2 | rest ~ IG((n_terms + 1)/2, 1/auxiliary + sum_sq / 2), where sum_sq is
    the (already noise-scaled) quadratic form the scale multiplies.
    """
    return sample_inverse_gamma((n_terms + 1.0) / 2.0, 1.0 / auxiliary + sum_sq / 2.0, rng)


def sample_beta(a: float, b: float, rng: np.random.Generator) -> float:
    """Beta draw through two gamma variates."""
    x = rng.gamma(a, 1.0)
    y = rng.gamma(b, 1.0)
    return float(x / (x + y))


def log_normal_pdf(x, mu: float, var: float):
    """Log density of N(mu, var)."""
    x = np.asarray(x, dtype=float)
    return -0.5 * (LOG_2PI + math.log(var) + (x - mu) ** 2 / var)


def log_trunc_normal_pdf(x: float, spec: TruncNormalSpec) -> float:
    """Log density of the truncated normal (-inf below the bound)."""
    if x < spec.lower:
        return -math.inf
    log_mass = special.log_ndtr((spec.mu - spec.lower) / spec.sd)
    return float(log_normal_pdf(x, spec.mu, spec.var) - log_mass)


def log_lognormal_pdf(x: float, spec: LogNormalSpec) -> float:
    """Log density of the log-normal (-inf for x <= 0)."""
    if x <= 0:
        return -math.inf
    log_x = math.log(x)
    return float(log_normal_pdf(log_x, spec.log_mu, spec.log_var) - log_x)


def log_inverse_gamma_pdf(x: float, shape: float, scale: float) -> float:
    """Log density of IG(shape, scale)."""
    if x <= 0:
        return -math.inf
    return (shape * math.log(scale) - special.gammaln(shape)
            - (shape + 1.0) * math.log(x) - scale / x)


def log_trunc_normal_proposal(to: float, frm: float, var: float, lower: float = 0.0) -> float:
    """
    Log density of moving from ``frm`` to ``to`` under N+(frm, var) on [lower, inf).

    Used for the Hastings correction of truncated random-walk proposals.
    """
    return log_trunc_normal_pdf(to, TruncNormalSpec(frm, var, lower))
