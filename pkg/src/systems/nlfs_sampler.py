"""
NLFS sampler - Spline regression shrunk toward a non-linear function space.

Model (Phi without intercept column, M = Phi^T (I - P_theta) Phi):

    y = theta1 + Phi beta + eps,           eps ~ N(0, sigma2 I)
    beta | sigma2, tau2, theta ~ N(0, sigma2 tau2 M^-1)
    omega = 1 / (1 + tau2) ~ Beta(a, b)     (or tau ~ C+(0, 1))

P_theta projects onto the columns of the Jacobian of the parametric family
at the current non-linear parameters, so small tau2 pulls the spline toward
the family's linearisation.
"""

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Deque, Dict, List, Optional, Tuple

import numpy as np
from scipy import linalg

from ..errors import (
    InvalidArgumentError,
    NumericalError,
    SingularEvaluationError,
    UnderdeterminedDataError,
)
from ..models.basis import SplineBasis, make_knots
from ..models.chain import ChainDraws, CurveKind, CurveModel, McmcState, beta_names
from ..models.dataset import Dataset
from ..models.function_spaces import FunctionSpace, ProjectionOperator, SpaceKind, projection
from ..utils.distributions import (
    LOG_2PI,
    TruncNormalSpec,
    log_trunc_normal_proposal,
    sample_half_cauchy_sq,
    sample_ig_auxiliary,
    sample_inverse_gamma,
    sample_mvn_precision,
    sample_trunc_normal,
)

logger = logging.getLogger(__name__)


class ShrinkagePrior(Enum):
    """Prior on the shrinkage weight omega = 1 / (1 + tau2)."""
    OWN_SLICE = 'own_slice'      # Beta(0.5, n^(-k/2)) on omega, slice sampled on bounded tau2
    HALF_CAUCHY = 'half_cauchy'  # tau ~ C+(0, 1), inverse-gamma ladder


class MarginalCentering(Enum):
    """Response used by the marginal likelihood of the non-linear parameters."""
    INTERCEPT = 'intercept'  # y - theta1
    ZERO = 'zero'            # y


def shrinkage_hyperparameters(prior: ShrinkagePrior, n_coef: int, n_obs: int) -> Tuple[float, float]:
    """
    Beta(a, b) parameters of omega.

    Args:
        prior: Shrinkage prior
        n_coef: Number of spline coefficients k (columns of Phi)
        n_obs: Number of observations n

    Returns:
        (a, b): (0.5, exp(-k log(n) / 2)) for OWN_SLICE, (0.5, 0.5) for HALF_CAUCHY
    """
    if prior is ShrinkagePrior.HALF_CAUCHY:
        return 0.5, 0.5
    return 0.5, math.exp(-n_coef * math.log(n_obs) / 2.0)


@dataclass
class NlfsConfig:
    """
    Settings of one NLFS chain.

    Attributes:
        n_draws (int): Total iterations, burn-in included
        burn_in (int): Iterations discarded from the start
        shrinkage (ShrinkagePrior): Prior on omega
        tau2_bounds (tuple): Support of tau2 for the slice update
        n_internal_knots (int): Interior knots of the spline basis
        order (int): Spline order (4 = cubic)
        drop_intercept (bool): Remove the first basis function (intercept handled by theta1)
        intercept_prior (tuple): (mean, variance) of theta1
        sigma_prior (tuple): (shape, scale) of the inverse-gamma prior on sigma2
        proposal_var (dict): Proposal variance per non-linear parameter name; prior variance if absent
        adaptive_proposal (bool): Tune proposal variances from recent draws during burn-in
        adapt_window (int): Number of recent draws used for adaptation
        marginal_centering (MarginalCentering): Response used in the marginal likelihood
        grid_size (int): Points of the stored evaluation grid
        log_every (int): Iterations between DEBUG progress lines
    """
    n_draws: int = 10000
    burn_in: int = 2000
    shrinkage: ShrinkagePrior = ShrinkagePrior.OWN_SLICE
    tau2_bounds: Tuple[float, float] = (0.001, 10.0)
    n_internal_knots: int = 15
    order: int = 4
    drop_intercept: bool = True
    intercept_prior: Tuple[float, float] = (0.0, 20.0)
    sigma_prior: Tuple[float, float] = (0.001, 0.001)
    proposal_var: Dict[str, float] = field(default_factory=dict)
    adaptive_proposal: bool = False
    adapt_window: int = 100
    marginal_centering: MarginalCentering = MarginalCentering.INTERCEPT
    grid_size: int = 101
    log_every: int = 1000

    def __post_init__(self):
        if self.n_draws < 1:
            raise InvalidArgumentError(f"n_draws must be >= 1, got {self.n_draws}")
        if not 0 <= self.burn_in < self.n_draws:
            raise InvalidArgumentError(
                f"burn_in must satisfy 0 <= burn_in < n_draws, got {self.burn_in} and {self.n_draws}")
        lo, hi = self.tau2_bounds
        if not 0 < lo < hi:
            raise InvalidArgumentError(f"tau2 bounds must satisfy 0 < lo < hi, got {self.tau2_bounds}")
        if not self.intercept_prior[1] > 0:
            raise InvalidArgumentError("intercept prior variance must be > 0")
        if not (self.sigma_prior[0] > 0 and self.sigma_prior[1] > 0):
            raise InvalidArgumentError("sigma2 prior shape and scale must be > 0")
        if any(not v > 0 for v in self.proposal_var.values()):
            raise InvalidArgumentError("proposal variances must be > 0")
        if self.adapt_window < 2:
            raise InvalidArgumentError("adapt_window must be >= 2")
        if self.grid_size < 2:
            raise InvalidArgumentError("grid_size must be >= 2")

    def make_basis(self) -> SplineBasis:
        return SplineBasis(make_knots(self.n_internal_knots, self.order), drop_intercept=self.drop_intercept)

    def to_dict(self) -> Dict:
        """Serialize to dictionary."""
        return {
            'n_draws': self.n_draws,
            'burn_in': self.burn_in,
            'shrinkage': self.shrinkage.value,
            'tau2_bounds': list(self.tau2_bounds),
            'n_internal_knots': self.n_internal_knots,
            'order': self.order,
            'drop_intercept': self.drop_intercept,
            'intercept_prior': list(self.intercept_prior),
            'sigma_prior': list(self.sigma_prior),
            'proposal_var': dict(self.proposal_var),
            'adaptive_proposal': self.adaptive_proposal,
            'adapt_window': self.adapt_window,
            'marginal_centering': self.marginal_centering.value,
            'grid_size': self.grid_size
        }


@dataclass(frozen=True)
class Conditioning:
    """
    Quantities that depend only on the non-linear parameters.

    Attributes:
        theta_nl (ndarray): Parameters the projection was built at
        projection (ProjectionOperator): Projection onto the Jacobian's columns
        penalty (ndarray): M = Phi^T (I - P) Phi
        log_det_penalty (float): log det M, -inf when M is numerically singular
    """
    theta_nl: np.ndarray
    projection: ProjectionOperator
    penalty: np.ndarray
    log_det_penalty: float = math.nan


def penalty_log_det(R: np.ndarray) -> float:
    """
    log det (R^T R) from the singular values of R = (I - P) Phi.

    Small eigenvalues of M come out accurate to eps * |R| instead of
    eps * |M|. Returns -inf when a singular value falls below
    max(n, k) * eps * s_max, as when x^theta3 with theta3 in {1, 2, 3}
    lies in the cubic spline space.
    """
    s = linalg.svdvals(R)
    if len(s) == 0:
        return 0.0
    if s[-1] <= max(R.shape) * np.finfo(float).eps * s[0]:
        return -math.inf
    return float(2.0 * np.sum(np.log(s)))


def conditioning_at(space: FunctionSpace, x: np.ndarray, Phi: np.ndarray, theta_nl) -> Conditioning:
    theta_nl = np.asarray(theta_nl, dtype=float)
    P = projection(space.jacobian(x, theta_nl))
    R = P.residual(Phi)
    return Conditioning(theta_nl, P, R.T @ R, penalty_log_det(R))


def _responses(state: McmcState, y: np.ndarray) -> np.ndarray:
    return y - state.theta1


def update_beta(
    state: McmcState,
    Phi: np.ndarray,
    P: ProjectionOperator,
    y: np.ndarray,
    rng: np.random.Generator,
    penalty: Optional[np.ndarray] = None,
    gram: Optional[np.ndarray] = None
) -> np.ndarray:
    """
    Draw beta from its full conditional.

    Precision (Phi^T Phi + M / tau2) / sigma2, mean precision^-1 Phi^T (y - theta1) / sigma2.

    Args:
        state: Current state (theta1, sigma2, tau2 are read)
        Phi: Intercept-free design matrix
        P: Projection at the current non-linear parameters
        y: Responses
        rng: Random stream
        penalty: Precomputed M (computed from P if None)
        gram: Precomputed Phi^T Phi

    Raises:
        NumericalError: If the precision is not positive definite
    """
    M = P.penalty_gram(Phi) if penalty is None else penalty
    G = Phi.T @ Phi if gram is None else gram
    precision = (G + M / state.tau2) / state.sigma2
    rhs = Phi.T @ _responses(state, y) / state.sigma2
    return sample_mvn_precision(rhs, precision, rng)


def update_intercept(
    state: McmcState,
    Phi: np.ndarray,
    y: np.ndarray,
    prior: Tuple[float, float],
    rng: np.random.Generator
) -> float:
    """
    Conjugate normal update of theta1 ~ N(mu, s2).

    Posterior variance sigma2 s2 / (n s2 + sigma2), mean
    var (sum(y - Phi beta) / sigma2 + mu / s2).
    """
    mu, s2 = prior
    n = len(y)
    var = state.sigma2 * s2 / (n * s2 + state.sigma2)
    mean = var * (np.sum(y - Phi @ state.beta) / state.sigma2 + mu / s2)
    return float(mean + math.sqrt(var) * rng.standard_normal())


def update_sigma2(
    state: McmcState,
    Phi: np.ndarray,
    P: ProjectionOperator,
    y: np.ndarray,
    prior: Tuple[float, float],
    rng: np.random.Generator,
    penalty: Optional[np.ndarray] = None
) -> float:
    """
    Inverse-gamma update of sigma2.

    Shape (n + k)/2 + a, scale (RSS + beta^T M beta / tau2)/2 + b.
    """
    a_sigma, b_sigma = prior
    M = P.penalty_gram(Phi) if penalty is None else penalty
    n, k = Phi.shape
    resid = y - state.theta1 - Phi @ state.beta
    rss = float(resid @ resid)
    quad = float(state.beta @ M @ state.beta)
    shape = (n + k) / 2.0 + a_sigma
    scale = 0.5 * (rss + quad / state.tau2) + b_sigma
    return sample_inverse_gamma(shape, scale, rng)


def log_tau_target(tau: float, n_coef: int, quad_form: float, sigma2: float, a: float, b: float) -> float:
    """
    Log conditional density of tau (not tau2) up to a constant.

    g(tau) = (b - k/2 - 1/2) log tau2 - (a + b) log(1 + tau2) - Q / (2 sigma2 tau2)
    """
    tau2 = tau * tau
    return ((b - n_coef / 2.0 - 0.5) * math.log(tau2)
            - (a + b) * math.log1p(tau2)
            - quad_form / (2.0 * sigma2 * tau2))


def slice_tau2(
    tau2: float,
    n_coef: int,
    quad_form: float,
    sigma2: float,
    a: float,
    b: float,
    bounds: Tuple[float, float],
    rng: np.random.Generator
) -> float:
    """
    One slice-sampling transition for tau on [sqrt(lo), sqrt(hi)].

    The interval is bounded, so the initial bracket is the whole support and
    is shrunk toward the current point after each rejected candidate.

    Raises:
        NumericalError: If the target is not finite at the current point
    """
    lo, hi = math.sqrt(bounds[0]), math.sqrt(bounds[1])
    tau = min(max(math.sqrt(tau2), lo), hi)
    current = log_tau_target(tau, n_coef, quad_form, sigma2, a, b)
    if not math.isfinite(current):
        raise NumericalError(
            "slice target is not finite at the current tau2",
            diagnostics={'tau2': tau2, 'quad_form': quad_form, 'sigma2': sigma2}
        )
    level = current + math.log(rng.uniform())
    left, right = lo, hi
    while True:
        candidate = rng.uniform(left, right)
        if log_tau_target(candidate, n_coef, quad_form, sigma2, a, b) > level:
            return candidate * candidate
        if candidate < tau:
            left = candidate
        elif candidate > tau:
            right = candidate
        else:
            return tau * tau


def update_tau2_slice(
    state: McmcState,
    Phi: np.ndarray,
    P: ProjectionOperator,
    config: NlfsConfig,
    rng: np.random.Generator,
    penalty: Optional[np.ndarray] = None
) -> float:
    """Slice update of tau2 under the Beta prior on omega, restricted to the configured bounds."""
    M = P.penalty_gram(Phi) if penalty is None else penalty
    n, k = Phi.shape
    a, b = shrinkage_hyperparameters(ShrinkagePrior.OWN_SLICE, k, n)
    quad = float(state.beta @ M @ state.beta)
    return slice_tau2(state.tau2, k, quad, state.sigma2, a, b, config.tau2_bounds, rng)


def update_tau2_halfcauchy(
    state: McmcState,
    Phi: np.ndarray,
    P: ProjectionOperator,
    rng: np.random.Generator,
    penalty: Optional[np.ndarray] = None
) -> Tuple[float, float]:
    """
    Inverse-gamma ladder update of tau2 under tau ~ C+(0, 1).

    Returns:
        (tau2, xi): New global variance and its auxiliary variable
    """
    M = P.penalty_gram(Phi) if penalty is None else penalty
    k = Phi.shape[1]
    quad = float(state.beta @ M @ state.beta)
    tau2 = sample_half_cauchy_sq(k, quad / state.sigma2, state.xi, rng)
    xi = sample_ig_auxiliary(tau2, rng)
    return tau2, xi


def log_marginal_likelihood(
    y_tilde: np.ndarray,
    Phi: np.ndarray,
    gram_phi: np.ndarray,
    penalty_gram: np.ndarray,
    sigma2: float,
    tau2: float,
    log_det_penalty: Optional[float] = None
) -> float:
    """
    log N(y_tilde; 0, Sigma_y) with Sigma_y = sigma2 (I + tau2 Phi M^-1 Phi^T).

    Evaluated in coefficient space with A = M + tau2 Phi^T Phi:
    log det Sigma_y = n log sigma2 + log det A - log det M and
    y^T Sigma_y^-1 y = (y^T y - tau2 b^T A^-1 b) / sigma2 with b = Phi^T y.

    Args:
        log_det_penalty: log det M from :func:`penalty_log_det`; a Cholesky
            factor of M is used when None

    Raises:
        NumericalError: If M is singular or A is not numerically positive definite
    """
    n = len(y_tilde)
    A = penalty_gram + tau2 * gram_phi
    if log_det_penalty is None or math.isnan(log_det_penalty):
        try:
            chol_m = linalg.cholesky(penalty_gram, lower=True)
        except (linalg.LinAlgError, ValueError) as exc:
            raise NumericalError("penalty matrix is not positive definite") from exc
        log_det_penalty = 2.0 * float(np.sum(np.log(np.diag(chol_m))))
    if not math.isfinite(log_det_penalty):
        raise NumericalError("penalty matrix is singular", diagnostics={'log_det_penalty': log_det_penalty})
    try:
        chol_a = linalg.cholesky(A, lower=True)
    except (linalg.LinAlgError, ValueError) as exc:
        raise NumericalError("marginal covariance is not positive definite") from exc
    logdet_a = 2.0 * np.sum(np.log(np.diag(chol_a)))
    b = Phi.T @ y_tilde
    w = linalg.solve_triangular(chol_a, b, lower=True)
    quad = (float(y_tilde @ y_tilde) - tau2 * float(w @ w)) / sigma2
    logdet = n * math.log(sigma2) + logdet_a - log_det_penalty
    value = -0.5 * (n * LOG_2PI + logdet + quad)
    if not math.isfinite(value):
        raise NumericalError("marginal likelihood is not finite")
    return float(value)


def marginal_covariance(Phi: np.ndarray, penalty_gram: np.ndarray, sigma2: float, tau2: float) -> np.ndarray:
    """Dense Sigma_y (n x n); for checks on small problems."""
    n = Phi.shape[0]
    return sigma2 * (np.eye(n) + tau2 * Phi @ np.linalg.solve(penalty_gram, Phi.T))


@dataclass
class ProposalTuner:
    """
    Proposal variances of the non-linear parameters, optionally adapted.

    During burn-in each variance can be replaced by the empirical variance
    of the parameter's last ``window`` draws.
    """
    variances: np.ndarray
    window: int = 100
    history: List[Deque[float]] = field(default_factory=list)

    def __post_init__(self):
        self.variances = np.asarray(self.variances, dtype=float).copy()
        self.floors = self.variances * 1e-4
        self.history = [deque(maxlen=self.window) for _ in self.variances]

    def record(self, theta_nl: np.ndarray):
        for hist, value in zip(self.history, theta_nl):
            hist.append(float(value))

    def adapt(self):
        for j, hist in enumerate(self.history):
            if len(hist) == self.window:
                self.variances[j] = max(float(np.var(hist, ddof=1)), self.floors[j])


def parameter_lower_bounds(space: FunctionSpace, x: np.ndarray) -> List[Optional[float]]:
    """
    Support lower bound of each non-linear parameter.

    A power exponent is unrestricted when every covariate is positive and is
    kept positive otherwise, since 0^theta3 is singular for theta3 <= 0.
    """
    bounds = []
    has_zero = bool(np.any(x == 0))
    for simple in space.simple_spaces:
        for prior in simple.priors:
            lower = prior.lower
            if simple.kind is SpaceKind.POWER and has_zero:
                lower = 0.0
            bounds.append(lower)
    return bounds


def update_theta_mh(
    state: McmcState,
    space: FunctionSpace,
    x: np.ndarray,
    Phi: np.ndarray,
    y: np.ndarray,
    config: NlfsConfig,
    rng: np.random.Generator,
    proposal_var: Optional[np.ndarray] = None,
    gram: Optional[np.ndarray] = None,
    current: Optional[Conditioning] = None,
    stats: Optional['MhStats'] = None
) -> Tuple[np.ndarray, Conditioning]:
    """
    Sequential Metropolis-Hastings updates of the non-linear parameters with beta integrated out.

    Each parameter gets a random-walk proposal: N+(current, var) truncated at
    its lower bound for positive parameters (with the Hastings correction for
    the truncation), a plain normal otherwise. The log Hastings ratio is the
    change in marginal likelihood plus the change in log prior plus that
    correction. Proposals whose marginal covariance fails to factorise are
    rejected.

    Returns:
        (theta_nl, conditioning at the returned parameters)
    """
    G = Phi.T @ Phi if gram is None else gram
    y_tilde = y - state.theta1 if config.marginal_centering is MarginalCentering.INTERCEPT else y
    theta = np.asarray(state.theta_nl, dtype=float).copy()
    if proposal_var is None:
        proposal_var = np.array([config.proposal_var.get(name, prior.scale_variance())
                                 for name, prior in zip(space.parameter_names, space.all_priors)])
    lowers = parameter_lower_bounds(space, x)
    cond = current if current is not None else conditioning_at(space, x, Phi, theta)

    def log_ml(c: Conditioning) -> float:
        return log_marginal_likelihood(y_tilde, Phi, G, c.penalty, state.sigma2, state.tau2, c.log_det_penalty)

    try:
        current_ml = log_ml(cond)
    except NumericalError:
        current_ml = -math.inf
    current_prior = space.log_prior(theta)

    for j, lower in enumerate(lowers):
        var = float(proposal_var[j])
        old = theta[j]
        if lower is None:
            new = old + math.sqrt(var) * rng.standard_normal()
            correction = 0.0
        else:
            new = sample_trunc_normal(TruncNormalSpec(old, var, lower), rng)
            correction = (log_trunc_normal_proposal(old, new, var, lower)
                          - log_trunc_normal_proposal(new, old, var, lower))
        if stats is not None:
            stats.proposed[j] += 1
        if lower is not None and not new > lower:
            continue
        proposal = theta.copy()
        proposal[j] = new
        try:
            prop_cond = conditioning_at(space, x, Phi, proposal)
            prop_ml = log_ml(prop_cond)
        except (NumericalError, SingularEvaluationError):
            if stats is not None:
                stats.numerical_rejections += 1
            continue
        prop_prior = space.log_prior(proposal)
        log_ratio = prop_ml - current_ml + prop_prior - current_prior + correction
        if math.log(rng.uniform()) < log_ratio:
            theta, cond = proposal, prop_cond
            current_ml, current_prior = prop_ml, prop_prior
            if stats is not None:
                stats.accepted[j] += 1
    return theta, cond


@dataclass
class MhStats:
    """Per-parameter proposal counters of a chain."""
    names: List[str]
    proposed: np.ndarray = None
    accepted: np.ndarray = None
    numerical_rejections: int = 0

    def __post_init__(self):
        self.proposed = np.zeros(len(self.names), dtype=int)
        self.accepted = np.zeros(len(self.names), dtype=int)

    def rates(self) -> Dict[str, float]:
        return {name: float(a / p) if p else 0.0
                for name, a, p in zip(self.names, self.accepted, self.proposed)}


class NlfsSampler:
    """
    Gibbs-within-Metropolis sampler for NLFS regression.

    Each iteration rebuilds the projection at the current non-linear
    parameters, then updates beta, theta1, sigma2, tau2 and the non-linear
    parameters in that order.

    Attributes:
        data (Dataset): Observations with covariates inside the basis domain
        space (FunctionSpace): Shrinkage target
        config (NlfsConfig): Chain settings
        basis (SplineBasis): Spline basis built from the config
        Phi (ndarray): Design matrix at the observed covariates
    """

    def __init__(self, data: Dataset, space: FunctionSpace, config: Optional[NlfsConfig] = None):
        """
        Initialize the sampler.

        Raises:
            OutOfDomainError: If a covariate lies outside the basis domain
            UnderdeterminedDataError: If there are too few observations
        """
        self.data = data
        self.space = space
        self.config = config or NlfsConfig()
        self.basis = self.config.make_basis()
        self.Phi = self.basis.design_matrix(data.x)
        n, k = self.Phi.shape
        n_jacobian = space.jacobian(np.array([0.5, 0.75]), space.initial_theta()).shape[1]
        if n <= k + 1 or n <= n_jacobian:
            raise UnderdeterminedDataError(
                f"{n} observations cannot determine {k} spline coefficients plus an intercept")
        self.gram = self.Phi.T @ self.Phi
        self.a, self.b = shrinkage_hyperparameters(self.config.shrinkage, k, n)
        self.stats = MhStats(space.parameter_names)
        variances = [self.config.proposal_var.get(name, prior.scale_variance())
                     for name, prior in zip(space.parameter_names, space.all_priors)]
        self.tuner = ProposalTuner(np.array(variances), window=self.config.adapt_window)

    @property
    def columns(self) -> List[str]:
        return (beta_names(self.basis.dimension)
                + ['theta1', 'sigma2', 'tau2', 'omega'] + self.space.parameter_names)

    def initial_state(self) -> McmcState:
        """beta = 0, theta1 = mean(y), sigma2 = var(y), tau2 = 1 (clipped to bounds), prior centres."""
        y = self.data.y
        lo, hi = self.config.tau2_bounds
        tau2 = 1.0 if self.config.shrinkage is ShrinkagePrior.HALF_CAUCHY else min(max(1.0, lo), hi)
        return McmcState(
            beta=np.zeros(self.basis.dimension),
            theta1=float(np.mean(y)),
            sigma2=max(float(np.var(y)), 1e-6),
            tau2=tau2,
            theta_nl=self.space.initial_theta(),
            xi=1.0
        )

    def step(self, state: McmcState, rng: np.random.Generator,
             cond: Optional[Conditioning] = None) -> Tuple[McmcState, Conditioning]:
        """
        One full sweep.

        Returns:
            (new state, conditioning at its non-linear parameters)
        """
        x, y, Phi = self.data.x, self.data.y, self.Phi
        if cond is None:
            cond = conditioning_at(self.space, x, Phi, state.theta_nl)
        P, M = cond.projection, cond.penalty
        state = state.copy()
        state.beta = update_beta(state, Phi, P, y, rng, penalty=M, gram=self.gram)
        state.theta1 = update_intercept(state, Phi, y, self.config.intercept_prior, rng)
        state.sigma2 = update_sigma2(state, Phi, P, y, self.config.sigma_prior, rng, penalty=M)
        if self.config.shrinkage is ShrinkagePrior.HALF_CAUCHY:
            state.tau2, state.xi = update_tau2_halfcauchy(state, Phi, P, rng, penalty=M)
        else:
            quad = float(state.beta @ M @ state.beta)
            state.tau2 = slice_tau2(state.tau2, Phi.shape[1], quad, state.sigma2,
                                    self.a, self.b, self.config.tau2_bounds, rng)
        state.theta_nl, cond = update_theta_mh(
            state, self.space, x, Phi, y, self.config, rng,
            proposal_var=self.tuner.variances, gram=self.gram, current=cond, stats=self.stats)
        return state, cond

    def _row(self, state: McmcState) -> np.ndarray:
        return np.concatenate([state.beta, [state.theta1, state.sigma2, state.tau2, state.omega],
                               state.theta_nl])

    def run(self, rng: np.random.Generator) -> ChainDraws:
        """
        Run the chain and keep the post-burn-in draws.

        Raises:
            NumericalError: Tagged with the failing iteration
        """
        cfg = self.config
        state = self.initial_state()
        cond = None
        kept = cfg.n_draws - cfg.burn_in
        samples = np.empty((kept, len(self.columns)))
        for t in range(cfg.n_draws):
            try:
                state, cond = self.step(state, rng, cond)
            except NumericalError as exc:
                raise exc.at_iteration(t)
            if t < cfg.burn_in:
                if cfg.adaptive_proposal:
                    self.tuner.record(state.theta_nl)
                    self.tuner.adapt()
            else:
                samples[t - cfg.burn_in] = self._row(state)
            if cfg.log_every and (t + 1) % cfg.log_every == 0:
                logger.debug("nlfs[%s] iteration %d/%d: %r", self.space.name, t + 1, cfg.n_draws, state)

        acceptance = self.stats.rates()
        logger.info("nlfs[%s] finished %d iterations, acceptance %s, numerical rejections %d",
                    self.space.name, cfg.n_draws,
                    {k: round(v, 3) for k, v in acceptance.items()}, self.stats.numerical_rejections)
        lo, hi = self.basis.domain
        return ChainDraws(
            method='nlfs',
            columns=tuple(self.columns),
            samples=samples,
            iterations=np.arange(cfg.burn_in, cfg.n_draws),
            curve_model=CurveModel(CurveKind.SPLINE, basis=self.basis),
            x=self.data.x,
            grid=np.linspace(lo, hi, cfg.grid_size),
            acceptance=acceptance,
            numerical_rejections=self.stats.numerical_rejections,
            info={
                'space': self.space.name,
                'shrinkage': cfg.shrinkage.value,
                'omega_a': self.a,
                'omega_b': self.b,
                'proposal_var': dict(zip(self.space.parameter_names, self.tuner.variances.tolist()))
            }
        )


def run_nlfs(data: Dataset, space: FunctionSpace, config: Optional[NlfsConfig] = None,
             rng: Optional[np.random.Generator] = None) -> ChainDraws:
    """
    Fit NLFS regression shrunk toward ``space``.

    Args:
        data: Observations with covariates in the basis domain (usually [0, 1])
        space: Hill, power or combined function space
        config: Chain settings (defaults if None)
        rng: Random stream (fresh unseeded stream if None)

    Returns:
        Post-burn-in draws with the omega trace and acceptance rates
    """
    sampler = NlfsSampler(data, space, config)
    return sampler.run(rng if rng is not None else np.random.default_rng())
