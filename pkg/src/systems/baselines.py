"""
Baseline fitters - Comparison methods for NLFS regression.

Bayesian B-spline and P-spline regression (Gibbs), parametric Hill and
power fits (componentwise random-walk Metropolis), and a parametric fit
plus a horseshoe B-spline that absorbs misspecification.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import InvalidArgumentError, NumericalError, UnderdeterminedDataError
from ..models.basis import PenaltyMatrix, SplineBasis, difference_penalty, make_knots
from ..models.chain import (
    ChainDraws,
    CurveKind,
    CurveModel,
    McmcState,
    beta_names,
    parametric_curves,
    parametric_names,
)
from ..models.dataset import Dataset
from ..models.function_spaces import (
    ParameterPrior,
    SpaceKind,
    default_hill_priors,
)
from ..utils.distributions import (
    sample_half_cauchy_sq,
    sample_ig_auxiliary,
    sample_inverse_gamma,
    sample_mvn_precision,
)
from .nlfs_sampler import update_intercept

logger = logging.getLogger(__name__)

# Largest prior precision handed to a Cholesky factorisation
MAX_PRIOR_PRECISION = 1e12


@dataclass
class BaselineConfig:
    """
    Settings shared by the baseline fitters.

    Attributes:
        n_draws (int): Total iterations, burn-in included
        burn_in (int): Iterations discarded from the start
        n_internal_knots (int): Interior knots of the spline basis
        order (int): Spline order (4 = cubic)
        drop_intercept (bool): Remove the first basis function (intercept handled by theta1)
        intercept_prior (tuple): (mean, variance) of theta1
        sigma_prior (tuple): (shape, scale) of the inverse-gamma prior on sigma2
        lambda_prior (tuple): (shape, scale) of the B-spline coefficient variance lambda2
        pspline_tau_prior (tuple): (shape, scale) of the P-spline smoothing variance tau2
        penalty_order (int): Difference order of the P-spline penalty
        scale_prior (tuple): (mean, variance) of theta2 in parametric fits
        log_sigma2_prior (tuple): (mean, variance) of log sigma2 in parametric fits
        proposal_scale (float): Initial random-walk sd as a fraction of the prior sd
        target_acceptance (tuple): Acceptance band the burn-in tuning aims for
        adapt_interval (int): Proposals between scale adjustments during burn-in
        grid_size (int): Points of the stored evaluation grid
        log_every (int): Iterations between DEBUG progress lines
    """
    n_draws: int = 10000
    burn_in: int = 2000
    n_internal_knots: int = 15
    order: int = 4
    drop_intercept: bool = True
    intercept_prior: Tuple[float, float] = (0.0, 20.0)
    sigma_prior: Tuple[float, float] = (0.001, 0.001)
    lambda_prior: Tuple[float, float] = (0.001, 0.001)
    pspline_tau_prior: Tuple[float, float] = (1.0, 0.005)
    penalty_order: int = 2
    scale_prior: Tuple[float, float] = (1.5, 2.0)
    log_sigma2_prior: Tuple[float, float] = (-1.75, 1.0)
    proposal_scale: float = 0.1
    target_acceptance: Tuple[float, float] = (0.2, 0.5)
    adapt_interval: int = 100
    grid_size: int = 101
    log_every: int = 1000

    def __post_init__(self):
        if self.n_draws < 1:
            raise InvalidArgumentError(f"n_draws must be >= 1, got {self.n_draws}")
        if not 0 <= self.burn_in < self.n_draws:
            raise InvalidArgumentError(
                f"burn_in must satisfy 0 <= burn_in < n_draws, got {self.burn_in} and {self.n_draws}")
        lo, hi = self.target_acceptance
        if not 0 < lo < hi < 1:
            raise InvalidArgumentError(f"target acceptance band must lie in (0, 1), got {self.target_acceptance}")
        if not self.proposal_scale > 0:
            raise InvalidArgumentError("proposal_scale must be > 0")
        if self.adapt_interval < 1:
            raise InvalidArgumentError("adapt_interval must be >= 1")

    def make_basis(self) -> SplineBasis:
        return SplineBasis(make_knots(self.n_internal_knots, self.order), drop_intercept=self.drop_intercept)

    def to_dict(self) -> Dict:
        """Serialize to dictionary."""
        return {
            'n_draws': self.n_draws,
            'burn_in': self.burn_in,
            'n_internal_knots': self.n_internal_knots,
            'order': self.order,
            'drop_intercept': self.drop_intercept,
            'intercept_prior': list(self.intercept_prior),
            'sigma_prior': list(self.sigma_prior),
            'lambda_prior': list(self.lambda_prior),
            'pspline_tau_prior': list(self.pspline_tau_prior),
            'penalty_order': self.penalty_order,
            'scale_prior': list(self.scale_prior),
            'log_sigma2_prior': list(self.log_sigma2_prior),
            'proposal_scale': self.proposal_scale,
            'target_acceptance': list(self.target_acceptance),
            'adapt_interval': self.adapt_interval,
            'grid_size': self.grid_size
        }


def _grid(domain: Tuple[float, float], size: int) -> np.ndarray:
    lo, hi = domain
    return np.linspace(lo, hi, size)


def _check_spline_data(data: Dataset, basis: SplineBasis) -> np.ndarray:
    Phi = basis.design_matrix(data.x)
    if data.n <= basis.dimension + 1:
        raise UnderdeterminedDataError(
            f"{data.n} observations cannot determine {basis.dimension} spline coefficients plus an intercept")
    return Phi


def _spline_state(data: Dataset, dimension: int) -> McmcState:
    return McmcState(
        beta=np.zeros(dimension),
        theta1=float(np.mean(data.y)),
        sigma2=max(float(np.var(data.y)), 1e-6),
        tau2=1.0
    )


def _run_chain(n_draws: int, burn_in: int, n_columns: int, step: Callable[[int], np.ndarray],
               label: str, log_every: int) -> np.ndarray:
    """Call ``step(t)`` for every iteration and stack the rows it returns after burn-in."""
    samples = np.empty((n_draws - burn_in, n_columns))
    for t in range(n_draws):
        try:
            row = step(t)
        except NumericalError as exc:
            raise exc.at_iteration(t)
        if t >= burn_in:
            samples[t - burn_in] = row
        if log_every and (t + 1) % log_every == 0:
            logger.debug("%s iteration %d/%d", label, t + 1, n_draws)
    return samples


def update_penalized_beta(Phi: np.ndarray, y_tilde: np.ndarray, gram: np.ndarray, penalty: np.ndarray,
                          sigma2: float, variance: float, rng: np.random.Generator) -> np.ndarray:
    """
    Draw beta ~ N(0, sigma2 variance K^-) given data, K = ``penalty``.

    Precision (Phi^T Phi + K / variance) / sigma2, proper whenever Phi has
    full column rank even if K does not.
    """
    precision = (gram + penalty / variance) / sigma2
    return sample_mvn_precision(Phi.T @ y_tilde / sigma2, precision, rng)


def update_smoothing_variance(quad: float, rank: int, sigma2: float, prior: Tuple[float, float],
                              rng: np.random.Generator) -> float:
    """
    Inverse-gamma update of a coefficient variance with prior IG(a, b).

    Shape a + rank / 2, scale b + quad / (2 sigma2), quad = beta^T K beta.
    """
    a, b = prior
    return sample_inverse_gamma(a + rank / 2.0, b + quad / (2.0 * sigma2), rng)


def fit_bspline(data: Dataset, config: Optional[BaselineConfig] = None,
                rng: Optional[np.random.Generator] = None) -> ChainDraws:
    """
    Bayesian B-spline regression without smoothing.

    beta ~ N(0, sigma2 lambda2 I), lambda2 ~ IG(0.001, 0.001); all updates are conjugate.

    Returns:
        Draws with columns beta_*, theta1, sigma2, lambda2
    """
    cfg = config or BaselineConfig()
    rng = rng if rng is not None else np.random.default_rng()
    basis = cfg.make_basis()
    Phi = _check_spline_data(data, basis)
    y = data.y
    n, k = Phi.shape
    gram = Phi.T @ Phi
    identity = np.eye(k)
    state = _spline_state(data, k)
    lambda2 = 1.0
    a_sigma, b_sigma = cfg.sigma_prior

    def step(t: int) -> np.ndarray:
        nonlocal lambda2
        state.beta = update_penalized_beta(Phi, y - state.theta1, gram, identity, state.sigma2, lambda2, rng)
        state.theta1 = update_intercept(state, Phi, y, cfg.intercept_prior, rng)
        resid = y - state.theta1 - Phi @ state.beta
        ss_beta = float(state.beta @ state.beta)
        state.sigma2 = sample_inverse_gamma(
            (n + k) / 2.0 + a_sigma, 0.5 * (float(resid @ resid) + ss_beta / lambda2) + b_sigma, rng)
        lambda2 = update_smoothing_variance(ss_beta, k, state.sigma2, cfg.lambda_prior, rng)
        return np.concatenate([state.beta, [state.theta1, state.sigma2, lambda2]])

    columns = beta_names(k) + ['theta1', 'sigma2', 'lambda2']
    samples = _run_chain(cfg.n_draws, cfg.burn_in, len(columns), step, 'bspline', cfg.log_every)
    logger.info("bspline finished %d iterations", cfg.n_draws)
    return ChainDraws(
        method='bspline',
        columns=tuple(columns),
        samples=samples,
        iterations=np.arange(cfg.burn_in, cfg.n_draws),
        curve_model=CurveModel(CurveKind.SPLINE, basis=basis),
        x=data.x,
        grid=_grid(basis.domain, cfg.grid_size)
    )


def pspline_penalty(basis: SplineBasis, order: int = 2) -> PenaltyMatrix:
    """
    Difference penalty over the Greville abscissae of the full basis.

    Its null space is exactly the polynomials of degree < order in x, so at
    order 2 a vanishing tau2 leaves a straight line.
    """
    if basis.drop_intercept:
        raise InvalidArgumentError("the P-spline penalty needs the full basis")
    return difference_penalty(basis.k, order, abscissae=basis.greville())


def fit_pspline(data: Dataset, config: Optional[BaselineConfig] = None,
                rng: Optional[np.random.Generator] = None, tau2: Optional[float] = None) -> ChainDraws:
    """
    Bayesian P-spline regression.

    beta ~ N(0, sigma2 tau2 K^-) on the full basis with K a difference
    penalty and tau2 ~ IG(1, 0.005). The constant lies in the null space of
    K, so there is no separate intercept. The beta precision
    (Phi^T Phi + K / tau2) / sigma2 is proper although K is rank deficient;
    the variance updates count rank(K) penalised directions.

    Args:
        data: Observations
        config: Chain settings (drop_intercept is ignored)
        rng: Random stream
        tau2: Hold tau2 at this value instead of sampling it

    Returns:
        Draws with columns beta_*, sigma2, tau2
    """
    cfg = config or BaselineConfig()
    rng = rng if rng is not None else np.random.default_rng()
    if tau2 is not None and not tau2 > 0:
        raise InvalidArgumentError(f"tau2 must be > 0, got {tau2}")
    basis = SplineBasis(make_knots(cfg.n_internal_knots, cfg.order))
    Phi = _check_spline_data(data, basis)
    y = data.y
    n, k = Phi.shape
    penalty = pspline_penalty(basis, cfg.penalty_order)
    gram = Phi.T @ Phi
    state = _spline_state(data, k)
    state.theta1 = 0.0
    if tau2 is not None:
        state.tau2 = tau2
    a_sigma, b_sigma = cfg.sigma_prior

    def step(t: int) -> np.ndarray:
        state.beta = update_penalized_beta(Phi, y, gram, penalty.K, state.sigma2, state.tau2, rng)
        resid = y - Phi @ state.beta
        quad = penalty.quadratic_form(state.beta)
        state.sigma2 = sample_inverse_gamma(
            (n + penalty.rank) / 2.0 + a_sigma, 0.5 * (float(resid @ resid) + quad / state.tau2) + b_sigma, rng)
        if tau2 is None:
            state.tau2 = update_smoothing_variance(quad, penalty.rank, state.sigma2, cfg.pspline_tau_prior, rng)
        return np.concatenate([state.beta, [state.sigma2, state.tau2]])

    columns = beta_names(k) + ['sigma2', 'tau2']
    samples = _run_chain(cfg.n_draws, cfg.burn_in, len(columns), step, 'pspline', cfg.log_every)
    logger.info("pspline finished %d iterations", cfg.n_draws)
    return ChainDraws(
        method='pspline',
        columns=tuple(columns),
        samples=samples,
        iterations=np.arange(cfg.burn_in, cfg.n_draws),
        curve_model=CurveModel(CurveKind.SPLINE, basis=basis),
        x=data.x,
        grid=_grid(basis.domain, cfg.grid_size)
    )


def parametric_priors(space_kind: SpaceKind, config: BaselineConfig) -> List[ParameterPrior]:
    """
    Priors of theta1, theta2 and the non-linear parameters of a parametric fit.

    The power exponent is kept positive so that curves stay finite at x = 0.
    """
    if space_kind not in (SpaceKind.HILL, SpaceKind.POWER):
        raise InvalidArgumentError(f"parametric fits need a Hill or power family, got {space_kind}")
    priors = [
        ParameterPrior.normal('theta1', *config.intercept_prior),
        ParameterPrior.normal('theta2', *config.scale_prior),
    ]
    if space_kind is SpaceKind.HILL:
        priors.extend(default_hill_priors())
    else:
        priors.append(ParameterPrior.trunc_normal('theta3', 0.5, 0.25))
    return priors


class RandomWalkMetropolis:
    """
    Componentwise random-walk Metropolis over a parameter vector.

    Positive-support parameters reject proposals at or below zero. During
    burn-in each proposal sd is multiplied up or down every
    ``adapt_interval`` proposals until the acceptance rate falls in the
    target band; afterwards the scales are frozen.

    Attributes:
        priors (list): One ParameterPrior per component
        values (ndarray): Current parameter vector
        sd (ndarray): Random-walk standard deviations
    """

    def __init__(self, priors: Sequence[ParameterPrior], initial: np.ndarray, config: BaselineConfig):
        self.priors = list(priors)
        self.values = np.asarray(initial, dtype=float).copy()
        self.sd = np.array([config.proposal_scale * math.sqrt(p.scale_variance()) for p in self.priors])
        self.target = config.target_acceptance
        self.adapt_interval = config.adapt_interval
        self.accepted = np.zeros(len(self.priors), dtype=int)
        self.proposed = np.zeros(len(self.priors), dtype=int)
        self._window_accepted = np.zeros(len(self.priors), dtype=int)
        self._window_proposed = np.zeros(len(self.priors), dtype=int)

    @property
    def names(self) -> List[str]:
        return [p.name for p in self.priors]

    def log_prior(self, values: np.ndarray) -> float:
        return float(sum(p.log_pdf(v) for p, v in zip(self.priors, values)))

    def sweep(self, log_likelihood: Callable[[np.ndarray], float], rng: np.random.Generator,
              adapting: bool = False) -> np.ndarray:
        """Update every component once; returns the new parameter vector."""
        current_lik = log_likelihood(self.values)
        current_prior = self.log_prior(self.values)
        for j, prior in enumerate(self.priors):
            proposal = self.values.copy()
            proposal[j] += self.sd[j] * rng.standard_normal()
            self.proposed[j] += 1
            self._window_proposed[j] += 1
            if prior.lower is not None and not proposal[j] > prior.lower:
                continue
            prop_prior = self.log_prior(proposal)
            prop_lik = log_likelihood(proposal)
            if not math.isfinite(prop_lik):
                continue
            if math.log(rng.uniform()) < prop_lik + prop_prior - current_lik - current_prior:
                self.values = proposal
                current_lik, current_prior = prop_lik, prop_prior
                self.accepted[j] += 1
                self._window_accepted[j] += 1
        if adapting:
            self._adapt()
        return self.values

    def _adapt(self):
        lo, hi = self.target
        for j in range(len(self.priors)):
            if self._window_proposed[j] < self.adapt_interval:
                continue
            rate = self._window_accepted[j] / self._window_proposed[j]
            if rate < lo:
                self.sd[j] *= 0.7
            elif rate > hi:
                self.sd[j] *= 1.4
            self._window_accepted[j] = 0
            self._window_proposed[j] = 0

    def rates(self) -> Dict[str, float]:
        return {name: float(a / p) if p else 0.0
                for name, a, p in zip(self.names, self.accepted, self.proposed)}


def _initial_parametric(space_kind: SpaceKind, priors: Sequence[ParameterPrior], y: np.ndarray) -> np.ndarray:
    theta = np.array([p.center() for p in priors], dtype=float)
    theta[0] = float(np.min(y))
    theta[1] = float(np.max(y) - np.min(y)) or priors[1].center()
    return theta


def _gaussian_log_lik(resid: np.ndarray, sigma2: float) -> float:
    return -0.5 * (len(resid) * math.log(sigma2) + float(resid @ resid) / sigma2)


def fit_parametric(data: Dataset, space_kind: SpaceKind, config: Optional[BaselineConfig] = None,
                   rng: Optional[np.random.Generator] = None) -> ChainDraws:
    """
    Fully parametric Hill or power regression by random-walk Metropolis.

    Parameters are theta1..theta4 (Hill) or theta1..theta3 (power) and
    log sigma2 ~ N(-1.75, 1).

    Returns:
        Draws with columns theta1, theta2, theta3[, theta4], sigma2
    """
    cfg = config or BaselineConfig()
    rng = rng if rng is not None else np.random.default_rng()
    x, y = data.x, data.y
    priors = parametric_priors(space_kind, cfg)
    priors.append(ParameterPrior.normal('log_sigma2', *cfg.log_sigma2_prior))
    initial = np.append(_initial_parametric(space_kind, priors[:-1], y), math.log(max(float(np.var(y)), 1e-6)))
    walker = RandomWalkMetropolis(priors, initial, cfg)

    def log_likelihood(values: np.ndarray) -> float:
        curve = parametric_curves(space_kind, x, values[None, :-1])[0]
        resid = y - curve
        return _gaussian_log_lik(resid, math.exp(values[-1]))

    def step(t: int) -> np.ndarray:
        values = walker.sweep(log_likelihood, rng, adapting=t < cfg.burn_in)
        return np.append(values[:-1], math.exp(values[-1]))

    columns = parametric_names(space_kind) + ['sigma2']
    label = f"param_{space_kind.value}"
    samples = _run_chain(cfg.n_draws, cfg.burn_in, len(columns), step, label, cfg.log_every)
    acceptance = walker.rates()
    acceptance['sigma2'] = acceptance.pop('log_sigma2')
    logger.info("%s finished %d iterations, acceptance %s", label, cfg.n_draws,
                {k: round(v, 3) for k, v in acceptance.items()})
    return ChainDraws(
        method=label,
        columns=tuple(columns),
        samples=samples,
        iterations=np.arange(cfg.burn_in, cfg.n_draws),
        curve_model=CurveModel(CurveKind.PARAMETRIC, space_kind=space_kind),
        x=x,
        grid=_grid((0.0, 1.0), cfg.grid_size),
        acceptance=acceptance,
        info={'proposal_sd': dict(zip(walker.names, walker.sd.tolist()))}
    )


@dataclass
class HorseshoeLocals:
    """
    Scales of a horseshoe prior beta_j ~ N(0, sigma2 tau2 lambda2_j).

    Attributes:
        lambda2 (ndarray): Local variances
        nu (ndarray): Auxiliaries of the local variances
        tau2 (float): Global variance
        xi (float): Auxiliary of the global variance
    """
    lambda2: np.ndarray
    nu: np.ndarray
    tau2: float = 1.0
    xi: float = 1.0

    def __post_init__(self):
        if np.any(self.lambda2 <= 0) or np.any(self.nu <= 0) or not (self.tau2 > 0 and self.xi > 0):
            raise InvalidArgumentError("horseshoe scales must be positive")

    @staticmethod
    def initial(k: int) -> 'HorseshoeLocals':
        return HorseshoeLocals(lambda2=np.ones(k), nu=np.ones(k))

    def prior_precision(self) -> np.ndarray:
        """Diagonal of the prior precision of beta, without the 1/sigma2 factor."""
        return np.minimum(1.0 / (self.tau2 * self.lambda2), MAX_PRIOR_PRECISION)


class HorseshoeSampler:
    """
    Inverse-gamma ladder for half-Cauchy local and global scales.

    With lambda_j, tau ~ C+(0, 1) written as scale mixtures of inverse
    gammas, every scale and auxiliary has a conjugate inverse-gamma
    conditional.
    """

    def update_locals(self, scales: HorseshoeLocals, beta: np.ndarray, sigma2: float,
                      rng: np.random.Generator) -> HorseshoeLocals:
        lambda2 = np.array([
            sample_inverse_gamma(1.0, 1.0 / nu + b * b / (2.0 * sigma2 * scales.tau2), rng)
            for b, nu in zip(beta, scales.nu)
        ])
        nu = np.array([sample_ig_auxiliary(l2, rng) for l2 in lambda2])
        return HorseshoeLocals(lambda2, nu, scales.tau2, scales.xi)

    def update_global(self, scales: HorseshoeLocals, beta: np.ndarray, sigma2: float,
                      rng: np.random.Generator) -> HorseshoeLocals:
        sum_sq = float(np.sum(beta * beta / scales.lambda2)) / sigma2
        tau2 = sample_half_cauchy_sq(len(beta), sum_sq, scales.xi, rng)
        xi = sample_ig_auxiliary(tau2, rng)
        return HorseshoeLocals(scales.lambda2, scales.nu, tau2, xi)

    def update(self, scales: HorseshoeLocals, beta: np.ndarray, sigma2: float,
               rng: np.random.Generator) -> HorseshoeLocals:
        scales = self.update_locals(scales, beta, sigma2, rng)
        return self.update_global(scales, beta, sigma2, rng)


def fit_param_plus_hs_spline(data: Dataset, space_kind: SpaceKind, config: Optional[BaselineConfig] = None,
                             rng: Optional[np.random.Generator] = None) -> ChainDraws:
    """
    Parametric curve plus a horseshoe B-spline correction.

    y = h(x; theta) + Phi beta + eps with beta ~ N(0, sigma2 tau2 diag(lambda2)).
    beta, the horseshoe scales and sigma2 ~ IG(0.001, 0.001) are Gibbs
    updates; theta moves by random-walk Metropolis given beta.

    Returns:
        Draws with columns theta1..theta4 (or theta3), beta_*, sigma2, tau2
    """
    cfg = config or BaselineConfig()
    rng = rng if rng is not None else np.random.default_rng()
    basis = cfg.make_basis()
    Phi = _check_spline_data(data, basis)
    x, y = data.x, data.y
    n, k = Phi.shape
    gram = Phi.T @ Phi
    priors = parametric_priors(space_kind, cfg)
    walker = RandomWalkMetropolis(priors, _initial_parametric(space_kind, priors, y), cfg)
    horseshoe = HorseshoeSampler()
    scales = HorseshoeLocals.initial(k)
    beta = np.zeros(k)
    sigma2 = max(float(np.var(y)), 1e-6)
    a_sigma, b_sigma = cfg.sigma_prior

    def curve_of(values: np.ndarray) -> np.ndarray:
        return parametric_curves(space_kind, x, values[None, :])[0]

    def step(t: int) -> np.ndarray:
        nonlocal beta, sigma2, scales
        target = y - curve_of(walker.values)
        precision = (gram + np.diag(scales.prior_precision())) / sigma2
        beta = sample_mvn_precision(Phi.T @ target / sigma2, precision, rng)
        scales = horseshoe.update(scales, beta, sigma2, rng)
        spline = Phi @ beta

        def log_likelihood(values: np.ndarray) -> float:
            return _gaussian_log_lik(y - spline - curve_of(values), sigma2)

        theta = walker.sweep(log_likelihood, rng, adapting=t < cfg.burn_in)
        resid = y - curve_of(theta) - spline
        quad = float(np.sum(beta * beta * scales.prior_precision()))
        sigma2 = sample_inverse_gamma((n + k) / 2.0 + a_sigma,
                                      0.5 * (float(resid @ resid) + quad) + b_sigma, rng)
        return np.concatenate([theta, beta, [sigma2, scales.tau2]])

    columns = parametric_names(space_kind) + beta_names(k) + ['sigma2', 'tau2']
    label = f"param_{space_kind.value}_bspline"
    samples = _run_chain(cfg.n_draws, cfg.burn_in, len(columns), step, label, cfg.log_every)
    acceptance = walker.rates()
    logger.info("%s finished %d iterations, acceptance %s", label, cfg.n_draws,
                {k: round(v, 3) for k, v in acceptance.items()})
    return ChainDraws(
        method=label,
        columns=tuple(columns),
        samples=samples,
        iterations=np.arange(cfg.burn_in, cfg.n_draws),
        curve_model=CurveModel(CurveKind.PARAMETRIC_SPLINE, basis=basis, space_kind=space_kind),
        x=x,
        grid=_grid(basis.domain, cfg.grid_size),
        acceptance=acceptance,
        info={'proposal_sd': dict(zip(walker.names, walker.sd.tolist()))}
    )
