"""
Unit tests for the NLFS Gibbs updates, marginal likelihood and full chains.
"""

import contextlib
import math
import unittest
from unittest import mock

import numpy as np
from scipy import stats

from src.errors import InvalidArgumentError, NumericalError, UnderdeterminedDataError
from src.models.basis import SplineBasis, make_knots
from src.models.chain import McmcState
from src.models.dataset import Dataset
from src.models.function_spaces import FunctionSpace, HillParams, hill_mean, power_jacobian, projection
from src.systems import nlfs_sampler
from src.systems.nlfs_sampler import (
    MhStats,
    NlfsConfig,
    NlfsSampler,
    ShrinkagePrior,
    conditioning_at,
    log_marginal_likelihood,
    marginal_covariance,
    parameter_lower_bounds,
    penalty_log_det,
    run_nlfs,
    shrinkage_hyperparameters,
    slice_tau2,
    update_beta,
    update_intercept,
    update_sigma2,
    update_tau2_halfcauchy,
    update_theta_mh,
)


def _problem(n=30, n_internal=5, seed=0):
    """Small design with a power-space projection and noisy square-root data."""
    rng = np.random.default_rng(seed)
    x = np.linspace(0.02, 1.0, n)
    Phi = SplineBasis(make_knots(n_internal), drop_intercept=True).design_matrix(x)
    P = projection(power_jacobian(x, 0.5))
    y = 0.2 + np.sqrt(x) + 0.1 * np.sin(6 * x) + 0.05 * rng.standard_normal(n)
    return x, Phi, P, y


def _spectral_log_marginal(y, Phi, P, sigma2, tau2):
    """log N(y; 0, sigma2 (I + tau2 Phi M^-1 Phi^T)) from the SVD of C = Phi R^+, M = R^T R."""
    C = Phi @ np.linalg.pinv(P.residual(Phi))
    U, s, _ = np.linalg.svd(C)
    scaled = 1.0 + tau2 * s ** 2
    proj = U.T @ y
    n = len(y)
    logdet = n * math.log(sigma2) + float(np.sum(np.log(scaled)))
    quad = float(np.sum(proj ** 2 / scaled)) / sigma2
    return -0.5 * (n * math.log(2 * math.pi) + logdet + quad)


class TestMarginalLikelihood(unittest.TestCase):
    """Test cases for the coefficient-space marginal likelihood."""

    def test_matches_dense_gaussian(self):
        """Test against a dense multivariate normal log density."""
        x, Phi, P, y = _problem()
        M = P.penalty_gram(Phi)
        for sigma2, tau2 in [(0.01, 0.5), (1.0, 3.0), (0.2, 0.001)]:
            cov = marginal_covariance(Phi, M, sigma2, tau2)
            expected = stats.multivariate_normal(np.zeros(len(y)), cov).logpdf(y)
            value = log_marginal_likelihood(y, Phi, Phi.T @ Phi, M, sigma2, tau2)
            self.assertAlmostEqual(value, expected, delta=1e-6 * abs(expected))

    def test_matches_spectral_evaluation(self):
        """Test the coefficient-space value equals the n-space evaluation within 1e-8."""
        x, Phi, P, y = _problem(seed=1)
        R = P.residual(Phi)
        log_det = penalty_log_det(R)
        for sigma2, tau2 in [(0.05, 0.7), (0.01, 0.001), (0.5, 10.0)]:
            value = log_marginal_likelihood(y, Phi, Phi.T @ Phi, R.T @ R, sigma2, tau2, log_det)
            self.assertAlmostEqual(value, _spectral_log_marginal(y, Phi, P, sigma2, tau2), delta=1e-8)

    def test_conjugate_identity(self):
        """Test log p(y) = log p(y | 0) + log p(beta = 0) - log p(beta = 0 | y)."""
        x, Phi, P, y = _problem(seed=1)
        R = P.residual(Phi)
        M = R.T @ R
        log_det_m = penalty_log_det(R)
        sigma2, tau2 = 0.05, 0.7
        n, k = Phi.shape
        G = Phi.T @ Phi
        B = G + M / tau2
        post_mean = np.linalg.solve(B, Phi.T @ y)
        log_det_b = np.linalg.slogdet(B)[1]
        log_lik_zero = -0.5 * (n * math.log(2 * math.pi * sigma2) + float(y @ y) / sigma2)
        log_prior_zero = -0.5 * k * math.log(2 * math.pi * sigma2 * tau2) + 0.5 * log_det_m
        log_post_zero = (-0.5 * k * math.log(2 * math.pi * sigma2) + 0.5 * log_det_b
                         - 0.5 * float(post_mean @ B @ post_mean) / sigma2)
        expected = log_lik_zero + log_prior_zero - log_post_zero
        value = log_marginal_likelihood(y, Phi, G, M, sigma2, tau2, log_det_m)
        self.assertAlmostEqual(value, expected, delta=1e-8)

    def test_near_integer_power_exponent(self):
        """Test an exponent next to 1, where M is nearly singular, still evaluates accurately."""
        x, Phi, _, y = _problem(seed=2)
        space = FunctionSpace.power()
        for theta3 in (0.999, 1.001):
            cond = conditioning_at(space, x, Phi, [theta3])
            self.assertTrue(math.isfinite(cond.log_det_penalty))
            value = log_marginal_likelihood(y, Phi, Phi.T @ Phi, cond.penalty, 0.01, 0.1, cond.log_det_penalty)
            expected = _spectral_log_marginal(y, Phi, cond.projection, 0.01, 0.1)
            self.assertAlmostEqual(value, expected, delta=1e-6 * max(1.0, abs(expected)))

    def test_singular_penalty(self):
        """Test a singular penalty raises instead of returning a value."""
        x, Phi, P, y = _problem()
        with self.assertRaises(NumericalError):
            log_marginal_likelihood(y, Phi, Phi.T @ Phi, P.penalty_gram(Phi), 0.1, 1.0, -math.inf)
        self.assertEqual(penalty_log_det(np.zeros((5, 2))), -math.inf)


class TestConditionalUpdates(unittest.TestCase):
    """Test cases for the Gibbs full conditionals."""

    def test_beta_mean(self):
        """Test a near-noiseless beta draw sits on the conditional mean."""
        x, Phi, P, y = _problem()
        M = P.penalty_gram(Phi)
        state = McmcState(beta=np.zeros(Phi.shape[1]), theta1=0.2, sigma2=1e-12, tau2=0.5)
        draw = update_beta(state, Phi, P, y, np.random.default_rng(3))
        mean = np.linalg.solve(Phi.T @ Phi + M / 0.5, Phi.T @ (y - 0.2))
        self.assertTrue(np.allclose(draw, mean, atol=1e-4))

    def test_beta_precomputed_penalty(self):
        """Test passing M and the Gram matrix gives the same draw."""
        x, Phi, P, y = _problem()
        state = McmcState(beta=np.zeros(Phi.shape[1]), theta1=0.1, sigma2=0.3, tau2=2.0)
        a = update_beta(state, Phi, P, y, np.random.default_rng(4))
        b = update_beta(state, Phi, P, y, np.random.default_rng(4),
                        penalty=P.penalty_gram(Phi), gram=Phi.T @ Phi)
        self.assertTrue(np.allclose(a, b))

    def test_beta_two_coefficients_grid(self):
        """Test the beta draw against a grid-evaluated bivariate density for k = 2."""
        rng = np.random.default_rng(41)
        x = np.linspace(0.05, 1.0, 15)
        Phi = np.column_stack([x, x ** 2])
        P = projection(np.ones((15, 1)))
        y = 0.3 + 0.8 * x - 0.5 * x ** 2 + 0.2 * rng.standard_normal(15)
        state = McmcState(beta=np.zeros(2), theta1=0.3, sigma2=0.04, tau2=0.5)
        M = P.penalty_gram(Phi)
        y_tilde = y - state.theta1
        precision = (Phi.T @ Phi + M / state.tau2) / state.sigma2
        cov = np.linalg.inv(precision)
        mean = cov @ Phi.T @ y_tilde / state.sigma2
        sd = np.sqrt(np.diag(cov))
        axes = [np.linspace(m - 7.0 * s, m + 7.0 * s, 401) for m, s in zip(mean, sd)]
        b1, b2 = np.meshgrid(*axes, indexing='ij')
        points = np.stack([b1.ravel(), b2.ravel()], axis=1)
        resid = y_tilde[None, :] - points @ Phi.T
        log_p = -0.5 * (np.sum(resid ** 2, axis=1)
                        + np.einsum('ij,jk,ik->i', points, M, points) / state.tau2) / state.sigma2
        density = np.exp(log_p - log_p.max()).reshape(b1.shape)

        draws = np.array([update_beta(state, Phi, P, y, rng) for _ in range(4000)])
        for d, axis in enumerate(axes):
            marginal = density.sum(axis=1 - d)
            cdf = np.cumsum(marginal) - 0.5 * marginal
            cdf /= marginal.sum()
            result = stats.kstest(draws[:, d], lambda v, axis=axis, cdf=cdf: np.interp(v, axis, cdf))
            self.assertGreater(result.pvalue, 0.01, d)

    def test_small_tau2_shrinks_penalised_part(self):
        """Test the penalised part of E[beta] is at least 10 times smaller at tau2 = 0.001 than at 10."""
        rng = np.random.default_rng(43)
        x = np.sort(rng.uniform(0.0, 1.0, 100))
        truth = HillParams(0.1, 1.0, 0.3, 6.0)
        y = hill_mean(x, truth) + math.sqrt(0.005) * rng.standard_normal(100)
        space = FunctionSpace.hill()
        Phi = SplineBasis(make_knots(15), drop_intercept=True).design_matrix(x)
        P = projection(space.jacobian(x, [truth.theta3, truth.theta4]))
        R = P.residual(Phi)
        norms = {}
        for tau2 in (0.001, 10.0):
            state = McmcState(beta=np.zeros(Phi.shape[1]), theta1=truth.theta1, sigma2=0.005, tau2=tau2)
            mean = np.mean([update_beta(state, Phi, P, y, rng) for _ in range(2000)], axis=0)
            norms[tau2] = float(np.linalg.norm(R @ mean))
        self.assertGreaterEqual(norms[10.0], 10.0 * norms[0.001])

    def test_intercept_flat_prior(self):
        """Test a very wide prior gives mean(y - Phi beta) and variance sigma2 / n."""
        x, Phi, P, y = _problem()
        rng = np.random.default_rng(6)
        beta = np.full(Phi.shape[1], 0.1)
        state = McmcState(beta=beta, sigma2=0.04)
        draws = np.array([update_intercept(state, Phi, y, (0.0, 1e12), rng) for _ in range(5000)])
        target = np.mean(y - Phi @ beta)
        sd = math.sqrt(0.04 / len(y))
        self.assertAlmostEqual(draws.mean(), target, delta=4 * sd / math.sqrt(5000))
        self.assertAlmostEqual(draws.std(), sd, delta=0.05 * sd)

    def test_intercept_prior_pull(self):
        """Test a tight prior keeps theta1 at its prior mean."""
        x, Phi, P, y = _problem()
        state = McmcState(beta=np.zeros(Phi.shape[1]), sigma2=1.0)
        draws = [update_intercept(state, Phi, y, (-3.0, 1e-10), np.random.default_rng(i)) for i in range(20)]
        self.assertTrue(np.allclose(draws, -3.0, atol=1e-3))

    def test_sigma2_mean(self):
        """Test sigma2 draws average to the inverse-gamma mean."""
        x, Phi, P, y = _problem()
        M = P.penalty_gram(Phi)
        rng = np.random.default_rng(7)
        beta = np.linspace(-0.2, 0.3, Phi.shape[1])
        state = McmcState(beta=beta, theta1=0.3, tau2=0.8)
        draws = np.array([update_sigma2(state, Phi, P, y, (0.001, 0.001), rng) for _ in range(20000)])
        n, k = Phi.shape
        resid = y - 0.3 - Phi @ beta
        shape = (n + k) / 2.0 + 0.001
        scale = 0.5 * (resid @ resid + beta @ M @ beta / 0.8) + 0.001
        self.assertAlmostEqual(draws.mean() / (scale / (shape - 1.0)), 1.0, delta=0.02)


class TestTau2Updates(unittest.TestCase):
    """Test cases for the two tau2 updates."""

    def test_hyperparameters(self):
        """Test the Beta parameters of omega."""
        a, b = shrinkage_hyperparameters(ShrinkagePrior.OWN_SLICE, 18, 50)
        self.assertEqual(a, 0.5)
        self.assertAlmostEqual(math.log(b), -9.0 * math.log(50.0))
        self.assertEqual(shrinkage_hyperparameters(ShrinkagePrior.HALF_CAUCHY, 18, 50), (0.5, 0.5))

    def test_slice_recovers_truncated_beta(self):
        """Test with no coefficients omega follows Beta(a, b) restricted to the tau2 bounds."""
        rng = np.random.default_rng(17)
        bounds = (0.01, 100.0)
        tau2, omegas = 1.0, []
        for i in range(20000):
            tau2 = slice_tau2(tau2, 0, 0.0, 1.0, 2.0, 3.0, bounds, rng)
            self.assertTrue(bounds[0] <= tau2 <= bounds[1])
            omegas.append(1.0 / (1.0 + tau2))
        expected = stats.beta(2.0, 3.0).expect(lb=1.0 / (1.0 + bounds[1]), ub=1.0 / (1.0 + bounds[0]),
                                               conditional=True)
        self.assertAlmostEqual(float(np.mean(omegas)), expected, delta=0.01)

    def test_slice_large_quadratic_form(self):
        """Test a huge penalty quadratic form pushes tau2 to its upper bound."""
        rng = np.random.default_rng(2)
        tau2 = 0.5
        for _ in range(200):
            tau2 = slice_tau2(tau2, 18, 1e6, 1.0, 0.5, 1e-20, (0.001, 10.0), rng)
        draws = []
        for _ in range(200):
            tau2 = slice_tau2(tau2, 18, 1e6, 1.0, 0.5, 1e-20, (0.001, 10.0), rng)
            draws.append(tau2)
        self.assertGreater(min(draws), 9.9)

    def test_halfcauchy_prior_limit(self):
        """Test with no coefficients omega follows Beta(1/2, 1/2)."""
        rng = np.random.default_rng(23)
        Phi = np.zeros((5, 0))
        state = McmcState(beta=np.zeros(0), sigma2=1.0, tau2=1.0, xi=1.0)
        omegas = []
        for _ in range(30000):
            state.tau2, state.xi = update_tau2_halfcauchy(state, Phi, None, rng, penalty=np.zeros((0, 0)))
            omegas.append(state.omega)
        self.assertAlmostEqual(float(np.mean(omegas)), 0.5, delta=0.02)
        self.assertAlmostEqual(float(np.var(omegas)), 0.125, delta=0.01)


class TestNonlinearUpdate(unittest.TestCase):
    """Test cases for the Metropolis-Hastings step on the non-linear parameters."""

    def test_lower_bounds(self):
        """Test the power exponent is bounded only when some covariate is zero."""
        power = FunctionSpace.power()
        self.assertEqual(parameter_lower_bounds(power, np.array([0.1, 0.5])), [None])
        self.assertEqual(parameter_lower_bounds(power, np.array([0.0, 0.5])), [0.0])
        self.assertEqual(parameter_lower_bounds(FunctionSpace.hill(), np.array([0.1])), [0.0, 0.0])

    def test_tiny_steps_accepted(self):
        """Test near-zero proposal variances are almost always accepted."""
        x, Phi, P, y = _problem()
        space = FunctionSpace.hill()
        state = McmcState(beta=np.zeros(Phi.shape[1]), theta1=0.2, sigma2=0.01, tau2=1.0,
                          theta_nl=space.initial_theta())
        config = NlfsConfig(n_draws=10, burn_in=0)
        mh = MhStats(space.parameter_names)
        rng = np.random.default_rng(9)
        cond = None
        for _ in range(50):
            state.theta_nl, cond = update_theta_mh(state, space, x, Phi, y, config, rng,
                                                   proposal_var=np.array([1e-12, 1e-12]),
                                                   current=cond, stats=mh)
        self.assertTrue(all(rate > 0.9 for rate in mh.rates().values()))
        self.assertEqual(mh.numerical_rejections, 0)

    def test_power_exponent_posterior(self):
        """Test the MH chain on the power exponent matches a grid posterior."""
        x, Phi, P, y = _problem(n=40)
        space = FunctionSpace.power()
        G = Phi.T @ Phi
        state = McmcState(beta=np.zeros(Phi.shape[1]), theta1=0.2, sigma2=0.01, tau2=0.1,
                          theta_nl=np.array([0.5]))
        config = NlfsConfig(n_draws=10, burn_in=0)

        def log_target(g):
            # integer exponents up to 3 lie in the spline space and have zero density
            cond = conditioning_at(space, x, Phi, [g])
            try:
                value = log_marginal_likelihood(y - 0.2, Phi, G, cond.penalty, 0.01, 0.1, cond.log_det_penalty)
            except NumericalError:
                return -math.inf
            return value + space.log_prior([g])

        grid = np.linspace(-2.0, 3.0, 10001)
        log_post = np.array([log_target(g) for g in grid])
        weights = np.exp(log_post - log_post.max())
        weights /= weights.sum()
        mean = float(weights @ grid)
        sd = math.sqrt(float(weights @ (grid - mean) ** 2))

        rng = np.random.default_rng(31)
        cond, draws = None, []
        for t in range(5000):
            state.theta_nl, cond = update_theta_mh(state, space, x, Phi, y, config, rng,
                                                   proposal_var=np.array([(2.4 * sd) ** 2]),
                                                   gram=G, current=cond)
            if t >= 500:
                draws.append(state.theta_nl[0])
        self.assertAlmostEqual(float(np.mean(draws)), mean, delta=max(0.15 * sd, 0.003))


class TestNlfsChain(unittest.TestCase):
    """Test cases for complete NLFS chains."""

    def _config(self, **kwargs):
        values = dict(n_draws=400, burn_in=100, n_internal_knots=8)
        values.update(kwargs)
        return NlfsConfig(**values)

    def _data(self, truth, n=60, noise=0.05, seed=0):
        rng = np.random.default_rng(seed)
        x = np.linspace(0.0, 1.0, n)
        return Dataset(x, truth(x) + noise * rng.standard_normal(n))

    def test_config_validation(self):
        """Test invalid chain settings are rejected."""
        with self.assertRaises(InvalidArgumentError):
            NlfsConfig(n_draws=10, burn_in=10)
        with self.assertRaises(InvalidArgumentError):
            NlfsConfig(tau2_bounds=(1.0, 0.5))
        with self.assertRaises(InvalidArgumentError):
            NlfsConfig(proposal_var={'power_theta3': 0.0})

    def test_columns_and_shape(self):
        """Test stored columns for a combined space."""
        data = self._data(lambda x: 0.2 + np.sqrt(x))
        draws = run_nlfs(data, FunctionSpace.from_name('hill+power'), self._config(),
                         np.random.default_rng(1))
        self.assertEqual(draws.n_draws, 300)
        self.assertEqual(draws.columns[:2], ('beta_1', 'beta_2'))
        self.assertEqual(draws.columns[-7:], ('theta1', 'sigma2', 'tau2', 'omega',
                                              'hill_theta3', 'hill_theta4', 'power_theta3'))
        self.assertTrue(np.allclose(draws.omega, 1.0 / (1.0 + draws.column('tau2'))))
        self.assertEqual(draws.iterations[0], 100)
        self.assertEqual(draws.info['space'], 'hill+power')

    def test_deterministic(self):
        """Test identical seeds give identical draws."""
        data = self._data(lambda x: 0.2 + np.sqrt(x))
        a = run_nlfs(data, FunctionSpace.power(), self._config(), np.random.default_rng(5))
        b = run_nlfs(data, FunctionSpace.power(), self._config(), np.random.default_rng(5))
        self.assertTrue(np.array_equal(a.samples, b.samples))

    def test_constant_data(self):
        """Test a constant response is recovered by the posterior mean curve."""
        data = Dataset(np.linspace(0.0, 1.0, 40), np.full(40, 2.0))
        draws = run_nlfs(data, FunctionSpace.hill(), self._config(), np.random.default_rng(2))
        self.assertTrue(np.allclose(draws.posterior_mean_curve(), 2.0, atol=0.05))

    def test_shrinkage_tracks_truth(self):
        """Test tau2 is far larger when the truth leaves the function space."""
        space = FunctionSpace.power()
        inside = run_nlfs(self._data(lambda x: 0.2 + np.sqrt(x)), space,
                          self._config(n_draws=800, burn_in=200), np.random.default_rng(3))
        outside = run_nlfs(self._data(lambda x: np.sin(2 * np.pi * x)), space,
                           self._config(n_draws=800, burn_in=200), np.random.default_rng(3))
        ratio = outside.column('tau2').mean() / inside.column('tau2').mean()
        self.assertGreaterEqual(ratio, 10.0)
        self.assertGreater(inside.omega.mean(), outside.omega.mean())

    def test_update_order(self):
        """Test one sweep updates beta, theta1, sigma2, tau2 and then the non-linear parameters."""
        names = ['update_beta', 'update_intercept', 'update_sigma2', 'slice_tau2', 'update_theta_mh']
        calls = []

        def recording(name):
            original = getattr(nlfs_sampler, name)

            def wrapper(*args, **kwargs):
                calls.append(name)
                return original(*args, **kwargs)
            return mock.patch.object(nlfs_sampler, name, side_effect=wrapper)

        sampler = NlfsSampler(self._data(lambda x: 0.2 + np.sqrt(x)), FunctionSpace.power(), self._config())
        with contextlib.ExitStack() as stack:
            for name in names:
                stack.enter_context(recording(name))
            sampler.step(sampler.initial_state(), np.random.default_rng(8))
        self.assertEqual(calls, names)

    def test_halfcauchy_chain(self):
        """Test the half-Cauchy variant runs and records its prior."""
        data = self._data(lambda x: 0.2 + np.sqrt(x))
        draws = run_nlfs(data, FunctionSpace.power(), self._config(shrinkage=ShrinkagePrior.HALF_CAUCHY),
                         np.random.default_rng(4))
        self.assertEqual(draws.info['shrinkage'], 'half_cauchy')
        self.assertTrue(np.all(draws.column('tau2') > 0))

    def test_underdetermined(self):
        """Test too few observations for the basis are rejected."""
        data = Dataset(np.linspace(0.0, 1.0, 10), np.zeros(10))
        with self.assertRaises(UnderdeterminedDataError):
            run_nlfs(data, FunctionSpace.hill(), NlfsConfig(n_draws=10, burn_in=0), np.random.default_rng(0))


if __name__ == '__main__':
    unittest.main()
