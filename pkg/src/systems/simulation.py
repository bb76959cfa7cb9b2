"""
Simulation study - Truth generators, scenario grid, replication and RMSE aggregation.

Every replicate draws its data and its chain from streams derived from
(base_seed, truth, n, sigma2, replicate[, method]), so results do not depend
on how replicates are scheduled across workers, and all methods in a cell
are compared on the same datasets.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..errors import InvalidArgumentError, NlfsError
from ..models.chain import ChainDraws
from ..models.dataset import Dataset
from ..models.function_spaces import FunctionSpace, HillParams, PowerParams, SpaceKind, hill_mean, power_mean
from ..utils.random_generator import RandomGenerator
from .baselines import BaselineConfig, fit_bspline, fit_param_plus_hs_spline, fit_parametric, fit_pspline
from .nlfs_sampler import NlfsConfig, ShrinkagePrior, run_nlfs

logger = logging.getLogger(__name__)

SAMPLE_SIZES = (50, 100, 200, 500)
NOISE_LEVELS = (0.005, 0.05)


class TruthKind(Enum):
    """Data-generating curves of the study."""
    HILL = 'hill'
    POWER = 'power'
    HILL_DOWNTURN = 'hill_downturn'


@dataclass(frozen=True)
class TruthSpec:
    """
    A data-generating curve on [0, 1].

    Attributes:
        kind (TruthKind): Curve family
        theta3 (float): Hill half-maximal covariate
        theta4 (float): Hill steepness
        exponent (float): Power exponent
        scale (float): Power scale
        knot (float): Start of the downturn
        coef (float): Downturn coefficient (times (x - knot)^2)
    """
    kind: TruthKind
    theta3: float = 0.3
    theta4: float = 6.0
    exponent: float = 0.5
    scale: float = 1.0
    knot: float = 0.6
    coef: float = -1.5

    @property
    def name(self) -> str:
        return self.kind.value

    @staticmethod
    def from_name(name: str) -> 'TruthSpec':
        try:
            return TruthSpec(TruthKind(name.strip().lower()))
        except ValueError:
            raise InvalidArgumentError(
                f"unknown truth '{name}' (expected one of {[k.value for k in TruthKind]})") from None

    def evaluate(self, x) -> np.ndarray:
        """g(x) for covariates in [0, 1]."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.kind is TruthKind.POWER:
            return power_mean(x, PowerParams(0.0, self.scale, self.exponent))
        g = hill_mean(x, HillParams(0.0, 1.0, self.theta3, self.theta4))
        if self.kind is TruthKind.HILL_DOWNTURN:
            g = g + np.where(x >= self.knot, self.coef * (x - self.knot) ** 2, 0.0)
        return g

    def to_dict(self) -> Dict:
        """Serialize to dictionary."""
        return {
            'kind': self.kind.value, 'theta3': self.theta3, 'theta4': self.theta4,
            'exponent': self.exponent, 'scale': self.scale, 'knot': self.knot, 'coef': self.coef
        }


def generate_dataset(truth: TruthSpec, n: int, sigma2: float, rng: np.random.Generator) -> Dataset:
    """
    Draw x ~ Unif[0, 1] and y = g(x) + N(0, sigma2).

    Raises:
        InvalidArgumentError: If n < 1 or sigma2 < 0
    """
    if n < 1:
        raise InvalidArgumentError(f"n must be >= 1, got {n}")
    if sigma2 < 0:
        raise InvalidArgumentError(f"sigma2 must be >= 0, got {sigma2}")
    x = rng.uniform(0.0, 1.0, size=n)
    noise = rng.standard_normal(n) * math.sqrt(sigma2)
    return Dataset(x, truth.evaluate(x) + noise)


def rmse(fitted_mean, truth) -> float:
    """Root mean squared difference of two equal-length vectors."""
    fitted_mean = np.asarray(fitted_mean, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if fitted_mean.shape != truth.shape:
        raise InvalidArgumentError(f"length mismatch: {fitted_mean.shape} vs {truth.shape}")
    return float(np.sqrt(np.mean((fitted_mean - truth) ** 2)))


@dataclass
class StudyConfig:
    """
    Chain settings used for every fit of a study.

    Attributes:
        n_draws (int): Iterations per chain, burn-in included
        burn_in (int): Discarded iterations
        intercept_prior (tuple): (mean, variance) of theta1 for every method
        adaptive_proposal (bool): Adaptive NLFS proposals during burn-in
        n_internal_knots (int): Interior knots of the spline bases
    """
    n_draws: int = 10000
    burn_in: int = 2000
    intercept_prior: Tuple[float, float] = (0.0, 1.0)
    adaptive_proposal: bool = False
    n_internal_knots: int = 15

    def nlfs_config(self, shrinkage: ShrinkagePrior) -> NlfsConfig:
        return NlfsConfig(
            n_draws=self.n_draws, burn_in=self.burn_in, shrinkage=shrinkage,
            n_internal_knots=self.n_internal_knots, intercept_prior=self.intercept_prior,
            adaptive_proposal=self.adaptive_proposal, log_every=0
        )

    def baseline_config(self) -> BaselineConfig:
        return BaselineConfig(
            n_draws=self.n_draws, burn_in=self.burn_in, n_internal_knots=self.n_internal_knots,
            intercept_prior=self.intercept_prior, log_every=0
        )

    def to_dict(self) -> Dict:
        """Serialize to dictionary."""
        return {
            'n_draws': self.n_draws, 'burn_in': self.burn_in,
            'intercept_prior': list(self.intercept_prior),
            'adaptive_proposal': self.adaptive_proposal,
            'n_internal_knots': self.n_internal_knots
        }


@dataclass(frozen=True)
class MethodSpec:
    """
    One fitting method of the study.

    Attributes:
        method_id (str): Registry key
        label (str): Display name used in result tables
        family (str): nlfs, param, bspline, pspline or param_bspline
        space (str): Function space name (nlfs and parametric families)
        shrinkage (ShrinkagePrior): NLFS shrinkage prior
    """
    method_id: str
    label: str
    family: str
    space: Optional[str] = None
    shrinkage: Optional[ShrinkagePrior] = None

    def fit(self, data: Dataset, config: StudyConfig, rng: np.random.Generator) -> ChainDraws:
        if self.family == 'nlfs':
            return run_nlfs(data, FunctionSpace.from_name(self.space), config.nlfs_config(self.shrinkage), rng)
        if self.family == 'bspline':
            return fit_bspline(data, config.baseline_config(), rng)
        if self.family == 'pspline':
            return fit_pspline(data, config.baseline_config(), rng)
        kind = SpaceKind(self.space)
        if self.family == 'param':
            return fit_parametric(data, kind, config.baseline_config(), rng)
        return fit_param_plus_hs_spline(data, kind, config.baseline_config(), rng)


def _method_table() -> Dict[str, MethodSpec]:
    methods = []
    for space, tag, label in (('hill', 'hill', 'NLFS(Hill)'),
                              ('hill+power', 'hillpower', 'NLFS(Hill+power)'),
                              ('power', 'power', 'NLFS(power)')):
        methods.append(MethodSpec(f"nlfs_{tag}_hc", f"{label} HC", 'nlfs', space, ShrinkagePrior.HALF_CAUCHY))
        methods.append(MethodSpec(f"nlfs_{tag}_os", f"{label} OS", 'nlfs', space, ShrinkagePrior.OWN_SLICE))
    methods.extend([
        MethodSpec('param_hill', 'param(Hill)', 'param', 'hill'),
        MethodSpec('param_power', 'param(power)', 'param', 'power'),
        MethodSpec('bspline', 'bspline', 'bspline'),
        MethodSpec('pspline', 'pspline', 'pspline'),
        MethodSpec('param_hill_bspline', 'param(Hill)+bspline', 'param_bspline', 'hill'),
        MethodSpec('param_power_bspline', 'param(power)+bspline', 'param_bspline', 'power'),
    ])
    return {m.method_id: m for m in methods}


METHODS: Dict[str, MethodSpec] = _method_table()


def get_method(method_id: str) -> MethodSpec:
    try:
        return METHODS[method_id]
    except KeyError:
        raise InvalidArgumentError(f"unknown method id '{method_id}'") from None


@dataclass(frozen=True)
class Scenario:
    """
    One cell of the study grid for one method.

    Attributes:
        truth (TruthSpec): Data-generating curve
        n (int): Sample size
        sigma2 (float): Noise variance
        method (str): Method id
        n_rep (int): Number of replicates
        base_seed (int): Root seed of the study
    """
    truth: TruthSpec
    n: int
    sigma2: float
    method: str
    n_rep: int = 100
    base_seed: int = 0

    def __post_init__(self):
        if self.n_rep < 1:
            raise InvalidArgumentError(f"n_rep must be >= 1, got {self.n_rep}")
        if self.n < 1:
            raise InvalidArgumentError(f"n must be >= 1, got {self.n}")
        if self.sigma2 < 0:
            raise InvalidArgumentError(f"sigma2 must be >= 0, got {self.sigma2}")
        get_method(self.method)

    def data_stream(self, rep: int) -> np.random.Generator:
        """Stream for replicate ``rep``'s dataset; shared by every method of the cell."""
        return RandomGenerator(self.base_seed).stream('data', self.truth.name, self.n, repr(float(self.sigma2)), rep)

    def fit_stream(self, rep: int) -> np.random.Generator:
        return RandomGenerator(self.base_seed).stream(
            'fit', self.truth.name, self.n, repr(float(self.sigma2)), rep, self.method)

    def key(self) -> Dict:
        return {'method': self.method, 'truth': self.truth.name, 'n': self.n, 'sigma2': self.sigma2}


def expand_scenarios(
    truths: Iterable[TruthSpec],
    ns: Iterable[int] = SAMPLE_SIZES,
    sigma2s: Iterable[float] = NOISE_LEVELS,
    methods: Iterable[str] = tuple(METHODS),
    n_rep: int = 100,
    base_seed: int = 0
) -> List[Scenario]:
    """Cartesian product of truths, sizes, noise levels and methods."""
    return [Scenario(truth, n, sigma2, method, n_rep, base_seed)
            for truth in truths for n in ns for sigma2 in sigma2s for method in methods]


@dataclass(frozen=True)
class ReplicateResult:
    """
    Outcome of one replicate.

    Attributes:
        scenario (Scenario): Cell and method
        rep (int): Replicate index
        rmse (float): RMSE of the posterior mean curve at the drawn covariates (nan if failed)
        omega_mean (float): Posterior mean of omega (nan for methods without it)
        acceptance (float): Mean MH acceptance rate (nan for pure Gibbs methods)
        error (str): Error message if the fit failed
    """
    scenario: Scenario
    rep: int
    rmse: float
    omega_mean: float = math.nan
    acceptance: float = math.nan
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None

    def to_dict(self) -> Dict:
        """Serialize to dictionary."""
        return {**self.scenario.key(), 'rep': self.rep, 'rmse': self.rmse,
                'omega_mean': self.omega_mean, 'acceptance': self.acceptance, 'error': self.error}


def run_replicate(scenario: Scenario, rep: int, config: StudyConfig) -> ReplicateResult:
    """Generate one dataset, fit the scenario's method and score the posterior mean curve."""
    data = generate_dataset(scenario.truth, scenario.n, scenario.sigma2, scenario.data_stream(rep))
    try:
        draws = get_method(scenario.method).fit(data, config, scenario.fit_stream(rep))
    except (NlfsError, np.linalg.LinAlgError) as exc:
        logger.warning("replicate %d of %s failed: %s", rep, scenario.key(), exc)
        return ReplicateResult(scenario, rep, math.nan, error=f"{type(exc).__name__}: {exc}")
    score = rmse(draws.posterior_mean_curve(data.x), scenario.truth.evaluate(data.x))
    omega = float(draws.omega.mean()) if draws.has_column('omega') else math.nan
    acceptance = float(np.mean(list(draws.acceptance.values()))) if draws.acceptance else math.nan
    return ReplicateResult(scenario, rep, score, omega, acceptance)


def _run_task(task: Tuple[Scenario, int, StudyConfig]) -> ReplicateResult:
    return run_replicate(*task)


@dataclass
class StudyResult:
    """
    All replicate outcomes of a study, in scenario then replicate order.

    Attributes:
        replicates (list): ReplicateResult records
    """
    replicates: List[ReplicateResult] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        """Long layout: one row per replicate."""
        columns = ['method', 'truth', 'n', 'sigma2', 'rep', 'rmse', 'omega_mean', 'acceptance', 'error']
        return pd.DataFrame([r.to_dict() for r in self.replicates], columns=columns)

    def summary_frame(self) -> pd.DataFrame:
        """One row per scenario: mean and sd of RMSE over successful replicates, failure count."""
        frame = self.to_frame()
        keys = ['method', 'truth', 'n', 'sigma2']
        ok = frame[frame['error'].isna()]
        summary = ok.groupby(keys, sort=False).agg(
            mean_rmse=('rmse', 'mean'),
            sd_rmse=('rmse', 'std'),
            n_ok=('rmse', 'size'),
            omega_mean=('omega_mean', 'mean'),
            acceptance=('acceptance', 'mean'),
        )
        failures = frame.groupby(keys, sort=False)['error'].apply(lambda e: int(e.notna().sum()))
        summary = summary.reindex(failures.index)
        summary['n_ok'] = summary['n_ok'].fillna(0).astype(int)
        summary['n_failed'] = failures
        return summary.reset_index()

    def table(self, sigma2: float, digits: int = 3) -> pd.DataFrame:
        """Method x (truth, n) table of 'mean (sd)' cells for one noise level."""
        summary = self.summary_frame()
        summary = summary[np.isclose(summary['sigma2'], sigma2)]
        if summary.empty:
            raise InvalidArgumentError(f"no results for sigma2 = {sigma2}")
        summary = summary.assign(cell=[
            f"{m:.{digits}f} ({s:.{digits}f})" if not np.isnan(s) else f"{m:.{digits}f}"
            for m, s in zip(summary['mean_rmse'], summary['sd_rmse'])
        ])
        order = [m for m in METHODS if m in set(summary['method'])]
        table = summary.pivot(index='method', columns=['truth', 'n'], values='cell')
        return table.reindex(order).sort_index(axis=1)

    @property
    def n_failed(self) -> int:
        return sum(1 for r in self.replicates if r.failed)


def run_study(scenarios: Sequence[Scenario], parallelism: int = 1,
              config: Optional[StudyConfig] = None,
              progress: Optional[Callable[[int, int], None]] = None) -> StudyResult:
    """
    Run every replicate of every scenario.

    Args:
        scenarios: Scenarios to run
        parallelism: Worker processes (1 runs in-process)
        config: Chain settings
        progress: Optional callback (done, total)

    Returns:
        StudyResult in scenario/replicate order, independent of ``parallelism``
    """
    if parallelism < 1:
        raise InvalidArgumentError(f"parallelism must be >= 1, got {parallelism}")
    config = config or StudyConfig()
    tasks = [(s, rep, config) for s in scenarios for rep in range(s.n_rep)]
    logger.info("running %d replicates of %d scenarios on %d worker(s)", len(tasks), len(scenarios), parallelism)
    results: List[ReplicateResult] = []
    if parallelism == 1:
        for i, task in enumerate(tasks):
            results.append(_run_task(task))
            if progress:
                progress(i + 1, len(tasks))
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            for i, result in enumerate(pool.map(_run_task, tasks)):
                results.append(result)
                if progress:
                    progress(i + 1, len(tasks))
    study = StudyResult(results)
    if study.n_failed:
        logger.warning("%d of %d replicates failed and are excluded from aggregation", study.n_failed, len(tasks))
    return study
