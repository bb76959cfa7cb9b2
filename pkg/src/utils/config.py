"""
Configuration - Settings resolved from defaults, NLFS_* environment
variables, a dotenv-style config file and command-line flags.

Later sources win: default < environment < file < flag.
"""

import logging
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional

from dotenv import dotenv_values

from ..errors import InvalidArgumentError, UsageError
from ..systems.baselines import BaselineConfig
from ..systems.nlfs_sampler import MarginalCentering, NlfsConfig, ShrinkagePrior
from ..systems.simulation import StudyConfig

logger = logging.getLogger(__name__)

PREFIX = 'NLFS_'

# environment-only switches that are not run settings
RESERVED_KEYS = {'NLFS_RUN_ACCEPTANCE'}


def _parse_bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ('1', 'true', 'yes', 'on'):
        return True
    if value in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError(f"not a boolean: '{text}'")


def _parse_shrinkage(text: str) -> ShrinkagePrior:
    aliases = {'os': 'own_slice', 'hc': 'half_cauchy'}
    value = text.strip().lower()
    return ShrinkagePrior(aliases.get(value, value))


def _parse_optional_int(text: str) -> Optional[int]:
    return None if text.strip().lower() in ('', 'none') else int(text)


@dataclass
class RunSettings:
    """
    Every tunable of the three commands.

    Attributes:
        n_draws (int): Iterations per chain, burn-in included
        burn_in (int): Discarded iterations
        shrinkage (ShrinkagePrior): NLFS prior on omega
        tau2_lower (float): Lower tau2 bound of the slice update
        tau2_upper (float): Upper tau2 bound of the slice update
        n_internal_knots (int): Interior knots of the spline basis
        order (int): Spline order
        intercept_mean (float): Prior mean of theta1
        intercept_var (float): Prior variance of theta1
        sigma_shape (float): Inverse-gamma shape of sigma2
        sigma_scale (float): Inverse-gamma scale of sigma2
        adaptive_proposal (bool): Adaptive NLFS proposals during burn-in
        marginal_centering (MarginalCentering): Response of the NLFS marginal likelihood
        grid_size (int): Points of the output grid
        level (float): Credible level of summaries
        seed (int): Root seed (generated when None)
        reps (int): Replicates per simulation scenario
        workers (int): Simulation worker processes
    """
    n_draws: int = 10000
    burn_in: int = 2000
    shrinkage: ShrinkagePrior = ShrinkagePrior.OWN_SLICE
    tau2_lower: float = 0.001
    tau2_upper: float = 10.0
    n_internal_knots: int = 15
    order: int = 4
    intercept_mean: float = 0.0
    intercept_var: float = 20.0
    sigma_shape: float = 0.001
    sigma_scale: float = 0.001
    adaptive_proposal: bool = False
    marginal_centering: MarginalCentering = MarginalCentering.INTERCEPT
    grid_size: int = 101
    level: float = 0.95
    seed: Optional[int] = None
    reps: int = 100
    workers: int = 1
    sources: Dict[str, str] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not 0 < self.level < 1:
            raise UsageError(f"level must lie in (0, 1), got {self.level}")
        if self.reps < 1:
            raise UsageError(f"reps must be >= 1, got {self.reps}")
        if self.workers < 1:
            raise UsageError(f"workers must be >= 1, got {self.workers}")

    def nlfs_config(self) -> NlfsConfig:
        return NlfsConfig(
            n_draws=self.n_draws,
            burn_in=self.burn_in,
            shrinkage=self.shrinkage,
            tau2_bounds=(self.tau2_lower, self.tau2_upper),
            n_internal_knots=self.n_internal_knots,
            order=self.order,
            intercept_prior=(self.intercept_mean, self.intercept_var),
            sigma_prior=(self.sigma_shape, self.sigma_scale),
            adaptive_proposal=self.adaptive_proposal,
            marginal_centering=self.marginal_centering,
            grid_size=self.grid_size
        )

    def baseline_config(self) -> BaselineConfig:
        return BaselineConfig(
            n_draws=self.n_draws,
            burn_in=self.burn_in,
            n_internal_knots=self.n_internal_knots,
            order=self.order,
            intercept_prior=(self.intercept_mean, self.intercept_var),
            sigma_prior=(self.sigma_shape, self.sigma_scale),
            grid_size=self.grid_size
        )

    def study_config(self) -> StudyConfig:
        """Simulation settings; theta1 keeps the study's N(0, 1) prior unless overridden."""
        intercept = (self.intercept_mean, self.intercept_var)
        if 'intercept_var' not in self.sources and 'intercept_mean' not in self.sources:
            intercept = StudyConfig.intercept_prior
        return StudyConfig(
            n_draws=self.n_draws,
            burn_in=self.burn_in,
            intercept_prior=intercept,
            adaptive_proposal=self.adaptive_proposal,
            n_internal_knots=self.n_internal_knots
        )


PARSERS: Dict[str, Callable[[str], Any]] = {
    'n_draws': int,
    'burn_in': int,
    'shrinkage': _parse_shrinkage,
    'tau2_lower': float,
    'tau2_upper': float,
    'n_internal_knots': int,
    'order': int,
    'intercept_mean': float,
    'intercept_var': float,
    'sigma_shape': float,
    'sigma_scale': float,
    'adaptive_proposal': _parse_bool,
    'marginal_centering': lambda text: MarginalCentering(text.strip().lower()),
    'grid_size': int,
    'level': float,
    'seed': _parse_optional_int,
    'reps': int,
    'workers': int,
}


def config_key(name: str) -> str:
    """Setting name to config key, e.g. 'n_draws' -> 'NLFS_N_DRAWS'."""
    return PREFIX + name.upper()


KEYS: Dict[str, str] = {config_key(name): name for name in PARSERS}


def _parse_entries(entries: Mapping[str, Optional[str]], origin: str, strict: bool) -> Dict[str, Any]:
    parsed = {}
    for key, raw in entries.items():
        if not key.startswith(PREFIX) or key in RESERVED_KEYS:
            continue
        name = KEYS.get(key)
        if name is None:
            if strict:
                raise UsageError(f"{origin}: unknown key {key}")
            logger.debug("ignoring unknown setting %s from %s", key, origin)
            continue
        if raw is None:
            raise UsageError(f"{origin}: {key} has no value")
        try:
            parsed[name] = PARSERS[name](raw)
        except ValueError as exc:
            raise UsageError(f"{origin}: bad value for {key}: {exc}") from None
    return parsed


def load_config_file(path) -> Dict[str, Any]:
    """
    Read NLFS_* settings from a dotenv-style KEY=value file.

    Raises:
        UsageError: If the file is missing or holds an unknown key or bad value
    """
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"config file not found: {path}")
    return _parse_entries(dotenv_values(path), str(path), strict=True)


def environment_settings(environ: Optional[Mapping[str, str]] = None) -> Dict[str, Any]:
    """NLFS_* settings from the process environment (unknown keys are ignored)."""
    return _parse_entries(os.environ if environ is None else environ, 'environment', strict=False)


def resolve_settings(
    flags: Optional[Mapping[str, Any]] = None,
    config_path=None,
    environ: Optional[Mapping[str, str]] = None
) -> RunSettings:
    """
    Merge settings: default < environment < config file < flags.

    Args:
        flags: Explicit command-line values (None entries are ignored)
        config_path: Optional dotenv-style config file
        environ: Environment mapping (os.environ if None)

    Raises:
        UsageError: On unknown keys, unparsable values or invalid combinations
    """
    layers = [('environment', environment_settings(environ))]
    if config_path is not None:
        layers.append(('file', load_config_file(config_path)))
    layers.append(('flag', {k: v for k, v in (flags or {}).items() if v is not None and k in PARSERS}))

    values: Dict[str, Any] = {}
    sources: Dict[str, str] = {}
    for origin, layer in layers:
        for name, value in layer.items():
            values[name] = value
            sources[name] = origin
    try:
        return RunSettings(**values, sources=sources)
    except InvalidArgumentError as exc:
        raise UsageError(str(exc)) from None


def settings_to_dict(settings: RunSettings) -> Dict[str, Any]:
    """Config-key view of the settings, enums by value."""
    out = {}
    for f in fields(settings):
        if f.name == 'sources':
            continue
        value = getattr(settings, f.name)
        out[config_key(f.name)] = value.value if hasattr(value, 'value') else value
    return out


def with_seed(settings: RunSettings, seed: int) -> RunSettings:
    return replace(settings, seed=seed)
