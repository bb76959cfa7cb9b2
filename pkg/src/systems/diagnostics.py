"""
Diagnostics - Posterior summaries, effective sample size and trace export.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..errors import InvalidArgumentError
from ..models.chain import ChainDraws

logger = logging.getLogger(__name__)

MIN_CHAIN_LENGTH = 10


@dataclass(frozen=True)
class EssEstimate:
    """
    Effective sample size of one chain.

    Attributes:
        value (float): Estimated ESS, at most the chain length
        degenerate (bool): True if the chain is constant
    """
    value: float
    degenerate: bool = False

    def __float__(self):
        return float(self.value)


def autocorrelation(chain: Sequence[float]) -> np.ndarray:
    """
    Sample autocorrelation at every lag, computed by FFT.

    Returns:
        rho with rho[0] = 1 (all zeros for a constant chain)
    """
    x = np.asarray(chain, dtype=float)
    n = len(x)
    centred = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    spectrum = np.fft.rfft(centred, size)
    acov = np.fft.irfft(spectrum * np.conj(spectrum), size)[:n]
    if acov[0] <= 0:
        return np.zeros(n)
    return acov / acov[0]


def ess(chain: Sequence[float]) -> EssEstimate:
    """
    Effective sample size N / (1 + 2 sum rho_t).

    The autocorrelation sum is truncated with the initial monotone positive
    sequence rule: pair sums rho_{2m} + rho_{2m+1} are accumulated while they
    stay positive, each capped by its predecessor.

    Raises:
        InvalidArgumentError: If the chain has fewer than 10 draws
    """
    x = np.asarray(chain, dtype=float)
    n = len(x)
    if n < MIN_CHAIN_LENGTH:
        raise InvalidArgumentError(f"ESS needs at least {MIN_CHAIN_LENGTH} draws, got {n}")
    if np.all(x == x[0]):
        return EssEstimate(float(n), degenerate=True)
    rho = autocorrelation(x)
    n_pairs = n // 2
    pairs = rho[:2 * n_pairs:2] + rho[1:2 * n_pairs:2]
    total = 0.0
    previous = np.inf
    for gamma in pairs:
        if gamma <= 0:
            break
        gamma = min(gamma, previous)
        total += gamma
        previous = gamma
    tau = -1.0 + 2.0 * total
    if tau <= 0:
        return EssEstimate(float(n))
    return EssEstimate(float(min(n / tau, n)))


@dataclass(frozen=True)
class PosteriorSummary:
    """
    Pointwise curve summary plus per-parameter summaries.

    Attributes:
        grid (ndarray): Evaluation points (model scale)
        mean (ndarray): Posterior mean curve
        lower (ndarray): Lower credible bound
        upper (ndarray): Upper credible bound
        level (float): Credible level
        parameters (DataFrame): One row per parameter: mean, sd, quantiles, ESS, acceptance
    """
    grid: np.ndarray
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    level: float
    parameters: pd.DataFrame

    def curve_frame(self, grid: Optional[np.ndarray] = None) -> pd.DataFrame:
        """Curve table (grid, mean, lower, upper); ``grid`` replaces the stored grid column."""
        return pd.DataFrame({
            'grid': self.grid if grid is None else grid,
            'mean': self.mean,
            'lower': self.lower,
            'upper': self.upper
        })

    def parameter(self, name: str) -> pd.Series:
        return self.parameters.set_index('name').loc[name]


def summary_columns(draws: ChainDraws) -> List[str]:
    """Columns summarised by default: everything except spline coefficients."""
    return [c for c in draws.columns if not c.startswith('beta_')]


def summarize(draws: ChainDraws, grid: Optional[Sequence[float]] = None, level: float = 0.95) -> PosteriorSummary:
    """
    Pointwise mean and central credible band of the curve, plus parameter summaries.

    Args:
        draws: Posterior draws
        grid: Evaluation points (stored grid if None)
        level: Credible level in (0, 1)

    Raises:
        InvalidArgumentError: For an empty chain or a level outside (0, 1)
    """
    if not 0 < level < 1:
        raise InvalidArgumentError(f"credible level must lie in (0, 1), got {level}")
    if draws.n_draws == 0:
        raise InvalidArgumentError("cannot summarise an empty chain")
    grid = draws.grid if grid is None else np.asarray(grid, dtype=float)
    tail = (1.0 - level) / 2.0
    curves = draws.curves(grid)
    lower, upper = np.quantile(curves, [tail, 1.0 - tail], axis=0)

    rows = []
    for name in summary_columns(draws):
        values = draws.column(name)
        q_lo, median, q_hi = np.quantile(values, [tail, 0.5, 1.0 - tail])
        if len(values) >= MIN_CHAIN_LENGTH:
            estimate = ess(values)
        else:
            estimate = EssEstimate(float('nan'))
        if estimate.degenerate:
            logger.debug("%s: constant trace for %s", draws.method, name)
        rows.append({
            'name': name,
            'mean': float(values.mean()),
            'sd': float(values.std(ddof=1)) if len(values) > 1 else 0.0,
            'lower': float(q_lo),
            'median': float(median),
            'upper': float(q_hi),
            'ess': estimate.value,
            'degenerate': estimate.degenerate,
            'acceptance': draws.acceptance.get(name, np.nan)
        })
    return PosteriorSummary(
        grid=grid,
        mean=curves.mean(axis=0),
        lower=lower,
        upper=upper,
        level=level,
        parameters=pd.DataFrame(rows, columns=['name', 'mean', 'sd', 'lower', 'median', 'upper',
                                               'ess', 'degenerate', 'acceptance'])
    )


def evaluate_curves(draws: ChainDraws, x: Sequence[float]) -> np.ndarray:
    """Curve draws (n_draws x len(x)) rebuilt from the stored parameter matrix."""
    return draws.curves(np.asarray(x, dtype=float))


def export_traces(draws: ChainDraws, directory, names: Optional[Sequence[str]] = None) -> Dict[str, Path]:
    """
    Write one ``trace_<name>.csv`` (iteration, value) per monitored quantity.

    Args:
        draws: Posterior draws
        directory: Output directory (created if missing)
        names: Columns to export (all non-coefficient columns if None)

    Returns:
        Mapping of column name to written path
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = {}
    for name in names or summary_columns(draws):
        path = directory / f"trace_{name}.csv"
        frame = pd.DataFrame({'iteration': draws.iterations, 'value': draws.column(name)})
        frame.to_csv(path, index=False)
        written[name] = path
    return written
