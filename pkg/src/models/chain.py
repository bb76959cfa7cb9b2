"""
Chain models - MCMC state, stored posterior draws, and the mapping from a
draw to the fitted curve.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import special

from ..errors import InvalidArgumentError
from .basis import SplineBasis
from .function_spaces import SpaceKind


@dataclass
class McmcState:
    """
    One iteration's parameters of a spline-based sampler.

    Attributes:
        beta (ndarray): Spline coefficients
        theta1 (float): Intercept
        sigma2 (float): Noise variance (> 0)
        tau2 (float): Global shrinkage variance
        theta_nl (ndarray): Non-linear parameters of the shrinkage space
        xi (float): Auxiliary variable of the half-Cauchy ladder for tau2
    """
    beta: np.ndarray
    theta1: float = 0.0
    sigma2: float = 1.0
    tau2: float = 1.0
    theta_nl: np.ndarray = field(default_factory=lambda: np.zeros(0))
    xi: float = 1.0

    @property
    def omega(self) -> float:
        """Shrinkage weight 1 / (1 + tau2): near 1 means collapsed onto the space."""
        return 1.0 / (1.0 + self.tau2)

    def copy(self) -> 'McmcState':
        return replace(self, beta=self.beta.copy(), theta_nl=np.array(self.theta_nl, dtype=float))

    def to_dict(self) -> Dict:
        """Serialize to dictionary."""
        return {
            'beta': self.beta.tolist(),
            'theta1': self.theta1,
            'sigma2': self.sigma2,
            'tau2': self.tau2,
            'theta_nl': list(self.theta_nl),
            'xi': self.xi
        }

    def __repr__(self):
        return (f"McmcState(theta1={self.theta1:.4g}, sigma2={self.sigma2:.4g}, "
                f"tau2={self.tau2:.4g}, theta_nl={np.round(self.theta_nl, 4).tolist()})")


class CurveKind(Enum):
    """How a stored draw maps to a fitted curve."""
    SPLINE = 'spline'                 # [theta1 +] Phi(x) beta
    PARAMETRIC = 'parametric'         # h(x; theta)
    PARAMETRIC_SPLINE = 'param_spline'  # h(x; theta) + Phi(x) beta


def beta_names(dimension: int) -> List[str]:
    return [f"beta_{m}" for m in range(1, dimension + 1)]


def parametric_curves(space_kind: SpaceKind, x: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """
    Evaluate Hill or power curves for many parameter draws at once.

    Args:
        space_kind: HILL or POWER
        x: Covariates (non-negative)
        theta: Draws, shape (m, 4) for Hill or (m, 3) for power

    Returns:
        Curves of shape (m, len(x))
    """
    x = np.asarray(x, dtype=float)
    pos = x > 0
    log_x = np.zeros_like(x)
    log_x[pos] = np.log(x[pos])
    theta1, theta2 = theta[:, :1], theta[:, 1:2]
    if space_kind is SpaceKind.HILL:
        theta3, theta4 = theta[:, 2:3], theta[:, 3:4]
        frac = special.expit(theta4 * (log_x[None, :] - np.log(theta3)))
        frac[:, ~pos] = 0.0
        return theta1 + theta2 * frac
    exponent = theta[:, 2:3]
    term = np.exp(exponent * log_x[None, :])
    term[:, ~pos] = np.where(exponent > 0, 0.0, np.where(exponent == 0, 1.0, np.inf))
    return theta1 + theta2 * term


def parametric_names(space_kind: SpaceKind) -> List[str]:
    return ['theta1', 'theta2', 'theta3', 'theta4'] if space_kind is SpaceKind.HILL \
        else ['theta1', 'theta2', 'theta3']


@dataclass(frozen=True)
class CurveModel:
    """
    Recipe that turns a stored parameter row into a fitted curve.

    Attributes:
        kind (CurveKind): Spline, parametric, or parametric plus spline
        basis (SplineBasis): Spline basis (spline kinds only)
        space_kind (SpaceKind): Parametric family (parametric kinds only)
    """
    kind: CurveKind
    basis: Optional[SplineBasis] = None
    space_kind: Optional[SpaceKind] = None

    def __post_init__(self):
        if self.kind is not CurveKind.PARAMETRIC and self.basis is None:
            raise InvalidArgumentError(f"{self.kind.value} curves need a spline basis")
        if self.kind is not CurveKind.SPLINE and self.space_kind not in (SpaceKind.HILL, SpaceKind.POWER):
            raise InvalidArgumentError(f"{self.kind.value} curves need a Hill or power family")

    def evaluate(self, samples: np.ndarray, columns: Sequence[str], x) -> np.ndarray:
        """
        Curves for every stored draw.

        Args:
            samples: Parameter matrix (draws x columns)
            columns: Column names of ``samples``
            x: Evaluation points

        Returns:
            Matrix (draws x len(x))
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        index = {name: i for i, name in enumerate(columns)}
        curves = np.zeros((samples.shape[0], len(x)))
        if self.kind is not CurveKind.SPLINE:
            names = parametric_names(self.space_kind)
            theta = samples[:, [index[n] for n in names]]
            curves += parametric_curves(self.space_kind, x, theta)
        if self.kind is not CurveKind.PARAMETRIC:
            Phi = self.basis.design_matrix(x)
            beta = samples[:, [index[n] for n in beta_names(self.basis.dimension)]]
            curves += beta @ Phi.T
            if self.kind is CurveKind.SPLINE and 'theta1' in index:
                curves += samples[:, [index['theta1']]]
        return curves

    def to_dict(self) -> Dict:
        """Serialize to dictionary."""
        return {
            'kind': self.kind.value,
            'basis': self.basis.to_dict() if self.basis is not None else None,
            'space_kind': self.space_kind.value if self.space_kind is not None else None
        }

    @staticmethod
    def from_dict(data: Dict) -> 'CurveModel':
        """Deserialize from dictionary."""
        return CurveModel(
            kind=CurveKind(data['kind']),
            basis=SplineBasis.from_dict(data['basis']) if data.get('basis') else None,
            space_kind=SpaceKind(data['space_kind']) if data.get('space_kind') else None
        )


@dataclass(frozen=True)
class ChainDraws:
    """
    Post-burn-in posterior draws of one fitted chain.

    Attributes:
        method (str): Fitter that produced the chain (e.g. 'nlfs', 'pspline')
        columns (tuple): Parameter names, one per column of ``samples``
        samples (ndarray): Draws (n_kept x n_columns)
        iterations (ndarray): Iteration index of each kept draw
        curve_model (CurveModel): How to turn a draw into a curve
        x (ndarray): Covariates the chain was fitted on
        grid (ndarray): Evaluation grid for stored curve summaries
        acceptance (dict): MH acceptance rate per parameter
        numerical_rejections (int): Proposals rejected because a factorisation failed
        info (dict): Free-form metadata (space name, shrinkage prior, ...)
    """
    method: str
    columns: Tuple[str, ...]
    samples: np.ndarray
    iterations: np.ndarray
    curve_model: CurveModel
    x: np.ndarray
    grid: np.ndarray
    acceptance: Dict[str, float] = field(default_factory=dict)
    numerical_rejections: int = 0
    info: Dict = field(default_factory=dict)

    def __post_init__(self):
        if self.samples.ndim != 2 or self.samples.shape[1] != len(self.columns):
            raise InvalidArgumentError("samples must be a matrix with one column per name")
        if len(self.iterations) != self.samples.shape[0]:
            raise InvalidArgumentError("one iteration index per stored draw is required")

    @property
    def n_draws(self) -> int:
        return self.samples.shape[0]

    def column(self, name: str) -> np.ndarray:
        try:
            return self.samples[:, self.columns.index(name)]
        except ValueError:
            raise KeyError(f"no column '{name}' in draws of {self.method}") from None

    def has_column(self, name: str) -> bool:
        return name in self.columns

    @property
    def omega(self) -> np.ndarray:
        """Trace of the shrinkage weight 1 / (1 + tau2)."""
        return self.column('omega')

    def curves(self, x=None) -> np.ndarray:
        """Curve draws at x (default: the stored grid)."""
        return self.curve_model.evaluate(self.samples, self.columns, self.grid if x is None else x)

    def posterior_mean_curve(self, x=None) -> np.ndarray:
        """Pointwise posterior mean of the curve (default: at the fitted covariates)."""
        return self.curves(self.x if x is None else x).mean(axis=0)

    def to_frame(self) -> pd.DataFrame:
        """Draws as a table with an 'iteration' column first."""
        frame = pd.DataFrame(self.samples, columns=list(self.columns))
        frame.insert(0, 'iteration', self.iterations.astype(int))
        return frame

    def metadata(self) -> Dict:
        """Everything except the draw matrix, JSON-serialisable."""
        return {
            'method': self.method,
            'columns': list(self.columns),
            'curve_model': self.curve_model.to_dict(),
            'x': self.x.tolist(),
            'grid': self.grid.tolist(),
            'acceptance': dict(self.acceptance),
            'numerical_rejections': int(self.numerical_rejections),
            'info': dict(self.info)
        }

    @staticmethod
    def from_frame(frame: pd.DataFrame, metadata: Dict) -> 'ChainDraws':
        """Rebuild draws from a table written by ``to_frame`` and its metadata."""
        columns = tuple(metadata['columns'])
        return ChainDraws(
            method=metadata['method'],
            columns=columns,
            samples=frame[list(columns)].to_numpy(dtype=float),
            iterations=frame['iteration'].to_numpy(dtype=int),
            curve_model=CurveModel.from_dict(metadata['curve_model']),
            x=np.asarray(metadata['x'], dtype=float),
            grid=np.asarray(metadata['grid'], dtype=float),
            acceptance=dict(metadata.get('acceptance', {})),
            numerical_rejections=int(metadata.get('numerical_rejections', 0)),
            info=dict(metadata.get('info', {}))
        )

    def __repr__(self):
        return f"ChainDraws(method='{self.method}', draws={self.n_draws}, columns={len(self.columns)})"
