"""
Systems package - Samplers, baseline fitters, the simulation study and diagnostics.
"""

from .nlfs_sampler import NlfsConfig, NlfsSampler, ShrinkagePrior, run_nlfs
from .baselines import BaselineConfig, fit_bspline, fit_pspline, fit_parametric, fit_param_plus_hs_spline
from .simulation import METHODS, Scenario, StudyResult, TruthSpec, generate_dataset, rmse, run_study
from .diagnostics import EssEstimate, PosteriorSummary, ess, summarize

__all__ = [
    "NlfsConfig", "NlfsSampler", "ShrinkagePrior", "run_nlfs",
    "BaselineConfig", "fit_bspline", "fit_pspline", "fit_parametric", "fit_param_plus_hs_spline",
    "METHODS", "Scenario", "StudyResult", "TruthSpec", "generate_dataset", "rmse", "run_study",
    "EssEstimate", "PosteriorSummary", "ess", "summarize",
]
