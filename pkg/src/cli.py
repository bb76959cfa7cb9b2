"""
Command-line interface - fit, simulate and summarize.

    python main.py fit --input data.csv --space hill --output out/
    python main.py simulate --truth hill --n 50 --sigma2 0.005 --methods nlfs_hill_os --reps 100 --seed 1
    python main.py summarize --draws out/ --level 0.5
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .errors import NlfsError, UsageError
from .models.chain import ChainDraws
from .models.dataset import CovariateScaling, Dataset
from .models.function_spaces import FunctionSpace, SpaceKind
from .systems.baselines import fit_bspline, fit_param_plus_hs_spline, fit_parametric, fit_pspline
from .systems.diagnostics import PosteriorSummary, export_traces, summarize
from .systems.nlfs_sampler import run_nlfs
from .systems.simulation import METHODS, NOISE_LEVELS, SAMPLE_SIZES, TruthKind, TruthSpec, expand_scenarios, run_study
from .utils.config import PARSERS, RunSettings, resolve_settings, settings_to_dict, with_seed
from .utils.persistence import (
    CURVE_FILE,
    PARAMS_FILE,
    REPLICATES_FILE,
    STUDY_FILE,
    read_dataset,
    read_draws,
    write_draws,
    write_table,
)
from .utils.random_generator import RandomGenerator

logger = logging.getLogger(__name__)

FIT_METHODS = ('nlfs', 'bspline', 'pspline', 'param', 'param_bspline')

EXIT_OK = 0


def _settings(args: argparse.Namespace) -> RunSettings:
    flags = {name: getattr(args, name, None) for name in PARSERS}
    for name in ('shrinkage', 'marginal_centering'):
        if flags[name] is not None:
            flags[name] = PARSERS[name](flags[name])
    return resolve_settings(flags, getattr(args, 'config', None))


def _numbers(values: Optional[Sequence[str]], kind, flag: str) -> list:
    try:
        return [kind(v) for v in _split(values)]
    except ValueError:
        raise UsageError(f"{flag}: expected {kind.__name__} values, got {values}") from None


def _ensure_seed(settings: RunSettings) -> RunSettings:
    if settings.seed is None:
        seed = RandomGenerator.generate_seed()
        logger.warning("no seed given; using generated seed %d", seed)
        settings = with_seed(settings, seed)
    return settings


def fit_dataset(data: Dataset, method: str, space_name: str, settings: RunSettings,
                rng: np.random.Generator) -> ChainDraws:
    """Run one fitter on data already scaled to [0, 1]."""
    if method == 'nlfs':
        return run_nlfs(data, FunctionSpace.from_name(space_name), settings.nlfs_config(), rng)
    if method == 'bspline':
        return fit_bspline(data, settings.baseline_config(), rng)
    if method == 'pspline':
        return fit_pspline(data, settings.baseline_config(), rng)
    if space_name not in (SpaceKind.HILL.value, SpaceKind.POWER.value):
        raise UsageError(f"method {method} needs --space hill or --space power")
    if method == 'param':
        return fit_parametric(data, SpaceKind(space_name), settings.baseline_config(), rng)
    return fit_param_plus_hs_spline(data, SpaceKind(space_name), settings.baseline_config(), rng)


def write_summary(summary: PosteriorSummary, scaling: CovariateScaling, directory: Path) -> List[Path]:
    """Curve table on the original covariate scale plus the parameter table."""
    curve = write_table(summary.curve_frame(scaling.inverse(summary.grid)), directory / CURVE_FILE)
    params = write_table(summary.parameters, directory / PARAMS_FILE)
    return [curve, params]


def cmd_fit(args: argparse.Namespace) -> int:
    """Fit a dataset and write draws, summaries and traces."""
    try:
        settings = _ensure_seed(_settings(args))
        data = read_dataset(args.input)
        scaled, scaling = data.rescaled()
        rng = RandomGenerator(settings.seed).stream('fit', args.method, args.space)
        draws = fit_dataset(scaled, args.method, args.space, settings, rng)
        summary = summarize(draws, level=settings.level)
        output = Path(args.output)
        extra = {
            'scaling': scaling.to_dict(),
            'seed': settings.seed,
            'level': settings.level,
            'fit_method': args.method,
            'space': args.space,
            'settings': settings_to_dict(settings)
        }
        written = list(write_draws(draws, output, extra))
        written += write_summary(summary, scaling, output)
        written += list(export_traces(draws, output).values())
    except NlfsError as exc:
        logger.error("fit failed: %s", exc)
        return exc.exit_code
    if draws.has_column('omega'):
        print(f"posterior mean omega: {draws.omega.mean():.3f}")
    for path in written:
        print(f"  wrote {path}")
    return EXIT_OK


def cmd_summarize(args: argparse.Namespace) -> int:
    """Recompute summaries from stored draws without refitting."""
    try:
        draws, metadata = read_draws(args.draws)
        level = args.level if args.level is not None else metadata.get('level', 0.95)
        grid = None
        if args.grid_size is not None:
            if args.grid_size < 2:
                raise UsageError("--grid-size must be >= 2")
            grid = np.linspace(draws.grid[0], draws.grid[-1], args.grid_size)
        summary = summarize(draws, grid=grid, level=level)
        scaling = CovariateScaling.from_dict(metadata.get('scaling', {'lo': 0.0, 'hi': 1.0}))
        output = Path(args.output) if args.output else Path(args.draws)
        written = write_summary(summary, scaling, output)
    except NlfsError as exc:
        logger.error("summarize failed: %s", exc)
        return exc.exit_code
    for path in written:
        print(f"  wrote {path}")
    return EXIT_OK


def _split(values: Optional[Sequence[str]]) -> List[str]:
    out = []
    for value in values or ():
        out.extend(v.strip() for v in value.split(',') if v.strip())
    return out


def cmd_simulate(args: argparse.Namespace) -> int:
    """Run the simulation grid and write RMSE tables."""
    try:
        settings = _ensure_seed(_settings(args))
        truths = [TruthSpec.from_name(t) for t in _split(args.truth)] or [TruthSpec(k) for k in TruthKind]
        methods = _split(args.methods) or list(METHODS)
        unknown = [m for m in methods if m not in METHODS]
        if unknown:
            raise UsageError(f"unknown method id(s): {', '.join(unknown)}")
        ns = _numbers(args.n, int, '--n') or list(SAMPLE_SIZES)
        sigma2s = _numbers(args.sigma2, float, '--sigma2') or list(NOISE_LEVELS)
        scenarios = expand_scenarios(truths, ns, sigma2s, methods, settings.reps, settings.seed)
        result = run_study(scenarios, parallelism=settings.workers, config=settings.study_config())
        output = Path(args.output)
        summary = result.summary_frame()
        summary['cell'] = [f"{m:.3f} ({s:.3f})" for m, s in zip(summary['mean_rmse'], summary['sd_rmse'])]
        written = [write_table(summary, output / STUDY_FILE),
                   write_table(result.to_frame(), output / REPLICATES_FILE)]
        for sigma2 in sorted(set(sigma2s)):
            written.append(write_table(result.table(sigma2), output / f"study_table_sigma2_{sigma2:g}.csv",
                                       index=True))
    except NlfsError as exc:
        logger.error("simulate failed: %s", exc)
        return exc.exit_code
    if result.n_failed:
        print(f"{result.n_failed} replicate(s) failed; see {output / REPLICATES_FILE}")
    for path in written:
        print(f"  wrote {path}")
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument('--config', type=Path, help='dotenv-style file of NLFS_* settings')
    parser.add_argument('--seed', type=int, help='root seed (generated and logged when omitted)')
    parser.add_argument('--n-draws', dest='n_draws', type=int, help='iterations per chain (NLFS_N_DRAWS)')
    parser.add_argument('--burn-in', dest='burn_in', type=int, help='discarded iterations (NLFS_BURN_IN)')
    parser.add_argument('--knots', dest='n_internal_knots', type=int, help='interior knots (NLFS_N_INTERNAL_KNOTS)')
    parser.add_argument('--shrinkage', choices=['own_slice', 'half_cauchy', 'os', 'hc'],
                        help='NLFS shrinkage prior (NLFS_SHRINKAGE)')
    parser.add_argument('--adaptive-proposal', dest='adaptive_proposal', action='store_const', const=True,
                        help='adapt NLFS proposal variances during burn-in (NLFS_ADAPTIVE_PROPOSAL)')
    parser.add_argument('-v', '--verbose', action='store_true', help='debug logging')
    parser.add_argument('-q', '--quiet', action='store_true', help='warnings and errors only')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='nlfs', description='Non-linear functional shrinkage regression')
    commands = parser.add_subparsers(dest='command', required=True)

    fit = commands.add_parser('fit', help='fit one dataset')
    fit.add_argument('--input', required=True, type=Path, help="CSV with header 'x,y'")
    fit.add_argument('--output', type=Path, default=Path('nlfs_output'), help='output directory')
    fit.add_argument('--method', choices=FIT_METHODS, default='nlfs')
    fit.add_argument('--space', default='hill', help="function space: hill, power or hill+power")
    fit.add_argument('--tau2-lower', dest='tau2_lower', type=float, help='NLFS_TAU2_LOWER')
    fit.add_argument('--tau2-upper', dest='tau2_upper', type=float, help='NLFS_TAU2_UPPER')
    fit.add_argument('--order', type=int, help='spline order (NLFS_ORDER)')
    fit.add_argument('--intercept-mean', dest='intercept_mean', type=float, help='NLFS_INTERCEPT_MEAN')
    fit.add_argument('--intercept-var', dest='intercept_var', type=float, help='NLFS_INTERCEPT_VAR')
    fit.add_argument('--marginal-centering', dest='marginal_centering', choices=['intercept', 'zero'],
                     help='NLFS_MARGINAL_CENTERING')
    fit.add_argument('--grid-size', dest='grid_size', type=int, help='NLFS_GRID_SIZE')
    fit.add_argument('--level', type=float, help='credible level (NLFS_LEVEL)')
    _add_common(fit)
    fit.set_defaults(handler=cmd_fit)

    simulate = commands.add_parser('simulate', help='run the simulation study')
    simulate.add_argument('--truth', action='append', help='hill, power, hill_downturn (repeat or comma-separate)')
    simulate.add_argument('--n', action='append', help='sample sizes')
    simulate.add_argument('--sigma2', action='append', help='noise variances')
    simulate.add_argument('--methods', action='append', help=f"method ids: {', '.join(METHODS)}")
    simulate.add_argument('--reps', type=int, help='replicates per scenario (NLFS_REPS)')
    simulate.add_argument('--workers', type=int, help='worker processes (NLFS_WORKERS)')
    simulate.add_argument('--output', type=Path, default=Path('nlfs_study'), help='output directory')
    _add_common(simulate)
    simulate.set_defaults(handler=cmd_simulate)

    summ = commands.add_parser('summarize', help='recompute summaries from stored draws')
    summ.add_argument('--draws', required=True, type=Path, help='directory holding draws.csv and metadata.json')
    summ.add_argument('--output', type=Path, help='output directory (defaults to --draws)')
    summ.add_argument('--level', type=float, help='credible level (default: level used at fit time)')
    summ.add_argument('--grid-size', dest='grid_size', type=int, help='re-grid the curve summary')
    summ.add_argument('-v', '--verbose', action='store_true', help='debug logging')
    summ.add_argument('-q', '--quiet', action='store_true', help='warnings and errors only')
    summ.set_defaults(handler=cmd_summarize)
    return parser


def configure_logging(verbose: bool = False, quiet: bool = False):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format='%(asctime)s %(levelname)s %(name)s: %(message)s')


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse arguments and run a command.

    Returns:
        Exit status: 0 success, 2 usage, 3 data, 4 numerical
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    return args.handler(args)


if __name__ == '__main__':
    sys.exit(main())
