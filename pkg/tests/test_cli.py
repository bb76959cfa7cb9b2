"""
Integration tests for the fit, summarize and simulate commands.
"""

import io
import json
import tempfile
import unittest
from contextlib import redirect_stdout
from pathlib import Path

import numpy as np
import pandas as pd

from src.cli import main
from src.errors import DataError
from src.utils.persistence import (
    CURVE_FILE,
    DRAWS_FILE,
    METADATA_FILE,
    PARAMS_FILE,
    REPLICATES_FILE,
    STUDY_FILE,
    read_dataset,
    read_draws,
)

FAST_FIT = ['--n-draws', '300', '--burn-in', '100', '--knots', '6', '--seed', '3', '-q']


def _run(argv):
    with redirect_stdout(io.StringIO()):
        return main(argv)


class CliTestCase(unittest.TestCase):
    """Temporary working directory with a small dataset."""

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self._tmp.cleanup)
        self.dir = Path(self._tmp.name)
        rng = np.random.default_rng(0)
        x = np.linspace(2.0, 12.0, 60)
        y = 0.5 + np.sqrt((x - 2.0) / 10.0) + 0.05 * rng.standard_normal(60)
        self.data = self.dir / 'data.csv'
        pd.DataFrame({'x': x, 'y': y}).to_csv(self.data, index=False)

    def write(self, name: str, text: str) -> Path:
        path = self.dir / name
        path.write_text(text)
        return path


class TestReadDataset(CliTestCase):
    """Test cases for dataset parsing."""

    def test_reads_rows(self):
        """Test a well-formed file."""
        data = read_dataset(self.data)
        self.assertEqual(data.n, 60)
        self.assertAlmostEqual(data.x[0], 2.0)

    def test_malformed_line(self):
        """Test the offending file line is reported."""
        path = self.write('bad.csv', "x,y\n0.1,1.0\n0.2,abc\n0.3,2.0\n")
        with self.assertRaises(DataError) as ctx:
            read_dataset(path)
        self.assertEqual(ctx.exception.line, 3)
        self.assertIn('line 3', str(ctx.exception))

    def test_bad_header_and_empty(self):
        """Test a wrong header and an empty file."""
        with self.assertRaises(DataError):
            read_dataset(self.write('header.csv', "a,b\n1,2\n"))
        with self.assertRaises(DataError):
            read_dataset(self.write('empty.csv', ""))


class TestFitAndSummarize(CliTestCase):
    """Test cases for the fit and summarize commands."""

    def test_fit_then_summarize_reproduces_summaries(self):
        """Test summarize on stored draws rewrites byte-identical summaries."""
        out = self.dir / 'fit'
        self.assertEqual(_run(['fit', '--input', str(self.data), '--output', str(out),
                               '--space', 'power'] + FAST_FIT), 0)
        for name in (DRAWS_FILE, METADATA_FILE, CURVE_FILE, PARAMS_FILE, 'trace_omega.csv'):
            self.assertTrue((out / name).is_file(), name)
        again = self.dir / 'again'
        self.assertEqual(_run(['summarize', '--draws', str(out), '--output', str(again), '-q']), 0)
        for name in (CURVE_FILE, PARAMS_FILE):
            self.assertEqual((out / name).read_bytes(), (again / name).read_bytes(), name)

    def test_fit_outputs(self):
        """Test stored metadata and the curve grid on the original covariate scale."""
        out = self.dir / 'fit'
        self.assertEqual(_run(['fit', '--input', str(self.data), '--output', str(out),
                               '--method', 'pspline', '--grid-size', '11'] + FAST_FIT), 0)
        metadata = json.loads((out / METADATA_FILE).read_text())
        self.assertEqual(metadata['seed'], 3)
        self.assertEqual(metadata['scaling'], {'lo': 2.0, 'hi': 12.0})
        curve = pd.read_csv(out / CURVE_FILE)
        self.assertEqual(len(curve), 11)
        self.assertAlmostEqual(curve['grid'].iloc[0], 2.0)
        self.assertAlmostEqual(curve['grid'].iloc[-1], 12.0)
        draws, _ = read_draws(out)
        self.assertEqual(draws.n_draws, 200)

    def test_same_seed_same_draws(self):
        """Test two fits with one seed write identical draws."""
        for name in ('a', 'b'):
            self.assertEqual(_run(['fit', '--input', str(self.data), '--output', str(self.dir / name),
                                   '--space', 'hill'] + FAST_FIT), 0)
        self.assertEqual((self.dir / 'a' / DRAWS_FILE).read_bytes(), (self.dir / 'b' / DRAWS_FILE).read_bytes())

    def test_summarize_level(self):
        """Test a narrower level gives a narrower band."""
        out = self.dir / 'fit'
        _run(['fit', '--input', str(self.data), '--output', str(out), '--method', 'bspline'] + FAST_FIT)
        wide = pd.read_csv(out / CURVE_FILE)
        self.assertEqual(_run(['summarize', '--draws', str(out), '--output', str(self.dir / 'n'),
                               '--level', '0.5', '-q']), 0)
        narrow = pd.read_csv(self.dir / 'n' / CURVE_FILE)
        self.assertTrue(np.all(narrow['upper'] - narrow['lower'] <= wide['upper'] - wide['lower'] + 1e-12))

    def test_empty_input_exit_code(self):
        """Test an empty input file exits with the data error code."""
        path = self.write('empty.csv', "")
        self.assertEqual(_run(['fit', '--input', str(path), '--output', str(self.dir / 'o')] + FAST_FIT), 3)

    def test_malformed_input_exit_code(self):
        """Test a malformed row exits with the data error code."""
        path = self.write('bad.csv', "x,y\n0.1,1.0\n0.2,\n")
        self.assertEqual(_run(['fit', '--input', str(path), '--output', str(self.dir / 'o')] + FAST_FIT), 3)

    def test_missing_and_corrupted_draws(self):
        """Test summarize exits with the data error code on missing or altered draws."""
        self.assertEqual(_run(['summarize', '--draws', str(self.dir / 'nowhere'), '-q']), 3)
        out = self.dir / 'fit'
        _run(['fit', '--input', str(self.data), '--output', str(out), '--method', 'bspline'] + FAST_FIT)
        with open(out / DRAWS_FILE, 'a') as handle:
            handle.write('0\n')
        self.assertEqual(_run(['summarize', '--draws', str(out), '-q']), 3)

    def test_parametric_space_check(self):
        """Test parametric fits reject the combined space."""
        code = _run(['fit', '--input', str(self.data), '--output', str(self.dir / 'o'),
                     '--method', 'param', '--space', 'hill+power'] + FAST_FIT)
        self.assertEqual(code, 2)

    def test_unknown_fit_method(self):
        """Test an unknown --method is rejected by the parser."""
        with self.assertRaises(SystemExit) as ctx, redirect_stdout(io.StringIO()):
            main(['fit', '--input', str(self.data), '--method', 'gp'])
        self.assertEqual(ctx.exception.code, 2)


class TestSimulate(CliTestCase):
    """Test cases for the simulate command."""

    def test_small_study(self):
        """Test a small grid writes the result tables."""
        out = self.dir / 'study'
        code = _run(['simulate', '--truth', 'power', '--n', '30', '--sigma2', '0.05',
                     '--methods', 'bspline,param_power', '--reps', '2', '--n-draws', '60',
                     '--burn-in', '20', '--knots', '4', '--seed', '1', '-q', '--output', str(out)])
        self.assertEqual(code, 0)
        results = pd.read_csv(out / STUDY_FILE)
        self.assertEqual(list(results['method']), ['bspline', 'param_power'])
        self.assertIn('cell', results.columns)
        self.assertEqual(len(pd.read_csv(out / REPLICATES_FILE)), 4)
        self.assertTrue((out / 'study_table_sigma2_0.05.csv').is_file())

    def test_zero_reps(self):
        """Test --reps 0 is a usage error."""
        self.assertEqual(_run(['simulate', '--reps', '0', '--seed', '1', '-q',
                               '--output', str(self.dir / 's')]), 2)

    def test_unknown_method(self):
        """Test unknown method ids are a usage error."""
        self.assertEqual(_run(['simulate', '--methods', 'gp', '--seed', '1', '-q',
                               '--output', str(self.dir / 's')]), 2)

    def test_bad_numbers(self):
        """Test unparsable sample sizes are a usage error."""
        self.assertEqual(_run(['simulate', '--n', 'ten', '--seed', '1', '-q',
                               '--output', str(self.dir / 's')]), 2)


if __name__ == '__main__':
    unittest.main()
