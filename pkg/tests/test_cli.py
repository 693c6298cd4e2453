'''
Command-line surface: exit codes, artifacts and determinism.
'''
import csv
import io
import json
from fractions import Fraction

import pytest

import cli
from bound_report import BoundReport
from errors import VerificationFailure
from exact_models import MatchingModel
from size_bias import matching_coupling_enumerate

def _run(capsys, *argv):
	status = cli.main(list(argv))
	return status, capsys.readouterr().out

class TestExitCodes:

	def test_passing_verification(self, capsys):
		status, out = _run(capsys, 'verify', 'lemma42', '--lambda', '6.5', '--k-max', '40')
		assert status == cli.EXIT_OK
		document = json.loads(out)
		assert document['inequality_id'] == 'poisson-tail-facts'
		assert document['pass'] is True
		assert [part['inequality_id'] for part in document['sub_reports']] == ['lower-tail-floor', 'tail-ratio', 'tail-vs-mass']

	def test_injected_violation(self, capsys):
		status, out = _run(capsys, 'verify', 'tv-bound', '--model', 'pbt', '--n', '10', '--p', '0.1', '--budget', '1e-6')
		assert status == cli.EXIT_VERIFICATION_FAILED
		assert json.loads(out)['pass'] is False

	def test_truncated_neighbourhoods_fail(self, capsys):
		status, _ = _run(capsys, 'verify', 'independence', '--model', 'two_runs', '--n', '8', '--p', '1/4', '--graph', 'independent')
		assert status == cli.EXIT_VERIFICATION_FAILED

	def test_unknown_model(self, capsys):
		status, _ = _run(capsys, 'model', '--model', 'ising', '--n', '5')
		assert status == cli.EXIT_USAGE

	def test_unknown_verify_target(self, capsys):
		status, _ = _run(capsys, 'verify', 'lemma99')
		assert status == cli.EXIT_USAGE

	def test_missing_flag(self, capsys):
		status, out = _run(capsys, 'tail', '--lambda', '2.0')
		assert status == cli.EXIT_USAGE
		assert out == ''

	def test_left_tail_request(self, capsys):
		status, _ = _run(capsys, 'ratio', '--model', 'pbt', '--n', '400', '--p', '0.05', '--k-min', '5')
		assert status == cli.EXIT_USAGE

	def test_exact_limit(self, capsys):
		status, _ = _run(capsys, 'verify', 'independence', '--model', 'two_runs', '--n', '25', '--p', '1/4')
		assert status == cli.EXIT_USAGE

	def test_sampling_needs_seed(self, capsys):
		status, _ = _run(capsys, 'coupling', '--model', 'matching', '--n', '6', '--samples', '1000')
		assert status == cli.EXIT_USAGE

	def test_non_positive_workers(self, capsys):
		status, _ = _run(capsys, 'coupling', '--model', 'matching', '--n', '6', '--exact', '--workers', '0')
		assert status == cli.EXIT_USAGE

	@pytest.mark.parametrize('argv', [
		['g1', '--lambda', '-2', '--w-max', '5'],
		['g1', '--lambda', '0', '--w-max', '5', '--method', 'integral_series'],
		['verify', 'g1-bound', '--lambda', '0', '--w-max', '3'],
		['verify', 'g1-bound', '--lambda', '-1', '--w-max', '3'],
		['tail', '--lambda', '-1', '--k-max', '5'],
	])
	def test_non_positive_lambda(self, capsys, argv):
		status, out = _run(capsys, *argv)
		assert status == cli.EXIT_USAGE
		assert out == ''

	def test_failed_report_raises_verification_failure(self):
		report = BoundReport('unit', budget = 1.0)
		report.add({'k': 1}, 2.0, 1.0)
		config = cli.RunConfig(cli.CliCommand.VERIFY, target = 'tv-bound')
		with pytest.raises(VerificationFailure, match = 'unit'):
			cli.require_passed(config, report)
		report.with_budget(3.0)
		cli.require_passed(config, report)

	def test_workers_capped_by_environment(self, capsys, monkeypatch):
		monkeypatch.setattr(cli, 'MAX_WORKERS', 2)
		status, out = _run(capsys, 'coupling', '--model', 'matching', '--n', '5', '--samples', '1000', '--seed', '1', '--workers', '8')
		assert status == cli.EXIT_OK
		assert json.loads(out)['workers'] == 2
		assert cli.capped_workers(0) == 0

	def test_help(self, capsys):
		assert cli.main(['--help']) == cli.EXIT_OK

class TestArtifacts:

	def test_exact_coupling_matches_enumeration(self, capsys):
		status, out = _run(capsys, 'coupling', '--model', 'matching', '--n', '6', '--exact')
		assert status == cli.EXIT_OK
		document = json.loads(out)
		oracle = matching_coupling_enumerate(MatchingModel(6))
		masses = {(row['w'], row['d']): Fraction(row['mass']) for row in document['masses']}
		assert masses == {key: mass for key, mass in oracle.masses.items() if mass}
		assert Fraction(document['delta1']) == Fraction(1, 3)
		assert Fraction(document['delta2']) == Fraction(1, 6)

	def test_ratio_csv(self, capsys):
		status, out = _run(capsys, 'ratio', '--model', 'pbt', '--n', '400', '--p', '0.05', '--format', 'csv')
		assert status == cli.EXIT_OK
		assert '\r\n' in out
		rows = list(csv.reader(io.StringIO(out)))
		assert rows[0] == ['inequality_id', 'n', 'p', 'k', 'xi', 'ratio_minus_1', 'shape', 'ratio', 'fitted_C', 'excluded']
		assert rows[1][1:4] == ['400', '1/20', '20']
		assert len(rows) == 1 + 18

	def test_model_law(self, capsys):
		status, out = _run(capsys, 'model', '--model', 'matching', '--n', '4')
		assert status == cli.EXIT_OK
		document = json.loads(out)
		assert document['masses'] == ['3/8', '1/3', '1/4', '0/1', '1/24']
		assert document['mean'] == '1/1'

	def test_g1_all_methods(self, capsys):
		status, out = _run(capsys, 'g1', '--lambda', '2.0', '--w-max', '5', '--format', 'csv')
		assert status == cli.EXIT_OK
		rows = list(csv.reader(io.StringIO(out)))
		assert rows[0] == ['w', 'factorial', 'integral_series', 'stein_diff']
		assert len(rows) == 6

	def test_output_file_equals_stdout(self, capsys, tmp_path):
		argv = ['delta-condition', '--model', 'two_runs', '--n', '20', '--p', '0.1']
		status, out = _run(capsys, *argv)
		assert status == cli.EXIT_OK
		target = tmp_path / 'delta.json'
		assert cli.main(argv + ['--output', str(target)]) == cli.EXIT_OK
		assert target.read_bytes() == out.encode()
		assert capsys.readouterr().out == ''

class TestDeterminism:

	@pytest.mark.parametrize('argv', [
		['sweep', '--model', 'pbt', '--p', '0.1', '--n-list', '100,50,150', '--workers', '3'],
		['coupling', '--model', 'matching', '--n', '5', '--samples', '20000', '--seed', '42', '--workers', '2'],
		['verify', 'lemma46', '--model', 'two_runs', '--n', '12', '--p', '1/4', '--x-grid', '1,2,4'],
	])
	def test_repeated_runs_are_byte_identical(self, capsys, argv):
		first_status, first = _run(capsys, *argv)
		second_status, second = _run(capsys, *argv)
		assert first_status == second_status == cli.EXIT_OK
		assert first == second

	def test_sweep_order_is_canonical(self, capsys):
		_, shuffled = _run(capsys, 'sweep', '--model', 'pbt', '--p', '0.1', '--n-list', '150,50,100')
		_, ordered = _run(capsys, 'sweep', '--model', 'pbt', '--p', '0.1', '--n-list', '50,100,150')
		assert shuffled == ordered
