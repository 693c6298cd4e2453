'''
Exact laws of W against brute-force enumeration and closed forms.
'''
import itertools
import math
from collections import defaultdict
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import binom

from config import RunMode
from errors import DomainError, ExactModeLimitError
from exact_models import (MatchingModel, PoissonBinomialModel, TwoRunsModel, as_fraction, binomial_law,
	delta_condition_2runs, derangement_numbers, law_expectation, law_tail, matching_law, pbt_law, pbt_polynomial,
	remove_trial, two_runs_joint, two_runs_law)

TWO_RUNS_ORACLES = [(8, Fraction(1, 4)), (10, Fraction(1, 5)), (12, Fraction(1, 3))]

def _two_runs_enumeration(n: int, p: Fraction) -> dict:
	'''
		(W, T) -> probability over all 2^n cyclic sequences.
	'''
	out = defaultdict(Fraction)
	for bits in itertools.product((0, 1), repeat = n):
		weight = p ** sum(bits) * (1 - p) ** (n - sum(bits))
		w = sum(bits[i] * bits[(i + 1) % n] for i in range(n))
		t = sum(bits[i] * bits[(i + 1) % n] * bits[(i + 2) % n] for i in range(n))
		out[(w, t)] += weight
	return dict(out)

def _marginal_w(joint: dict, n: int) -> tuple:
	masses = [Fraction(0)] * (n + 1)
	for (w, _), mass in joint.items():
		masses[w] += mass
	return tuple(masses)

def _pbt_enumeration(p: list) -> tuple:
	masses = [Fraction(0)] * (len(p) + 1)
	for bits in itertools.product((0, 1), repeat = len(p)):
		weight = Fraction(1)
		for bit, p_i in zip(bits, p):
			weight *= p_i if bit else 1 - p_i
		masses[sum(bits)] += weight
	return tuple(masses)

class TestFractions:

	def test_decimal_strings_and_floats(self):
		assert as_fraction('0.05') == Fraction(1, 20)
		assert as_fraction(0.05) == Fraction(1, 20)
		assert as_fraction('1/3') == Fraction(1, 3)
		assert as_fraction(1) == Fraction(1)

class TestPoissonBinomial:

	def test_iid_dp_equals_binomial(self):
		model = PoissonBinomialModel.iid(40, '0.05')
		assert pbt_law(model, method = 'dp').masses == binomial_law(40, Fraction(1, 20)).masses

	def test_binomial_matches_scipy(self):
		law = binomial_law(40, '0.05')
		np.testing.assert_allclose(law.float_masses, binom.pmf(np.arange(41), 40, 0.05), rtol = 1e-12, atol = 1e-300)

	def test_heterogeneous_dp_equals_enumeration(self):
		p = [Fraction(1, 10), Fraction(1, 2), Fraction(3, 7), Fraction(2, 3), Fraction(1, 5), Fraction(9, 10)]
		law = pbt_law(PoissonBinomialModel(p))
		assert law.masses == _pbt_enumeration(p)
		assert law.total == 1
		assert law.mean == sum(p)

	def test_binomial_method_needs_identical_trials(self):
		with pytest.raises(DomainError):
			pbt_law(PoissonBinomialModel(['0.1', '0.2']), method = 'binomial')

	def test_invalid_probabilities_rejected(self):
		with pytest.raises(DomainError):
			PoissonBinomialModel([Fraction(3, 2)])
		with pytest.raises(DomainError):
			PoissonBinomialModel([0, 0])
		with pytest.raises(DomainError):
			PoissonBinomialModel([])

	def test_remove_trial_inverts_convolution(self):
		p = [Fraction(1, 3), Fraction(1, 4), Fraction(2, 5), Fraction(1)]
		coefficients, denominator = pbt_polynomial(PoissonBinomialModel(p), closed_form = False)
		for index, p_i in enumerate(p):
			quotient, smaller = remove_trial(coefficients, denominator, p_i)
			rest = p[:index] + p[index + 1:]
			assert tuple(Fraction(int(c), smaller) for c in quotient) == _pbt_enumeration(rest)

class TestTwoRuns:

	@pytest.mark.parametrize('n, p', TWO_RUNS_ORACLES)
	def test_transfer_matrix_equals_enumeration(self, n, p):
		oracle = _marginal_w(_two_runs_enumeration(n, p), n)
		assert two_runs_law(TwoRunsModel(n, p)).masses == oracle
		assert two_runs_law(TwoRunsModel(n, p), reverse = True).masses == oracle

	@pytest.mark.parametrize('n, p', TWO_RUNS_ORACLES)
	def test_joint_law_equals_enumeration(self, n, p):
		joint = two_runs_joint(TwoRunsModel(n, p))
		assert joint.masses == {key: mass for key, mass in _two_runs_enumeration(n, p).items() if mass}
		assert joint.marginal().masses == two_runs_law(TwoRunsModel(n, p)).masses

	@pytest.mark.parametrize('n, p', TWO_RUNS_ORACLES + [(30, Fraction(1, 4))])
	def test_all_ones_boundary(self, n, p):
		for law in (two_runs_law(TwoRunsModel(n, p)), two_runs_law(TwoRunsModel(n, p), reverse = True)):
			assert law.pmf(n) == p ** n
			# n - 1 runs force the last pair too
			assert law.pmf(n - 1) == 0

	def test_mean_is_n_p_squared(self):
		model = TwoRunsModel(30, Fraction(1, 4))
		assert model.law().mean == model.lam == Fraction(30, 16)

	def test_float_mode_agrees_with_exact(self):
		model = TwoRunsModel(40, Fraction(1, 5))
		exact = two_runs_law(model).float_masses
		approximate = two_runs_law(model, mode = RunMode.FLOAT).float_masses
		np.testing.assert_allclose(approximate, exact, rtol = 1e-10, atol = 1e-300)

	def test_large_cycle_falls_back_to_float(self):
		law = TwoRunsModel(80, Fraction(1, 10)).law()
		assert not law.exact
		assert law.total == pytest.approx(1.0, abs = 1e-12)
		assert law.mean == pytest.approx(80 / 100, rel = 1e-10)

	def test_exact_limit_enforced(self):
		with pytest.raises(ExactModeLimitError):
			two_runs_law(TwoRunsModel(65, Fraction(1, 10)), mode = RunMode.EXACT)
		with pytest.raises(ExactModeLimitError):
			two_runs_joint(TwoRunsModel(65, Fraction(1, 10)), mode = RunMode.EXACT)

	def test_hypotheses(self):
		assert TwoRunsModel(11, Fraction(1, 4)).meets_hypotheses
		assert not TwoRunsModel(10, Fraction(1, 4)).meets_hypotheses
		assert not TwoRunsModel(20, Fraction(1, 2)).meets_hypotheses
		with pytest.raises(DomainError):
			TwoRunsModel(20, Fraction(1, 2)).require_hypotheses('test')
		with pytest.raises(DomainError):
			TwoRunsModel(2, Fraction(1, 4))
		with pytest.raises(DomainError):
			TwoRunsModel(10, 1)

class TestMatching:

	def test_derangements(self):
		assert derangement_numbers(8) == [1, 0, 1, 2, 9, 44, 265, 1854, 14833]

	@pytest.mark.parametrize('n', range(1, 8))
	def test_rencontres_equals_enumeration(self, n):
		counts = [0] * (n + 1)
		for permutation in itertools.permutations(range(n)):
			counts[sum(1 for i, image in enumerate(permutation) if i == image)] += 1
		oracle = tuple(Fraction(count, math.factorial(n)) for count in counts)
		assert matching_law(MatchingModel(n)).masses == oracle

	@pytest.mark.parametrize('n', [2, 5, 12, 40])
	def test_mean_is_one(self, n):
		assert matching_law(MatchingModel(n)).mean == 1

	@pytest.mark.parametrize('n', range(1, 8))
	def test_factorial_moments_are_one(self, n):
		law = matching_law(MatchingModel(n))
		for r in range(1, n + 1):
			assert law_expectation(law, lambda w: math.perm(w, r)) == 1
		assert law_expectation(law, lambda w: 1) == 1

	def test_tail(self):
		law = matching_law(MatchingModel(4))
		assert law.tail(1) == Fraction(15, 24)
		assert law.tail(5) == 0
		assert law_tail(law, 5).is_zero
		with pytest.raises(DomainError):
			law_tail(law, -1)

class TestDeltaCondition:

	def test_small_cycle_equals_enumeration(self):
		n, p = 12, Fraction(1, 4)
		enumeration = _two_runs_enumeration(n, p)
		table = delta_condition_2runs(TwoRunsModel(n, p), 4)
		for w in range(1, 5):
			weight = sum(mass for (w_, _), mass in enumeration.items() if w_ == w)
			mean_t = sum(t * mass for (w_, t), mass in enumeration.items() if w_ == w) / weight
			assert table.entries[w] == 2 * mean_t / w ** 2

	@pytest.mark.parametrize('n', [5, 12, 30])
	def test_single_run_has_no_overlap(self, n):
		table = delta_condition_2runs(TwoRunsModel(n, Fraction(1, 5)), 2)
		assert table.entries[1] == 0

	def test_fitted_constant_is_stable(self):
		constants = []
		for n in (20, 40, 60):
			for p in (Fraction(1, 10), Fraction(1, 5)):
				model = TwoRunsModel(n, p)
				theta = max(math.floor(n * p / 50), 2)
				table = delta_condition_2runs(model, theta)
				assert table.undefined == []
				for value in table.entries.values():
					assert float(value) <= table.fitted_C / (n * float(p)) * (1 + 1e-12)
				constants.append(table.fitted_C)
		assert all(math.isfinite(constant) and constant > 0 for constant in constants)
		assert max(constants) / min(constants) < 2.0

	@pytest.mark.parametrize('n', [5, 8, 12, 20])
	def test_all_ones_gives_two_over_n(self, n):
		table = delta_condition_2runs(TwoRunsModel(n, Fraction(1, 3)), n)
		assert table.entries[n] == Fraction(2, n)
		assert table.entries[n - 1] is None

	def test_unattainable_w_is_undefined(self):
		table = delta_condition_2runs(TwoRunsModel(5, Fraction(1, 4)), 5)
		assert table.entries[4] is None
		assert 4 in table.undefined
		assert table.delta_star is not None

	def test_theta_must_be_positive(self):
		with pytest.raises(DomainError):
			delta_condition_2runs(TwoRunsModel(12, Fraction(1, 4)), 0)
