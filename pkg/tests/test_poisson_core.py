'''
Poisson log-space arithmetic and the Poisson-side tail facts, against
scipy.stats and rational partial sums.
'''
import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import poisson

from errors import DomainError
from poisson_core import (PoissonLaw, lemma41_series, lemma41_supremum, log_diff_exp, poisson_log_cdf,
	poisson_pmf, poisson_tail, verify_lemma42, xi_of)

LAMBDAS = [0.1, 0.5, 1.0, 6.5, 25.0, 50.0]

def _k_stop(lam: float) -> int:
	return math.ceil(lam + 10 * math.sqrt(lam) + 20)

def _series_oracle(lam: Fraction, w: int, terms: int) -> Fraction:
	return sum(
		(lam ** j * math.factorial(w) * (j + 1) / Fraction(math.factorial(j + w + 1)) for j in range(terms)),
		Fraction(0),
	)

class TestLogSpaceArithmetic:

	def test_log_diff_exp_signs(self):
		sign, magnitude = log_diff_exp(math.log(3.0), math.log(1.0))
		assert sign == 1
		assert magnitude == pytest.approx(math.log(2.0), abs = 1e-15)
		sign, magnitude = log_diff_exp(math.log(1.0), math.log(3.0))
		assert sign == -1
		assert magnitude == pytest.approx(math.log(2.0), abs = 1e-15)
		assert log_diff_exp(-5.0, -5.0) == (0, -math.inf)

	def test_non_positive_mean_rejected(self):
		with pytest.raises(DomainError):
			PoissonLaw(0.0)
		with pytest.raises(DomainError):
			PoissonLaw(float('inf'))

	def test_negative_k_rejected(self):
		with pytest.raises(DomainError):
			poisson_tail(PoissonLaw(1.0), -1)
		with pytest.raises(DomainError):
			poisson_pmf(PoissonLaw(1.0), -1)

	def test_xi_is_right_tail_only(self):
		assert xi_of(PoissonLaw(4.0), 8).value == 2.0
		with pytest.raises(DomainError):
			xi_of(PoissonLaw(4.0), 3)

class TestPoissonMassAndTail:

	@pytest.mark.parametrize('lam', LAMBDAS)
	def test_pmf_matches_scipy(self, lam):
		law = PoissonLaw(lam)
		ks = np.arange(_k_stop(lam))
		ours = np.array([poisson_pmf(law, int(k)).log_value for k in ks])
		np.testing.assert_allclose(ours, poisson.logpmf(ks, lam), rtol = 1e-12, atol = 1e-10)

	@pytest.mark.parametrize('lam', LAMBDAS)
	def test_tail_matches_scipy(self, lam):
		law = PoissonLaw(lam)
		ks = np.arange(1, _k_stop(lam))
		ours = np.array([poisson_tail(law, int(k)).log_value for k in ks])
		np.testing.assert_allclose(ours, poisson.logsf(ks - 1, lam), rtol = 1e-9, atol = 1e-9)

	def test_tail_at_zero_is_one(self):
		assert poisson_tail(PoissonLaw(3.0), 0).log_value == 0.0

	@pytest.mark.parametrize('lam', LAMBDAS)
	def test_right_tail_differences_are_masses(self, lam):
		law = PoissonLaw(lam)
		for k in range(math.ceil(lam), _k_stop(lam)):
			sign, log_difference = log_diff_exp(poisson_tail(law, k).log_value, poisson_tail(law, k + 1).log_value)
			assert sign == 1
			assert log_difference == pytest.approx(poisson_pmf(law, k).log_value, abs = 1e-10)

	@pytest.mark.parametrize('lam', LAMBDAS)
	def test_deep_tail_sandwich(self, lam):
		law = PoissonLaw(lam)
		for k in range(math.floor(lam) + 1, _k_stop(lam)):
			gap = poisson_tail(law, k).log_value - poisson_pmf(law, k).log_value
			assert -1e-12 <= gap <= math.log((k + 1) / (k - lam + 1)) + 1e-12

	@pytest.mark.parametrize('lam', [0.5, 6.5, 50.0])
	def test_cdf_and_tail_complement(self, lam):
		law = PoissonLaw(lam)
		for k in range(0, _k_stop(lam) // 2):
			total = poisson_log_cdf(law, k).prob + poisson_tail(law, k + 1).prob
			assert total == pytest.approx(1.0, abs = 1e-12)

	def test_thirty_standard_deviations_stays_finite(self):
		log_tail = poisson_tail(PoissonLaw(1.0), 60).log_value
		assert math.isfinite(log_tail)
		assert log_tail == pytest.approx(float(poisson.logsf(59, 1.0)), rel = 1e-9)

class TestSeriesBound:

	def test_unit_point_telescopes_to_one(self):
		assert lemma41_series(PoissonLaw(1.0), 1) == pytest.approx(1.0, abs = 1e-12)

	def test_matches_rational_partial_sum(self):
		value = lemma41_series(PoissonLaw(10.0), 10)
		oracle = float(_series_oracle(Fraction(10), 10, 200))
		assert value == pytest.approx(1.0, rel = 1e-12)
		assert value == pytest.approx(oracle, rel = 1e-12)

	def test_below_lambda_rejected(self):
		with pytest.raises(DomainError):
			lemma41_series(PoissonLaw(5.0), 4)

	def test_supremum_is_one_over_grid(self):
		lambdas = sorted(set(np.geomspace(0.1, 50.0, 12).tolist()) | {1.0})
		report = lemma41_supremum(lambdas, 200)
		assert report.budget == 1.0
		assert report.fitted_constant == pytest.approx(1.0, abs = 1e-12)
		assert report.passed

	@pytest.mark.parametrize('w', [1, 2, 5, 20, 100, 200])
	def test_equals_one_on_the_diagonal(self, w):
		assert lemma41_series(PoissonLaw(float(w)), w) == pytest.approx(1.0, rel = 1e-12)

	@pytest.mark.parametrize('w', [1, 5, 20, 100])
	def test_increasing_in_lambda(self, w):
		values = [lemma41_series(PoissonLaw(lam), w) for lam in np.linspace(0.05 * w, w, 25).tolist()]
		assert all(later > earlier for earlier, later in zip(values, values[1:]))

	def test_stabilises_at_fixed_ratio(self):
		# lambda = w/2: w * series = 4 - 32/w + O(1/w^2)
		gaps = []
		for w in (500, 1000, 2000):
			gap = 4.0 - w * lemma41_series(PoissonLaw(w / 2), w)
			assert 24.0 / w < gap < 40.0 / w
			gaps.append(gap)
		assert gaps[0] > gaps[1] > gaps[2]

class TestTailFacts:

	@pytest.mark.parametrize('lam', np.geomspace(0.1, 50.0, 31).tolist())
	def test_all_three_hold(self, lam):
		report = verify_lemma42(PoissonLaw(lam), _k_stop(lam))
		assert report.passed, report.summary()
		assert all(part.violations == 0 for part in report.sub_reports)

	def test_reference_point_has_positive_slack(self):
		report = verify_lemma42(PoissonLaw(6.5), 40)
		assert report.passed
		slack = report.extras['worst_slack']
		assert set(slack) == {'lower-tail-floor', 'tail-ratio', 'tail-vs-mass'}
		assert slack['lower-tail-floor'] > 0.0
		assert report.extras['fitted_c'] == pytest.approx(poisson.sf(5, 6.5), rel = 1e-9)

	def test_k_max_must_be_positive(self):
		with pytest.raises(DomainError):
			verify_lemma42(PoissonLaw(1.0), 0)
