'''
Stein solutions for right-tail indicators and the three g1 evaluations.
'''
import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.special import gammaincc, gammaln
from scipy.stats import poisson

from errors import DomainError
from experiment_types import G1Method
from poisson_core import PoissonLaw, lemma41_series
from stein_kernel import (forward_diff, g1, g1_exact, g1_series_coefficients, stein_solution,
	verify_g1_bound, verify_stein_differences, verify_stein_residual)

LAMBDA_GRID = [0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 25.0]

def _g1_incomplete_gamma(lam: float, w: int) -> float:
	'''
		1/lambda + e^lambda Gamma(w, lambda)(w - lambda)/lambda^{w+1}, Gamma the upper incomplete gamma.
	'''
	log_upper = float(gammaln(w)) + math.log(gammaincc(w, lam))
	return 1.0 / lam + (w - lam) * math.exp(lam + log_upper - (w + 1) * math.log(lam))

class TestSteinSolution:

	@pytest.mark.parametrize('lam', LAMBDA_GRID)
	def test_residual_vanishes_on_grid(self, lam):
		for k in range(math.ceil(lam), math.ceil(lam + 8 * math.sqrt(lam)) + 1):
			report = verify_stein_residual(lam, k, w_max = k + 51)
			assert report.passed, f'k={k}: {report.summary()}'
			assert report.extras['f_0_equals_f_1']

	def test_unit_point_closed_form(self):
		solution = stein_solution(1.0, 1)
		assert solution.value(1) == pytest.approx(-(1.0 - math.exp(-1.0)), rel = 1e-12)

	def test_matches_forward_recurrence(self):
		lam, k = 1.0, 2
		solution = stein_solution(lam, k)
		tail = poisson.sf(k - 1, lam)
		f = {1: solution.value(1)}
		for w in range(1, 3):
			f[w + 1] = (w * f[w] + (1.0 if w >= k else 0.0) - tail) / lam
		assert solution.value(3) == pytest.approx(f[3], rel = 1e-10)

	def test_forward_diff_matches_closed_form(self):
		lam, k = 1.0, 1
		solution = stein_solution(lam, k)
		head = 1.0 - poisson.sf(k - 1, lam)

		def closed_form(w):
			return -math.e * math.factorial(w - 1) * head * poisson.sf(w - 1, lam)

		for w in range(1, 20):
			assert forward_diff(solution, w) == pytest.approx(closed_form(w + 1) - closed_form(w), rel = 1e-9)

	@pytest.mark.parametrize('lam, k', [(1.0, 1), (5.0, 8), (25.0, 30)])
	def test_series_route_matches_direct_difference(self, lam, k):
		solution = stein_solution(lam, k)
		for w in range(1, solution.w_max):
			series = forward_diff(solution, w, cancellation_digits = 0)
			direct = forward_diff(solution, w, allow_series = False)
			assert series == pytest.approx(direct, rel = 1e-9), f'w={w}'

	def test_values_are_negative(self):
		solution = stein_solution(5.0, 9)
		assert np.all(solution.values() < 0.0)

	def test_left_tail_rejected(self):
		with pytest.raises(DomainError):
			stein_solution(5.0, 4)

	def test_short_table_rejected(self):
		with pytest.raises(DomainError):
			stein_solution(5.0, 6, w_max = 7)

	def test_forward_diff_outside_table_rejected(self):
		solution = stein_solution(2.0, 3, w_max = 10)
		with pytest.raises(DomainError):
			forward_diff(solution, 10)

class TestG1:

	def test_series_coefficients(self):
		assert g1_series_coefficients(1) == [1]
		assert g1_series_coefficients(3) == [1, 4, 6]

	@pytest.mark.parametrize('method', list(G1Method))
	@pytest.mark.parametrize('lam', LAMBDA_GRID)
	def test_first_value_is_inverse_square(self, lam, method):
		assert g1(lam, 1, method).value == pytest.approx(1.0 / lam ** 2, rel = 1e-12)

	@pytest.mark.parametrize('method', list(G1Method))
	def test_zero_is_zero(self, method):
		assert g1(2.0, 0, method).value == 0.0

	def test_exact_at_rational_lambda(self):
		assert g1_exact(Fraction(1, 2), 2) == Fraction(4) + 2 * Fraction(8)
		assert g1(Fraction(1, 2), 2).exact == Fraction(20)

	@pytest.mark.parametrize('lam', LAMBDA_GRID)
	def test_three_methods_agree(self, lam):
		for w in range(1, 41):
			exact = g1(lam, w, G1Method.INTEGRAL_SERIES).value
			assert g1(lam, w, G1Method.FACTORIAL).value == pytest.approx(exact, rel = 1e-9), f'w={w}'
			assert g1(lam, w, G1Method.STEIN_DIFF).value == pytest.approx(exact, rel = 1e-9), f'w={w}'

	@pytest.mark.parametrize('lam', [0.5, 2.0, 10.0])
	def test_matches_incomplete_gamma_form(self, lam):
		for w in range(1, 30):
			assert float(g1_exact(lam, w)) == pytest.approx(_g1_incomplete_gamma(lam, w), rel = 1e-9)

	def test_negative_w_rejected(self):
		with pytest.raises(DomainError):
			g1(1.0, -1)

	@pytest.mark.parametrize('lam', [0.0, -2.0, float('nan')])
	def test_non_positive_lambda_rejected(self, lam):
		for method in G1Method:
			with pytest.raises(DomainError):
				g1(lam, 3, method)
		with pytest.raises(DomainError):
			g1_exact(lam, 3)
		with pytest.raises(DomainError):
			verify_g1_bound(lam, 3)

	@pytest.mark.parametrize('lam, w_max', [(3.0, 30), (0.5, 20)] + [(lam, 40) for lam in LAMBDA_GRID])
	def test_growth_bound_and_monotone(self, lam, w_max):
		report = verify_g1_bound(lam, w_max)
		assert report.passed, report.summary()
		assert {part.inequality_id for part in report.sub_reports} == {'g1-growth-bound', 'g1-monotone', 'g1-positive'}

class TestSteinDifferences:

	@pytest.mark.parametrize('lam, k', [(0.5, 1), (1.0, 1), (1.0, 4), (5.0, 5), (5.0, 12), (25.0, 40)])
	def test_difference_bounds(self, lam, k):
		report = verify_stein_differences(lam, k)
		assert report.passed, report.summary()
		assert [part.budget for part in report.sub_reports] == [1.0, 1.0, 0.0]
		# maximum right of k sits at w = k
		expected = poisson.cdf(k - 1, lam) * lemma41_series(PoissonLaw(lam), k)
		assert report.extras['fitted_decay_C'] == pytest.approx(expected, rel = 1e-9)

	@pytest.mark.parametrize('lam', [1.0, 5.0, 20.0])
	def test_decay_constant_at_integer_lambda(self, lam):
		report = verify_stein_differences(lam, int(lam))
		assert report.extras['fitted_decay_C'] == pytest.approx(poisson.cdf(int(lam) - 1, lam), rel = 1e-9)
