'''
Stein equation solutions for right-tail indicators and the g1 function.

For h(w) = I{w >= k}, k >= lambda, the bounded solution of
	lambda f(w+1) - w f(w) = h(w) - E h(Y)
has the closed form
	f(w) = -e^lambda (w-1)!/lambda^w (1 - P(Y >= k)) P(Y >= w),	w >= k
	f(w) = -e^lambda (w-1)!/lambda^w P(Y >= k) P(Y <= w-1),		0 < w <= k
with f(0) := f(1). Magnitudes span hundreds of orders, so the table keeps a
sign and a log-magnitude per w.

g1 is evaluated three independent ways so each can audit the others:
factorial form, exact binomial expansion of the integral form, and scaled
differences of a Stein solution.
'''
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

import numpy as np
from scipy.special import gammaln, logsumexp

from bound_report import BoundReport
from config import GENERAL_SETTINGS, STEIN_KERNEL_SETTINGS, BOUND_CHECKER_SETTINGS
from errors import DomainError
from experiment_types import G1Method, Sense
from poisson_core import PoissonLaw, lemma41_terms, log_diff_exp, poisson_log_cdf, poisson_tail

logger = logging.getLogger(__name__)

_IS_DEBUG_MODE = GENERAL_SETTINGS['_IS_DEBUG_MODE']
CANCELLATION_DIGITS = STEIN_KERNEL_SETTINGS['CANCELLATION_DIGITS']
W_MAX_SQRT_SCALE = STEIN_KERNEL_SETTINGS['W_MAX_SQRT_SCALE']
W_MAX_PADDING = STEIN_KERNEL_SETTINGS['W_MAX_PADDING']
RESIDUAL_TOLERANCE = STEIN_KERNEL_SETTINGS['RESIDUAL_TOLERANCE']
FLOAT_TOLERANCE = BOUND_CHECKER_SETTINGS['FLOAT_TOLERANCE']

Real = Union[float, Fraction]

def _debug(method_name: str, message: str) -> None:
	if _IS_DEBUG_MODE:
		logger.debug(f'stein_kernel::{method_name}()::{message}')

def _require_positive(lam: Real, scope: str) -> None:
	if not (lam > 0 and math.isfinite(lam)):
		raise DomainError(f'{scope}:: lambda must be a positive real, got {lam}')

def default_w_max(lam: float, k: int) -> int:
	return k + math.ceil(W_MAX_SQRT_SCALE * math.sqrt(lam)) + W_MAX_PADDING

@dataclass(frozen = True)
class SteinSolution:
	lam: float
	k: int
	w_max: int
	signs: np.ndarray		# index w = 0 .. w_max
	log_abs: np.ndarray
	log_tail_k: float		# log P(Y >= k)
	log_head_k: float		# log P(Y <= k-1)

	def value(self, w: int) -> float:
		if not 0 <= w <= self.w_max:
			raise DomainError(f'SteinSolution::value():: w={w} outside 0..{self.w_max}')
		return float(self.signs[w] * math.exp(self.log_abs[w]))

	def values(self) -> np.ndarray:
		return self.signs * np.exp(self.log_abs)

	def residual(self, w: int) -> float:
		'''
			lambda f(w+1) - w f(w) - (I{w >= k} - P(Y >= k)); zero for an exact solution.
		'''
		h_centered = (1.0 if w >= self.k else 0.0) - math.exp(self.log_tail_k)
		return self.lam * self.value(w + 1) - w * self.value(w) - h_centered

@dataclass(frozen = True)
class G1Value:
	lam: float
	w: int
	value: float
	method: G1Method
	exact: Optional[Fraction] = None

def stein_solution(lam: float, k: int, w_max: Optional[int] = None) -> SteinSolution:
	law = PoissonLaw(float(lam))
	if k < law.lam:
		raise DomainError(f'stein_kernel::stein_solution():: right-tail only, k={k} < lambda={lam}')
	w_max = default_w_max(law.lam, k) if w_max is None else w_max
	if w_max < k + 2:
		raise DomainError(f'stein_kernel::stein_solution():: w_max={w_max} < k + 2 = {k + 2}')

	log_tail_k = poisson_tail(law, k).log_value
	log_head_k = poisson_log_cdf(law, k - 1).log_value
	log_abs = np.empty(w_max + 1)
	for w in range(1, w_max + 1):
		log_prefactor = law.lam + float(gammaln(w)) - w * law.log_lam
		if w >= k:
			log_abs[w] = log_prefactor + log_head_k + poisson_tail(law, w).log_value
		else:
			log_abs[w] = log_prefactor + log_tail_k + poisson_log_cdf(law, w - 1).log_value
	log_abs[0] = log_abs[1]
	# both closed-form branches are negative
	signs = -np.ones(w_max + 1)
	log_abs.setflags(write = False)
	signs.setflags(write = False)
	_debug('stein_solution', f'lambda={lam}, k={k}, w_max={w_max}, f(1)={-math.exp(log_abs[1])}')
	return SteinSolution(law.lam, k, w_max, signs, log_abs, log_tail_k, log_head_k)

def _cancels(log_a: float, log_b: float, digits: int) -> bool:
	return -math.expm1(-abs(log_a - log_b)) < 10.0 ** (-digits)

def forward_diff(sol: SteinSolution, w: int, allow_series: bool = True, cancellation_digits: int = CANCELLATION_DIGITS) -> float:
	'''
		f(w+1) - f(w). Signed log-space subtraction; when |f(w)| and |f(w+1)|
		agree to more than `cancellation_digits` digits, switch to the series form
		(right of k) or the g1 integral series (left of k).
	'''
	if not 1 <= w < sol.w_max:
		raise DomainError(f'stein_kernel::forward_diff():: w={w} outside 1..{sol.w_max - 1}')
	log_a, log_b = sol.log_abs[w], sol.log_abs[w + 1]
	if allow_series and _cancels(log_a, log_b, cancellation_digits):
		_debug('forward_diff', f'cancellation at w={w}, using series form')
		if w >= sol.k:
			return math.exp(sol.log_head_k) * lemma41_terms(sol.lam, w) / w
		return -math.exp(sol.log_tail_k + g1_log_series(sol.lam, w))
	# f < 0, so f(w+1) - f(w) = |f(w)| - |f(w+1)|
	sign, log_magnitude = log_diff_exp(log_a, log_b)
	return sign * math.exp(log_magnitude)

def g1_series_coefficients(w: int) -> list[int]:
	'''
		Coefficients of 1/lambda^{j+2}, j = 0 .. w-1, in the integral form of g1.

		>>> g1_series_coefficients(3)
		[1, 4, 6]
	'''
	return [math.comb(w - 1, j) * math.factorial(j + 1) for j in range(w)]

def g1_exact(lam: Real, w: int) -> Fraction:
	'''
		Integral form int_0^inf x (1+x)^{w-1} e^{-lambda x} dx, expanded binomially,
		in exact rationals. Floats are exact binary rationals, so any positive lambda works.

		>>> g1_exact(Fraction(1, 2), 1)
		Fraction(4, 1)
	'''
	_require_positive(lam, 'stein_kernel::g1_exact()')
	if w == 0:
		return Fraction(0)
	lam = Fraction(lam)
	inverse = 1 / lam
	return sum((coefficient * inverse ** (j + 2) for j, coefficient in enumerate(g1_series_coefficients(w))), Fraction(0))

def g1_log_series(lam: float, w: int) -> float:
	'''
		log g1(w) from the integral-form series, in floats with a log-sum.
	'''
	_require_positive(lam, 'stein_kernel::g1_log_series()')
	if w == 0:
		return -math.inf
	js = np.arange(w, dtype = float)
	log_terms = (
		gammaln(w) - gammaln(js + 1.0) - gammaln(w - js)
		+ gammaln(js + 2.0)
		- (js + 2.0) * math.log(lam)
	)
	return float(logsumexp(log_terms))

def _g1_factorial(lam: float, w: int) -> float:
	law = PoissonLaw(lam)
	log_first = law.lam + float(gammaln(w + 1)) - (w + 1) * law.log_lam + poisson_log_cdf(law, w).log_value
	log_second = law.lam + float(gammaln(w)) - w * law.log_lam + poisson_log_cdf(law, w - 1).log_value
	sign, log_magnitude = log_diff_exp(log_first, log_second)
	return sign * math.exp(log_magnitude)

def _g1_stein_diff(lam: float, w: int) -> float:
	k = max(w + 1, math.ceil(lam))
	sol = stein_solution(lam, k, w_max = k + 2)
	return -forward_diff(sol, w, allow_series = False) / math.exp(sol.log_tail_k)

def g1(lam: Real, w: int, method: G1Method = G1Method.INTEGRAL_SERIES) -> G1Value:
	_require_positive(lam, 'stein_kernel::g1()')
	if w < 0:
		raise DomainError(f'stein_kernel::g1():: w must be >= 0, got {w}')
	method = G1Method(method)
	if w == 0:
		return G1Value(float(lam), 0, 0.0, method, Fraction(0) if method is G1Method.INTEGRAL_SERIES else None)
	if method is G1Method.INTEGRAL_SERIES:
		exact = g1_exact(lam, w)
		return G1Value(float(lam), w, float(exact), method, exact)
	if method is G1Method.FACTORIAL:
		return G1Value(float(lam), w, _g1_factorial(float(lam), w), method)
	return G1Value(float(lam), w, _g1_stein_diff(float(lam), w), method)

def verify_g1_bound(lam: Real, w_max: int) -> BoundReport:
	'''
		g1 non-negative, non-decreasing, and
		g1(w) <= 1/lambda + (w-1)!(w-lambda)_+ e^lambda/lambda^{w+1} for 1 <= w <= w_max.
	'''
	_require_positive(lam, 'stein_kernel::verify_g1_bound()')
	if w_max < 1:
		raise DomainError(f'stein_kernel::verify_g1_bound():: w_max must be >= 1, got {w_max}')
	lam_float = float(lam)
	log_lam = math.log(lam_float)
	values = [g1_exact(lam, w) for w in range(w_max + 2)]

	bound_part = BoundReport('g1-growth-bound', tolerance = FLOAT_TOLERANCE, lhs_label = 'g1', rhs_label = 'bound')
	monotone_part = BoundReport('g1-monotone', lhs_label = 'g1_w', rhs_label = 'g1_w_plus_1')
	sign_part = BoundReport('g1-positive', sense = Sense.LOWER, budget = 0.0, lhs_label = 'g1', rhs_label = 'unit')
	for w in range(1, w_max + 1):
		excess = w - lam_float
		rhs = 1.0 / lam_float
		if excess > 0:
			rhs += math.exp(float(gammaln(w)) + math.log(excess) + lam_float - (w + 1) * log_lam)
		params = {'lambda': lam_float, 'w': w}
		bound_part.add(params, float(values[w]), rhs)
		monotone_part.add(params, values[w], values[w + 1])
		sign_part.add(params, float(values[w]), 1.0)

	report = BoundReport('g1-properties', sub_reports = [bound_part, monotone_part, sign_part])
	report.extras = {'lambda': lam_float, 'w_max': w_max}
	_debug('verify_g1_bound', report.summary())
	return report

def verify_stein_residual(lam: float, k: int, w_max: Optional[int] = None, tolerance: float = RESIDUAL_TOLERANCE) -> BoundReport:
	sol = stein_solution(lam, k, w_max)
	report = BoundReport('stein-residual', lhs_label = 'abs_residual', rhs_label = 'tolerance')
	for w in range(1, sol.w_max):
		report.add({'lambda': sol.lam, 'k': k, 'w': w}, abs(sol.residual(w)), tolerance)
	report.extras = {'lambda': sol.lam, 'k': k, 'w_max': sol.w_max, 'f_0_equals_f_1': sol.value(0) == sol.value(1)}
	return report

def verify_stein_differences(lam: float, k: int, w_max: Optional[int] = None) -> BoundReport:
	'''
		|f(w+1) - f(w)| <= (1 - e^{-lambda})/lambda everywhere (known constant, budget 1),
		and 0 < w (f(w+1) - f(w)) <= 1 right of k: there it equals
		P(Y <= k-1) times the series bound, whose supremum is 1.
	'''
	sol = stein_solution(lam, k, w_max)
	sup_part = BoundReport('difference-sup', tolerance = FLOAT_TOLERANCE, lhs_label = 'abs_difference', rhs_label = 'bound')
	decay_part = BoundReport('difference-decay', tolerance = FLOAT_TOLERANCE, lhs_label = 'w_times_difference', rhs_label = 'unit')
	positive_part = BoundReport('difference-positive', sense = Sense.LOWER, budget = 0.0, lhs_label = 'difference', rhs_label = 'unit')
	sup_bound = -math.expm1(-sol.lam) / sol.lam
	for w in range(1, sol.w_max):
		difference = forward_diff(sol, w)
		params = {'lambda': sol.lam, 'k': k, 'w': w}
		sup_part.add(params, abs(difference), sup_bound)
		if w >= k:
			decay_part.add(params, w * difference, 1.0)
			positive_part.add(params, difference, 1.0)
	report = BoundReport('stein-differences', sub_reports = [sup_part, decay_part, positive_part])
	report.extras = {'lambda': sol.lam, 'k': k, 'fitted_decay_C': decay_part.fitted_constant}
	return report

def main():
	CURRENT_SCOPE = 'stein_kernel.py::main()::'
	sol = stein_solution(1.0, 1)
	print(f'{CURRENT_SCOPE}f(1) = {sol.value(1)}')
	for method in G1Method:
		print(f'{CURRENT_SCOPE}g1(2, 5) [{method.value}] = {g1(2.0, 5, method).value}')
	print(f'{CURRENT_SCOPE}{verify_g1_bound(3.0, 30).summary()}')

if __name__ == '__main__':
	main()
