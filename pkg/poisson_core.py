'''
Poisson mass and tail arithmetic, carried in natural-log space.

Right-tail probabilities at standardized deviations of ~10 fall below 1e-25,
so nothing here materializes a linear probability until a report asks for it.
Also hosts the two Poisson-side facts the moderate-deviation argument rests on:
the uniform series bound (`lemma41_series`) and the three tail inequalities
(`verify_lemma42`).
'''
import logging
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.special import gammaln, logsumexp

from bound_report import BoundReport
from config import GENERAL_SETTINGS, POISSON_CORE_SETTINGS, BOUND_CHECKER_SETTINGS
from errors import DomainError
from experiment_types import Sense

logger = logging.getLogger(__name__)

_IS_DEBUG_MODE = GENERAL_SETTINGS['_IS_DEBUG_MODE']
SERIES_RELATIVE_TOLERANCE = POISSON_CORE_SETTINGS['SERIES_RELATIVE_TOLERANCE']
SERIES_MAX_TERMS = POISSON_CORE_SETTINGS['SERIES_MAX_TERMS']
LEMMA42_MIN_TAIL_FLOOR = POISSON_CORE_SETTINGS['LEMMA42_MIN_TAIL_FLOOR']
FLOAT_TOLERANCE = BOUND_CHECKER_SETTINGS['FLOAT_TOLERANCE']

def _debug(method_name: str, message: str) -> None:
	if _IS_DEBUG_MODE:
		logger.debug(f'poisson_core::{method_name}()::{message}')

@dataclass(frozen = True)
class LogProb:
	log_value: float

	def __post_init__(self):
		if self.log_value > 0.0 and not math.isclose(self.log_value, 0.0, abs_tol = 1e-15):
			raise DomainError(f'LogProb::__init__():: log-probability {self.log_value} > 0')

	@property
	def prob(self) -> float:
		return math.exp(min(self.log_value, 0.0))

	@property
	def is_zero(self) -> bool:
		return self.log_value == -math.inf

@dataclass(frozen = True)
class Xi:
	value: float

@dataclass(frozen = True)
class PoissonLaw:
	lam: float

	def __post_init__(self):
		if not (self.lam > 0.0 and math.isfinite(self.lam)):
			raise DomainError(f'PoissonLaw::__init__():: mean must be a positive real, got {self.lam}')

	@property
	def log_lam(self) -> float:
		return math.log(self.lam)

	def log_pmf(self, k: int) -> float:
		if k < 0:
			return -math.inf
		return -self.lam + k * self.log_lam - float(gammaln(k + 1))

	def log_pmf_range(self, k_stop: int) -> np.ndarray:
		'''
			log P(Y = k) for k = 0 .. k_stop - 1, vectorized.
		'''
		ks = np.arange(k_stop, dtype = float)
		return -self.lam + ks * self.log_lam - gammaln(ks + 1.0)

def log_diff_exp(log_a: float, log_b: float) -> tuple[int, float]:
	'''
		Signed log-space subtraction: returns (sign, log|e^a - e^b|).

		>>> log_diff_exp(0.0, -math.inf)
		(1, 0.0)
		>>> log_diff_exp(-1.0, -1.0)
		(0, -inf)
	'''
	if log_a == log_b:
		return 0, -math.inf
	if log_a > log_b:
		return 1, log_a + math.log1p(-math.exp(log_b - log_a))
	return -1, log_b + math.log1p(-math.exp(log_a - log_b))

def _upper_tail_log_sum(law: PoissonLaw, k: int, relative_tolerance: float) -> float:
	'''
		log sum_{j >= k} P(Y = j) for k > lambda: terms decrease geometrically,
		so sum upward until a term drops below the tolerance share of the sum.
	'''
	log_terms = [law.log_pmf(k)]
	log_term = log_terms[0]
	running = log_term
	log_tolerance = math.log(relative_tolerance)
	j = k
	while len(log_terms) < SERIES_MAX_TERMS:
		j += 1
		log_term += law.log_lam - math.log(j)
		log_terms.append(log_term)
		running = np.logaddexp(running, log_term)
		if log_term - running < log_tolerance:
			break
	else:
		logger.warning(f'poisson_core::_upper_tail_log_sum():: series cap reached at lambda={law.lam}, k={k}')
	return float(logsumexp(log_terms))

def poisson_pmf(law: PoissonLaw, k: int) -> LogProb:
	'''
		log(e^{-lambda} lambda^k / k!) through log-gamma.

		>>> round(poisson_pmf(PoissonLaw(2.0), 0).log_value, 12)
		-2.0
		>>> round(poisson_pmf(PoissonLaw(1.0), 1).log_value, 12)
		-1.0
	'''
	if k < 0:
		raise DomainError(f'poisson_core::poisson_pmf():: k must be >= 0, got {k}')
	return LogProb(law.log_pmf(k))

def poisson_tail(law: PoissonLaw, k: int, relative_tolerance: float = SERIES_RELATIVE_TOLERANCE) -> LogProb:
	'''
		log P(Y >= k). Complement of the lower sum for k <= lambda, upward
		max-shifted summation for k > lambda.
	'''
	if k < 0:
		raise DomainError(f'poisson_core::poisson_tail():: k must be >= 0, got {k}')
	if k == 0:
		return LogProb(0.0)
	if k <= law.lam:
		log_lower = float(logsumexp(law.log_pmf_range(k)))
		return LogProb(math.log1p(-math.exp(log_lower)) if log_lower < 0.0 else -math.inf)
	return LogProb(min(_upper_tail_log_sum(law, k, relative_tolerance), 0.0))

def poisson_log_cdf(law: PoissonLaw, k: int) -> LogProb:
	'''
		log P(Y <= k); direct sum below the mean, complement of the tail above.
	'''
	if k < 0:
		return LogProb(-math.inf)
	if k < law.lam:
		return LogProb(min(float(logsumexp(law.log_pmf_range(k + 1))), 0.0))
	log_tail = poisson_tail(law, k + 1).log_value
	return LogProb(math.log1p(-math.exp(log_tail)))

def xi_of(law: PoissonLaw, k: int) -> Xi:
	'''
		Standardized deviation (k - lambda)/sqrt(lambda), right tail only.

		>>> xi_of(PoissonLaw(4.0), 8).value
		2.0
	'''
	if k < law.lam:
		raise DomainError(f'poisson_core::xi_of():: right-tail only, k={k} < lambda={law.lam}')
	return Xi((k - law.lam) / math.sqrt(law.lam))

def lemma41_terms(lam: float, w: int, relative_tolerance: float = SERIES_RELATIVE_TOLERANCE) -> float:
	'''
		sum_{j >= 0} lambda^j w! (j+1)/(j+w+1)! by the term recurrence
		t_0 = 1/(w+1), t_{j+1} = t_j lambda (j+2)/((j+1)(j+w+2)),
		without the w >= lambda check (the Stein difference series needs w < lambda too).
	'''
	term = 1.0 / (w + 1)
	total = term
	j = 0
	previous = term
	while j < SERIES_MAX_TERMS:
		term *= lam * (j + 2) / ((j + 1) * (j + w + 2))
		j += 1
		total += term
		if term < relative_tolerance * total and term <= previous:
			break
		previous = term
	else:
		logger.warning(f'poisson_core::lemma41_terms():: series cap reached at lambda={lam}, w={w}')
	return total

def lemma41_series(law: PoissonLaw, w: int, relative_tolerance: float = SERIES_RELATIVE_TOLERANCE) -> float:
	'''
		The uniformly bounded series for integer w >= lambda.

		>>> round(lemma41_series(PoissonLaw(1.0), 1), 12)
		1.0
	'''
	if w < law.lam or w < 1:
		raise DomainError(f'poisson_core::lemma41_series():: needs integer w >= lambda > 0, got w={w}, lambda={law.lam}')
	return lemma41_terms(law.lam, w, relative_tolerance)

def lemma41_supremum(lambdas: Iterable[float], w_max: int) -> BoundReport:
	'''
		Empirical uniform constant of the series over {(lambda, w): lambda <= w <= w_max},
		judged against 1: the series is increasing in lambda and equals 1 at lambda = w.
	'''
	report = BoundReport('series-uniform-bound', tolerance = FLOAT_TOLERANCE, lhs_label = 'series', rhs_label = 'unit')
	for lam in lambdas:
		law = PoissonLaw(float(lam))
		for w in range(max(1, math.ceil(lam)), w_max + 1):
			report.add({'lambda': float(lam), 'w': w}, lemma41_series(law, w), 1.0)
	report.extras['fitted_sup'] = report.fitted_constant
	_debug('lemma41_supremum', f'fitted sup {report.fitted_constant} at {report.worst_point}')
	return report

def _slack(part: BoundReport) -> float:
	'''
		Distance of the fitted constant from the budget, positive when the part holds.
	'''
	if part.sense is Sense.UPPER:
		return part.budget - part.fitted_constant
	return part.fitted_constant - part.budget

def verify_lemma42(law: PoissonLaw, k_max: int) -> BoundReport:
	'''
		The three Poisson tail facts, each as its own part:
		- lower-tail-floor: P(Y >= k) >= c for k < lambda (fitted c = min tail)
		- tail-ratio: P(Y >= k)/P(Y >= k-1) >= lambda/(lambda+k), 1 <= k <= k_max
		- tail-vs-mass: P(Y >= k) <= P(Y = k)(k+1)/(k-lambda+1), k > lambda - 1
	'''
	if k_max < 1:
		raise DomainError(f'poisson_core::verify_lemma42():: k_max must be >= 1, got {k_max}')
	lam = law.lam
	floor_part = BoundReport('lower-tail-floor', sense = Sense.LOWER, budget = LEMMA42_MIN_TAIL_FLOOR,
		lhs_label = 'tail', rhs_label = 'unit')
	ratio_part = BoundReport('tail-ratio', tolerance = FLOAT_TOLERANCE,
		lhs_label = 'lambda_over_lambda_plus_k', rhs_label = 'tail_ratio')
	mass_part = BoundReport('tail-vs-mass', tolerance = FLOAT_TOLERANCE,
		lhs_label = 'tail', rhs_label = 'mass_bound')

	log_tails = [poisson_tail(law, k).log_value for k in range(k_max + 1)]
	for k in range(0, min(k_max + 1, math.ceil(lam))):
		if k < lam:
			floor_part.add({'lambda': lam, 'k': k}, math.exp(log_tails[k]), 1.0)
	for k in range(1, k_max + 1):
		tail_ratio = math.exp(log_tails[k] - log_tails[k - 1])
		ratio_part.add({'lambda': lam, 'k': k}, lam / (lam + k), tail_ratio)
		if k > lam - 1:
			# compare in log space, then map back to a ratio so tiny tails stay comparable
			log_bound = law.log_pmf(k) + math.log((k + 1) / (k - lam + 1))
			mass_part.add({'lambda': lam, 'k': k}, math.exp(log_tails[k] - log_bound), 1.0)

	report = BoundReport('poisson-tail-facts', sub_reports = [floor_part, ratio_part, mass_part])
	report.extras = {
		'lambda': lam,
		'k_max': k_max,
		'fitted_c': floor_part.fitted_constant if floor_part.rows else None,
		'worst_slack': {part.inequality_id: _slack(part) for part in (floor_part, ratio_part, mass_part) if part.rows},
	}
	_debug('verify_lemma42', report.summary())
	return report

def main():
	CURRENT_SCOPE = 'poisson_core.py::main()::'
	law = PoissonLaw(5.0)
	print(f'{CURRENT_SCOPE}log P(Y >= 15) = {poisson_tail(law, 15).log_value}')
	print(f'{CURRENT_SCOPE}series(lambda=1, w=1) = {lemma41_series(PoissonLaw(1.0), 1)}')
	print(f'{CURRENT_SCOPE}{verify_lemma42(PoissonLaw(6.5), 40).summary()}')

if __name__ == '__main__':
	main()
