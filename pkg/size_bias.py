'''
Size-bias couplings and their Delta = W + 1 - W^s statistics.

Exact joint laws of (W, Delta) for independent trials (leave-one-out
polynomial division) and for fixed points of a permutation (enumeration with
the transposition rule), a Monte Carlo sampler for the permutation coupling,
and the total-variation bound (1 - e^{-lambda}) E|W + 1 - W^s|.
'''
import itertools
import logging
import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from bound_report import BoundReport
from config import GENERAL_SETTINGS, SIZE_BIAS_SETTINGS, BOUND_CHECKER_SETTINGS, EXACT_MODEL_SETTINGS
from errors import DomainError, ExactModeLimitError
from exact_models import (ExactLaw, IndicatorSumModel, MatchingModel, PoissonBinomialModel,
	derangement_numbers, law_expectation, pbt_polynomial, remove_trial)
from experiment_types import ApplicationModel
from poisson_core import PoissonLaw, poisson_tail

logger = logging.getLogger(__name__)

_IS_DEBUG_MODE = GENERAL_SETTINGS['_IS_DEBUG_MODE']
DEFAULT_WORKERS = GENERAL_SETTINGS['DEFAULT_WORKERS']
MONTE_CARLO_BATCH = SIZE_BIAS_SETTINGS['MONTE_CARLO_BATCH']
IDENTITY_TEST_DEGREE = SIZE_BIAS_SETTINGS['IDENTITY_TEST_DEGREE']
FLOAT_TOLERANCE = BOUND_CHECKER_SETTINGS['FLOAT_TOLERANCE']
MATCHING_ENUMERATION_LIMIT = EXACT_MODEL_SETTINGS['MATCHING_ENUMERATION_LIMIT']

DELTA_VALUES = (-1, 0, 1)
MAX_SEED = 2 ** 64

def _debug(method_name: str, message: str) -> None:
	if _IS_DEBUG_MODE:
		logger.debug(f'size_bias::{method_name}()::{message}')

@dataclass(frozen = True)
class CouplingStats:
	lam: float
	e_abs_diff: float
	delta1: float
	delta2: float
	p_plus: float
	p_minus: float
	n_samples: Optional[int] = None		# None for exact laws
	se_e_abs_diff: float = 0.0
	se_delta1: float = 0.0
	se_delta2: float = 0.0
	se_p_plus: float = 0.0
	se_p_minus: float = 0.0
	seed: Optional[int] = None
	workers: Optional[int] = None

	def to_dict(self) -> dict:
		return {
			'lambda': self.lam,
			'e_abs_diff': self.e_abs_diff,
			'delta1': self.delta1,
			'delta2': self.delta2,
			'p_plus': self.p_plus,
			'p_minus': self.p_minus,
			'n_samples': self.n_samples,
			'se_e_abs_diff': self.se_e_abs_diff,
			'se_delta1': self.se_delta1,
			'se_delta2': self.se_delta2,
			'se_p_plus': self.se_p_plus,
			'se_p_minus': self.se_p_minus,
			'seed': self.seed,
			'workers': self.workers,
		}

@dataclass(frozen = True)
class DeltaLaw:
	'''
		Joint law of (W, Delta) as {(w, d): mass}, d in {-1, 0, 1}.
	'''
	model: str
	params: dict
	lam: Fraction
	n: int
	masses: dict
	analytic: dict = field(default_factory = dict)		# delta constants stated for the model, if any

	def marginal(self) -> ExactLaw:
		masses = [Fraction(0)] * (self.n + 1)
		for (w, _), mass in self.masses.items():
			masses[w] += mass
		return ExactLaw(self.model, self.params, tuple(masses))

	def ws_law(self) -> ExactLaw:
		'''
			Law of W^s = W + 1 - Delta.
		'''
		masses = [Fraction(0)] * (self.n + 1)
		for (w, d), mass in self.masses.items():
			masses[w + 1 - d] += mass
		return ExactLaw(f'{self.model}_size_biased', self.params, tuple(masses))

	def delta_marginal(self) -> dict:
		out = {d: Fraction(0) for d in DELTA_VALUES}
		for (_, d), mass in self.masses.items():
			out[d] += mass
		return out

	@property
	def support_ok(self) -> bool:
		return all(d in DELTA_VALUES for _, d in self.masses)

	def conditional(self, d: int, w: int) -> Optional[Fraction]:
		'''
			P(Delta = d | W = w); None for unattainable w.
		'''
		weight = sum((mass for (w_, _), mass in self.masses.items() if w_ == w), Fraction(0))
		if weight == 0:
			return None
		return self.masses.get((w, d), Fraction(0)) / weight

	@property
	def attainable(self) -> list[int]:
		return sorted({w for (w, _), mass in self.masses.items() if mass != 0})

	@property
	def e_abs_diff(self) -> Fraction:
		return sum((abs(d) * mass for (_, d), mass in self.masses.items()), Fraction(0))

	@property
	def delta1(self) -> Fraction:
		'''
			Smallest delta_1 with P(Delta = -1 | W) <= delta_1.
		'''
		return max((self.conditional(-1, w) for w in self.attainable), default = Fraction(0))

	@property
	def delta2(self) -> Union[Fraction, float]:
		'''
			Smallest delta_2 with P(Delta = 1 | W) <= delta_2 W; inf if Delta = 1 has mass at W = 0.
		'''
		best = Fraction(0)
		for w in self.attainable:
			p_plus = self.conditional(1, w)
			if w == 0:
				if p_plus > 0:
					return math.inf
				continue
			best = max(best, p_plus / w)
		return best

	def stats(self) -> CouplingStats:
		marginal = self.delta_marginal()
		return CouplingStats(
			lam = float(self.lam),
			e_abs_diff = float(self.e_abs_diff),
			delta1 = float(self.delta1),
			delta2 = float(self.delta2),
			p_plus = float(marginal[1]),
			p_minus = float(marginal[-1]),
		)

	def to_dict(self) -> dict:
		return {
			'model': self.model,
			'params': self.params,
			'lambda': self.lam,
			'masses': [
				{'w': w, 'd': d, 'mass': mass}
				for (w, d), mass in sorted(self.masses.items()) if mass != 0
			],
			'e_abs_diff': self.e_abs_diff,
			'delta1': self.delta1,
			'delta2': self.delta2,
			'analytic': self.analytic,
		}

@dataclass(frozen = True)
class RngStream:
	'''
		Philox stream keyed by a 64-bit seed. Worker substreams start at
		counter offsets 2^128 apart, so they never overlap.
	'''
	seed: int
	worker_index: int = 0

	def __post_init__(self):
		if not 0 <= self.seed < MAX_SEED:
			raise DomainError(f'RngStream::__init__():: seed must be a 64-bit unsigned integer, got {self.seed}')

	def generator(self) -> np.random.Generator:
		return np.random.Generator(np.random.Philox(key = self.seed, counter = [0, 0, self.worker_index, 0]))

	def spawn(self, worker_index: int) -> 'RngStream':
		return RngStream(self.seed, worker_index)

def size_bias_identity_check(law_W: ExactLaw, law_Ws: ExactLaw, test_degree: int = IDENTITY_TEST_DEGREE, lam: Optional[Fraction] = None) -> BoundReport:
	'''
		E W f(W) = lambda E f(W^s) for f(w) = w^q, q = 0 .. test_degree, exactly.
		Each row carries |E W f(W) - lambda E f(W^s)| against a zero budget.
	'''
	if not (law_W.exact and law_Ws.exact):
		raise DomainError('size_bias::size_bias_identity_check():: needs exact laws')
	lam = law_W.mean if lam is None else Fraction(lam)
	report = BoundReport('size-bias-identity', budget = 0.0, lhs_label = 'abs_difference', rhs_label = 'unit')
	failing_degree = None
	for q in range(test_degree + 1):
		left = law_expectation(law_W, lambda w: Fraction(w) ** (q + 1))
		right = lam * law_expectation(law_Ws, lambda w: Fraction(w) ** q)
		difference = abs(left - right)
		report.add({'q': q}, difference, 1, note = '' if difference == 0 else 'mismatch')
		if difference != 0 and failing_degree is None:
			failing_degree = q
	report.extras = {'lambda': lam, 'test_degree': test_degree, 'failing_degree': failing_degree}
	_debug('size_bias_identity_check', f'failing degree {failing_degree}')
	return report

def _leave_one_out_laws(model: PoissonBinomialModel) -> dict:
	'''
		{p value: (multiplicity, coefficients, denominator) of W without one trial of that value}.
	'''
	coefficients, denominator = pbt_polynomial(model)
	counts = defaultdict(int)
	for p_i in model.p:
		counts[p_i] += 1
	return {
		p_i: (count,) + remove_trial(coefficients, denominator, p_i)
		for p_i, count in counts.items()
	}

def pbt_coupling_delta_law(model: PoissonBinomialModel) -> DeltaLaw:
	'''
		W^s = W - X_I + 1 with P(I = i) = p_i/lambda, so Delta = X_I:
		mass(w, 1) = sum_i (p_i/lambda) p_i P(W_{-i} = w - 1)
		mass(w, 0) = sum_i (p_i/lambda) (1 - p_i) P(W_{-i} = w)
	'''
	lam = model.lam
	masses = defaultdict(Fraction)
	for p_i, (count, quotient, denominator) in _leave_one_out_laws(model).items():
		pick = count * p_i / lam
		if pick == 0:
			continue
		for w, coefficient in enumerate(quotient):
			mass = Fraction(int(coefficient), denominator)
			if mass == 0:
				continue
			masses[(w + 1, 1)] += pick * p_i * mass
			masses[(w, 0)] += pick * (1 - p_i) * mass
	masses = {key: mass for key, mass in masses.items() if mass != 0}
	model._debug('pbt_coupling_delta_law', f'n={model.n}, distinct p={len(set(model.p))}')
	return DeltaLaw(ApplicationModel.PBT.value, model.params(), lam, model.n, masses,
		analytic = {'delta1': Fraction(0), 'delta2': model.p_tilde / lam})

def pbt_size_bias_law(model: PoissonBinomialModel) -> ExactLaw:
	'''
		Law of W^s = W_{-I} + 1.
	'''
	masses = [Fraction(0)] * (model.n + 1)
	for p_i, (count, quotient, denominator) in _leave_one_out_laws(model).items():
		pick = count * p_i / model.lam
		for w, coefficient in enumerate(quotient):
			masses[w + 1] += pick * Fraction(int(coefficient), denominator)
	return ExactLaw(f'{ApplicationModel.PBT.value}_size_biased', model.params(), tuple(masses))

def size_biased_permutation(permutation: Sequence[int], i: int) -> tuple:
	'''
		pi^s from pi and the chosen index I = i: pi^s(i) = i,
		pi^s(pi^{-1}(i)) = pi(i), pi^s = pi elsewhere.

		>>> size_biased_permutation((1, 0, 2), 0)
		(0, 1, 2)
		>>> size_biased_permutation((1, 2, 0), 0)
		(0, 2, 1)
	'''
	size_biased = list(permutation)
	j = size_biased.index(i)
	size_biased[j] = permutation[i]
	size_biased[i] = i
	return tuple(size_biased)

def _fixed_points(permutation: Sequence[int]) -> int:
	return sum(1 for i, image in enumerate(permutation) if image == i)

def _two_cycle_points(permutation: Sequence[int]) -> int:
	return sum(1 for i, image in enumerate(permutation) if image != i and permutation[image] == i)

def _require_enumerable(model: MatchingModel, scope: str) -> None:
	if model.n > MATCHING_ENUMERATION_LIMIT:
		raise ExactModeLimitError(f'{scope}:: n={model.n} above enumeration limit {MATCHING_ENUMERATION_LIMIT}')

def matching_coupling_enumerate(model: MatchingModel) -> DeltaLaw:
	'''
		All n! permutations times all n choices of I, with W^s counted on the
		size-biased permutation itself.
	'''
	_require_enumerable(model, 'size_bias::matching_coupling_enumerate()')
	n = model.n
	counts = defaultdict(int)
	for permutation in itertools.permutations(range(n)):
		w = _fixed_points(permutation)
		for i in range(n):
			w_s = _fixed_points(size_biased_permutation(permutation, i))
			counts[(w, w + 1 - w_s)] += 1
	outcomes = math.factorial(n) * n
	masses = {key: Fraction(count, outcomes) for key, count in counts.items() if count}
	model._debug('matching_coupling_enumerate', f'n={n}, outcomes={outcomes}')
	return DeltaLaw(ApplicationModel.MATCHING.value, model.params(), Fraction(1), n, masses,
		analytic = {'delta1': Fraction(2, n), 'delta2': Fraction(1, n)})

def two_cycle_expectation(m: int) -> Fraction:
	'''
		E(2 a_2) for a uniform derangement of m points, m (m - 1) D_{m-2} / D_m;
		a_2 is the number of 2-cycles. Zero when m < 2.
	'''
	if m < 2:
		return Fraction(0)
	derangements = derangement_numbers(m)
	return Fraction(m * (m - 1) * derangements[m - 2], derangements[m])

def matching_two_cycle_check(model: MatchingModel) -> BoundReport:
	'''
		E(2 a_2 | W = w) by enumeration, bounded by 2 for every w. Given W = w the
		non-fixed points form a uniform derangement of n - w points, so the
		enumerated value must also equal two_cycle_expectation(n - w); any
		mismatch lands in extras['formula_mismatches'] and fails the report.
		The shortcut (n - w)/(n - w - 1) is exact only at n - w in {2, 4} and is
		listed alongside for comparison.
	'''
	_require_enumerable(model, 'size_bias::matching_two_cycle_check()')
	n = model.n
	weight = defaultdict(int)
	two_cycle_points = defaultdict(int)
	for permutation in itertools.permutations(range(n)):
		w, minus = _fixed_points(permutation), _two_cycle_points(permutation)
		weight[w] += 1
		two_cycle_points[w] += minus
	report = BoundReport('matching-two-cycles', lhs_label = 'expected_two_cycle_points', rhs_label = 'two')
	table, shortcut, mismatches = {}, {}, []
	for w in sorted(weight):
		observed = Fraction(two_cycle_points[w], weight[w])
		table[w] = observed
		shortcut[w] = Fraction(n - w, n - w - 1) if n - w >= 2 else Fraction(0)
		if observed != two_cycle_expectation(n - w):
			mismatches.append(w)
		report.add({'n': n, 'w': w}, observed, 2)
	if mismatches:
		report.add({'n': n, 'w': 'formula'}, len(mismatches), 0, note = 'derangement formula mismatch')
	report.extras = {
		'table': {str(w): value for w, value in table.items()},
		'shortcut': {str(w): value for w, value in shortcut.items()},
		'formula_mismatches': mismatches,
		'max': max(table.values()),
	}
	return report

def _sample_matching_counts(n: int, n_samples: int, rng: RngStream, batch: int) -> np.ndarray:
	'''
		Integer counts over (w, d), flattened as w * 3 + d + 1.
	'''
	generator = rng.generator()
	counts = np.zeros((n + 1) * 3, dtype = np.int64)
	identity = np.arange(n)
	remaining = n_samples
	while remaining > 0:
		size = min(batch, remaining)
		permutations = generator.permuted(np.tile(identity, (size, 1)), axis = 1)
		picks = generator.integers(0, n, size = size)
		rows = np.arange(size)
		preimages = np.argmax(permutations == picks[:, None], axis = 1)
		size_biased = permutations.copy()
		size_biased[rows, preimages] = permutations[rows, picks]
		size_biased[rows, picks] = picks
		w = (permutations == identity).sum(axis = 1)
		w_s = (size_biased == identity).sum(axis = 1)
		d = w + 1 - w_s
		counts += np.bincount(w * 3 + d + 1, minlength = counts.size)
		remaining -= size
	return counts

def _share(n_samples: int, workers: int) -> list[int]:
	base, extra = divmod(n_samples, workers)
	return [base + (1 if index < extra else 0) for index in range(workers)]

def matching_coupling_sample(model: MatchingModel, rng: RngStream, n_samples: int,
		workers: int = DEFAULT_WORKERS, batch: int = MONTE_CARLO_BATCH) -> CouplingStats:
	'''
		Monte Carlo estimates of E|Delta|, delta_1, delta_2 with standard errors.
		Samples are split over worker substreams and merged by summing counts;
		a fixed (seed, workers) pair reproduces the estimates bit for bit.
	'''
	if n_samples <= 0:
		raise DomainError(f'size_bias::matching_coupling_sample():: n_samples must be positive, got {n_samples}')
	workers = max(1, min(int(workers), n_samples))
	n = model.n
	shares = _share(n_samples, workers)
	with ThreadPoolExecutor(max_workers = workers) as pool:
		futures = [
			pool.submit(_sample_matching_counts, n, share, rng.spawn(index), batch)
			for index, share in enumerate(shares)
		]
		counts = sum((future.result() for future in futures), np.zeros((n + 1) * 3, dtype = np.int64))
	table = counts.reshape(n + 1, 3)		# columns: d = -1, 0, 1
	total = float(n_samples)

	p_minus = table[:, 0].sum() / total
	p_plus = table[:, 2].sum() / total
	e_abs = p_minus + p_plus

	delta1, se_delta1, delta2, se_delta2 = 0.0, 0.0, 0.0, 0.0
	for w in range(n + 1):
		seen = table[w].sum()
		if seen == 0:
			continue
		q_minus = table[w, 0] / seen
		if q_minus > delta1:
			delta1, se_delta1 = q_minus, math.sqrt(q_minus * (1.0 - q_minus) / seen)
		if w > 0:
			q_plus = table[w, 2] / seen
			if q_plus / w > delta2:
				delta2, se_delta2 = q_plus / w, math.sqrt(q_plus * (1.0 - q_plus) / seen) / w

	_debug('matching_coupling_sample', f'n={n}, samples={n_samples}, workers={workers}, E|Delta|={e_abs}')
	return CouplingStats(
		lam = 1.0,
		e_abs_diff = float(e_abs),
		delta1 = float(delta1),
		delta2 = float(delta2),
		p_plus = float(p_plus),
		p_minus = float(p_minus),
		n_samples = n_samples,
		se_e_abs_diff = math.sqrt(e_abs * (1.0 - e_abs) / total),
		se_delta1 = se_delta1,
		se_delta2 = se_delta2,
		se_p_plus = math.sqrt(p_plus * (1.0 - p_plus) / total),
		se_p_minus = math.sqrt(p_minus * (1.0 - p_minus) / total),
		seed = rng.seed,
		workers = workers,
	)

def coupling_delta_law(model: IndicatorSumModel) -> DeltaLaw:
	if isinstance(model, PoissonBinomialModel):
		return pbt_coupling_delta_law(model)
	if isinstance(model, MatchingModel):
		return matching_coupling_enumerate(model)
	raise DomainError(f'size_bias::coupling_delta_law():: no exact size-bias coupling for {type(model).__name__}')

def total_variation_to_poisson(law: ExactLaw, lam: float) -> float:
	'''
		1/2 sum_w |P(W = w) - P(Y = w)|, the Poisson mass beyond the support of W
		entering once through its tail.
	'''
	poisson = PoissonLaw(float(lam))
	poisson_masses = np.exp(poisson.log_pmf_range(law.w_max + 1))
	inside = np.abs(law.float_masses - poisson_masses).sum()
	beyond = poisson_tail(poisson, law.w_max + 1).prob
	return 0.5 * float(inside + beyond)

def verify_tv_bound(model: IndicatorSumModel, delta_law: Optional[DeltaLaw] = None) -> BoundReport:
	'''
		TV(L(W), Poi(lambda)) <= (1 - e^{-lambda}) E|W + 1 - W^s|.
	'''
	if delta_law is None:
		delta_law = coupling_delta_law(model)
	law = delta_law.marginal()
	lam = float(delta_law.lam)
	tv = total_variation_to_poisson(law, lam)
	bound = -math.expm1(-lam) * float(delta_law.e_abs_diff)
	report = BoundReport('tv-bound', tolerance = FLOAT_TOLERANCE, lhs_label = 'tv', rhs_label = 'coupling_bound')
	report.add(dict(model.params(), model = model.kind.value), tv, bound)
	report.extras = {'lambda': lam, 'e_abs_diff': delta_law.e_abs_diff, 'tv': tv, 'bound': bound}
	_debug('verify_tv_bound', report.summary())
	return report

def main():
	CURRENT_SCOPE = 'size_bias.py::main()::'
	model = MatchingModel(6)
	delta_law = matching_coupling_enumerate(model)
	print(f'{CURRENT_SCOPE}matching n=6 exact: {delta_law.stats().to_dict()}')
	print(f'{CURRENT_SCOPE}matching n=6 sampled: {matching_coupling_sample(model, RngStream(42), 100000).to_dict()}')
	print(f'{CURRENT_SCOPE}{verify_tv_bound(PoissonBinomialModel([0.1] * 10)).summary()}')

if __name__ == '__main__':
	main()
