'''
Exact laws of W for the three applications: independent trials with
probabilities p_i, 2-runs on a cycle, and fixed points of a uniform permutation.

All laws are carried in exact rationals (Python big ints); floats only appear
at the reporting boundary. Success probabilities are kept as integer ratios
a/b so dynamic programs run on integer polynomials and divide once at the end.
The 2-runs model also has a float transfer matrix for n above the exact limit;
laws built that way are flagged `exact = False`.
'''
import itertools
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Optional, Sequence, Union

import numpy as np

from bound_report import to_jsonable
from config import GENERAL_SETTINGS, EXACT_MODEL_SETTINGS, RunMode
from errors import DomainError, ExactModeLimitError
from experiment_types import ApplicationModel
from poisson_core import LogProb

logger = logging.getLogger(__name__)

_IS_DEBUG_MODE = GENERAL_SETTINGS['_IS_DEBUG_MODE']
TWO_RUNS_EXACT_LIMIT = EXACT_MODEL_SETTINGS['TWO_RUNS_EXACT_LIMIT']
TWO_RUNS_MIN_N = EXACT_MODEL_SETTINGS['TWO_RUNS_MIN_N']
MATCHING_ENUMERATION_LIMIT = EXACT_MODEL_SETTINGS['MATCHING_ENUMERATION_LIMIT']
INDEPENDENCE_ENUMERATION_LIMIT = EXACT_MODEL_SETTINGS['INDEPENDENCE_ENUMERATION_LIMIT']

Number = Union[int, float, str, Fraction]
Mass = Union[Fraction, float]

def as_fraction(value: Number) -> Fraction:
	'''
		Floats go through their shortest repr so 0.05 becomes 1/20,
		not the 56-bit binary expansion.

		>>> as_fraction(0.05)
		Fraction(1, 20)
		>>> as_fraction('1/3')
		Fraction(1, 3)
	'''
	if isinstance(value, float):
		return Fraction(repr(value))
	return Fraction(value)

def log_of(value: Mass) -> float:
	'''
		Natural log of a non-negative rational or float; -inf at zero.
		Big numerators and denominators are logged separately so tiny rationals
		never underflow.
	'''
	if value == 0:
		return -math.inf
	if isinstance(value, Fraction):
		return math.log(value.numerator) - math.log(value.denominator)
	return math.log(value)

@dataclass(frozen = True)
class ExactLaw:
	model: str
	params: dict
	masses: tuple
	exact: bool = True

	@property
	def w_max(self) -> int:
		return len(self.masses) - 1

	@cached_property
	def tails(self) -> tuple:
		'''
			tails[k] = P(W >= k) for k = 0 .. w_max + 1.
		'''
		running = Fraction(0) if self.exact else 0.0
		out = [running]
		for mass in reversed(self.masses):
			running = running + mass
			out.append(running)
		return tuple(reversed(out))

	@cached_property
	def total(self) -> Mass:
		return self.tails[0]

	@cached_property
	def mean(self) -> Mass:
		return law_expectation(self, lambda w: w)

	@cached_property
	def float_masses(self) -> np.ndarray:
		return np.array([float(mass) for mass in self.masses])

	def pmf(self, w: int) -> Mass:
		if 0 <= w <= self.w_max:
			return self.masses[w]
		return Fraction(0) if self.exact else 0.0

	def tail(self, k: int) -> Mass:
		if k <= 0:
			return self.tails[0]
		if k > self.w_max:
			return Fraction(0) if self.exact else 0.0
		return self.tails[k]

	def to_dict(self) -> dict:
		return {
			'model': self.model,
			'params': self.params,
			'exact': self.exact,
			'support': [0, self.w_max],
			'masses': [to_jsonable(mass) if self.exact else float(mass) for mass in self.masses],
			'mean': to_jsonable(self.mean) if self.exact else float(self.mean),
		}

def law_tail(law: ExactLaw, k: int) -> LogProb:
	'''
		Exact P(W >= k), emitted in log space.

		>>> round(law_tail(matching_law(MatchingModel(4)), 1).prob, 12) == 0.625
		True
	'''
	if k < 0:
		raise DomainError(f'exact_models::law_tail():: k must be >= 0, got {k}')
	return LogProb(min(log_of(law.tail(k)), 0.0))

def law_expectation(law: ExactLaw, g: Callable[[int], Mass]) -> Mass:
	'''
		E g(W) over the support; exact when the law and g are.

		>>> law_expectation(matching_law(MatchingModel(5)), lambda w: w * (w - 1))
		Fraction(1, 1)
	'''
	start = Fraction(0) if law.exact else 0.0
	return sum((g(w) * mass for w, mass in enumerate(law.masses) if mass != 0), start)

class IndicatorSumModel:
	'''
		W = sum of indicators. Subclasses provide the law of W and, for the
		dependence checks, the joint law of the indicator vector.
	'''
	kind: ApplicationModel = None

	def __init__(self, _is_debug_mode: bool = _IS_DEBUG_MODE):
		self._is_debug_mode = _is_debug_mode

	def _debug(self, method_name: str, message: str) -> None:
		if self._is_debug_mode:
			logger.debug(f'{type(self).__name__}::{method_name}()::{message}')

	@property
	def n(self) -> int:
		raise NotImplementedError

	@property
	def lam(self) -> Fraction:
		raise NotImplementedError

	@property
	def is_independent_family(self) -> bool:
		return False

	def params(self) -> dict:
		raise NotImplementedError

	def law(self) -> ExactLaw:
		raise NotImplementedError

	def indicator_joint(self) -> tuple[dict, int]:
		'''
			Joint law of (X_0, ..., X_{n-1}) as integer weights over indicator
			vectors plus their common denominator.
		'''
		raise NotImplementedError

	def __repr__(self) -> str:
		return f'{type(self).__name__}({self.params()})'

class PoissonBinomialModel(IndicatorSumModel):
	kind = ApplicationModel.PBT

	def __init__(self, p: Sequence[Number], _is_debug_mode: bool = _IS_DEBUG_MODE):
		super().__init__(_is_debug_mode)
		self.p = tuple(as_fraction(p_i) for p_i in p)
		if not self.p:
			raise DomainError('PoissonBinomialModel::__init__():: need at least one indicator')
		if any(p_i < 0 or p_i > 1 for p_i in self.p):
			raise DomainError(f'PoissonBinomialModel::__init__():: probabilities must lie in [0, 1], got {p}')
		if self.lam <= 0:
			raise DomainError('PoissonBinomialModel::__init__():: lambda = sum p_i must be > 0')

	@classmethod
	def iid(cls, n: int, p: Number) -> 'PoissonBinomialModel':
		return cls([as_fraction(p)] * n)

	@property
	def n(self) -> int:
		return len(self.p)

	@cached_property
	def lam(self) -> Fraction:
		return sum(self.p, Fraction(0))

	@property
	def p_tilde(self) -> Fraction:
		return max(self.p)

	@property
	def is_identical(self) -> bool:
		return all(p_i == self.p[0] for p_i in self.p)

	@property
	def is_independent_family(self) -> bool:
		return True

	def params(self) -> dict:
		if self.is_identical:
			return {'n': self.n, 'p': self.p[0]}
		return {'n': self.n, 'p': list(self.p)}

	def law(self) -> ExactLaw:
		return pbt_law(self)

	def indicator_joint(self) -> tuple[dict, int]:
		if self.n > INDEPENDENCE_ENUMERATION_LIMIT:
			raise ExactModeLimitError(f'PoissonBinomialModel::indicator_joint():: n={self.n} above enumeration limit {INDEPENDENCE_ENUMERATION_LIMIT}')
		scale = math.prod(p_i.denominator for p_i in self.p)
		joint = {}
		for bits in itertools.product((0, 1), repeat = self.n):
			weight = Fraction(1)
			for bit, p_i in zip(bits, self.p):
				weight *= p_i if bit else 1 - p_i
			joint[bits] = int(weight * scale)
		return joint, scale

class TwoRunsModel(IndicatorSumModel):
	'''
		X_i = xi_i xi_{i+1} on a cycle of n i.i.d. Bernoulli(p); lambda = n p^2.
		The moderate-deviation statements assume n > 10 and p < 1/2
		(`meets_hypotheses`); smaller cycles stay constructible for oracles.
	'''
	kind = ApplicationModel.TWO_RUNS

	def __init__(self, n: int, p: Number, _is_debug_mode: bool = _IS_DEBUG_MODE):
		super().__init__(_is_debug_mode)
		self._n = int(n)
		self.p = as_fraction(p)
		if self._n < 3:
			raise DomainError(f'TwoRunsModel::__init__():: need n >= 3 for a cycle, got {n}')
		if not 0 < self.p < 1:
			raise DomainError(f'TwoRunsModel::__init__():: p must lie in (0, 1), got {p}')

	@property
	def n(self) -> int:
		return self._n

	@property
	def lam(self) -> Fraction:
		return self._n * self.p ** 2

	@property
	def meets_hypotheses(self) -> bool:
		return self._n >= TWO_RUNS_MIN_N and self.p < Fraction(1, 2)

	def require_hypotheses(self, scope: str) -> None:
		if not self.meets_hypotheses:
			raise DomainError(f'{scope}:: 2-runs statements need n > 10 and p < 1/2, got n={self.n}, p={self.p}')

	def params(self) -> dict:
		return {'n': self.n, 'p': self.p}

	def weights(self, mode: RunMode) -> tuple:
		'''
			(one-weight, zero-weight, scale) per bit: integers with scale b for
			p = a/b in exact mode, (p, 1-p, 1) in float mode.
		'''
		if mode is RunMode.EXACT:
			return self.p.numerator, self.p.denominator - self.p.numerator, self.p.denominator
		return float(self.p), 1.0 - float(self.p), 1

	def law(self) -> ExactLaw:
		mode = RunMode.EXACT if self.n <= TWO_RUNS_EXACT_LIMIT else RunMode.FLOAT
		return two_runs_law(self, mode = mode)

	def indicator_joint(self) -> tuple[dict, int]:
		if self.n > INDEPENDENCE_ENUMERATION_LIMIT:
			raise ExactModeLimitError(f'TwoRunsModel::indicator_joint():: n={self.n} above enumeration limit {INDEPENDENCE_ENUMERATION_LIMIT}')
		one, zero, scale = self.weights(RunMode.EXACT)
		joint = defaultdict(int)
		for bits in itertools.product((0, 1), repeat = self.n):
			ones = sum(bits)
			indicators = tuple(bits[i] & bits[(i + 1) % self.n] for i in range(self.n))
			joint[indicators] += one ** ones * zero ** (self.n - ones)
		return dict(joint), scale ** self.n

class MatchingModel(IndicatorSumModel):
	kind = ApplicationModel.MATCHING

	def __init__(self, n: int, _is_debug_mode: bool = _IS_DEBUG_MODE):
		super().__init__(_is_debug_mode)
		self._n = int(n)
		if self._n < 1:
			raise DomainError(f'MatchingModel::__init__():: need n >= 1, got {n}')

	@property
	def n(self) -> int:
		return self._n

	@property
	def lam(self) -> Fraction:
		return Fraction(1)

	def params(self) -> dict:
		return {'n': self.n}

	def law(self) -> ExactLaw:
		return matching_law(self)

	def indicator_joint(self) -> tuple[dict, int]:
		if self.n > MATCHING_ENUMERATION_LIMIT:
			raise ExactModeLimitError(f'MatchingModel::indicator_joint():: n={self.n} above enumeration limit {MATCHING_ENUMERATION_LIMIT}')
		joint = defaultdict(int)
		for permutation in itertools.permutations(range(self.n)):
			joint[tuple(int(permutation[i] == i) for i in range(self.n))] += 1
		return dict(joint), math.factorial(self.n)

def binomial_law(n: int, p: Number) -> ExactLaw:
	p = as_fraction(p)
	one, zero, scale = p.numerator, p.denominator - p.numerator, p.denominator
	denominator = scale ** n
	masses = tuple(Fraction(math.comb(n, k) * one ** k * zero ** (n - k), denominator) for k in range(n + 1))
	return ExactLaw('binomial', {'n': n, 'p': p}, masses)

def pbt_polynomial(model: PoissonBinomialModel, closed_form: bool = True) -> tuple[np.ndarray, int]:
	'''
		Integer coefficients c_w and denominator D with P(W = w) = c_w / D,
		from prod_i ((b_i - a_i) + a_i x) over prod_i b_i.
	'''
	if closed_form and model.is_identical:
		p = model.p[0]
		one, zero = p.numerator, p.denominator - p.numerator
		coefficients = np.array([math.comb(model.n, k) * one ** k * zero ** (model.n - k) for k in range(model.n + 1)], dtype = object)
		return coefficients, p.denominator ** model.n
	coefficients = np.array([1], dtype = object)
	denominator = 1
	for p_i in model.p:
		one, zero = p_i.numerator, p_i.denominator - p_i.numerator
		step = np.zeros(len(coefficients) + 1, dtype = object)
		step[:-1] += coefficients * zero
		step[1:] += coefficients * one
		coefficients = step
		denominator *= p_i.denominator
	return coefficients, denominator

def remove_trial(coefficients: np.ndarray, denominator: int, p_i: Fraction) -> tuple[np.ndarray, int]:
	'''
		Exact division of the integer polynomial by one trial factor
		(b - a) + a x, giving the law of W with that trial left out.

		>>> quotient, denominator = remove_trial(*pbt_polynomial(PoissonBinomialModel(['1/2', '1/3'])), Fraction(1, 3))
		>>> [Fraction(int(c), denominator) for c in quotient]
		[Fraction(1, 2), Fraction(1, 2)]
	'''
	one, zero = p_i.numerator, p_i.denominator - p_i.numerator
	quotient = np.zeros(len(coefficients) - 1, dtype = object)
	if zero == 0:
		quotient[:] = [int(c) // one for c in coefficients[1:]]
	else:
		carry = 0
		for j in range(len(quotient)):
			quotient[j] = (int(coefficients[j]) - one * carry) // zero
			carry = quotient[j]
	return quotient, denominator // p_i.denominator

def pbt_law(model: PoissonBinomialModel, method: str = 'auto') -> ExactLaw:
	'''
		Sequential convolution over the indicators on integer polynomials
		prod_i ((b_i - a_i) + a_i x), divided once by prod_i b_i.
		`method='auto'` takes the binomial closed form when all p_i agree.
	'''
	if method not in ('auto', 'dp', 'binomial'):
		raise DomainError(f'exact_models::pbt_law():: unknown method {method!r}')
	if method == 'binomial' or (method == 'auto' and model.is_identical):
		if not model.is_identical:
			raise DomainError('exact_models::pbt_law():: binomial form needs identical p_i')
		law = binomial_law(model.n, model.p[0])
		return ExactLaw(ApplicationModel.PBT.value, model.params(), law.masses)

	coefficients, denominator = pbt_polynomial(model, closed_form = False)
	masses = tuple(Fraction(int(coefficient), denominator) for coefficient in coefficients)
	model._debug('pbt_law', f'n={model.n}, lambda={model.lam}')
	return ExactLaw(ApplicationModel.PBT.value, model.params(), masses)

def _shift(poly: np.ndarray, by: int) -> np.ndarray:
	if by == 0:
		return poly
	shifted = np.zeros_like(poly)
	shifted[by:] = poly[:-by]
	return shifted

def two_runs_law(model: TwoRunsModel, mode: RunMode = RunMode.EXACT, reverse: bool = False) -> ExactLaw:
	'''
		Univariate transfer matrix M[a][b] = weight(b) x^{ab}; the law of W is
		trace(M^n) / scale^n. `reverse` applies M to column vectors instead of
		row vectors, i.e. walks the cycle the other way round.
	'''
	mode = RunMode(mode)
	n = model.n
	if mode is RunMode.EXACT and n > TWO_RUNS_EXACT_LIMIT:
		raise ExactModeLimitError(f'exact_models::two_runs_law():: n={n} above exact limit {TWO_RUNS_EXACT_LIMIT}; use float mode')
	one, zero, scale = model.weights(mode)
	weight = (zero, one)
	dtype = object if mode is RunMode.EXACT else float
	trace = np.zeros(n + 1, dtype = dtype)
	for start in (0, 1):
		vector = [np.zeros(n + 1, dtype = dtype) for _ in (0, 1)]
		vector[start][0] = 1
		for _ in range(n):
			if reverse:
				vector = [
					weight[0] * vector[0] + weight[1] * _shift(vector[1], a)
					for a in (0, 1)
				]
			else:
				vector = [
					weight[b] * (vector[0] + _shift(vector[1], b))
					for b in (0, 1)
				]
		trace = trace + vector[start]
	if mode is RunMode.EXACT:
		denominator = scale ** n
		masses = tuple(Fraction(int(count), denominator) for count in trace)
	else:
		masses = tuple(float(mass) for mass in trace)
	model._debug('two_runs_law', f'n={n}, mode={mode.value}, reverse={reverse}')
	return ExactLaw(ApplicationModel.TWO_RUNS.value, model.params(), masses, exact = mode is RunMode.EXACT)

@dataclass(frozen = True)
class JointLaw2Runs:
	'''
		Law of (W, T): W counts 2-runs, T = sum xi_i xi_{i+1} xi_{i+2} counts
		adjacent pairs of 2-runs, so the neighbourhood co-occurrence sum equals 2T.
	'''
	n: int
	p: Fraction
	masses: dict			# (w, t) -> mass
	exact: bool = True

	def marginal(self) -> ExactLaw:
		zero = Fraction(0) if self.exact else 0.0
		masses = [zero] * (self.n + 1)
		for (w, _), mass in self.masses.items():
			masses[w] += mass
		return ExactLaw(ApplicationModel.TWO_RUNS.value, {'n': self.n, 'p': self.p}, tuple(masses), exact = self.exact)

	def conditional_expectation_t(self, w: int) -> Optional[Mass]:
		'''
			E(T | W = w); None when P(W = w) = 0.
		'''
		zero = Fraction(0) if self.exact else 0.0
		weight = sum((mass for (w_, _), mass in self.masses.items() if w_ == w), zero)
		if weight == 0:
			return None
		return sum((t * mass for (w_, t), mass in self.masses.items() if w_ == w), zero) / weight

	def to_dict(self) -> dict:
		return {
			'model': 'two_runs_joint',
			'params': {'n': self.n, 'p': self.p},
			'exact': self.exact,
			'masses': [
				{'w': w, 't': t, 'mass': to_jsonable(mass) if self.exact else float(mass)}
				for (w, t), mass in sorted(self.masses.items())
			],
		}

def two_runs_joint(model: TwoRunsModel, mode: RunMode = RunMode.EXACT) -> JointLaw2Runs:
	'''
		Sweep xi_3 .. xi_n with state (xi_{i-1}, xi_i) carrying a bivariate
		polynomial in (w, t); xi_1, xi_2 are fixed per sweep and matched against
		the final state to close the cycle.
	'''
	mode = RunMode(mode)
	n = model.n
	if mode is RunMode.EXACT and n > TWO_RUNS_EXACT_LIMIT:
		raise ExactModeLimitError(f'exact_models::two_runs_joint():: n={n} above exact limit {TWO_RUNS_EXACT_LIMIT}; use float mode')
	one, zero, scale = model.weights(mode)
	weight = (zero, one)
	total = defaultdict(int if mode is RunMode.EXACT else float)

	for first, second in itertools.product((0, 1), repeat = 2):
		states = {(first, second): {(first * second, 0): weight[first] * weight[second]}}
		for _ in range(3, n + 1):
			advanced = defaultdict(lambda: defaultdict(int if mode is RunMode.EXACT else float))
			for (previous, current), poly in states.items():
				for bit in (0, 1):
					dw = current * bit
					dt = previous * current * bit
					target = advanced[(current, bit)]
					for (w, t), mass in poly.items():
						target[(w + dw, t + dt)] += mass * weight[bit]
			states = advanced
		for (previous, last), poly in states.items():
			# wrap-around: pair (xi_n, xi_1), triples (xi_{n-1}, xi_n, xi_1) and (xi_n, xi_1, xi_2)
			dw = last * first
			dt = previous * last * first + last * first * second
			for (w, t), mass in poly.items():
				total[(w + dw, t + dt)] += mass

	if mode is RunMode.EXACT:
		denominator = scale ** n
		masses = {key: Fraction(count, denominator) for key, count in total.items() if count}
	else:
		masses = {key: float(mass) for key, mass in total.items() if mass}
	model._debug('two_runs_joint', f'n={n}, support size={len(masses)}')
	return JointLaw2Runs(n, model.p, masses, exact = mode is RunMode.EXACT)

def derangement_numbers(n: int) -> list[int]:
	'''
		D_0 .. D_n from D_m = (m-1)(D_{m-1} + D_{m-2}).

		>>> derangement_numbers(5)
		[1, 0, 1, 2, 9, 44]
	'''
	numbers = [1, 0]
	for m in range(2, n + 1):
		numbers.append((m - 1) * (numbers[m - 1] + numbers[m - 2]))
	return numbers[:n + 1]

def matching_law(model: MatchingModel) -> ExactLaw:
	'''
		Rencontres law P(W = k) = C(n, k) D_{n-k} / n!.
	'''
	n = model.n
	derangements = derangement_numbers(n)
	factorial = math.factorial(n)
	masses = tuple(Fraction(math.comb(n, k) * derangements[n - k], factorial) for k in range(n + 1))
	return ExactLaw(ApplicationModel.MATCHING.value, model.params(), masses)

@dataclass
class DeltaConditionTable:
	n: int
	p: Fraction
	theta: int
	entries: dict = field(default_factory = dict)		# w -> delta(w) or None when P(W = w) = 0
	exact: bool = True

	@property
	def undefined(self) -> list[int]:
		return [w for w, value in self.entries.items() if value is None]

	@property
	def delta_star(self) -> Optional[Mass]:
		defined = [value for value in self.entries.values() if value is not None]
		return max(defined) if defined else None

	@property
	def fitted_C(self) -> Optional[float]:
		'''
			delta* against the C/(np) shape, i.e. delta* n p.
		'''
		if self.delta_star is None:
			return None
		return float(self.delta_star) * self.n * float(self.p)

	def to_dict(self) -> dict:
		return {
			'n': self.n,
			'p': self.p,
			'theta': self.theta,
			'exact': self.exact,
			'delta': {str(w): (None if value is None else float(value)) for w, value in sorted(self.entries.items())},
			'undefined': self.undefined,
			'delta_star': None if self.delta_star is None else float(self.delta_star),
			'fitted_C': self.fitted_C,
		}

def delta_condition_2runs(model: TwoRunsModel, theta: int, joint: Optional[JointLaw2Runs] = None) -> DeltaConditionTable:
	'''
		delta(w) = E(2T | W = w)/w^2 for w in 1 .. theta within the support;
		unattainable w are marked undefined and left out of delta*.
	'''
	if theta < 1:
		raise DomainError(f'exact_models::delta_condition_2runs():: theta must be >= 1, got {theta}')
	if joint is None:
		mode = RunMode.EXACT if model.n <= TWO_RUNS_EXACT_LIMIT else RunMode.FLOAT
		joint = two_runs_joint(model, mode = mode)
	table = DeltaConditionTable(model.n, model.p, theta, exact = joint.exact)
	for w in range(1, min(theta, model.n) + 1):
		mean_t = joint.conditional_expectation_t(w)
		table.entries[w] = None if mean_t is None else 2 * mean_t / w ** 2
	model._debug('delta_condition_2runs', f'delta*={table.delta_star}, undefined={table.undefined}')
	return table

def main():
	CURRENT_SCOPE = 'exact_models.py::main()::'
	print(f'{CURRENT_SCOPE}matching n=4: {[str(mass) for mass in matching_law(MatchingModel(4)).masses]}')
	print(f'{CURRENT_SCOPE}pbt (0.1, 0.2, 0.3): P(W=0) = {pbt_law(PoissonBinomialModel([0.1, 0.2, 0.3])).pmf(0)}')
	model = TwoRunsModel(12, Fraction(1, 4))
	print(f'{CURRENT_SCOPE}2-runs n=12: E W = {two_runs_law(model).mean} (n p^2 = {model.lam})')
	print(f'{CURRENT_SCOPE}delta table: {delta_condition_2runs(model, 4).to_dict()}')

if __name__ == '__main__':
	main()
