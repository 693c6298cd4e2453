'''
Right-hand sides of the moderate-deviation bounds, exact left-hand sides from
`exact_models`, and the fitted absolute constants.

Every check returns a `BoundReport`. Inequalities with a known constant
(Bennett, total variation) are judged against 1; inequalities that only
promise "some absolute constant" are fitted and judged against a generous
user budget, so drift shows up as a change in the fitted value.
'''
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, NamedTuple, Optional, Sequence

from bound_report import BoundReport, stability_ratio
from config import GENERAL_SETTINGS, BOUND_CHECKER_SETTINGS, EXACT_MODEL_SETTINGS
from dependence import greedy_coloring, independence_check, residue_classes, two_runs_graph
from errors import DomainError
from exact_models import (ExactLaw, IndicatorSumModel, MatchingModel, PoissonBinomialModel, TwoRunsModel,
	as_fraction, delta_condition_2runs, law_expectation, log_of)
from experiment_types import ShapeKind
from poisson_core import PoissonLaw, poisson_tail
from size_bias import coupling_delta_law
from stein_kernel import g1_exact

logger = logging.getLogger(__name__)

_IS_DEBUG_MODE = GENERAL_SETTINGS['_IS_DEBUG_MODE']
DEFAULT_WORKERS = GENERAL_SETTINGS['DEFAULT_WORKERS']
DEFAULT_BUDGET = BOUND_CHECKER_SETTINGS['DEFAULT_BUDGET']
CONSTANT_BUDGET = BOUND_CHECKER_SETTINGS['CONSTANT_BUDGET']
FLOAT_TOLERANCE = BOUND_CHECKER_SETTINGS['FLOAT_TOLERANCE']
SMALLNESS_C = BOUND_CHECKER_SETTINGS['SMALLNESS_C']
LEMMA46_M = BOUND_CHECKER_SETTINGS['LEMMA46_M']
DELTA_THETA_DIVISOR = BOUND_CHECKER_SETTINGS['DELTA_THETA_DIVISOR']
DELTA_THETA_MIN = BOUND_CHECKER_SETTINGS['DELTA_THETA_MIN']
MONOMIAL_TEST_DEGREE = BOUND_CHECKER_SETTINGS['MONOMIAL_TEST_DEGREE']
DEFAULT_K_SPAN_SQRT = BOUND_CHECKER_SETTINGS['DEFAULT_K_SPAN_SQRT']
INDEPENDENCE_ENUMERATION_LIMIT = EXACT_MODEL_SETTINGS['INDEPENDENCE_ENUMERATION_LIMIT']

def _debug(method_name: str, message: str) -> None:
	if _IS_DEBUG_MODE:
		logger.debug(f'bound_checker::{method_name}()::{message}')

def _xi(lam: float, k: int, scope: str) -> float:
	if k < lam:
		raise DomainError(f'{scope}:: right-tail only, k={k} < lambda={lam}')
	return (k - lam) / math.sqrt(lam)

def _tail_ratio(law: ExactLaw, poisson: PoissonLaw, r: int) -> float:
	return math.exp(log_of(law.tail(r)) - poisson_tail(poisson, r).log_value)

@dataclass(frozen = True)
class EtaK:
	lam: float
	k: int
	value: float
	argmax: Optional[int]

def eta_k(law: ExactLaw, lam: float, k: int) -> EtaK:
	'''
		sup over integers lambda <= r <= k of P(W >= r)/P(Y >= r).
	'''
	lam = float(lam)
	_xi(lam, k, 'bound_checker::eta_k()')
	poisson = PoissonLaw(lam)
	best, argmax = 0.0, None
	for r in range(math.ceil(lam), k + 1):
		ratio = _tail_ratio(law, poisson, r)
		if argmax is None or ratio > best:
			best, argmax = ratio, r
	return EtaK(lam, k, best, argmax)

class Thm21Shape(NamedTuple):
	first: float
	second: float

	@property
	def total(self) -> float:
		return self.first + self.second

def thm21_rhs(m: int, p_tilde: float, delta: float, lam: float, theta: float, k: int) -> Thm21Shape:
	'''
		m^2 {p~(1+xi^2) + delta lambda (1+xi^2+xi^3/sqrt(lambda))} and
		(1 ^ 1/lambda) m^2 exp(-theta/m), both with the constants set to 1.
	'''
	lam = float(lam)
	xi = _xi(lam, k, 'bound_checker::thm21_rhs()')
	first = m ** 2 * (float(p_tilde) * (1.0 + xi ** 2) + float(delta) * lam * (1.0 + xi ** 2 + xi ** 3 / math.sqrt(lam)))
	second = min(1.0, 1.0 / lam) * m ** 2 * math.exp(-float(theta) / m)
	return Thm21Shape(first, second)

def thm23_rhs(delta1: float, delta2: float, lam: float, k: int) -> float:
	'''
		(delta_1 + delta_2 lambda)(1 + xi^2).

		>>> thm23_rhs(0.0, 0.5, 2.0, 2)
		1.0
	'''
	lam = float(lam)
	xi = _xi(lam, k, 'bound_checker::thm23_rhs()')
	return (float(delta1) + float(delta2) * lam) * (1.0 + xi ** 2)

def application_shape(model: IndicatorSumModel, k: int) -> float:
	'''
		p~(1+xi^2) for independent trials, k^2/n for matching,
		p + p xi^2 + xi^3/sqrt(n) for 2-runs.
	'''
	lam = float(model.lam)
	xi = _xi(lam, k, 'bound_checker::application_shape()')
	if isinstance(model, PoissonBinomialModel):
		return float(model.p_tilde) * (1.0 + xi ** 2)
	if isinstance(model, MatchingModel):
		return k ** 2 / model.n
	if isinstance(model, TwoRunsModel):
		p = float(model.p)
		return p + p * xi ** 2 + xi ** 3 / math.sqrt(model.n)
	raise DomainError(f'bound_checker::application_shape():: no stated shape for {type(model).__name__}')

def delta_theta(model: TwoRunsModel) -> int:
	return max(math.floor(model.n * model.p / DELTA_THETA_DIVISOR), DELTA_THETA_MIN)

def default_k_range(lam: float, w_max: int, span: float = DEFAULT_K_SPAN_SQRT) -> range:
	lam = float(lam)
	return range(math.ceil(lam), min(w_max, math.floor(lam + span * math.sqrt(lam))) + 1)

def _grid_params(model: IndicatorSumModel) -> dict:
	params = {'n': model.n}
	p = model.params().get('p')
	if p is not None and not isinstance(p, list):
		params['p'] = p
	return params

def _shape_function(model: IndicatorSumModel, shape: ShapeKind) -> tuple[Callable[[int], tuple[float, float]], dict]:
	'''
		k -> (rhs shape, value checked against the smallness constant), plus
		the constants the shape was built from.
	'''
	lam = float(model.lam)
	if shape is ShapeKind.APPLICATION:
		if isinstance(model, TwoRunsModel):
			model.require_hypotheses('bound_checker::ratio_experiment()')
		def evaluate(k):
			value = application_shape(model, k)
			return value, value
		return evaluate, {}

	if shape is ShapeKind.COUPLING:
		delta_law = coupling_delta_law(model)
		delta1, delta2 = float(delta_law.delta1), float(delta_law.delta2)
		def evaluate(k):
			value = thm23_rhs(delta1, delta2, lam, k)
			return value, value
		return evaluate, {'delta1': delta1, 'delta2': delta2}

	if isinstance(model, PoissonBinomialModel):
		m, p_tilde, delta, theta = 1, float(model.p_tilde), 0.0, model.n
	elif isinstance(model, TwoRunsModel):
		model.require_hypotheses('bound_checker::ratio_experiment()')
		theta = delta_theta(model)
		table = delta_condition_2runs(model, theta)
		m, p_tilde, delta = LEMMA46_M, float(model.p) ** 2, float(table.delta_star or 0)
	else:
		raise DomainError(f'bound_checker::ratio_experiment():: no local-dependence shape for {type(model).__name__}')
	def evaluate(k):
		parts = thm21_rhs(m, p_tilde, delta, lam, theta, k)
		return parts.total, parts.first
	return evaluate, {'m': m, 'p_tilde': p_tilde, 'delta': delta, 'theta': theta}

def ratio_experiment(model: IndicatorSumModel, k_range: Optional[Iterable[int]] = None,
		shape: ShapeKind = ShapeKind.APPLICATION, smallness_c: float = SMALLNESS_C,
		law: Optional[ExactLaw] = None) -> BoundReport:
	'''
		|P(W >= k)/P(Y >= k) - 1| against the bound shape, per k. Rows with
		P(W >= k) = 0 or outside the smallness region (shape <= c) are kept
		but excluded from the fit.
	'''
	shape = ShapeKind(shape)
	law = model.law() if law is None else law
	lam = float(model.lam)
	poisson = PoissonLaw(lam)
	k_range = default_k_range(lam, law.w_max) if k_range is None else k_range
	evaluate, constants = _shape_function(model, shape)

	report = BoundReport(f'ratio-{model.kind.value}-{shape.value}', budget = CONSTANT_BUDGET,
		lhs_label = 'ratio_minus_1', rhs_label = 'shape')
	admissible = []
	for k in k_range:
		xi = _xi(lam, k, 'bound_checker::ratio_experiment()')
		params = dict(_grid_params(model), k = k, xi = xi)
		value, smallness = evaluate(k)
		tail = law.tail(k)
		if tail == 0:
			report.add(params, 0.0, value, excluded = True, note = 'unattainable')
			continue
		lhs = abs(math.expm1(log_of(tail) - poisson_tail(poisson, k).log_value))
		if smallness > smallness_c:
			report.add(params, lhs, value, excluded = True, note = 'outside smallness region')
			continue
		report.add(params, lhs, value)
		admissible.append(k)
	report.extras = dict(constants,
		model = model.kind.value,
		params = model.params(),
		shape = shape.value,
		smallness_c = smallness_c,
		admissible_k = admissible,
		exact = law.exact,
	)
	_debug('ratio_experiment', report.summary())
	return report

def ratio_sweep(models: Sequence[IndicatorSumModel], shape: ShapeKind = ShapeKind.APPLICATION,
		smallness_c: float = SMALLNESS_C, k_span: float = DEFAULT_K_SPAN_SQRT,
		workers: int = DEFAULT_WORKERS) -> BoundReport:
	'''
		One ratio experiment per instance, sorted by (n, lambda), and the
		stability ratio of their fitted constants.
	'''
	models = sorted(models, key = lambda model: (model.n, model.lam))

	def run(model):
		law = model.law()
		return ratio_experiment(model, default_k_range(model.lam, law.w_max, k_span), shape, smallness_c, law = law)

	with ThreadPoolExecutor(max_workers = max(1, workers)) as pool:
		reports = list(pool.map(run, models))
	sweep = BoundReport('ratio-sweep', budget = CONSTANT_BUDGET, sub_reports = reports,
		lhs_label = 'ratio_minus_1', rhs_label = 'shape')
	sweep.extras = {
		'shape': ShapeKind(shape).value,
		'fitted_C': [report.fitted_constant for report in reports],
		'stability_ratio': stability_ratio(reports),
	}
	return sweep

def delta_condition_report(model: TwoRunsModel, theta: Optional[int] = None) -> BoundReport:
	'''
		delta(w) = E(2T | W = w)/w^2 against 1/(np) for w <= theta.
	'''
	theta = delta_theta(model) if theta is None else theta
	table = delta_condition_2runs(model, theta)
	scale = 1.0 / (model.n * float(model.p))
	report = BoundReport('delta-condition', budget = CONSTANT_BUDGET, lhs_label = 'delta_w', rhs_label = 'one_over_np')
	for w, value in sorted(table.entries.items()):
		params = {'n': model.n, 'p': model.p, 'w': w}
		if value is None:
			report.add(params, 0.0, scale, excluded = True, note = 'unattainable')
		else:
			report.add(params, float(value), scale)
	report.extras = table.to_dict()
	return report

def bennett_hoeffding_check(model: PoissonBinomialModel, x_grid: Iterable[float],
		a: Optional[float] = None, b_sq: Optional[float] = None) -> BoundReport:
	'''
		P(sum (X_i - p_i) >= x) against the full Bennett form, and against
		exp(-(x/2a) log(1 + a x/B^2)) for x > 4 B^2/a. Defaults: a = max(1 - p_i),
		B^2 = sum p_i (1 - p_i).
	'''
	a = float(max(1 - p_i for p_i in model.p)) if a is None else float(a)
	b_sq = float(sum(p_i * (1 - p_i) for p_i in model.p)) if b_sq is None else float(b_sq)
	if a <= 0 or b_sq <= 0:
		raise DomainError(f'bound_checker::bennett_hoeffding_check():: need a > 0 and B^2 > 0, got a={a}, B^2={b_sq}')
	law = model.law()
	full_part = BoundReport('bennett-full', tolerance = FLOAT_TOLERANCE, lhs_label = 'tail', rhs_label = 'bound')
	simplified_part = BoundReport('bennett-simplified', tolerance = FLOAT_TOLERANCE, lhs_label = 'tail', rhs_label = 'bound')
	threshold = 4.0 * b_sq / a
	for x in x_grid:
		if x <= 0:
			raise DomainError(f'bound_checker::bennett_hoeffding_check():: x must be > 0, got {x}')
		tail = float(law.tail(math.ceil(model.lam + as_fraction(x))))
		u = a * x / b_sq
		full = math.exp(-(b_sq / a ** 2) * ((1.0 + u) * math.log1p(u) - u))
		full_part.add({'x': x}, tail, full)
		if x > threshold:
			simplified_part.add({'x': x}, tail, math.exp(-(x / (2.0 * a)) * math.log1p(u)))
	report = BoundReport('bennett-hoeffding', sub_reports = [full_part, simplified_part])
	report.extras = {'a': a, 'b_sq': b_sq, 'simplified_threshold': threshold, 'params': model.params()}
	_debug('bennett_hoeffding_check', report.summary())
	return report

def coloring_classes(n: int, m: int = LEMMA46_M) -> list[list[int]]:
	'''
		Residue classes mod 3 when they close up around the cycle, greedy colouring otherwise.
	'''
	if n % m == 0:
		return residue_classes(n, m)
	return greedy_coloring(two_runs_graph(n))

def lemma46_check(model: TwoRunsModel, x_grid: Iterable[float], m: int = LEMMA46_M) -> BoundReport:
	'''
		E[W I(W > x)] against m exp(-(x/8m) log(1 + x/(2 m lambda))), plus the
		colouring premise: the cycle splits into at most m independent families.
	'''
	law = model.law()
	lam = float(model.lam)
	report = BoundReport('truncated-mean-bound', budget = CONSTANT_BUDGET, lhs_label = 'truncated_mean', rhs_label = 'shape')
	for x in x_grid:
		if x <= 0:
			raise DomainError(f'bound_checker::lemma46_check():: x must be > 0, got {x}')
		truncated_mean = law_expectation(law, lambda w: w if w > x else 0)
		shape = m * math.exp(-(x / (8.0 * m)) * math.log1p(x / (2.0 * m * lam)))
		report.add({'n': model.n, 'p': model.p, 'x': x}, float(truncated_mean), shape)

	classes = coloring_classes(model.n, m)
	report.extras = {'m': m, 'colors': len(classes), 'classes': classes, 'colors_within_m': len(classes) <= m}
	if model.n <= INDEPENDENCE_ENUMERATION_LIMIT:
		coloring_part = independence_check(model, two_runs_graph(model.n), family = classes)
		coloring_part.inequality_id = 'coloring-independence'
		report.sub_reports.append(coloring_part)
		report.extras['coloring'] = 'enumerated'
	else:
		report.extras['coloring'] = f'not enumerated above n={INDEPENDENCE_ENUMERATION_LIMIT}'
	_debug('lemma46_check', report.summary())
	return report

def default_test_functions(lam: Fraction, k: int) -> dict:
	'''
		g1 (with g1(0) = 0), monomials w^q and indicators I(w >= j), j = 1..k.
	'''
	lam = as_fraction(lam)
	family = {'g1': lambda w: g1_exact(lam, w)}
	for q in range(MONOMIAL_TEST_DEGREE + 1):
		family[f'w^{q}'] = lambda w, q = q: Fraction(w) ** q
	for j in range(1, k + 1):
		family[f'I(w>={j})'] = lambda w, j = j: Fraction(int(w >= j))
	return family

def _require_monotone(name: str, g: Callable[[int], Fraction], k: int) -> None:
	values = [g(w) for w in range(k + 1)]
	if values[0] < 0 or any(later < earlier for earlier, later in zip(values, values[1:])):
		raise DomainError(f'bound_checker::lemma44_45_check():: test function {name} is not non-negative and non-decreasing on 0..{k}')

def _poisson_truncated_expectation(poisson: PoissonLaw, g: Callable[[int], Fraction], k: int) -> float:
	'''
		E g(Y ^ k): finite sum below k plus g(k) times the tail, no truncation.
	'''
	below = sum(float(g(j)) * math.exp(poisson.log_pmf(j)) for j in range(k))
	return below + float(g(k)) * poisson_tail(poisson, k).prob

def lemma44_45_check(law: ExactLaw, lam: float, k: int, test_functions: Optional[dict] = None) -> BoundReport:
	'''
		E g(W ^ k) <= C(eta_k + 1) E g(Y ^ k) over a family of non-decreasing g,
		and the three g1 moments against
			1/lambda + (k+1-lambda)_+^2/lambda^2
			1 + (k-lambda)_+^2/lambda
			lambda + (k-lambda)_+^2 + (k-lambda)_+^3/lambda
		each scaled by eta_k + 1. eta_k is 0 when no integer r in [lambda, k] exists.
	'''
	if k < 0:
		raise DomainError(f'bound_checker::lemma44_45_check():: k must be >= 0, got {k}')
	lam_exact = as_fraction(lam)
	lam = float(lam)
	poisson = PoissonLaw(lam)
	family = default_test_functions(lam_exact, k) if test_functions is None else test_functions
	for name, g in family.items():
		_require_monotone(name, g, k)
	eta = eta_k(law, lam, k).value if k >= lam else 0.0
	scale = eta + 1.0

	def expect_w(g, shift = 0):
		return float(law_expectation(law, lambda w: g(min(w + shift, k))))

	truncated_part = BoundReport('truncated-expectation', budget = CONSTANT_BUDGET, lhs_label = 'e_g_w', rhs_label = 'scaled_e_g_y')
	for name, g in family.items():
		truncated_part.add({'k': k, 'g': name}, expect_w(g), scale * _poisson_truncated_expectation(poisson, g, k))

	g1 = lambda w: g1_exact(lam_exact, w)
	excess = max(k - lam, 0.0)
	excess_next = max(k + 1 - lam, 0.0)
	moments = [
		('g1-shifted', lambda: expect_w(g1, 1), 1.0 / lam + excess_next ** 2 / lam ** 2),
		('g1-first-moment', lambda: expect_w(lambda w: w * g1(w)), 1.0 + excess ** 2 / lam),
		('g1-second-moment', lambda: expect_w(lambda w: w * w * g1(w)), lam + excess ** 2 + excess ** 3 / lam),
	]
	moment_parts = []
	for part_id, lhs, shape in moments:
		part = BoundReport(part_id, budget = CONSTANT_BUDGET, lhs_label = 'expectation', rhs_label = 'scaled_shape')
		if k == 0:
			part.add({'k': k}, 0.0, scale * shape, note = 'k = 0 trivial')
		else:
			part.add({'k': k}, lhs(), scale * shape)
		moment_parts.append(part)

	report = BoundReport('g1-moment-bounds', budget = CONSTANT_BUDGET, sub_reports = [truncated_part] + moment_parts)
	report.extras = {'lambda': lam, 'k': k, 'eta_k': eta}
	_debug('lemma44_45_check', report.summary())
	return report

def main():
	from exact_models import matching_law

	CURRENT_SCOPE = 'bound_checker.py::main()::'
	print(f'{CURRENT_SCOPE}{ratio_experiment(PoissonBinomialModel.iid(400, Fraction(1, 20))).summary()}')
	print(f'{CURRENT_SCOPE}{ratio_experiment(MatchingModel(50), range(1, 4)).summary()}')
	print(f'{CURRENT_SCOPE}{lemma46_check(TwoRunsModel(12, Fraction(1, 4)), [1, 2, 4]).summary()}')
	print(f'{CURRENT_SCOPE}{lemma44_45_check(matching_law(MatchingModel(7)), 1, 5).summary()}')

if __name__ == '__main__':
	main()
