'''
Local-dependence structure: neighbourhoods B_i with i in B_i, the single
constant m bounding both neighbourhood size and in-degree, colourings into
independent families, and exact independence checks by enumeration.
'''
import itertools
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence

from bound_report import BoundReport
from config import GENERAL_SETTINGS
from errors import DomainError
from exact_models import IndicatorSumModel

logger = logging.getLogger(__name__)

_IS_DEBUG_MODE = GENERAL_SETTINGS['_IS_DEBUG_MODE']

def _debug(method_name: str, message: str) -> None:
	if _IS_DEBUG_MODE:
		logger.debug(f'dependence::{method_name}()::{message}')

@dataclass(frozen = True)
class DependencyGraph:
	neighborhoods: tuple		# tuple of frozensets, B_i for i = 0 .. n-1
	name: str = 'custom'

	def __post_init__(self):
		n = len(self.neighborhoods)
		for i, neighborhood in enumerate(self.neighborhoods):
			if i not in neighborhood:
				raise DomainError(f'DependencyGraph::__init__():: index {i} missing from its own neighborhood')
			if any(not 0 <= j < n for j in neighborhood):
				raise DomainError(f'DependencyGraph::__init__():: neighborhood of {i} leaves the index set 0..{n - 1}')

	@classmethod
	def from_lists(cls, neighborhoods: Sequence[Sequence[int]], name: str = 'custom') -> 'DependencyGraph':
		return cls(tuple(frozenset(neighborhood) for neighborhood in neighborhoods), name)

	@property
	def n(self) -> int:
		return len(self.neighborhoods)

	def dependent(self, i: int, j: int) -> bool:
		return j in self.neighborhoods[i] or i in self.neighborhoods[j]

	def to_dict(self) -> dict:
		return {
			'name': self.name,
			'n': self.n,
			'neighborhoods': [sorted(neighborhood) for neighborhood in self.neighborhoods],
		}

class NeighborhoodStats(NamedTuple):
	m_out: int
	m_in: int
	m: int

def neighborhood_stats(graph: DependencyGraph) -> NeighborhoodStats:
	'''
		m_out = max |B_i|, m_in = max_j #{i : j in B_i}, m = max of the two.

		>>> neighborhood_stats(two_runs_graph(10))
		NeighborhoodStats(m_out=3, m_in=3, m=3)
	'''
	if graph.n == 0:
		raise DomainError('dependence::neighborhood_stats():: empty index set')
	in_degree = [0] * graph.n
	for neighborhood in graph.neighborhoods:
		for j in neighborhood:
			in_degree[j] += 1
	m_out = max(len(neighborhood) for neighborhood in graph.neighborhoods)
	m_in = max(in_degree)
	return NeighborhoodStats(m_out, m_in, max(m_out, m_in))

def two_runs_graph(n: int) -> DependencyGraph:
	if n < 5:
		raise DomainError(f'dependence::two_runs_graph():: need n >= 5 so cyclic neighborhoods do not overlap, got {n}')
	return DependencyGraph.from_lists([((i - 1) % n, i, (i + 1) % n) for i in range(n)], name = 'two_runs')

def independent_graph(n: int) -> DependencyGraph:
	if n < 1:
		raise DomainError(f'dependence::independent_graph():: need n >= 1, got {n}')
	return DependencyGraph.from_lists([(i,) for i in range(n)], name = 'independent')

def relabel(graph: DependencyGraph, permutation: Sequence[int]) -> DependencyGraph:
	'''
		Index i becomes permutation[i].
	'''
	if sorted(permutation) != list(range(graph.n)):
		raise DomainError(f'dependence::relabel():: not a permutation of 0..{graph.n - 1}')
	neighborhoods = [None] * graph.n
	for i, neighborhood in enumerate(graph.neighborhoods):
		neighborhoods[permutation[i]] = frozenset(permutation[j] for j in neighborhood)
	return DependencyGraph(tuple(neighborhoods), name = f'{graph.name}_relabelled')

def greedy_coloring(graph: DependencyGraph) -> list[list[int]]:
	'''
		Each index takes the smallest colour unused by earlier indices it depends on.
	'''
	colours = []
	for i in range(graph.n):
		taken = {colours[j] for j in range(i) if graph.dependent(i, j)}
		colours.append(next(colour for colour in itertools.count() if colour not in taken))
	classes = defaultdict(list)
	for i, colour in enumerate(colours):
		classes[colour].append(i)
	return [classes[colour] for colour in sorted(classes)]

def residue_classes(n: int, m: int) -> list[list[int]]:
	'''
		>>> residue_classes(7, 3)
		[[0, 3, 6], [1, 4], [2, 5]]
	'''
	if m < 1 or n < 1:
		raise DomainError(f'dependence::residue_classes():: need n, m >= 1, got n={n}, m={m}')
	return [list(range(r, n, m)) for r in range(min(m, n))]

def _marginal(joint: dict, indices: Sequence[int]) -> dict:
	out = defaultdict(int)
	for vector, weight in joint.items():
		out[tuple(vector[i] for i in indices)] += weight
	return out

def _check_neighborhood(joint: dict, scale: int, i: int, outside: list[int]) -> Fraction:
	'''
		max over x_S of |P(X_i = 1, X_S = x_S) - P(X_i = 1) P(X_S = x_S)|.
	'''
	with_i = _marginal(joint, [i] + outside)
	without_i = _marginal(joint, outside)
	p_one = sum(weight for vector, weight in joint.items() if vector[i] == 1)
	worst = 0
	for x_outside, weight_outside in without_i.items():
		together = with_i.get((1,) + x_outside, 0)
		worst = max(worst, abs(together * scale - p_one * weight_outside))
	return Fraction(worst, scale * scale)

def _check_family(joint: dict, scale: int, family: list[int]) -> Fraction:
	'''
		max over x of |P(X_F = x) - prod_i P(X_i = x_i)|.
	'''
	together = _marginal(joint, family)
	singles = [_marginal(joint, [i]) for i in family]
	worst = Fraction(0)
	for x in itertools.product((0, 1), repeat = len(family)):
		product = math.prod(Fraction(single.get((bit,), 0), scale) for single, bit in zip(singles, x))
		worst = max(worst, abs(Fraction(together.get(x, 0), scale) - product))
	return worst

def independence_check(model: IndicatorSumModel, graph: DependencyGraph, family: Optional[Sequence[Sequence[int]]] = None) -> BoundReport:
	'''
		Without `family`: X_i independent of {X_j : j not in B_i} for every i.
		With `family`: each listed index class is a mutually independent family.
		Every row holds the largest exact discrepancy, judged against a zero budget.
		Families of independent trials pass analytically; everything else is
		enumerated and refused above the model's enumeration limit.
	'''
	if graph.n != model.n:
		raise DomainError(f'dependence::independence_check():: graph has {graph.n} indices, model has {model.n}')
	report = BoundReport('independence', budget = 0.0, lhs_label = 'max_discrepancy', rhs_label = 'unit')
	report.extras = {'model': model.kind.value, 'graph': graph.name, 'mode': 'family' if family else 'neighborhood'}

	if model.is_independent_family:
		groups = family if family else [[i] for i in range(graph.n)]
		for group in groups:
			report.add({'index': list(group)}, Fraction(0), 1, note = 'independent trials')
		report.extras['failures'] = []
		return report

	joint, scale = model.indicator_joint()
	failures = []
	if family:
		for group in family:
			discrepancy = _check_family(joint, scale, list(group))
			report.add({'index': list(group)}, discrepancy, 1)
			if discrepancy != 0:
				failures.append(list(group))
	else:
		for i, neighborhood in enumerate(graph.neighborhoods):
			outside = [j for j in range(graph.n) if j not in neighborhood]
			discrepancy = _check_neighborhood(joint, scale, i, outside) if outside else Fraction(0)
			report.add({'index': i}, discrepancy, 1)
			if discrepancy != 0:
				failures.append(i)
	report.extras['failures'] = failures
	_debug('independence_check', f'{model!r} on {graph.name}: {len(failures)} failures')
	return report

def main():
	from exact_models import TwoRunsModel

	CURRENT_SCOPE = 'dependence.py::main()::'
	model = TwoRunsModel(8, Fraction(1, 4))
	print(f'{CURRENT_SCOPE}{neighborhood_stats(two_runs_graph(8))}')
	print(f'{CURRENT_SCOPE}cyclic neighborhoods: {independence_check(model, two_runs_graph(8)).summary()}')
	print(f'{CURRENT_SCOPE}truncated neighborhoods: {independence_check(model, independent_graph(8)).summary()}')

if __name__ == '__main__':
	main()
