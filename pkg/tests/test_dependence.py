'''
Neighbourhood constants, colourings and exact independence checks.
'''
from fractions import Fraction

import numpy as np
import pytest

from dependence import (DependencyGraph, greedy_coloring, independence_check, independent_graph,
	neighborhood_stats, relabel, residue_classes, two_runs_graph)
from errors import DomainError, ExactModeLimitError
from exact_models import MatchingModel, PoissonBinomialModel, TwoRunsModel

class TestNeighborhoodStats:

	def test_singletons(self):
		assert neighborhood_stats(independent_graph(6)).m == 1

	def test_cycle(self):
		stats = neighborhood_stats(two_runs_graph(10))
		assert (stats.m_out, stats.m_in, stats.m) == (3, 3, 3)

	def test_star_is_driven_by_in_degree(self):
		star = DependencyGraph.from_lists([[0]] + [[0, i] for i in range(1, 5)], name = 'star')
		assert neighborhood_stats(star) == (2, 5, 5)

	def test_relabelling_keeps_m(self):
		graph = two_runs_graph(9)
		permutation = np.random.default_rng(11).permutation(9).tolist()
		assert neighborhood_stats(relabel(graph, permutation)) == neighborhood_stats(graph)

	def test_invalid_graphs(self):
		with pytest.raises(DomainError):
			DependencyGraph.from_lists([[1], [0, 1]])
		with pytest.raises(DomainError):
			DependencyGraph.from_lists([[0, 3], [1]])
		with pytest.raises(DomainError):
			two_runs_graph(4)
		with pytest.raises(DomainError):
			relabel(two_runs_graph(5), [0, 1, 2, 3, 3])

class TestColouring:

	def test_residue_classes(self):
		assert residue_classes(12, 3) == [[0, 3, 6, 9], [1, 4, 7, 10], [2, 5, 8, 11]]

	def test_greedy_colouring_is_proper(self):
		graph = two_runs_graph(11)
		classes = greedy_coloring(graph)
		assert sorted(i for family in classes for i in family) == list(range(11))
		for family in classes:
			for i in family:
				assert not any(graph.dependent(i, j) for j in family if j != i)
		assert len(classes) <= neighborhood_stats(graph).m

class TestIndependenceCheck:

	def test_independent_trials_pass_analytically(self):
		model = PoissonBinomialModel(['0.1', '0.5', '0.3'])
		report = independence_check(model, independent_graph(3))
		assert report.passed
		assert report.extras['failures'] == []

	def test_cycle_neighbourhoods_pass(self):
		report = independence_check(TwoRunsModel(8, Fraction(1, 4)), two_runs_graph(8))
		assert report.passed, report.summary()
		assert report.extras['failures'] == []

	def test_truncated_neighbourhoods_fail(self):
		report = independence_check(TwoRunsModel(8, Fraction(1, 4)), independent_graph(8))
		assert not report.passed
		assert report.extras['failures'] == list(range(8))

	def test_residue_families_are_independent(self):
		report = independence_check(TwoRunsModel(12, Fraction(1, 4)), two_runs_graph(12), family = residue_classes(12, 3))
		assert report.passed, report.summary()

	def test_adjacent_family_is_dependent(self):
		report = independence_check(TwoRunsModel(8, Fraction(1, 4)), two_runs_graph(8), family = [[0, 1]])
		assert not report.passed
		assert report.extras['failures'] == [[0, 1]]

	def test_matching_complete_graph_passes(self):
		complete = DependencyGraph.from_lists([range(5)] * 5, name = 'complete')
		assert independence_check(MatchingModel(5), complete).passed
		assert not independence_check(MatchingModel(5), independent_graph(5)).passed

	def test_size_mismatch(self):
		with pytest.raises(DomainError):
			independence_check(TwoRunsModel(8, Fraction(1, 4)), two_runs_graph(9))

	def test_enumeration_limit(self):
		with pytest.raises(ExactModeLimitError):
			independence_check(TwoRunsModel(21, Fraction(1, 4)), two_runs_graph(21))
