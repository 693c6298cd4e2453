import doctest

import pytest

import bound_checker
import bound_report
import dependence
import exact_models
import poisson_core
import size_bias
import stein_kernel

@pytest.mark.parametrize('module', [bound_report, poisson_core, stein_kernel, exact_models, size_bias, dependence, bound_checker])
def test_docstring_examples(module):
	failures, _ = doctest.testmod(module)
	assert failures == 0
