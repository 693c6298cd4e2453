'''
Enumerations shared by the experiment modules.
'''
from enum import Enum

class G1Method(Enum):
	'''
		factorial: difference of the two factorial/cdf products
		integral_series: binomial expansion of the integral form, exact in rationals
		stein_diff: scaled difference of a tabulated Stein solution
	'''
	FACTORIAL = 'factorial'
	INTEGRAL_SERIES = 'integral_series'
	STEIN_DIFF = 'stein_diff'

class ApplicationModel(Enum):
	'''
		pbt: independent indicators with success probabilities p_i
		two_runs: adjacent success pairs on a cycle of i.i.d. Bernoulli(p)
		matching: fixed points of a uniform permutation
	'''
	PBT = 'pbt'
	TWO_RUNS = 'two_runs'
	MATCHING = 'matching'

class Sense(Enum):
	'''
		upper: lhs <= C * rhs_shape, fitted C is the max ratio
		lower: lhs >= c * rhs_shape, fitted c is the min ratio
	'''
	UPPER = 'upper'
	LOWER = 'lower'

class ShapeKind(Enum):
	'''
		application: the bound shape stated for each application
		coupling: size-bias coupling shape with the fitted delta_1, delta_2
		local: local-dependence shape with m, delta, theta
	'''
	APPLICATION = 'application'
	COUPLING = 'coupling'
	LOCAL = 'local'

class OutputFormat(Enum):
	CSV = 'csv'
	JSON = 'json'

class CliCommand(Enum):
	TAIL = 'tail'
	STEIN = 'stein'
	G1 = 'g1'
	MODEL = 'model'
	COUPLING = 'coupling'
	DELTA_CONDITION = 'delta-condition'
	RATIO = 'ratio'
	VERIFY = 'verify'
	SWEEP = 'sweep'

	@property
	def is_sampling(self) -> bool:
		return self is CliCommand.COUPLING
