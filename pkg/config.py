'''
Tunables for every experiment module, one settings dict per module.

Modules copy the keys they use into module-level constants at import time;
public functions take those constants as keyword defaults so a caller can
override a single run without touching this file.

Environment overrides:
- `STEIN_DEBUG=1`: turn on `Class::method()::` debug logging everywhere
- `STEIN_MAX_WORKERS=<int>`: cap the worker count for sampling and sweeps; also the default
'''
import os
from enum import Enum

class RunMode(Enum):
	EXACT = 'exact'
	FLOAT = 'float'

GENERAL_SETTINGS = {
	'_IS_DEBUG_MODE': os.environ.get('STEIN_DEBUG', '') not in ('', '0', 'false', 'False'),
	'MAX_WORKERS_ENV': 'STEIN_MAX_WORKERS',
	'DEFAULT_WORKERS': 1,
	'MAX_WORKERS': None,
}

# --------- `poisson_core.py`
POISSON_CORE_SETTINGS = {
	'SERIES_RELATIVE_TOLERANCE': 1e-18,		# stop summing once a term is below this share of the partial sum
	'SERIES_MAX_TERMS': 100000,
	'LEMMA42_MIN_TAIL_FLOOR': 0.0,			# fitted c must be strictly above this
}

# --------- `stein_kernel.py`
STEIN_KERNEL_SETTINGS = {
	'CANCELLATION_DIGITS': 8,				# switch to the series form when |f(w)|, |f(w+1)| agree to this many digits
	'W_MAX_SQRT_SCALE': 10,					# w_max = k + ceil(scale * sqrt(lambda)) + padding
	'W_MAX_PADDING': 50,
	'RESIDUAL_TOLERANCE': 1e-10,
}

# --------- `exact_models.py`
EXACT_MODEL_SETTINGS = {
	'TWO_RUNS_EXACT_LIMIT': 64,				# n above this needs the float transfer matrix
	'TWO_RUNS_MIN_N': 11,					# model hypothesis n > 10
	'MATCHING_ENUMERATION_LIMIT': 9,		# n! * n coupling outcomes
	'INDEPENDENCE_ENUMERATION_LIMIT': 20,	# 2^n sequences / n! permutations
}

# --------- `size_bias.py`
SIZE_BIAS_SETTINGS = {
	'MONTE_CARLO_BATCH': 65536,
	'IDENTITY_TEST_DEGREE': 6,
}

# --------- `bound_checker.py`
BOUND_CHECKER_SETTINGS = {
	'DEFAULT_BUDGET': 1.0,					# inequalities with a known constant
	'CONSTANT_BUDGET': 100.0,				# inequalities whose constant is only fitted
	'FLOAT_TOLERANCE': 1e-12,				# relative slack for inequalities that are tight at some grid point
	'SMALLNESS_C': 1.0,						# admissible region: shape <= c
	'LEMMA46_M': 3,
	'DELTA_THETA_DIVISOR': 50,				# theta = max(floor(n p / 50), 2)
	'DELTA_THETA_MIN': 2,
	'MONOMIAL_TEST_DEGREE': 3,				# w^q, q = 0 .. degree in the test-function family
	'DEFAULT_K_SPAN_SQRT': 4,				# default k range: ceil(lambda) .. lambda + span * sqrt(lambda)
}

# --------- `cli.py`
CLI_SETTINGS = {
	'CSV_LINE_TERMINATOR': '\r\n',			# RFC 4180
	'JSON_INDENT': 2,
}

_workers_override = os.environ.get(GENERAL_SETTINGS['MAX_WORKERS_ENV'], '')
GENERAL_SETTINGS['MAX_WORKERS'] = int(_workers_override) if _workers_override.strip().isdigit() and int(_workers_override) > 0 else None
GENERAL_SETTINGS['DEFAULT_WORKERS'] = GENERAL_SETTINGS['MAX_WORKERS'] or GENERAL_SETTINGS['DEFAULT_WORKERS']
