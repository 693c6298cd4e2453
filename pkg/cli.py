'''
Command-line entry point.

	python cli.py ratio --model pbt --n 400 --p 0.05 --format csv
	python cli.py verify lemma42 --lambda 6.5 --k-max 40
	python cli.py coupling --model matching --n 6 --exact

Exit status: 0 success, 1 any inequality violated, 2 usage error.
Output goes to stdout (or --output); the one-line summary goes to stderr.
Identical arguments give byte-identical output.
'''
import argparse
import logging
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import bound_checker
import dependence
import exact_models
import poisson_core
import size_bias
import stein_kernel
from bound_report import BoundReport, dump_csv, dump_json
from config import GENERAL_SETTINGS
from errors import DomainError, ExactModeLimitError, UsageError, VerificationFailure
from exact_models import ExactLaw, IndicatorSumModel, MatchingModel, PoissonBinomialModel, TwoRunsModel, as_fraction
from experiment_types import ApplicationModel, CliCommand, G1Method, OutputFormat, ShapeKind

logger = logging.getLogger('cli')

DEFAULT_WORKERS = GENERAL_SETTINGS['DEFAULT_WORKERS']
MAX_WORKERS = GENERAL_SETTINGS['MAX_WORKERS']

EXIT_OK = 0
EXIT_VERIFICATION_FAILED = 1
EXIT_USAGE = 2

VERIFY_TARGETS = (
	'lemma41', 'lemma42', 'g1-bound', 'stein-residual', 'stein-differences', 'tv-bound',
	'identity', 'bennett', 'lemma46', 'lemma44-45', 'independence', 'delta-condition',
)

@dataclass
class RunConfig:
	command: CliCommand
	target: Optional[str] = None
	model: Optional[ApplicationModel] = None
	n: Optional[int] = None
	n_list: list = field(default_factory = list)
	p: Optional[Fraction] = None
	p_list: list = field(default_factory = list)
	lam: Optional[float] = None
	lambdas: list = field(default_factory = list)
	k: Optional[int] = None
	k_min: Optional[int] = None
	k_max: Optional[int] = None
	w_max: Optional[int] = None
	theta: Optional[int] = None
	x_grid: list = field(default_factory = list)
	method: Optional[G1Method] = None
	shape: ShapeKind = ShapeKind.APPLICATION
	graph: str = 'natural'
	exact: bool = False
	samples: Optional[int] = None
	seed: Optional[int] = None
	output_format: OutputFormat = OutputFormat.JSON
	output: Optional[str] = None
	budget: Optional[float] = None
	workers: int = DEFAULT_WORKERS
	debug: bool = False

	@property
	def is_sampling(self) -> bool:
		return self.command.is_sampling and not self.exact

	def validate(self) -> None:
		if self.is_sampling and self.seed is None:
			raise UsageError('RunConfig::validate():: sampling needs --seed (or use --exact)')
		if self.is_sampling and not self.samples:
			raise UsageError('RunConfig::validate():: sampling needs --samples N with N > 0')
		if self.workers < 1:
			raise UsageError(f'RunConfig::validate():: --workers must be >= 1, got {self.workers}')
		if self.command is CliCommand.VERIFY and self.target not in VERIFY_TARGETS:
			raise UsageError(f'RunConfig::validate():: unknown verify target {self.target!r}; choose from {", ".join(VERIFY_TARGETS)}')

@dataclass
class Table:
	'''
		Plain tabular result for the non-report commands.
	'''
	header: list
	rows: list
	document: dict

def _require(config: RunConfig, *names: str) -> None:
	missing = [name for name in names if getattr(config, name) in (None, [])]
	if missing:
		flags = ', '.join('--lambda' if name == 'lam' else '--' + name.replace('_', '-') for name in missing)
		raise UsageError(f'cli::{config.command.value}():: missing {flags}')

def build_model(config: RunConfig) -> IndicatorSumModel:
	if config.model is None:
		raise UsageError('cli::build_model():: missing --model (pbt, two_runs, matching)')
	if config.model is ApplicationModel.PBT:
		if config.p_list:
			return PoissonBinomialModel(config.p_list, _is_debug_mode = config.debug)
		_require(config, 'n', 'p')
		return PoissonBinomialModel([config.p] * config.n, _is_debug_mode = config.debug)
	if config.model is ApplicationModel.TWO_RUNS:
		_require(config, 'n', 'p')
		return TwoRunsModel(config.n, config.p, _is_debug_mode = config.debug)
	_require(config, 'n')
	return MatchingModel(config.n, _is_debug_mode = config.debug)

def _model_for_size(config: RunConfig, n: int) -> IndicatorSumModel:
	return build_model(RunConfig(config.command, model = config.model, n = n, p = config.p, debug = config.debug))

def _k_range(config: RunConfig, lam: float, w_max: int) -> range:
	default = bound_checker.default_k_range(lam, w_max)
	k_min = default.start if config.k_min is None else config.k_min
	k_max = default.stop - 1 if config.k_max is None else config.k_max
	return range(k_min, k_max + 1)

def run_tail(config: RunConfig) -> Table:
	_require(config, 'lam', 'k_max')
	law = poisson_core.PoissonLaw(config.lam)
	rows = []
	for k in range(config.k_max + 1):
		tail = poisson_core.poisson_tail(law, k)
		rows.append([k, poisson_core.poisson_pmf(law, k).log_value, tail.log_value, tail.prob])
	header = ['k', 'log_pmf', 'log_tail', 'tail']
	return Table(header, rows, {'lambda': config.lam, 'rows': [dict(zip(header, row)) for row in rows]})

def run_stein(config: RunConfig) -> Table:
	_require(config, 'lam', 'k')
	solution = stein_kernel.stein_solution(config.lam, config.k, config.w_max)
	rows = []
	for w in range(1, solution.w_max):
		rows.append([w, solution.value(w), stein_kernel.forward_diff(solution, w), solution.residual(w)])
	header = ['w', 'f', 'forward_diff', 'residual']
	document = {'lambda': config.lam, 'k': config.k, 'w_max': solution.w_max, 'rows': [dict(zip(header, row)) for row in rows]}
	return Table(header, rows, document)

def run_g1(config: RunConfig) -> Table:
	_require(config, 'lam', 'w_max')
	methods = [config.method] if config.method else list(G1Method)
	rows = [
		[w] + [stein_kernel.g1(config.lam, w, method).value for method in methods]
		for w in range(1, config.w_max + 1)
	]
	header = ['w'] + [method.value for method in methods]
	return Table(header, rows, {'lambda': config.lam, 'rows': [dict(zip(header, row)) for row in rows]})

def run_model(config: RunConfig) -> Table:
	law = build_model(config).law()
	rows = [[w, law.pmf(w), law.tail(w)] for w in range(law.w_max + 1)]
	return Table(['w', 'mass', 'tail'], rows, law.to_dict())

def run_coupling(config: RunConfig) -> Table:
	model = build_model(config)
	if config.exact:
		delta_law = size_bias.coupling_delta_law(model)
		rows = [[w, d, mass] for (w, d), mass in sorted(delta_law.masses.items())]
		return Table(['w', 'd', 'mass'], rows, delta_law.to_dict())
	if not isinstance(model, MatchingModel):
		raise UsageError('cli::coupling():: sampling is implemented for --model matching; use --exact otherwise')
	stats = size_bias.matching_coupling_sample(model, size_bias.RngStream(config.seed), config.samples, workers = config.workers)
	document = stats.to_dict()
	return Table(list(document), [list(document.values())], document)

def run_delta_condition(config: RunConfig) -> BoundReport:
	model = build_model(config)
	if not isinstance(model, TwoRunsModel):
		raise UsageError('cli::delta-condition():: needs --model two_runs')
	return bound_checker.delta_condition_report(model, config.theta)

def run_ratio(config: RunConfig) -> BoundReport:
	model = build_model(config)
	law = model.law()
	return bound_checker.ratio_experiment(model, _k_range(config, model.lam, law.w_max), config.shape, law = law)

def run_sweep(config: RunConfig) -> BoundReport:
	_require(config, 'n_list')
	models = [_model_for_size(config, n) for n in config.n_list]
	return bound_checker.ratio_sweep(models, config.shape, workers = config.workers)

def _natural_graph(model: IndicatorSumModel) -> dependence.DependencyGraph:
	if isinstance(model, PoissonBinomialModel):
		return dependence.independent_graph(model.n)
	if isinstance(model, TwoRunsModel):
		return dependence.two_runs_graph(model.n)
	return dependence.DependencyGraph.from_lists([range(model.n)] * model.n, name = 'complete')

def run_verify(config: RunConfig) -> BoundReport:
	target = config.target
	if target == 'lemma41':
		_require(config, 'lambdas', 'w_max')
		return poisson_core.lemma41_supremum(config.lambdas, config.w_max)
	if target == 'lemma42':
		_require(config, 'lam', 'k_max')
		return poisson_core.verify_lemma42(poisson_core.PoissonLaw(config.lam), config.k_max)
	if target == 'g1-bound':
		_require(config, 'lam', 'w_max')
		return stein_kernel.verify_g1_bound(config.lam, config.w_max)
	if target == 'stein-residual':
		_require(config, 'lam', 'k')
		return stein_kernel.verify_stein_residual(config.lam, config.k, config.w_max)
	if target == 'stein-differences':
		_require(config, 'lam', 'k')
		return stein_kernel.verify_stein_differences(config.lam, config.k, config.w_max)
	if target == 'delta-condition':
		return run_delta_condition(config)

	model = build_model(config)
	if target == 'tv-bound':
		return size_bias.verify_tv_bound(model)
	if target == 'identity':
		delta_law = size_bias.coupling_delta_law(model)
		return size_bias.size_bias_identity_check(delta_law.marginal(), delta_law.ws_law())
	if target == 'bennett':
		_require(config, 'x_grid')
		if not isinstance(model, PoissonBinomialModel):
			raise UsageError('cli::verify():: bennett needs --model pbt')
		return bound_checker.bennett_hoeffding_check(model, config.x_grid)
	if target == 'lemma46':
		_require(config, 'x_grid')
		if not isinstance(model, TwoRunsModel):
			raise UsageError('cli::verify():: lemma46 needs --model two_runs')
		return bound_checker.lemma46_check(model, config.x_grid)
	if target == 'lemma44-45':
		_require(config, 'k')
		return bound_checker.lemma44_45_check(model.law(), model.lam, config.k)
	graph = _natural_graph(model) if config.graph == 'natural' else dependence.independent_graph(model.n)
	return dependence.independence_check(model, graph)

HANDLERS = {
	CliCommand.TAIL: run_tail,
	CliCommand.STEIN: run_stein,
	CliCommand.G1: run_g1,
	CliCommand.MODEL: run_model,
	CliCommand.COUPLING: run_coupling,
	CliCommand.DELTA_CONDITION: run_delta_condition,
	CliCommand.RATIO: run_ratio,
	CliCommand.VERIFY: run_verify,
	CliCommand.SWEEP: run_sweep,
}

def render(result, output_format: OutputFormat) -> str:
	if isinstance(result, BoundReport):
		return result.to_json() if output_format is OutputFormat.JSON else result.to_csv()
	if output_format is OutputFormat.JSON:
		return dump_json(result.document)
	return dump_csv(result.header, result.rows)

def _summary(config: RunConfig, result) -> str:
	label = ' '.join(item for item in (config.command.value, config.target) if item)
	if isinstance(result, BoundReport):
		line = f'{label}: {result.summary()}'
		if 'stability_ratio' in result.extras:
			line += f' stability={result.extras["stability_ratio"]:.4g}'
		return line
	return f'{label}: {len(result.rows)} rows'

def _enable_debug() -> None:
	for module in (poisson_core, stein_kernel, exact_models, size_bias, dependence, bound_checker):
		module._IS_DEBUG_MODE = True

def require_passed(config: RunConfig, result) -> None:
	if isinstance(result, BoundReport) and not result.passed:
		raise VerificationFailure(f'cli::{config.command.value}():: {result.summary()}')

def run(config: RunConfig) -> int:
	'''
		Execute one command and write its artifact; returns the exit status.
		A failed report still writes its artifact before exiting 1.
	'''
	try:
		config.validate()
		result = HANDLERS[config.command](config)
	except (UsageError, DomainError, ExactModeLimitError, ValueError) as error:
		logger.error(f'usage error: {error}')
		return EXIT_USAGE

	if isinstance(result, BoundReport) and config.budget is not None:
		result.with_budget(config.budget)
	text = render(result, config.output_format)
	if config.output:
		with open(config.output, 'w', newline = '') as handle:
			handle.write(text)
	else:
		sys.stdout.write(text)
	logger.info(_summary(config, result))

	try:
		require_passed(config, result)
	except VerificationFailure as failure:
		logger.error(str(failure))
		return EXIT_VERIFICATION_FAILED
	return EXIT_OK

def _int_list(text: str) -> list[int]:
	return [int(item) for item in text.split(',') if item.strip()]

def _float_list(text: str) -> list[float]:
	return [float(item) for item in text.split(',') if item.strip()]

def _fraction_list(text: str) -> list[Fraction]:
	return [as_fraction(item.strip()) for item in text.split(',') if item.strip()]

def _add_common(parser: argparse.ArgumentParser) -> None:
	parser.add_argument('--format', dest = 'output_format', choices = [item.value for item in OutputFormat], default = OutputFormat.JSON.value)
	parser.add_argument('--output', help = 'write the artifact here instead of stdout')
	parser.add_argument('--budget', type = float, help = 'constant budget every report is judged against')
	parser.add_argument('--workers', type = int, default = DEFAULT_WORKERS, help = 'worker threads (default and cap: $STEIN_MAX_WORKERS, else 1)')
	parser.add_argument('--seed', type = int, help = '64-bit seed for sampling commands')
	parser.add_argument('--debug', action = 'store_true')

def _add_model(parser: argparse.ArgumentParser) -> None:
	parser.add_argument('--model', choices = [item.value for item in ApplicationModel])
	parser.add_argument('--n', type = int)
	parser.add_argument('--p', type = as_fraction, help = 'success probability, decimal or a/b')
	parser.add_argument('--p-list', type = _fraction_list, default = [], help = 'comma-separated p_i for pbt')

def build_parser() -> argparse.ArgumentParser:
	parser = argparse.ArgumentParser(prog = 'cli.py', description = 'Poisson moderate-deviation experiments')
	commands = parser.add_subparsers(dest = 'command', required = True)

	tail = commands.add_parser(CliCommand.TAIL.value, help = 'Poisson log pmf and tail table')
	tail.add_argument('--lambda', dest = 'lam', type = float)
	tail.add_argument('--k-max', type = int)

	stein = commands.add_parser(CliCommand.STEIN.value, help = 'tabulated Stein solution for I{w >= k}')
	stein.add_argument('--lambda', dest = 'lam', type = float)
	stein.add_argument('--k', type = int)
	stein.add_argument('--w-max', type = int)

	g1 = commands.add_parser(CliCommand.G1.value, help = 'g1 by one or all methods')
	g1.add_argument('--lambda', dest = 'lam', type = float)
	g1.add_argument('--w-max', type = int)
	g1.add_argument('--method', choices = [item.value for item in G1Method])

	model = commands.add_parser(CliCommand.MODEL.value, help = 'exact law of W')
	_add_model(model)

	coupling = commands.add_parser(CliCommand.COUPLING.value, help = 'size-bias coupling, exact or sampled')
	_add_model(coupling)
	coupling.add_argument('--exact', action = 'store_true')
	coupling.add_argument('--samples', type = int)

	delta = commands.add_parser(CliCommand.DELTA_CONDITION.value, help = '2-runs delta(w) table')
	_add_model(delta)
	delta.add_argument('--theta', type = int)

	ratio = commands.add_parser(CliCommand.RATIO.value, help = 'tail ratio against a bound shape')
	_add_model(ratio)
	ratio.add_argument('--k-min', type = int)
	ratio.add_argument('--k-max', type = int)
	ratio.add_argument('--shape', choices = [item.value for item in ShapeKind], default = ShapeKind.APPLICATION.value)

	verify = commands.add_parser(CliCommand.VERIFY.value, help = 'check one inequality')
	verify.add_argument('target', choices = VERIFY_TARGETS)
	_add_model(verify)
	verify.add_argument('--lambda', dest = 'lam', type = float)
	verify.add_argument('--lambdas', type = _float_list, default = [])
	verify.add_argument('--k', type = int)
	verify.add_argument('--k-max', type = int)
	verify.add_argument('--w-max', type = int)
	verify.add_argument('--theta', type = int)
	verify.add_argument('--x-grid', type = _float_list, default = [])
	verify.add_argument('--graph', choices = ['natural', 'independent'], default = 'natural')

	sweep = commands.add_parser(CliCommand.SWEEP.value, help = 'ratio experiments across instance sizes')
	_add_model(sweep)
	sweep.add_argument('--n-list', type = _int_list, default = [])
	sweep.add_argument('--shape', choices = [item.value for item in ShapeKind], default = ShapeKind.APPLICATION.value)

	for subparser in commands.choices.values():
		_add_common(subparser)
	return parser

def capped_workers(workers: int) -> int:
	'''
		--workers limited by $STEIN_MAX_WORKERS when set; non-positive values pass through to validation.
	'''
	if MAX_WORKERS is None or workers < 1:
		return workers
	return min(workers, MAX_WORKERS)

def config_from_args(args: argparse.Namespace) -> RunConfig:
	values = vars(args)
	return RunConfig(
		command = CliCommand(values['command']),
		target = values.get('target'),
		model = ApplicationModel(values['model']) if values.get('model') else None,
		n = values.get('n'),
		n_list = values.get('n_list') or [],
		p = values.get('p'),
		p_list = values.get('p_list') or [],
		lam = values.get('lam'),
		lambdas = values.get('lambdas') or [],
		k = values.get('k'),
		k_min = values.get('k_min'),
		k_max = values.get('k_max'),
		w_max = values.get('w_max'),
		theta = values.get('theta'),
		x_grid = values.get('x_grid') or [],
		method = G1Method(values['method']) if values.get('method') else None,
		shape = ShapeKind(values.get('shape') or ShapeKind.APPLICATION.value),
		graph = values.get('graph') or 'natural',
		exact = values.get('exact', False),
		samples = values.get('samples'),
		seed = values.get('seed'),
		output_format = OutputFormat(values['output_format']),
		output = values.get('output'),
		budget = values.get('budget'),
		workers = capped_workers(values.get('workers', DEFAULT_WORKERS)),
		debug = values.get('debug', False),
	)

def main(argv: Optional[list[str]] = None) -> int:
	parser = build_parser()
	try:
		args = parser.parse_args(argv)
	except SystemExit as exit_request:
		return EXIT_OK if exit_request.code in (0, None) else EXIT_USAGE
	config = config_from_args(args)
	logging.basicConfig(stream = sys.stderr, level = logging.DEBUG if config.debug else logging.INFO, format = '%(message)s', force = True)
	if config.debug:
		_enable_debug()
	return run(config)

if __name__ == '__main__':
	raise SystemExit(main())
