'''
Report types shared by every verifier.

A `BoundReport` holds one row per grid point: the exact left-hand side, the
bound's shape with all constants set to 1, and the ratio between them. The
fitted constant is the extremal ratio over the rows that are not excluded;
the report passes when that constant stays within the caller's budget.
'''
import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Optional

from config import BOUND_CHECKER_SETTINGS, CLI_SETTINGS
from experiment_types import Sense


DEFAULT_BUDGET = BOUND_CHECKER_SETTINGS['DEFAULT_BUDGET']
CSV_LINE_TERMINATOR = CLI_SETTINGS['CSV_LINE_TERMINATOR']
JSON_INDENT = CLI_SETTINGS['JSON_INDENT']

def to_jsonable(value: Any) -> Any:
	'''
		Plain JSON types only: rationals become decimal strings "p/q",
		non-finite floats become strings so the output stays standard JSON.

		>>> to_jsonable(Fraction(3, 8))
		'3/8'
		>>> to_jsonable(float('inf'))
		'inf'
	'''
	if isinstance(value, Fraction):
		return f'{value.numerator}/{value.denominator}'
	if isinstance(value, bool) or value is None or isinstance(value, (str, int)):
		return value
	if isinstance(value, float):
		if math.isnan(value):
			return None
		if math.isinf(value):
			return 'inf' if value > 0 else '-inf'
		return value
	if hasattr(value, 'item') and not isinstance(value, (list, tuple, dict)):
		# numpy scalar
		return to_jsonable(value.item())
	if isinstance(value, dict):
		return {str(key): to_jsonable(item) for key, item in value.items()}
	if isinstance(value, (list, tuple)):
		return [to_jsonable(item) for item in value]
	if hasattr(value, 'value') and hasattr(value, 'name'):
		# Enum
		return value.value
	return str(value)

def dump_json(document: Any) -> str:
	return json.dumps(to_jsonable(document), indent = JSON_INDENT, sort_keys = True) + '\n'

def dump_csv(header: list[str], rows: Iterable[list[Any]]) -> str:
	buffer = io.StringIO()
	writer = csv.writer(buffer, lineterminator = CSV_LINE_TERMINATOR)
	writer.writerow(header)
	for row in rows:
		writer.writerow([_csv_cell(cell) for cell in row])
	return buffer.getvalue()

def _csv_cell(value: Any) -> Any:
	value = to_jsonable(value)
	if value is None:
		return ''
	if isinstance(value, float):
		return repr(value)
	return value

@dataclass
class BoundRow:
	params: dict
	lhs: float
	rhs_shape: float
	part: str = ''
	excluded: bool = False
	note: str = ''

	@property
	def ratio(self) -> float:
		lhs = float(self.lhs)
		rhs = float(self.rhs_shape)
		if rhs == 0.0:
			return 0.0 if lhs == 0.0 else math.inf
		return lhs / rhs

@dataclass
class BoundReport:
	inequality_id: str
	rows: list[BoundRow] = field(default_factory = list)
	budget: float = DEFAULT_BUDGET
	sense: Sense = Sense.UPPER
	tolerance: float = 0.0
	lhs_label: str = 'lhs'
	rhs_label: str = 'rhs_shape'
	extras: dict = field(default_factory = dict)
	sub_reports: list['BoundReport'] = field(default_factory = list)

	def add(self, params: dict, lhs: float, rhs_shape: float, **kwargs) -> BoundRow:
		row = BoundRow(params = params, lhs = lhs, rhs_shape = rhs_shape, **kwargs)
		self.rows.append(row)
		return row

	@property
	def fitted_rows(self) -> list[BoundRow]:
		return [row for row in self.rows if not row.excluded]

	@property
	def worst_row(self) -> Optional[BoundRow]:
		rows = self.fitted_rows
		if not rows:
			return None
		if self.sense is Sense.UPPER:
			return max(rows, key = lambda row: row.ratio)
		return min(rows, key = lambda row: row.ratio)

	@property
	def fitted_constant(self) -> float:
		'''
			max lhs/rhs (upper) or min lhs/rhs (lower) over the fitted rows;
			an empty report fits 0 (upper) or inf (lower).
		'''
		worst = self.worst_row
		if worst is None:
			return 0.0 if self.sense is Sense.UPPER else math.inf
		return worst.ratio

	@property
	def worst_point(self) -> Optional[dict]:
		worst = self.worst_row
		return None if worst is None else dict(worst.params)

	@property
	def violations(self) -> int:
		return sum(1 for row in self.fitted_rows if not self._within_budget(row.ratio))

	def _within_budget(self, constant: float) -> bool:
		if self.sense is Sense.UPPER:
			return constant <= self.budget * (1.0 + self.tolerance)
		return constant >= self.budget * (1.0 - self.tolerance) and constant > 0.0

	@property
	def own_passed(self) -> bool:
		return self._within_budget(self.fitted_constant)

	@property
	def passed(self) -> bool:
		return self.own_passed and all(report.passed for report in self.sub_reports)

	def with_budget(self, budget: float) -> 'BoundReport':
		'''
			Same report judged against another budget, applied to every part.
		'''
		self.budget = budget
		for report in self.sub_reports:
			report.with_budget(budget)
		return self

	def iter_reports(self):
		yield self
		for report in self.sub_reports:
			yield from report.iter_reports()

	def summary(self) -> str:
		parts = []
		for report in self.iter_reports():
			if not report.rows:
				continue
			status = 'pass' if report.own_passed else 'FAIL'
			parts.append(f'{report.inequality_id}: fitted={report.fitted_constant:.6g} budget={report.budget:g} {status}')
		overall = 'PASS' if self.passed else 'FAIL'
		return f'{overall} ' + '; '.join(parts)

	def to_dict(self) -> dict:
		return {
			'inequality_id': self.inequality_id,
			'sense': self.sense.value,
			'budget': self.budget,
			'tolerance': self.tolerance,
			'fitted_C': self.fitted_constant,
			'pass': self.passed,
			'violations': self.violations,
			'worst_point': self.worst_point,
			'extras': self.extras,
			'rows': [
				{
					'params': row.params,
					'part': row.part,
					self.lhs_label: row.lhs,
					self.rhs_label: row.rhs_shape,
					'ratio': row.ratio,
					'excluded': row.excluded,
					'note': row.note,
				}
				for row in self.rows
			],
			'sub_reports': [report.to_dict() for report in self.sub_reports],
		}

	def to_json(self) -> str:
		return dump_json(self.to_dict())

	def to_csv(self) -> str:
		'''
			One row per grid point across this report and its parts.
		'''
		reports = [report for report in self.iter_reports() if report.rows]
		param_keys: list[str] = []
		for report in reports:
			for row in report.rows:
				for key in row.params:
					if key not in param_keys:
						param_keys.append(key)
		header = ['inequality_id'] + param_keys + [self.lhs_label, self.rhs_label, 'ratio', 'fitted_C', 'excluded']
		lines = []
		for report in reports:
			fitted = report.fitted_constant
			for row in report.rows:
				lines.append(
					[report.inequality_id]
					+ [row.params.get(key) for key in param_keys]
					+ [float(row.lhs), float(row.rhs_shape), row.ratio, fitted, row.excluded]
				)
		return dump_csv(header, lines)

def stability_ratio(reports: list[BoundReport]) -> float:
	'''
		max fitted C / min fitted C across instance sizes; 1 means perfectly stable.
	'''
	constants = [report.fitted_constant for report in reports if report.fitted_rows]
	constants = [constant for constant in constants if constant > 0.0 and math.isfinite(constant)]
	if not constants:
		return math.nan
	return max(constants) / min(constants)
