"""
Run reports: named quantities with provenance, pass/fail checks against
references, and YAML / CSV rendering with 12 significant digits.
"""
import csv
import io
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional

import numpy as np
from omegaconf import OmegaConf

from . import util
from .errors import ArgumentError

logger = logging.getLogger(__name__)

PROVENANCES = ('analytic', 'simulated', 'paper-reference')
INPUT_KEYS = ('M', 'N', 'eps', 'theta', 'resolution', 'seed', 'trials')
CSV_COLUMNS = ('section', 'name', 'value', 'provenance', 'standard_error', 'passed')
FORMATS = ('yaml', 'csv')


def _clean(value: Any) -> Any:
    """Plain Python numbers and nested lists, rounded for output."""
    if value is None or isinstance(value, (bool, str)):
        return value
    if isinstance(value, Fraction):
        return util.format_number(float(value))
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_clean(v) for v in np.asarray(value, dtype=float).tolist()] if np.ndim(value) else _clean(float(value))
    if isinstance(value, (int, np.integer)):
        return int(value)
    return util.format_number(float(value))


@dataclass
class Quantity:
    name: str
    value: Any
    provenance: str
    standard_error: Optional[Any] = None

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ArgumentError(f'unknown provenance {self.provenance!r} for {self.name}')


@dataclass
class Check:
    name: str
    passed: bool
    value: Optional[float] = None
    reference: Optional[float] = None
    tolerance: Optional[float] = None


@dataclass
class RunReport:
    case: str
    inputs: Dict[str, Any] = field(default_factory=dict)
    quantities: List[Quantity] = field(default_factory=list)
    checks: List[Check] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    def __post_init__(self):
        unknown = set(self.inputs) - set(INPUT_KEYS)
        if unknown:
            raise ArgumentError(f'unknown report inputs {sorted(unknown)}')
        self.inputs = {k: self.inputs.get(k) for k in INPUT_KEYS}

    def add(self, name: str, value: Any, provenance: str = 'analytic', standard_error: Any = None) -> Any:
        self.quantities.append(Quantity(name, value, provenance, standard_error))
        return value

    def check(self, name: str, passed: bool, value: Optional[float] = None, reference: Optional[float] = None,
              tolerance: Optional[float] = None) -> bool:
        passed = bool(passed)
        self.checks.append(Check(name, passed, value, reference, tolerance))
        log = logger.info if passed else logger.warning
        log(f'[{"PASS" if passed else "FAIL"}] {name}' + ('' if value is None else f': {value:.12g}')
            + ('' if reference is None else f' vs {reference:.12g}'))
        return passed

    def close(self, name: str, value: float, reference: float, atol: float) -> bool:
        return self.check(name, abs(value - reference) <= atol, value, reference, atol)

    def relative(self, name: str, value: float, reference: float, rtol: float) -> bool:
        return self.check(name, abs(value - reference) <= rtol * abs(reference), value, reference, rtol)

    def at_least(self, name: str, value: float, limit: float) -> bool:
        return self.check(name, value >= limit, value, limit)

    def at_most(self, name: str, value: float, limit: float) -> bool:
        return self.check(name, value <= limit, value, limit)

    def note(self, text: str):
        self.notes.append(text)
        logger.info(text)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> Dict[str, Any]:
        quantities = defaultdict(list)
        for q in self.quantities:
            quantities[q.provenance].append(dict(name=q.name, value=_clean(q.value),
                                                 standard_error=_clean(q.standard_error)))
        return dict(
            case=self.case,
            inputs={k: _clean(v) for k, v in self.inputs.items()},
            quantities={p: quantities.get(p, []) for p in PROVENANCES},
            checks=[dict(name=c.name, passed=c.passed, value=_clean(c.value), reference=_clean(c.reference),
                         tolerance=_clean(c.tolerance)) for c in self.checks],
            notes=list(self.notes),
            passed=self.passed)

    def to_yaml(self) -> str:
        return OmegaConf.to_yaml(OmegaConf.create(self.to_dict()))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator='\n')
        writer.writerow(CSV_COLUMNS)
        for k, v in self.inputs.items():
            writer.writerow(('input', k, _csv(_clean(v)), '', '', ''))
        for q in self.quantities:
            for name, value, se in _flatten(q.name, _clean(q.value), _clean(q.standard_error)):
                writer.writerow(('quantity', name, _csv(value), q.provenance, _csv(se), ''))
        for c in self.checks:
            writer.writerow(('check', c.name, _csv(_clean(c.value)), '', '', c.passed))
        return buf.getvalue()

    def render(self, format: str = 'yaml') -> str:
        if format not in FORMATS:
            raise ArgumentError(f'unknown output format {format!r}, expected one of {FORMATS}')
        return self.to_yaml() if format == 'yaml' else self.to_csv()

    def write(self, format: str = 'yaml', out: Optional[str] = None):
        text = self.render(format)
        if out is None:
            print(text, end='')
        else:
            util.make_output_dir(out).write_text(text)
            logger.info(f'Wrote report to {out}')


def _csv(value: Any) -> str:
    return '' if value is None else repr(value) if isinstance(value, float) else str(value)


def _flatten(name: str, value: Any, se: Any):
    """Split matrix/vector quantities into one row per entry: name[i,j]."""
    if not isinstance(value, list):
        yield name, value, se
        return
    arr = np.asarray(value, dtype=float)
    err = None if se is None else np.asarray(se, dtype=float)
    for idx in np.ndindex(arr.shape):
        label = f'{name}[{",".join(map(str, idx))}]'
        yield label, util.format_number(arr[idx]), None if err is None else util.format_number(err[idx])
