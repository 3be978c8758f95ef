import csv
import io
from fractions import Fraction

import numpy as np
import pytest
import yaml

from qmix.errors import ArgumentError
from qmix.report import CSV_COLUMNS, INPUT_KEYS, PROVENANCES, RunReport


@pytest.fixture
def report():
    report = RunReport('orthogonal', dict(M=2, N=3))
    report.add('tr Delta (closed form)', Fraction(1, 15), 'paper-reference')
    report.add('Delta', np.array([[1 / 30, -1 / 30], [-1 / 30, 1 / 30]]))
    report.add('simulated tr Delta', 0.0667, 'simulated', 0.0004)
    report.close('engine matches closed form', 1 / 15, 1 / 15, 1e-9)
    return report


class TestRunReport:

    def test_inputs(self, report):
        assert list(report.inputs) == list(INPUT_KEYS)
        assert report.inputs['M'] == 2 and report.inputs['eps'] is None
        with pytest.raises(ArgumentError):
            RunReport('orthogonal', dict(copies=3))

    def test_provenance(self):
        with pytest.raises(ArgumentError):
            RunReport('x').add('value', 1.0, 'measured')

    def test_checks(self, report):
        assert report.passed
        assert report.at_least('positive', 0.1, 0.0)
        assert not report.at_most('small', 0.1, 0.0)
        assert not report.passed
        assert report.relative('relative', 1.05, 1.0, 0.1)
        assert not report.close('close', 1.0, 2.0, 0.5)

    def test_yaml(self, report):
        data = yaml.safe_load(report.to_yaml())
        assert data['case'] == 'orthogonal'
        assert set(data['quantities']) == set(PROVENANCES)
        assert data['quantities']['paper-reference'][0]['value'] == float(f'{1 / 15:.12g}')
        assert data['quantities']['simulated'][0]['standard_error'] == 0.0004
        assert data['passed'] is True

    def test_csv(self, report):
        header, *rows = csv.reader(io.StringIO(report.to_csv()))
        assert tuple(header) == CSV_COLUMNS
        names = [r[1] for r in rows if r[0] == 'quantity']
        assert names == ['tr Delta (closed form)', 'Delta[0,0]', 'Delta[0,1]', 'Delta[1,0]', 'Delta[1,1]',
                         'simulated tr Delta']
        assert sum(r[0] == 'input' for r in rows) == len(INPUT_KEYS)
        assert rows[-1][0] == 'check' and rows[-1][-1] == 'True'

    def test_schema_stable(self, report):
        other = RunReport('orthogonal', dict(M=2, N=3))
        other.add('tr Delta (closed form)', Fraction(1, 15), 'paper-reference')
        assert yaml.safe_load(other.to_yaml()).keys() == yaml.safe_load(report.to_yaml()).keys()

    def test_render(self, report):
        with pytest.raises(ArgumentError):
            report.render('json')

    def test_write(self, report, tmp_path):
        out = tmp_path / 'reports' / 'orthogonal.csv'
        report.write('csv', str(out))
        assert out.read_text() == report.to_csv()

    def test_write_stdout(self, report, capsys):
        report.write()
        assert capsys.readouterr().out == report.to_yaml()
