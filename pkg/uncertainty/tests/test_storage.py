import json
import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from uncertainty.exceptions import ParameterError, ScenarioError
from uncertainty.grid import GridSpec
from uncertainty.reports import Report, Series
from uncertainty.states import gaussian
from uncertainty.storage import (
    emit_plotdata,
    format_value,
    load_wavefunction,
    plotdata_text,
    save_wavefunction,
    write_report,
)

GRID = GridSpec.centered(128, 12.8)


def sample_report() -> Report:
    report = Report(name='sample', quantities={'product': 0.5, 'missing': math.nan})
    report.check('prep-variance', 0.5, 0.5, label='eta(a=0.5,b=0)')
    report.check('prep-width', 5.0, 5.09, label='eta(a=0.5,b=0)')
    report.add_series('spreads', Series(columns=['state', 'delta_q'], rows=[('a', 0.70710678118654757)],
                                        tag='prep-variance'))
    report.add_series('density', Series(columns=['q', 'p', 'value'],
                                        rows=[(0.0, 0.0, 1.0), (0.0, 1.0, 2.0), (1.0, 0.0, 3.0)], kind='grid'))
    return report


class FormatTests(SimpleTestCase):
    def test_values(self):
        self.assertEqual(format_value(True), '1')
        self.assertEqual(format_value(np.int64(3)), '3')
        self.assertEqual(format_value(0.1 + 0.2), '0.3')
        self.assertEqual(format_value(math.nan), 'nan')
        self.assertEqual(format_value(-math.inf), '-inf')


class WriteReportTests(SimpleTestCase):
    def test_files_are_written(self):
        with tempfile.TemporaryDirectory() as tmp:
            target = write_report(sample_report(), tmp)
            names = sorted(p.name for p in target.iterdir())
            self.assertEqual(names, ['checks.csv', 'density.csv', 'density.dat', 'report.json',
                                     'spreads.csv', 'spreads.dat'])
            data = json.loads((target / 'report.json').read_text(encoding='utf-8'))
            self.assertFalse(data['passed'])
            self.assertEqual(data['quantities']['missing'], 'nan')

    def test_checks_csv_uses_crlf(self):
        with tempfile.TemporaryDirectory() as tmp:
            raw = (write_report(sample_report(), tmp) / 'checks.csv').read_bytes()
            lines = raw.split(b'\r\n')
            self.assertEqual(lines[0], b'tag,label,description,lhs,relation,rhs,tol,pass,margin')
            self.assertTrue(lines[1].startswith(b'prep-variance,"eta(a=0.5,b=0)",'))
            self.assertEqual(lines[2].split(b',')[-2], b'0')

    def test_same_report_same_bytes(self):
        with tempfile.TemporaryDirectory() as first, tempfile.TemporaryDirectory() as second:
            a = write_report(sample_report(), first)
            b = write_report(sample_report(), second)
            for path in a.iterdir():
                self.assertEqual(path.read_bytes(), (b / path.name).read_bytes(), msg=path.name)

    def test_no_temporary_files_left(self):
        with tempfile.TemporaryDirectory() as tmp:
            target = write_report(sample_report(), tmp)
            self.assertFalse([p for p in target.iterdir() if p.name.endswith('.tmp')])


class PlotDataTests(SimpleTestCase):
    def test_header_and_grid_blocks(self):
        text = plotdata_text(sample_report(), 'density')
        self.assertEqual(text.splitlines()[0], '# q p value')
        # 第一欄換值時空一行
        self.assertIn('0 1 2\n\n1 0 3\n', text)

    def test_tag_description_in_header(self):
        text = plotdata_text(sample_report(), 'spreads')
        self.assertTrue(text.startswith('# prep-variance: Delta(Q,psi) * Delta(P,psi) >= hbar/2\n'))

    def test_missing_series(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(ScenarioError) as cm:
                emit_plotdata(sample_report(), 'husimi', Path(tmp))
            self.assertEqual(cm.exception.field, 'series')


class WaveFunctionFileTests(SimpleTestCase):
    def test_save_and_load(self):
        psi = gaussian(GRID, 0.5, b=0.3, c=1.0)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'psi.csv'
            save_wavefunction(path, psi)
            loaded = load_wavefunction(path)
        self.assertEqual(loaded.grid, GRID)
        self.assertEqual(loaded.label, 'psi')
        np.testing.assert_allclose(loaded.amplitudes, psi.amplitudes, atol=1e-10)

    def test_header_is_required(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'psi.csv'
            path.write_text('0,1,0\r\n', encoding='utf-8')
            with self.assertRaises(ScenarioError):
                load_wavefunction(path)

    def test_x_column_must_match_header(self):
        psi = gaussian(GRID, 0.5)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'psi.csv'
            save_wavefunction(path, psi)
            shifted = dict(GRID.to_dict(), x_min=GRID.x_min + 1.0)
            lines = path.read_text(encoding='utf-8').splitlines()
            lines[0] = '# ' + json.dumps(shifted)
            path.write_text('\r\n'.join(lines) + '\r\n', encoding='utf-8')
            with self.assertRaises(ParameterError):
                load_wavefunction(path)

    def test_missing_file(self):
        with self.assertRaises(ScenarioError):
            load_wavefunction('/nonexistent/psi.csv')
