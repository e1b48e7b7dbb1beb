import json
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import TestCase

from log_app.models import Log
from uncertainty.exceptions import ParameterError
from uncertainty.reports import Report
from uncertainty.runner import RunResult


def run_lab(*args):
    out = StringIO()
    call_command('lab', *args, stdout=out, stderr=StringIO())
    return out.getvalue()


class LabCommandTests(TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_periodic_scenario(self):
        output = run_lab('periodic', '--out', str(self.out))
        self.assertIn('all checks passed', output)
        report = json.loads((self.out / 'periodic' / 'report.json').read_text(encoding='utf-8'))
        self.assertTrue(report['passed'])
        self.assertEqual(report['provenance']['command'], 'periodic')
        self.assertTrue((self.out / 'periodic' / 'commutators.dat').is_file())
        self.assertTrue(Log.objects.filter(category='scenario-periodic', scenario='periodic').exists())

    def test_schema(self):
        schema = json.loads(run_lab('schema'))
        self.assertEqual(len(schema['properties']['parameters']['oneOf']), 9)

    def test_invalid_config_is_usage_error(self):
        config = self.out / 'bad.json'
        config.write_text(json.dumps({'name': 'bad', 'parameters': {'pairs': [[16, 32]], 'foo': 1}}),
                          encoding='utf-8')
        with self.assertRaises(CommandError) as cm:
            run_lab('periodic', '--config', str(config), '--out', str(self.out))
        self.assertEqual(cm.exception.returncode, 1)
        log = Log.objects.get(level='ERROR')
        self.assertIn('parameters.foo', log.message)
        self.assertFalse((self.out / 'bad').exists())

    def test_config_for_other_command(self):
        config = self.out / 'lp.json'
        config.write_text(json.dumps({'name': 'lp', 'command': 'landau-pollak'}), encoding='utf-8')
        with self.assertRaises(CommandError) as cm:
            run_lab('periodic', '--config', str(config))
        self.assertEqual(cm.exception.returncode, 1)

    def test_failed_check_exit_code(self):
        def failing(scenario, jobs=1):
            report = Report(name=scenario['name'])
            report.check('periodic-commute', 0.3, 1e-6, relation='<', label='a=32dx,b=32dp')
            return RunResult(scenario=scenario, report=report)

        with mock.patch('uncertainty.management.commands.lab.execute', side_effect=failing):
            with self.assertRaises(CommandError) as cm:
                run_lab('periodic', '--out', str(self.out))
        self.assertEqual(cm.exception.returncode, 2)
        self.assertTrue(Log.objects.filter(level='ERROR', message__contains='periodic-commute').exists())
        # 失敗的情境仍然要寫出報告
        checks = (self.out / 'periodic' / 'checks.csv').read_text(encoding='utf-8')
        self.assertIn('periodic-commute', checks)

    def test_numerical_error_is_logged_with_traceback(self):
        with mock.patch('uncertainty.management.commands.lab.execute', side_effect=ParameterError('bad grid')):
            with self.assertRaises(CommandError) as cm:
                run_lab('periodic', '--out', str(self.out))
        self.assertEqual(cm.exception.returncode, 1)
        log = Log.objects.get(level='ERROR')
        self.assertIn('ParameterError', log.message)
        self.assertIn('bad grid', log.traceback)

    def test_flags_override_parameters(self):
        captured = {}

        def capture(scenario, jobs=1):
            captured.update(scenario)
            return RunResult(scenario=scenario, report=Report(name=scenario['name']))

        with mock.patch('uncertainty.management.commands.lab.execute', side_effect=capture):
            run_lab('arthurs-kelly', '--lambda', '2', '--gamma', '0', '1', '--analytic-only', '--seed', '3',
                    '--out', str(self.out))
        self.assertEqual(captured['parameters']['lam'], 2.0)
        self.assertEqual(captured['parameters']['gammas'], [0.0, 1.0])
        self.assertFalse(captured['parameters']['simulate'])
        self.assertEqual(captured['seed'], 3)
        self.assertEqual(captured['grid']['n_points'], 512)

    def test_same_seed_same_bytes(self):
        first, second = self.out / 'first', self.out / 'second'
        run_lab('prep-ur', '--random-states', '5', '--seed', '7', '--out', str(first))
        run_lab('prep-ur', '--random-states', '5', '--seed', '7', '--out', str(second))
        files = sorted(p.name for p in (first / 'prep-ur').iterdir())
        self.assertIn('spreads.csv', files)
        for name in files:
            self.assertEqual((first / 'prep-ur' / name).read_bytes(), (second / 'prep-ur' / name).read_bytes(),
                             msg=name)

    def test_simulate_flag_overrides_config(self):
        config = self.out / 'ak.json'
        config.write_text(json.dumps({'name': 'ak', 'command': 'arthurs-kelly', 'parameters': {'simulate': False}}),
                          encoding='utf-8')
        captured = {}

        def capture(scenario, jobs=1):
            captured.update(scenario)
            return RunResult(scenario=scenario, report=Report(name=scenario['name']))

        with mock.patch('uncertainty.management.commands.lab.execute', side_effect=capture):
            run_lab('arthurs-kelly', '--config', str(config), '--simulate', '--out', str(self.out))
        self.assertTrue(captured['parameters']['simulate'])

        with mock.patch('uncertainty.management.commands.lab.execute', side_effect=capture):
            run_lab('arthurs-kelly', '--config', str(config), '--out', str(self.out))
        self.assertFalse(captured['parameters']['simulate'])

    def test_simulate_and_analytic_only_exclude_each_other(self):
        with self.assertRaises(CommandError):
            run_lab('arthurs-kelly', '--simulate', '--analytic-only', '--out', str(self.out))
