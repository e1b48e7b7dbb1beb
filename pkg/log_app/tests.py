from django.test import TestCase

from log_app.models import Log
from log_app.services import write_log


class WriteLogTests(TestCase):
    def test_row_is_created(self):
        write_log('INFO', 'scenario-prep-ur', 'prep-ur finished', scenario='prep-ur')
        log = Log.objects.get()
        self.assertEqual(log.level, 'INFO')
        self.assertEqual(log.category, 'scenario-prep-ur')
        self.assertEqual(log.scenario, 'prep-ur')
        self.assertIsNone(log.traceback)

    def test_traceback_is_stored_inside_except(self):
        try:
            raise ValueError('boom')
        except ValueError:
            write_log('ERROR', 'suite', 'scenario failed', exc=True)
        log = Log.objects.get()
        self.assertIn('ValueError: boom', log.traceback)

    def test_str_contains_level_and_category(self):
        write_log('WARNING', 'warning', 'untrusted moment')
        self.assertIn('WARNING - warning', str(Log.objects.get()))

    def test_traceback_string_from_worker(self):
        write_log('ERROR', 'suite', 'worker failed', tb='Traceback ...\nRangeError: out of bracket')
        self.assertIn('RangeError', Log.objects.get().traceback)
