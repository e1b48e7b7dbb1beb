from django.test import SimpleTestCase

from uncertainty.exceptions import ScenarioError
from uncertainty.serializers import COMMANDS, scenario_schema, validate_scenario


class ScenarioValidationTests(SimpleTestCase):
    def assertFieldError(self, data, field):
        with self.assertRaises(ScenarioError) as cm:
            validate_scenario(data)
        self.assertEqual(cm.exception.field, field)

    def test_parameter_defaults(self):
        scenario = validate_scenario({'name': 'lp', 'command': 'landau-pollak'})
        self.assertEqual(scenario['parameters']['epsilon'], 0.01)
        self.assertEqual(scenario['parameters']['random_pairs'], 20)
        self.assertIsInstance(scenario['parameters'], dict)

    def test_werner_defaults(self):
        params = validate_scenario({'name': 'w', 'command': 'werner-constant'})['parameters']
        self.assertEqual((params['basis_size'], params['budget'], params['starts']), (8, 5000, 4))

    def test_unknown_top_level_key(self):
        self.assertFieldError({'name': 'x', 'command': 'periodic', 'colour': 'red'}, 'colour')

    def test_unknown_parameter(self):
        self.assertFieldError({'name': 'x', 'command': 'periodic', 'parameters': {'foo': 1}}, 'parameters.foo')

    def test_epsilon_out_of_range(self):
        self.assertFieldError({'name': 'x', 'command': 'landau-pollak', 'parameters': {'epsilon': 0.6}},
                              'parameters.epsilon')

    def test_state_field_path(self):
        self.assertFieldError({'name': 'x', 'command': 'prep-ur', 'states': [{'kind': 'gaussian', 'a': -1.0}]},
                              'states.0.a')

    def test_gaussian_needs_width(self):
        self.assertFieldError({'name': 'x', 'command': 'prep-ur',
                               'states': [{'kind': 'box', 'width': 1.0}, {'kind': 'gaussian'}]}, 'states.1.a')

    def test_missing_wave_function_file(self):
        self.assertFieldError({'name': 'x', 'command': 'prep-ur',
                               'states': [{'kind': 'file', 'path': '/nonexistent/psi.csv'}]}, 'states.0.path')

    def test_unknown_command(self):
        self.assertFieldError({'name': 'x', 'command': 'tunnel'}, 'command')

    def test_name_must_be_path_safe(self):
        self.assertFieldError({'name': '../x', 'command': 'periodic'}, 'name')

    def test_axis_points_capped(self):
        self.assertFieldError({'name': 'ak', 'command': 'arthurs-kelly', 'parameters': {'n_points': 128}},
                              'parameters.n_points')

    def test_search_basis_lower_limit(self):
        self.assertFieldError({'name': 'w', 'command': 'werner-constant', 'parameters': {'basis_size': 2}},
                              'parameters.basis_size')


class SchemaTests(SimpleTestCase):
    def test_one_parameter_block_per_command(self):
        schema = scenario_schema()
        blocks = schema['properties']['parameters']['oneOf']
        self.assertEqual([block['title'] for block in blocks], list(COMMANDS))
        self.assertFalse(schema['additionalProperties'])
        self.assertIn('name', schema['required'])

    def test_state_schema_lists_kinds(self):
        states = scenario_schema()['properties']['states']
        self.assertEqual(states['type'], 'array')
        self.assertIn('target', states['items']['properties']['kind']['enum'])
