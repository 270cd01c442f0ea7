"""
Unit tests for the command parser, the executor and the main entry point.
"""

import io
import json
import sys
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout
from fractions import Fraction
from pathlib import Path

# Add the backend directory to the Python path
backend_dir = Path(__file__).parent.parent / 'backend'
sys.path.insert(0, str(backend_dir))

from command_executor import EXIT_CHECK_FAILED, EXIT_OK, EXIT_USAGE, CommandExecutor, render_text
from command_parser import CommandParser
from config import RunConfig
from main import main
from polynomial import Field, Polynomial, VarSpace, variables
from protocol import FactoredTest, Party, ProtocolNode, ProtocolTree, Sign
from protocol_io import write_protocol
from zoo import build_knapsack_det, build_orthant_det, build_orthant_prob, build_polyhedron_det


def first_coordinate_tree():
    space = VarSpace(1, 1)
    x, _ = variables(space)
    branches = {(Sign.GT,): 'accept', (Sign.EQ,): 'reject', (Sign.LT,): 'reject'}
    test = FactoredTest.of(Polynomial.variable(VarSpace.formal(1), 0))
    node = ProtocolNode('v1', Party.X, x, (test,), branches)
    return ProtocolTree(space, Field.REAL, 'v1', {'v1': node})


def wrong_party_tree():
    space = VarSpace(1, 1)
    _, y = variables(space)
    node = ProtocolNode('v1', Party.X, y, (), {(): 'accept'})
    return ProtocolTree(space, Field.REAL, 'v1', {'v1': node})


class CommandParserTest(unittest.TestCase):

    def setUp(self):
        self.parser = CommandParser()

    def test_simple_command(self):
        parsed = self.parser.parse(['detM', '--l', '1,2,3'])
        self.assertEqual(parsed['type'], 'command')
        self.assertEqual(parsed['command'], 'detM')
        self.assertEqual(parsed['args']['l'], '1,2,3')

    def test_string_input_and_sub_commands(self):
        parsed = self.parser.parse('certify divisor --n 4 --m 1 --h "X1 + 1" --seed 3')
        self.assertEqual(parsed['command'], 'certify divisor')
        self.assertEqual(parsed['args']['h'], 'X1 + 1')
        overrides = CommandParser.config_overrides(parsed['args'])
        self.assertEqual(overrides['seed'], 3)
        self.assertNotIn('seed', parsed['args'])

    def test_errors(self):
        self.assertEqual(self.parser.parse([])['type'], 'empty')
        self.assertEqual(self.parser.parse(['frobnicate'])['type'], 'parse_error')
        self.assertEqual(self.parser.parse(['zoo'])['type'], 'parse_error')
        self.assertEqual(self.parser.parse(['detM'])['type'], 'parse_error')
        self.assertEqual(self.parser.parse(['prob', 'f.json'])['type'], 'parse_error')
        self.assertEqual(self.parser.parse(['detM', '--l', '1', '--format', 'xml'])['type'], 'parse_error')

    def test_help(self):
        parsed = self.parser.parse(['--help'])
        self.assertEqual(parsed['type'], 'help')
        for command in ('validate', 'run', 'run-inf', 'prob', 'mc', 'zoo', 'certify', 'adversary',
                        'audit', 'detM'):
            self.assertIn(command, parsed['output'])


class CommandExecutorTest(unittest.TestCase):

    def setUp(self):
        self.parser = CommandParser()
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def execute(self, argv, **config):
        parsed = self.parser.parse(argv)
        if parsed['type'] == 'command':
            overrides = CommandParser.config_overrides(parsed['args'])
            config = {**{k: v for k, v in overrides.items() if v is not None}, **config}
        return CommandExecutor(RunConfig().override(**config)).execute(parsed)

    def write(self, name, protocol):
        path = self.dir / name
        write_protocol(protocol, str(path))
        return str(path)

    def test_det_m(self):
        result = self.execute(['detM', '--l', '1,1'])
        self.assertEqual(result['exit_code'], EXIT_OK)
        self.assertEqual(result['output'], '-1')
        result = self.execute(['detM', '--l', '2,3', '--brute'])
        self.assertEqual(result['output'], '-24\nbrute force: -24')
        self.assertEqual(self.execute(['detM', '--l', '0,1'])['exit_code'], EXIT_USAGE)
        self.assertEqual(self.execute(['detM', '--l', 'a'])['exit_code'], EXIT_USAGE)
        self.assertEqual(self.execute(['detM'])['exit_code'], EXIT_USAGE)

    def test_validate(self):
        good = self.write('orthant.json', build_orthant_det(1, 1))
        result = self.execute(['validate', good])
        self.assertEqual(result['exit_code'], EXIT_OK)
        self.assertIn('valid tree, depth 2', result['output'])
        bad = self.write('bad.json', wrong_party_tree())
        result = self.execute(['validate', bad])
        self.assertEqual(result['exit_code'], EXIT_CHECK_FAILED)
        self.assertIn('[party]', result['output'])

    def test_parse_errors_exit_two(self):
        path = self.dir / 'broken.json'
        path.write_text('{"field": "real",\n  "n_x": }', encoding='utf-8')
        result = self.execute(['validate', str(path)])
        self.assertEqual(result['exit_code'], EXIT_USAGE)
        self.assertIn('line 2', result['error'])
        missing = self.execute(['validate', str(self.dir / 'missing.json')])
        self.assertEqual(missing['exit_code'], EXIT_USAGE)

    def test_run(self):
        path = self.write('toy.json', first_coordinate_tree())
        result = self.execute(['run', path, '--input', '1/2, -3', '--format', 'json'])
        self.assertEqual(result['exit_code'], EXIT_OK)
        doc = json.loads(result['output'])
        self.assertEqual(doc['verdict'], 'accept')
        self.assertEqual(doc['input'], ['1/2', '-3'])
        self.assertEqual(self.execute(['run', path, '--input', '1'])['exit_code'], EXIT_USAGE)
        self.assertEqual(self.execute(['run', path, '--input', '1,x'])['exit_code'], EXIT_USAGE)

    def test_run_infinitesimal(self):
        path = self.write('orthant.json', build_orthant_det(1, 1))
        result = self.execute(['run-inf', path, '--signs', '+,-'])
        self.assertEqual(result['report']['verdict'], 'reject')
        self.assertIn('verdict: reject', result['output'])
        self.assertEqual(self.execute(['run-inf', path, '--signs', '+'])['exit_code'], EXIT_USAGE)
        self.assertEqual(self.execute(['run-inf', path, '--signs', '+,+', '--order', '0,0'])['exit_code'],
                         EXIT_USAGE)

    def test_prob(self):
        path = self.write('family.json', build_orthant_prob(1, 1))
        result = self.execute(['prob', path, '--input=-1,1'])
        self.assertEqual(result['report']['probability'], '1/4')
        self.assertFalse(result['report']['accepts'])
        result = self.execute(['prob', path, '--signs', '+,+'])
        self.assertEqual(result['report']['probability'], '1')
        self.assertIn('P(accept) = 1', result['output'])

    def test_monte_carlo(self):
        path = self.write('orthant.json', build_orthant_det(2, 2))
        result = self.execute(['mc', path, '--set', 'T', '--trials', '25', '--seed', '5'])
        self.assertEqual(result['exit_code'], EXIT_OK)
        self.assertTrue(result['output'].startswith('25/25 agreements'))
        wrong = self.write('toy.json', first_coordinate_tree())
        self.assertEqual(self.execute(['mc', wrong, '--set', 'T', '--trials', '60'])['exit_code'],
                         EXIT_CHECK_FAILED)
        self.assertEqual(self.execute(['mc', path, '--set', 'cube'])['exit_code'], EXIT_USAGE)

    def test_zoo_emit(self):
        result = self.execute(['zoo', 'emit', 'orthant', '--n', '1'])
        self.assertEqual(result['exit_code'], EXIT_OK)
        self.assertEqual(json.loads(result['output'])['root'], 'v1')
        out = self.dir / 'knapsack.json'
        result = self.execute(['zoo', 'emit', 'knapsack', '--n', '2', '--out', str(out)])
        self.assertTrue(out.exists())
        self.assertEqual(result['report']['depth'], 4)
        self.assertEqual(self.execute(['zoo', 'emit', 'knapsack', '--n', '9'])['exit_code'], EXIT_USAGE)
        self.assertEqual(self.execute(['zoo', 'emit', 'orthant', '--n', '0'])['exit_code'], EXIT_USAGE)

    def test_certify_rank_and_recheck(self):
        result = self.execute(['certify', 'rank', '--poly', 'X1*Y1 + X2*Y2 + X3*Y3', '--n', '3'])
        self.assertEqual(result['exit_code'], EXIT_OK)
        self.assertTrue(result['output'].startswith('c(g) >= 3'))
        report = result['report']
        self.assertTrue(report['rechecked'])
        path = self.dir / 'certificate.json'
        path.write_text(json.dumps(report), encoding='utf-8')
        self.assertEqual(self.execute(['certify', 'recheck', str(path)])['exit_code'], EXIT_OK)
        report['certificate']['minor_value'] = '12345'
        path.write_text(json.dumps(report), encoding='utf-8')
        self.assertEqual(self.execute(['certify', 'recheck', str(path)])['exit_code'], EXIT_CHECK_FAILED)

    def test_certify_rank_from_file(self):
        path = self.dir / 'g.json'
        path.write_text(json.dumps({'n_x': 2, 'n_y': 2, 'expr': '(X1*Y1 + X2*Y2)^2'}), encoding='utf-8')
        result = self.execute(['certify', 'rank', str(path), '--exact', '--format', 'json'])
        doc = json.loads(result['output'])
        self.assertEqual(doc['lower_bound'], 2)
        self.assertEqual(doc['certificate']['exact_rank'], 2)

    def test_certify_rank_errors(self):
        self.assertEqual(self.execute(['certify', 'rank', '--poly', 'X1*W1', '--n', '1'])['exit_code'],
                         EXIT_USAGE)
        self.assertEqual(self.execute(['certify', 'rank', '--poly', 'X1*Y1'])['exit_code'], EXIT_USAGE)
        self.assertEqual(self.execute(['certify', 'rank'])['exit_code'], EXIT_USAGE)
        self.assertEqual(self.execute(['certify', 'rank', '--poly', 'X1^40*Y1', '--n', '1'])['exit_code'],
                         EXIT_USAGE)

    def test_certify_divisor(self):
        result = self.execute(['certify', 'divisor', '--n', '4', '--m', '1', '--h', '1'])
        self.assertEqual(result['exit_code'], EXIT_OK)
        self.assertTrue(result['report']['holds'])
        self.assertEqual(result['report']['certified_rank'], 4)
        multiple = self.execute(['certify', 'divisor', '--n', '2', '--m', '1', '--h', '2*X1*Y1 + 2*X2*Y2'])
        self.assertEqual(multiple['exit_code'], EXIT_USAGE)
        self.assertIn('multiple of f', multiple['error'])

    def test_certify_minor(self):
        result = self.execute(['certify', 'minor', '--poly', 'Z1*Z2*X1', '--n', '2', '--k', '2'])
        self.assertEqual(result['exit_code'], EXIT_OK)
        self.assertIn('holds', result['output'])
        failed = self.execute(['certify', 'minor', '--poly', 'Z1*X1', '--n', '2', '--k', '2'])
        self.assertEqual(failed['exit_code'], EXIT_USAGE)

    def test_adversary(self):
        path = self.write('toy.json', first_coordinate_tree())
        result = self.execute(['adversary', 'orthant', path, '--format', 'json'])
        self.assertEqual(result['exit_code'], EXIT_OK)
        doc = json.loads(result['output'])
        self.assertEqual(doc['kind'], 'fooling-pair')
        self.assertEqual(doc['point_b'], '(+,-)')
        full = self.write('orthant.json', build_orthant_det(1, 1))
        self.assertEqual(self.execute(['adversary', 'orthant', full])['report']['kind'], 'none')
        family = self.write('family.json', build_orthant_prob(1, 1))
        self.assertEqual(self.execute(['adversary', 'orthant', family])['exit_code'], EXIT_USAGE)

    def test_adversary_defaults_to_json(self):
        path = self.write('toy.json', first_coordinate_tree())
        doc = json.loads(self.execute(['adversary', 'orthant', path])['output'])
        self.assertEqual(doc['kind'], 'fooling-pair')
        self.assertEqual(doc['flip_vector'], [0, 1])
        text = self.execute(['adversary', 'orthant', path, '--format', 'text'])['output']
        self.assertFalse(text.startswith('{'))
        self.assertIn('kind: fooling-pair', text)
        parsed = self.parser.parse(['adversary', 'orthant', path])
        self.assertEqual(CommandParser.config_overrides(parsed['args'])['output_format'], 'json')
        self.assertNotIn('default_format', parsed['args'])
        parsed = self.parser.parse(['detM', '--l', '1'])
        self.assertIsNone(CommandParser.config_overrides(parsed['args'])['output_format'])

    def test_monte_carlo_crafted_inputs(self):
        path = self.write('knapsack.json', build_knapsack_det(2))
        with self.assertLogs('run_monitor', level='INFO') as captured:
            result = self.execute(['mc', path, '--set', 'knapsack', '--trials', '5', '--crafted', '20'])
        self.assertEqual(result['exit_code'], EXIT_OK)
        self.assertEqual(result['report']['crafted'], 20)
        self.assertEqual(result['report']['disagreements'], 0)
        self.assertTrue(result['output'].startswith('25/25 agreements'))
        self.assertTrue(any('mc sampling (5 trials, 20 crafted)' in line for line in captured.output))
        self.assertEqual(self.execute(['mc', path, '--set', 'knapsack', '--crafted=-1'])['exit_code'],
                         EXIT_USAGE)

    def test_audit_logs_usage(self):
        path = self.write('polyhedron.json', build_polyhedron_det(1))
        with self.assertLogs('run_monitor', level='INFO') as captured:
            self.execute(['audit', path, '--target', 'S'])
        self.assertTrue(any('audit of 1 members' in line for line in captured.output))

    def test_audit(self):
        path = self.write('polyhedron.json', build_polyhedron_det(1))
        result = self.execute(['audit', path, '--target', 'S'])
        self.assertEqual(result['exit_code'], EXIT_OK)
        self.assertTrue(result['output'].startswith('conclusion: member 0'))
        self.assertEqual(result['report']['selected_member'], 0)

    def test_caps(self):
        path = self.write('orthant.json', build_orthant_det(2, 2))
        result = self.execute(['run', path, '--input', '1,1,1,1'], max_vars=3)
        self.assertEqual(result['exit_code'], EXIT_USAGE)
        self.assertIn('CapExceededError', result['error'])

    def test_render_text(self):
        text = render_text({'b': True, 'a': [1, 2], 'c': None, 'd': {'x': 1}}, first='c')
        lines = text.splitlines()
        self.assertEqual(lines[0], 'c: -')
        self.assertIn('b: yes', lines)
        self.assertIn('a: 1, 2', lines)
        self.assertIn('d:', lines)


class MainTest(unittest.TestCase):

    def run_main(self, argv):
        out, err = io.StringIO(), io.StringIO()
        with redirect_stdout(out), redirect_stderr(err):
            code = main(argv)
        return code, out.getvalue(), err.getvalue()

    def test_det_m(self):
        code, out, _ = self.run_main(['detM', '--l', '1,1'])
        self.assertEqual(code, 0)
        self.assertEqual(out.strip(), '-1')

    def test_usage_error(self):
        code, out, err = self.run_main(['detM', '--l', '1,0'])
        self.assertEqual(code, 2)
        self.assertEqual(out, '')
        self.assertTrue(err.startswith('error:'))

    def test_bad_threshold(self):
        code, _, err = self.run_main(['detM', '--l', '1', '--threshold', '3/2'])
        self.assertEqual(code, 2)
        self.assertIn('threshold', err)

    def test_json_output(self):
        code, out, _ = self.run_main(['detM', '--l', '1,1,1', '--format', 'json'])
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(out)['det'], str(Fraction(2)))


if __name__ == '__main__':
    unittest.main()
