"""
Command Parser Module
Turns a command line into a structured command for the executor.
"""

import argparse
import shlex
from typing import Any, Dict, List, Sequence, Union

from config import OUTPUT_FORMATS
from errors import UsageError
from zoo import ZOO_NAMES

PROG = 'algcomm'

DESCRIPTION = (
    'Workbench for algebraic communication complexity: protocol trees, exact '
    'and infinitesimal runs, Hessian rank certificates, fooling-pair adversaries '
    'and hyperplane audits.'
)


class _ArgumentParser(argparse.ArgumentParser):
    """argparse that raises UsageError instead of exiting on bad input."""

    def error(self, message: str):
        raise UsageError(f'{self.prog}: {message}')


class CommandParser:
    """
    Parses command lines into {'type', 'command', 'args', 'original'} dictionaries.
    """

    def __init__(self):
        self.parser = self._build()

    @staticmethod
    def _common() -> argparse.ArgumentParser:
        common = argparse.ArgumentParser(add_help=False)
        common.add_argument('--seed', type=int, help='random seed (default: ALGCOMM_SEED or 0)')
        common.add_argument('--trials', type=int, help='rank trials or Monte Carlo samples')
        common.add_argument('--format', dest='output_format', choices=OUTPUT_FORMATS,
                            help='report format')
        common.add_argument('--threshold', help='correctness threshold, e.g. 2/3')
        common.add_argument('--max-vars', dest='max_vars', type=int)
        common.add_argument('--max-degree', dest='max_degree', type=int)
        common.add_argument('--knapsack-cap', dest='knapsack_cap', type=int)
        common.add_argument('--log-level', dest='log_level')
        common.add_argument('--order', help='term order: "default" or a permutation such as 3,2,1,0')
        return common

    def _build(self) -> argparse.ArgumentParser:
        common = self._common()
        parser = _ArgumentParser(prog=PROG, description=DESCRIPTION)
        sub = parser.add_subparsers(dest='command', parser_class=_ArgumentParser)

        p = sub.add_parser('validate', parents=[common], help='check a protocol file')
        p.add_argument('file')

        p = sub.add_parser('run', parents=[common], help='run on an exact input')
        p.add_argument('file')
        p.add_argument('--input', required=True, help='comma-separated coordinates, e.g. "1,-2,3/4"')

        p = sub.add_parser('run-inf', parents=[common], help='run on a signed infinitesimal point')
        p.add_argument('file')
        p.add_argument('--signs', required=True, help='e.g. "+,-,0,+"')

        p = sub.add_parser('prob', parents=[common], help='exact acceptance probability')
        p.add_argument('file')
        point = p.add_mutually_exclusive_group(required=True)
        point.add_argument('--input')
        point.add_argument('--signs')

        p = sub.add_parser('mc', parents=[common], help='Monte Carlo agreement with an oracle')
        p.add_argument('file')
        p.add_argument('--set', dest='set_name', required=True,
                       help='target set: orthant, closure, S, R, knapsack, emptiness, U')
        p.add_argument('--crafted', type=int, default=0,
                       help='extra inputs on the zero-measure part of the set (zero sums, collisions)')

        zoo = sub.add_parser('zoo', help='built-in protocols')
        zoo_sub = zoo.add_subparsers(dest='action', parser_class=_ArgumentParser)
        p = zoo_sub.add_parser('emit', parents=[common], help='write a zoo protocol')
        p.add_argument('name', choices=ZOO_NAMES)
        p.add_argument('--n', type=int, required=True)
        p.add_argument('--n-y', dest='n_y', type=int)
        p.add_argument('--mode', choices=('exact', 'sampled'), default='exact')
        p.add_argument('--samples', type=int, default=64)
        p.add_argument('--out', help='write to this file instead of stdout')

        certify = sub.add_parser('certify', help='rank certificates and lemma checks')
        certify_sub = certify.add_subparsers(dest='action', parser_class=_ArgumentParser)
        p = certify_sub.add_parser('rank', parents=[common], help='lower bound on c(g)')
        p.add_argument('file', nargs='?', help='polynomial document')
        p.add_argument('--poly', help='expression or term-list, e.g. "X1*Y1 + X2*Y2"')
        p.add_argument('--n', type=int, help='n_x for --poly')
        p.add_argument('--n-y', dest='n_y', type=int, help='n_y for --poly (default: n)')
        p.add_argument('--exact', action='store_true', help='also decide the rank symbolically')
        p = certify_sub.add_parser('divisor', parents=[common], help='rank of H(f^m h) >= n-3')
        p.add_argument('--n', type=int, required=True)
        p.add_argument('--m', type=int, required=True)
        p.add_argument('--h', required=True, help='polynomial in X1..Xn, Y1..Yn')
        p = certify_sub.add_parser('minor', parents=[common],
                                   help='rank >= k when Z1..Zk divides lt(P)')
        p.add_argument('--poly', required=True, help='polynomial in X1..Xn, Z1..Zn')
        p.add_argument('--n', type=int, required=True)
        p.add_argument('--k', type=int, required=True)
        p = certify_sub.add_parser('recheck', parents=[common], help='recheck a rank certificate')
        p.add_argument('file')

        adversary = sub.add_parser('adversary', help='fooling-pair adversaries')
        adversary_sub = adversary.add_subparsers(dest='action', parser_class=_ArgumentParser)
        p = adversary_sub.add_parser('orthant', parents=[common],
                                     help='orthant fooling pair (JSON report unless --format text)')
        p.add_argument('file')
        p.add_argument('--target', choices=('orthant', 'orthant-closure'), default='orthant')
        p.set_defaults(default_format='json')

        p = sub.add_parser('audit', parents=[common], help='hyperplane audit')
        p.add_argument('file')
        p.add_argument('--target', choices=('S', 'R'), default='S')
        p.add_argument('--degree-cap', dest='degree_cap', type=int)

        p = sub.add_parser('detM', parents=[common], help='det of the M matrix')
        p.add_argument('--l', dest='l', required=True, help='e.g. 1,2,3')
        p.add_argument('--brute', action='store_true', help='also expand the determinant')
        return parser

    def parse(self, argv: Union[str, Sequence[str], None]) -> Dict[str, Any]:
        """
        Parse a command line.

        Args:
            argv: argument list, or a single string split like a shell would

        Returns:
            Dict with 'type' in {'empty', 'command', 'help', 'parse_error'}
        """
        original = argv if isinstance(argv, str) else ' '.join(argv or [])
        try:
            tokens: List[str] = shlex.split(argv) if isinstance(argv, str) else list(argv or [])
        except ValueError as e:
            return self._error(original, str(e))
        if not tokens:
            return {'type': 'empty', 'command': '', 'args': {}, 'original': original}
        if tokens[0] in ('-h', '--help', 'help'):
            return {'type': 'help', 'command': 'help', 'args': {}, 'original': original,
                    'output': self.parser.format_help()}
        try:
            namespace = self.parser.parse_args(tokens)
        except UsageError as e:
            return self._error(original, str(e))
        except SystemExit as e:
            # argparse printed a sub-command's --help
            return {'type': 'help', 'command': 'help', 'args': {}, 'original': original,
                    'output': '', 'exit_code': e.code or 0}
        args = vars(namespace)
        command = args.pop('command')
        if command is None:
            return self._error(original, 'missing command')
        action = args.pop('action', None)
        if command in ('zoo', 'certify', 'adversary'):
            if action is None:
                return self._error(original, f'{command}: missing sub-command')
            command = f'{command} {action}'
        return {'type': 'command', 'command': command, 'args': args, 'original': original}

    @staticmethod
    def _error(original: str, message: str) -> Dict[str, Any]:
        return {'type': 'parse_error', 'command': original, 'args': {}, 'original': original,
                'error': message}

    @staticmethod
    def config_overrides(args: Dict[str, Any]) -> Dict[str, Any]:
        """
        Pop the flags that belong to RunConfig out of parsed arguments. A
        command's own default format applies when --format is absent.
        """
        keys = ('seed', 'trials', 'output_format', 'threshold', 'max_vars', 'max_degree',
                'knapsack_cap', 'log_level')
        overrides = {k: args.pop(k, None) for k in keys}
        command_format = args.pop('default_format', None)
        if overrides['output_format'] is None:
            overrides['output_format'] = command_format
        return overrides
