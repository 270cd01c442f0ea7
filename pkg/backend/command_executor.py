"""
Command Executor Module
Runs parsed commands against the workbench modules and renders their reports.
"""

import json
import logging
from typing import Any, Callable, Dict, List, Optional

from adversary import orthant_adversary
from audit import hyperplane_audit
from certify import (
    RankCertificate,
    brute_force_det,
    check_divisor_lemma,
    generic_rank,
    hessian,
    m_matrix_det,
    minor_lemma_check,
    recheck_certificate,
)
from config import RunConfig
from errors import (
    AlgCommError,
    CapExceededError,
    LemmaPreconditionError,
    ProtocolParseError,
    UsageError,
)
from infinitesimal import SignPoint, change_frame
from polynomial import Frame, Polynomial, VarSpace
from protocol import (
    ProbabilisticProtocol,
    ProtocolTree,
    acceptance_probability,
    run_infinitesimal,
    run_rational,
)
from protocol_io import (
    as_family,
    as_tree,
    parse_point,
    parse_polynomial,
    read_polynomial,
    read_protocol,
    serialize,
    write_protocol,
)
from resource_guard import ResourceGuard
from run_monitor import RunMonitor
from sampler import monte_carlo
from term_order import TermOrder
from zoo import SetDescriptor, SetVariant, emit

logger = logging.getLogger(__name__)

# Exit codes
EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2

USAGE_ERRORS = (UsageError, ProtocolParseError, CapExceededError, LemmaPreconditionError, OSError)


class CommandExecutor:
    """
    Executes workbench commands and converts every outcome to a result dictionary.
    """

    def __init__(self, config: Optional[RunConfig] = None, monitor: Optional[RunMonitor] = None):
        self.config = config or RunConfig()
        self.guard = ResourceGuard(self.config)
        self.monitor = monitor or RunMonitor()

        # Define command handlers
        self.command_handlers: Dict[str, Callable[[Dict[str, Any]], Dict[str, Any]]] = {
            'validate': self._handle_validate,
            'run': self._handle_run,
            'run-inf': self._handle_run_inf,
            'prob': self._handle_prob,
            'mc': self._handle_mc,
            'zoo emit': self._handle_zoo_emit,
            'certify rank': self._handle_certify_rank,
            'certify divisor': self._handle_certify_divisor,
            'certify minor': self._handle_certify_minor,
            'certify recheck': self._handle_certify_recheck,
            'adversary orthant': self._handle_adversary_orthant,
            'audit': self._handle_audit,
            'detM': self._handle_det_m,
        }

    def execute(self, parsed: Dict[str, Any]) -> Dict[str, Any]:
        """
        Execute a parsed command.

        Args:
            parsed (Dict): output of CommandParser.parse

        Returns:
            Dict with 'success', 'output', 'error', 'exit_code' and 'report'
        """
        command_type = parsed.get('type')
        if command_type == 'empty':
            return self._result(False, error='No command given. Try --help.', exit_code=EXIT_USAGE)
        if command_type == 'help':
            return self._result(True, output=parsed.get('output', ''),
                                exit_code=parsed.get('exit_code', EXIT_OK))
        if command_type == 'parse_error':
            return self._result(False, error=parsed.get('error', 'Command parsing error'),
                                exit_code=EXIT_USAGE)

        command = parsed.get('command', '')
        handler = self.command_handlers.get(command)
        if handler is None:
            return self._result(False, error=f'Unknown command: {command}. Try --help.',
                                exit_code=EXIT_USAGE)
        try:
            return handler(dict(parsed.get('args', {})))
        except USAGE_ERRORS as e:
            return self._result(False, error=self._describe(e), exit_code=EXIT_USAGE)
        except AlgCommError as e:
            return self._result(False, error=self._describe(e), exit_code=EXIT_CHECK_FAILED)
        except (ValueError, KeyError, TypeError) as e:
            return self._result(False, error=f'Bad input: {str(e)}', exit_code=EXIT_USAGE)
        except Exception as e:
            logger.exception('Unexpected failure in %s', command)
            return self._result(False, error=f'Execution error: {str(e)}', exit_code=EXIT_CHECK_FAILED)

    # Result helpers
    @staticmethod
    def _result(success: bool, output: str = '', error: Optional[str] = None,
                exit_code: int = EXIT_OK, report: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        return {'success': success, 'output': output, 'error': error, 'exit_code': exit_code,
                'report': report}

    @staticmethod
    def _describe(e: Exception) -> str:
        name = type(e).__name__
        if isinstance(e, OSError) and e.filename:
            return f'{name}: {e.strerror}: {e.filename}'
        return f'{name}: {str(e)}'

    def _report(self, report: Dict[str, Any], text: Optional[str] = None,
                exit_code: int = EXIT_OK) -> Dict[str, Any]:
        if self.config.output_format == 'json':
            output = json.dumps(report, indent=2, sort_keys=True)
        else:
            output = text if text is not None else render_text(report)
        return self._result(exit_code == EXIT_OK, output=output, exit_code=exit_code, report=report)

    # Shared loading and guarding
    def _protocol(self, path: str):
        protocol = read_protocol(path)
        self._require(self.guard.validate_protocol(protocol))
        return protocol

    @staticmethod
    def _require(validation: Dict[str, Any]) -> None:
        if not validation['valid']:
            raise CapExceededError('; '.join(validation['errors']))

    def _point(self, text: str, expected: int) -> List[Any]:
        point = parse_point(text)
        validation = self.guard.validate_input(point, expected)
        if not validation['valid']:
            raise UsageError(validation['errors'][0])
        return point

    @staticmethod
    def _signs(text: str, varspace: VarSpace) -> SignPoint:
        try:
            point = SignPoint.parse(text, varspace.frame)
        except ValueError as e:
            raise UsageError(str(e)) from None
        if point.size != varspace.size:
            raise UsageError(f'sign point has {point.size} entries, expected {varspace.size}')
        return point

    @staticmethod
    def _order(spec: Optional[str], size: int) -> Optional[TermOrder]:
        if spec is None:
            return None
        try:
            return TermOrder.parse(spec, size)
        except ValueError as e:
            raise UsageError(f'bad term order: {str(e)}') from None

    @staticmethod
    def _single_tree(protocol) -> ProtocolTree:
        if isinstance(protocol, ProbabilisticProtocol) and len(protocol.members) != 1:
            raise UsageError('this command takes a single protocol tree; use "prob" for families')
        return as_tree(protocol)

    # Handlers
    def _handle_validate(self, args: Dict[str, Any]) -> Dict[str, Any]:
        protocol = read_protocol(args['file'])
        trees = protocol.members if isinstance(protocol, ProbabilisticProtocol) else ((None, protocol),)
        violations = []
        for index, (_, tree) in enumerate(trees):
            prefix = f'member {index}: ' if isinstance(protocol, ProbabilisticProtocol) else ''
            violations.extend(f'{prefix}{v}' for v in tree.validate())
        caps = self.guard.validate_protocol(protocol)
        report: Dict[str, Any] = {
            'file': args['file'],
            'kind': 'family' if isinstance(protocol, ProbabilisticProtocol) else 'tree',
            'field': protocol.field.value,
            'n_x': protocol.varspace.n_x,
            'n_y': protocol.varspace.n_y,
            'valid': not violations,
            'violations': violations,
            'cap_errors': caps['errors'],
        }
        if not violations:
            report['depth'] = protocol.depth()
        exit_code = EXIT_OK if not violations else EXIT_CHECK_FAILED
        if violations:
            text = '\n'.join([f'{args["file"]}: {len(violations)} violation(s)'] + violations)
        else:
            text = f'{args["file"]}: valid {report["kind"]}, depth {report["depth"]}'
        if caps['errors']:
            text += '\n' + '\n'.join(f'cap: {e}' for e in caps['errors'])
        return self._report(report, text, exit_code)

    def _handle_run(self, args: Dict[str, Any]) -> Dict[str, Any]:
        tree = self._single_tree(self._protocol(args['file']))
        point = self._point(args['input'], tree.varspace.size)
        transcript = run_rational(tree, point)
        report = {'input': [str(v) for v in point], **transcript.to_dict()}
        return self._report(report)

    def _handle_run_inf(self, args: Dict[str, Any]) -> Dict[str, Any]:
        tree = self._single_tree(self._protocol(args['file']))
        point = self._signs(args['signs'], tree.varspace)
        order = self._order(args.get('order'), tree.varspace.size)
        transcript = run_infinitesimal(tree, point, order)
        report = {'point': str(point), **transcript.to_dict()}
        return self._report(report)

    def _handle_prob(self, args: Dict[str, Any]) -> Dict[str, Any]:
        family = as_family(self._protocol(args['file']))
        space = family.varspace
        if args.get('signs'):
            point: Any = self._signs(args['signs'], space)
            shown = str(point)
        else:
            point = self._point(args['input'], space.size)
            shown = ', '.join(str(v) for v in point)
        order = self._order(args.get('order'), space.size)
        probability = acceptance_probability(family, point, order)
        threshold = self.config.threshold
        report = {
            'point': shown,
            'probability': str(probability),
            'threshold': str(threshold),
            'accepts': probability > threshold,
            'members': len(family.members),
        }
        text = f'P(accept) = {probability}  ({"accept" if probability > threshold else "reject"} at threshold {threshold})'
        return self._report(report, text)

    def _handle_mc(self, args: Dict[str, Any]) -> Dict[str, Any]:
        protocol = self._protocol(args['file']).in_frame(Frame.XY)
        space = protocol.varspace
        target = SetDescriptor.named(args['set_name'], space.n_x, space.n_y)
        if target.variant is SetVariant.KNAPSACK:
            self._require(self.guard.validate_size(target.n_x, self.config.knapsack_oracle_cap,
                                                   'knapsack n'))
        crafted = args.get('crafted') or 0
        if crafted < 0:
            raise UsageError('--crafted must be >= 0')
        self.monitor.start()
        report = monte_carlo(protocol, target, self.config.trials, self.config.seed,
                             self.config.threshold, self.config.knapsack_oracle_cap, crafted)
        self.monitor.log_usage(f'mc sampling ({report.trials} trials, {crafted} crafted)')
        exit_code = EXIT_OK if report.perfect else EXIT_CHECK_FAILED
        text = (f'{report.agreements}/{report.trials + crafted} agreements with {target.variant.value} '
                f'(rate {report.rate}, seed {report.seed})')
        if report.zero_sign_events:
            text += f'; {report.zero_sign_events} exact-zero sign event(s) not counted'
        if report.first_disagreement is not None:
            text += f'; first disagreement at trial {report.first_disagreement}'
        return self._report(report.to_dict(), text, exit_code)

    def _handle_zoo_emit(self, args: Dict[str, Any]) -> Dict[str, Any]:
        name, n = args['name'], args['n']
        if n < 1 or (args.get('n_y') is not None and args['n_y'] < 1):
            raise UsageError('--n and --n-y must be positive')
        if name == 'knapsack':
            self._require(self.guard.validate_size(n, self.config.knapsack_cap, 'knapsack n'))
        protocol = emit(name, n, args.get('n_y'), args.get('mode', 'exact'), self.config.seed,
                        args.get('samples', 64), self.config.knapsack_cap)
        if args.get('out'):
            write_protocol(protocol, args['out'])
            report = {'name': name, 'n': n, 'n_y': protocol.varspace.n_y,
                      'depth': protocol.depth(), 'file': args['out']}
            return self._report(report, f'wrote {name} (depth {report["depth"]}) to {args["out"]}')
        text = serialize(protocol).rstrip('\n')
        return self._result(True, output=text, report=json.loads(text))

    def _polynomial_arg(self, args: Dict[str, Any], frame: Frame = Frame.XY) -> Polynomial:
        if args.get('file'):
            g = read_polynomial(args['file'])
        elif args.get('poly'):
            if args.get('n') is None:
                raise UsageError('--poly needs --n')
            n_y = args.get('n_y') if args.get('n_y') is not None else args['n']
            g = parse_polynomial(args['poly'], VarSpace(args['n'], n_y, frame))
        else:
            raise UsageError('give a polynomial file or --poly')
        self._require(self.guard.validate_polynomial(g))
        return g

    def _handle_certify_rank(self, args: Dict[str, Any]) -> Dict[str, Any]:
        g = self._polynomial_arg(args)
        if g.varspace.frame is Frame.XZ:
            g = change_frame(g, Frame.XY)
        certificate = generic_rank(hessian(g), self.config.trials, self.config.seed,
                                   exact=args.get('exact', False))
        report = {
            'polynomial': str(g),
            'lower_bound': certificate.bound,
            'rechecked': recheck_certificate(certificate),
            'certificate': certificate.to_dict(),
        }
        text = (f'c(g) >= {certificate.bound}  (rank {certificate.claimed_rank} at seed '
                f'{certificate.seed}, minor {certificate.minor_value} on rows '
                f'{list(certificate.row_set)} cols {list(certificate.col_set)})')
        if certificate.exact_rank is not None:
            text += f'; symbolic rank {certificate.exact_rank}'
        return self._report(report, text)

    def _handle_certify_divisor(self, args: Dict[str, Any]) -> Dict[str, Any]:
        n, m = args['n'], args['m']
        if n < 1 or m < 1:
            raise UsageError('--n and --m must be positive')
        h = parse_polynomial(args['h'], VarSpace(n, n))
        self._require(self.guard.validate_polynomial(h, 'h'))
        check = check_divisor_lemma(n, m, h, self.config.trials, self.config.seed)
        text = (f'rank H(f^{m} * ({h})) >= {check.certificate.bound}; lemma bound {check.bound}: '
                + ('holds' if check.holds else 'NOT CERTIFIED'))
        return self._report(check.to_dict(), text, EXIT_OK if check.holds else EXIT_CHECK_FAILED)

    def _handle_certify_minor(self, args: Dict[str, Any]) -> Dict[str, Any]:
        P = parse_polynomial(args['poly'], VarSpace(args['n'], args['n'], Frame.XZ))
        self._require(self.guard.validate_polynomial(P, 'P'))
        check = minor_lemma_check(P, args['k'], self.config.trials, self.config.seed)
        text = (f'mixed Hessian rank >= {check.certificate.bound}; required {check.bound}: '
                + ('holds' if check.holds else 'NOT CERTIFIED'))
        return self._report(check.to_dict(), text, EXIT_OK if check.holds else EXIT_CHECK_FAILED)

    def _handle_certify_recheck(self, args: Dict[str, Any]) -> Dict[str, Any]:
        with open(args['file'], 'r', encoding='utf-8') as handle:
            try:
                doc = json.load(handle)
            except json.JSONDecodeError as e:
                raise ProtocolParseError(e.msg, '', e.lineno) from None
        if isinstance(doc, dict) and 'certificate' in doc and 'claimed_rank' not in doc:
            doc = doc['certificate']
        certificate = RankCertificate.from_dict(doc)
        ok = recheck_certificate(certificate)
        report = {'claimed_rank': certificate.claimed_rank, 'valid': ok}
        text = f'certificate for rank {certificate.claimed_rank}: ' + ('valid' if ok else 'INVALID')
        return self._report(report, text, EXIT_OK if ok else EXIT_CHECK_FAILED)

    def _handle_adversary_orthant(self, args: Dict[str, Any]) -> Dict[str, Any]:
        tree = self._single_tree(self._protocol(args['file']))
        order = self._order(args.get('order'), tree.varspace.size)
        outcome = orthant_adversary(tree, order, args.get('target', 'orthant'))
        if outcome is None:
            report = {'kind': 'none',
                      'message': 'exponent parities along the all-plus path span GF(2); no fooling pair'}
            return self._report(report)
        return self._report(outcome.to_dict())

    def _handle_audit(self, args: Dict[str, Any]) -> Dict[str, Any]:
        family = as_family(self._protocol(args['file']))
        order = self._order(args.get('order'), family.varspace.size)
        degree_cap = args.get('degree_cap') or self.config.max_degree
        self.monitor.start()
        audit = hyperplane_audit(family, args.get('target', 'S'), order, self.config.threshold,
                                 self.config.trials, self.config.seed, degree_cap)
        self.monitor.log_usage(f'audit of {len(family.members)} members')
        return self._report(audit.to_dict(), render_text(audit.to_dict(), first='conclusion'))

    def _handle_det_m(self, args: Dict[str, Any]) -> Dict[str, Any]:
        try:
            l = [int(part) for part in args['l'].split(',') if part.strip()]
        except ValueError:
            raise UsageError(f'--l expects comma-separated positive integers, got {args["l"]!r}') from None
        if not l or any(v < 1 for v in l):
            raise UsageError('--l expects at least one positive integer')
        value = m_matrix_det(l)
        report: Dict[str, Any] = {'l': l, 'det': str(value)}
        text = str(value)
        exit_code = EXIT_OK
        if args.get('brute'):
            brute = brute_force_det(l)
            report['brute_force'] = str(brute)
            report['match'] = brute == value
            text = f'{value}\nbrute force: {brute}'
            exit_code = EXIT_OK if brute == value else EXIT_CHECK_FAILED
        return self._report(report, text, exit_code)


def _scalar_text(value: Any) -> str:
    if value is None:
        return '-'
    if isinstance(value, bool):
        return 'yes' if value else 'no'
    return str(value)


def render_text(report: Dict[str, Any], first: Optional[str] = None) -> str:
    """
    Human-readable form of a report: one "key: value" line per field, nested
    structures as indented JSON.
    """
    keys = list(report)
    if first in report:
        keys.remove(first)
        keys.insert(0, first)
    lines = []
    for key in keys:
        value = report[key]
        if isinstance(value, dict) or (isinstance(value, list) and any(isinstance(v, (dict, list)) for v in value)):
            nested = json.dumps(value, indent=2, sort_keys=True).replace('\n', '\n  ')
            lines.append(f'{key}:\n  {nested}')
        elif isinstance(value, list):
            lines.append(f'{key}: ' + (', '.join(_scalar_text(v) for v in value) or '-'))
        else:
            lines.append(f'{key}: {_scalar_text(value)}')
    return '\n'.join(lines)
