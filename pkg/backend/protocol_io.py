"""
Protocol I/O Module
JSON documents for protocol trees and probabilistic families.
"""

import json
import logging
from fractions import Fraction
from typing import Any, Dict, Optional, Union

import sympy
from sympy.polys.polyerrors import BasePolynomialError
from sympy.parsing.sympy_parser import (
    convert_xor,
    implicit_multiplication,
    parse_expr,
    rationalize,
    standard_transformations,
)

from errors import AlgCommError, ProtocolParseError, ProtocolValidationError, UsageError
from polynomial import ComplexRational, Field, Frame, Polynomial, VarSpace
from protocol import (
    FactoredTest,
    Party,
    ProbabilisticProtocol,
    ProtocolNode,
    ProtocolTree,
    Sign,
)

logger = logging.getLogger(__name__)

Protocol = Union[ProtocolTree, ProbabilisticProtocol]

PARTY_NAMES = {'X': Party.X, 'X-party': Party.X, 'Y': Party.Y, 'Y-party': Party.Y}


# Writing
def _test_to_doc(test: FactoredTest) -> Any:
    if len(test.factors) == 1:
        return test.factors[0].to_term_list()
    return {'factors': [f.to_term_list() for f in test.factors]}


def _tree_to_doc(tree: ProtocolTree) -> Dict[str, Any]:
    nodes = []
    for node in tree.nodes.values():
        branches = [
            {'signs': [s.value for s in key], 'child': target}
            for key, target in sorted(node.branches.items(),
                                      key=lambda kv: [s.value for s in kv[0]])
        ]
        nodes.append({
            'id': node.id,
            'party': node.party.value,
            'message': node.message.to_term_list(),
            'tests': [_test_to_doc(t) for t in node.tests],
            'branches': branches,
        })
    return {
        'field': tree.field.value,
        'n_x': tree.varspace.n_x,
        'n_y': tree.varspace.n_y,
        'frame': tree.varspace.frame.value,
        'root': tree.root,
        'nodes': nodes,
    }


def to_document(protocol: Protocol) -> Dict[str, Any]:
    if isinstance(protocol, ProbabilisticProtocol):
        return {'members': [
            {'weight': [w.numerator, w.denominator], 'tree': _tree_to_doc(t)}
            for w, t in protocol.members
        ]}
    return _tree_to_doc(protocol)


def serialize(protocol: Protocol) -> str:
    """Deterministic JSON text for a tree or a probabilistic family."""
    return json.dumps(to_document(protocol), indent=2, sort_keys=True) + '\n'


# Reading
class _Reader:
    """Walks a decoded document, tracking the JSON path for diagnostics."""

    def __init__(self, text: str):
        self.text = text

    def fail(self, message: str, path: str, needle: Optional[str] = None) -> ProtocolParseError:
        return ProtocolParseError(message, path, self._line_of(needle))

    def _line_of(self, needle: Optional[str]) -> Optional[int]:
        if not needle:
            return None
        position = self.text.find(json.dumps(needle))
        if position < 0:
            return None
        return self.text.count('\n', 0, position) + 1

    def require(self, doc: Dict[str, Any], key: str, path: str, needle: Optional[str] = None) -> Any:
        if not isinstance(doc, dict):
            raise self.fail('expected an object', path, needle)
        if key not in doc:
            raise self.fail(f'missing field "{key}"', path, needle)
        return doc[key]

    def polynomial(self, rows: Any, space: VarSpace, field: Field, path: str, needle: str) -> Polynomial:
        if not isinstance(rows, list):
            raise self.fail('term-list must be an array', path, needle)
        try:
            return Polynomial.from_term_list(rows, space, field)
        except (AlgCommError, ValueError, TypeError, IndexError) as exc:
            raise self.fail(f'bad term-list: {exc}', path, needle) from None

    def formal_polynomial(self, rows: Any, field: Field, path: str, needle: str) -> Polynomial:
        if not isinstance(rows, list):
            raise self.fail('term-list must be an array', path, needle)
        arity = 1
        if rows:
            try:
                arity = len(rows[0][-1])
            except (TypeError, IndexError):
                raise self.fail('term must end with an exponent vector', path, needle) from None
        return self.polynomial(rows, VarSpace.formal(arity), field, path, needle)

    def test(self, doc: Any, field: Field, path: str, needle: str) -> FactoredTest:
        if isinstance(doc, dict):
            factors = self.require(doc, 'factors', path, needle)
            if not isinstance(factors, list) or not factors:
                raise self.fail('"factors" must be a non-empty array', path, needle)
            polys = [self.formal_polynomial(f, field, f'{path}.factors[{i}]', needle)
                     for i, f in enumerate(factors)]
            arity = max(p.varspace.size for p in polys)
            return FactoredTest(tuple(_widen(p, arity) for p in polys))
        return FactoredTest.of(self.formal_polynomial(doc, field, path, needle))

    def node(self, doc: Any, space: VarSpace, field: Field, path: str) -> ProtocolNode:
        node_id = self.require(doc, 'id', path)
        if not isinstance(node_id, str) or not node_id:
            raise self.fail('node id must be a non-empty string', f'{path}.id')
        party_name = self.require(doc, 'party', path, node_id)
        if party_name not in PARTY_NAMES:
            raise self.fail(f'unknown party {party_name!r}', f'{path}.party', node_id)
        message = self.polynomial(self.require(doc, 'message', path, node_id), space, field,
                                  f'{path}.message', node_id)
        tests_doc = doc.get('tests', [])
        if not isinstance(tests_doc, list):
            raise self.fail('"tests" must be an array', f'{path}.tests', node_id)
        tests = tuple(self.test(t, field, f'{path}.tests[{i}]', node_id) for i, t in enumerate(tests_doc))
        branches = {}
        for i, branch in enumerate(self.require(doc, 'branches', path, node_id)):
            where = f'{path}.branches[{i}]'
            signs = self.require(branch, 'signs', where, node_id)
            child = self.require(branch, 'child', where, node_id)
            try:
                key = tuple(Sign(s) for s in signs)
            except (ValueError, TypeError):
                raise self.fail(f'unknown sign in {signs!r}', f'{where}.signs', node_id) from None
            if len(key) != len(tests):
                raise self.fail(f'branch key of length {len(key)} for {len(tests)} tests',
                                f'{where}.signs', node_id)
            if key in branches:
                raise self.fail('duplicate branch key', f'{where}.signs', node_id)
            if not isinstance(child, str):
                raise self.fail('child must be a node id, "accept" or "reject"', f'{where}.child', node_id)
            branches[key] = child
        return ProtocolNode(node_id, PARTY_NAMES[party_name], message, tests, branches)

    def tree(self, doc: Any, path: str) -> ProtocolTree:
        field_name = self.require(doc, 'field', path)
        try:
            field = Field(field_name)
        except ValueError:
            raise self.fail('field must be "real" or "complex"', _join(path, 'field')) from None
        n_x = self.require(doc, 'n_x', path)
        n_y = self.require(doc, 'n_y', path)
        if not all(isinstance(n, int) and not isinstance(n, bool) and n >= 0 for n in (n_x, n_y)):
            raise self.fail('n_x and n_y must be non-negative integers', path)
        try:
            space = VarSpace(n_x, n_y, Frame(doc.get('frame', 'XY')))
        except ValueError as exc:
            raise self.fail(str(exc), _join(path, 'frame')) from None
        root = self.require(doc, 'root', path)
        nodes_doc = self.require(doc, 'nodes', path)
        if not isinstance(nodes_doc, list) or not nodes_doc:
            raise self.fail('"nodes" must be a non-empty array', _join(path, 'nodes'))
        nodes: Dict[str, ProtocolNode] = {}
        for i, node_doc in enumerate(nodes_doc):
            node = self.node(node_doc, space, field, _join(path, f'nodes[{i}]'))
            if node.id in nodes:
                raise self.fail(f'duplicate node id {node.id}', _join(path, f'nodes[{i}].id'), node.id)
            nodes[node.id] = node
        return ProtocolTree(space, field, root, nodes)

    def members(self, doc: Dict[str, Any]) -> ProbabilisticProtocol:
        members_doc = doc['members']
        if not isinstance(members_doc, list):
            raise self.fail('"members" must be an array', 'members')
        members = []
        for i, member in enumerate(members_doc):
            where = f'members[{i}]'
            weight = self.require(member, 'weight', where)
            try:
                value = Fraction(int(weight[0]), int(weight[1]))
            except (TypeError, ValueError, IndexError, ZeroDivisionError):
                raise self.fail('weight must be [numerator, denominator]', f'{where}.weight') from None
            members.append((value, self.tree(self.require(member, 'tree', where), f'{where}.tree')))
        return ProbabilisticProtocol(tuple(members))


def _join(path: str, key: str) -> str:
    return f'{path}.{key}' if path else key


def _widen(poly: Polynomial, arity: int) -> Polynomial:
    if poly.varspace.size == arity:
        return poly
    pad = arity - poly.varspace.size
    return Polynomial(VarSpace.formal(arity), {e + (0,) * pad: c for e, c in poly.terms.items()}, poly.field)


def deserialize(text: str) -> Protocol:
    """
    Parse a protocol document.

    Args:
        text: JSON text of a tree, or of {"members": [...]}

    Returns:
        ProtocolTree or ProbabilisticProtocol

    Raises:
        ProtocolParseError: malformed document (with line and field path)
        ProtocolValidationError: probabilistic weights or member spaces invalid
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProtocolParseError(exc.msg, '', exc.lineno) from None
    reader = _Reader(text)
    if isinstance(doc, dict) and 'members' in doc:
        return reader.members(doc)
    return reader.tree(doc, '')


def read_protocol(path: str) -> Protocol:
    with open(path, 'r', encoding='utf-8') as handle:
        text = handle.read()
    logger.debug('Read protocol document %s (%d bytes)', path, len(text))
    return deserialize(text)


def write_protocol(protocol: Protocol, path: str) -> None:
    with open(path, 'w', encoding='utf-8') as handle:
        handle.write(serialize(protocol))


def as_tree(protocol: Protocol) -> ProtocolTree:
    if isinstance(protocol, ProbabilisticProtocol):
        if len(protocol.members) != 1:
            raise ProtocolValidationError('Expected a single protocol tree, got a family')
        return protocol.members[0][1]
    return protocol


def as_family(protocol: Protocol) -> ProbabilisticProtocol:
    if isinstance(protocol, ProtocolTree):
        return ProbabilisticProtocol(((Fraction(1), protocol),))
    return protocol


# Polynomial documents and expression text
_TRANSFORMATIONS = standard_transformations + (convert_xor,)


def parse_polynomial(text: str, space: VarSpace, field: Field = Field.REAL) -> Polynomial:
    """
    Read a polynomial over `space` from a term-list (JSON text starting with
    "[") or from an expression such as "X1*Y1 + X2^2 - 1/2".

    Raises:
        UsageError: unknown variable names or a non-polynomial expression
    """
    text = text.strip()
    if text.startswith('['):
        try:
            return Polynomial.from_term_list(json.loads(text), space, field)
        except (json.JSONDecodeError, AlgCommError, ValueError, TypeError, IndexError) as exc:
            raise UsageError(f'bad term-list {text!r}: {exc}') from None
    names = [space.name(i) for i in range(space.size)]
    gens = sympy.symbols(names) if names else []
    gens = list(gens) if isinstance(gens, (list, tuple)) else [gens]
    local = dict(zip(names, gens))
    local['I'] = sympy.I
    try:
        expr = parse_expr(text, local_dict=local, transformations=_TRANSFORMATIONS)
    except (SyntaxError, TypeError, ValueError, sympy.SympifyError) as exc:
        raise UsageError(f'cannot parse polynomial {text!r}: {exc}') from None
    unknown = sorted(str(s) for s in expr.free_symbols if s not in gens)
    if unknown:
        raise UsageError(f'unknown variables {", ".join(unknown)}; expected {", ".join(names) or "none"}')
    terms: Dict[tuple, Any] = {}
    try:
        if not gens:
            value = sympy.nsimplify(expr)
            pairs = [((), value)]
        else:
            pairs = sympy.Poly(sympy.expand(expr), *gens).terms()
    except BasePolynomialError as exc:
        raise UsageError(f'not a polynomial: {text!r} ({exc})') from None
    for monomial, coefficient in pairs:
        re, im = coefficient.as_real_imag()
        if not (re.is_Rational and im.is_Rational):
            raise UsageError(f'coefficient {coefficient} is not rational')
        if im != 0:
            if field is Field.REAL:
                raise UsageError(f'complex coefficient {coefficient} in a real polynomial')
            terms[tuple(monomial)] = ComplexRational(Fraction(int(re.p), int(re.q)),
                                                     Fraction(int(im.p), int(im.q)))
        elif re != 0:
            terms[tuple(monomial)] = Fraction(int(re.p), int(re.q))
    return Polynomial(space, terms, field)


def polynomial_to_document(g: Polynomial) -> Dict[str, Any]:
    return {
        'field': g.field.value,
        'n_x': g.varspace.n_x,
        'n_y': g.varspace.n_y,
        'frame': g.varspace.frame.value,
        'terms': g.to_term_list(),
        'text': str(g),
    }


def polynomial_from_document(text: str) -> Polynomial:
    """
    Parse {"field", "n_x", "n_y", "frame", "terms" | "expr"}.

    Raises:
        ProtocolParseError: malformed document
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProtocolParseError(exc.msg, '', exc.lineno) from None
    reader = _Reader(text)
    field_name = doc.get('field', 'real') if isinstance(doc, dict) else None
    try:
        field = Field(field_name)
    except ValueError:
        raise reader.fail('field must be "real" or "complex"', 'field') from None
    n_x = reader.require(doc, 'n_x', '')
    n_y = reader.require(doc, 'n_y', '')
    if not all(isinstance(n, int) and not isinstance(n, bool) and n >= 0 for n in (n_x, n_y)):
        raise reader.fail('n_x and n_y must be non-negative integers', '')
    try:
        space = VarSpace(n_x, n_y, Frame(doc.get('frame', 'XY')))
    except ValueError as exc:
        raise reader.fail(str(exc), 'frame') from None
    if 'expr' in doc:
        try:
            return parse_polynomial(str(doc['expr']), space, field)
        except UsageError as exc:
            raise reader.fail(str(exc), 'expr', 'expr') from None
    return reader.polynomial(reader.require(doc, 'terms', ''), space, field, 'terms', 'terms')


def read_polynomial(path: str) -> Polynomial:
    with open(path, 'r', encoding='utf-8') as handle:
        return polynomial_from_document(handle.read())


_SCALAR_TRANSFORMATIONS = standard_transformations + (implicit_multiplication, convert_xor, rationalize)


def parse_scalar(text: str) -> Any:
    """"3", "-1/2", "0.25", "1/2+3i" -> Fraction or ComplexRational."""
    try:
        expr = parse_expr(text.strip(), local_dict={'i': sympy.I, 'I': sympy.I},
                          transformations=_SCALAR_TRANSFORMATIONS)
        re, im = sympy.nsimplify(expr).as_real_imag()
    except (SyntaxError, TypeError, ValueError, AttributeError, sympy.SympifyError):
        raise UsageError(f'not an exact number: {text!r}') from None
    if not (re.is_Rational and im.is_Rational):
        raise UsageError(f'not an exact rational number: {text!r}')
    real = Fraction(int(re.p), int(re.q))
    if im != 0:
        return ComplexRational(real, Fraction(int(im.p), int(im.q)))
    return real


def parse_point(text: str) -> list:
    """Comma-separated coordinates, e.g. "1, -2, 3/4"."""
    parts = [p for p in text.split(',') if p.strip()]
    if not parts:
        raise UsageError('input point is empty')
    return [parse_scalar(p) for p in parts]
