"""
Protocol Module
Two-party communication protocols: rooted trees whose nodes carry a message
polynomial of one party and testing polynomials in the exchanged values.
Handles validation, depth, exact and infinitesimal runs, weighted families
and the complex-to-real conversion.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field as dataclass_field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from errors import (
    ArityError,
    FieldMismatchError,
    FrameError,
    MissingBranchError,
    ProtocolValidationError,
)
from infinitesimal import LeastTerm, SignPoint, change_frame, product_least_term, sign_at
from polynomial import (
    ComplexRational,
    Field,
    Frame,
    Polynomial,
    Scalar,
    VarSpace,
    as_scalar,
    default_pairing,
    re_im_split,
)
from term_order import TermOrder

logger = logging.getLogger(__name__)

# Probabilistic protocols must be correct with probability greater than this.
DEFAULT_THRESHOLD = Fraction(2, 3)


class Sign(str, Enum):
    LT = '<'
    EQ = '='
    GT = '>'
    NE = '!='

    @classmethod
    def of_int(cls, value: int) -> 'Sign':
        return {-1: cls.LT, 0: cls.EQ, 1: cls.GT}[value]


REAL_ALPHABET = (Sign.LT, Sign.EQ, Sign.GT)
COMPLEX_ALPHABET = (Sign.EQ, Sign.NE)


def alphabet(field_tag: Field) -> Tuple[Sign, ...]:
    return REAL_ALPHABET if Field(field_tag) is Field.REAL else COMPLEX_ALPHABET


class Party(str, Enum):
    X = 'X'
    Y = 'Y'


class Verdict(str, Enum):
    ACCEPT = 'accept'
    REJECT = 'reject'


VERDICTS = {v.value: v for v in Verdict}


def fit_formal(poly: Polynomial, size: int) -> Polynomial:
    """Pad or truncate the formal variables of poly to size (dropped ones must be unused)."""
    current = poly.varspace.size
    if current == size:
        return poly
    if current > size and any(i >= size for i in poly.used_variables()):
        raise ArityError(f'{poly} uses variables beyond {poly.varspace.label}{size}')
    space = VarSpace.formal(size, poly.varspace.label or 'Q')
    terms = {}
    for e, c in poly.terms.items():
        terms[tuple(e[:size]) + (0,) * max(0, size - current)] = c
    return Polynomial(space, terms, poly.field)


@dataclass(frozen=True)
class FactoredTest:
    """
    A testing polynomial stored as a product of factors. Sign, value and
    composition act factor-wise; expand() multiplies out on demand.
    """

    factors: Tuple[Polynomial, ...]

    def __post_init__(self):
        factors = tuple(self.factors)
        if not factors:
            raise ValueError('A testing polynomial needs at least one factor')
        if len({(f.varspace, f.field) for f in factors}) != 1:
            raise ValueError('Factors of one test must share variable space and field')
        object.__setattr__(self, 'factors', factors)

    @classmethod
    def of(cls, poly: Polynomial) -> 'FactoredTest':
        return cls((poly,))

    @property
    def varspace(self) -> VarSpace:
        return self.factors[0].varspace

    @property
    def field(self) -> Field:
        return self.factors[0].field

    def used_variables(self) -> List[int]:
        return sorted({i for f in self.factors for i in f.used_variables()})

    def expand(self) -> Polynomial:
        result = self.factors[0]
        for factor in self.factors[1:]:
            result = result * factor
        return result

    def evaluate(self, values: Sequence[Scalar]) -> Scalar:
        product = None
        for factor in self.factors:
            args = list(values[:factor.varspace.size])
            args += [Fraction(0)] * (factor.varspace.size - len(args))
            value = factor.evaluate(args)
            if not value:
                return value
            product = value if product is None else product * value
        return product

    def compose(self, args: Sequence[Polynomial]) -> 'FactoredTest':
        composed = []
        for factor in self.factors:
            size = factor.varspace.size
            padded = list(args[:size])
            if len(padded) < size:
                padded += [Polynomial.zero(args[0].varspace, args[0].field)] * (size - len(padded))
            composed.append(factor.compose(padded))
        return FactoredTest(tuple(composed))

    def sign_at(self, point: SignPoint, order: Optional[TermOrder] = None) -> int:
        sign = 1
        for factor in self.factors:
            sign *= sign_at(factor, point, order)
            if not sign:
                return 0
        return sign

    def least_term(self, order: Optional[TermOrder] = None) -> LeastTerm:
        return product_least_term(self.factors, order)


def _sign_of_value(value: Scalar, field_tag: Field) -> Sign:
    if field_tag is Field.COMPLEX:
        return Sign.EQ if not value else Sign.NE
    return Sign.of_int((value > 0) - (value < 0))


@dataclass(frozen=True)
class ProtocolNode:
    id: str
    party: Party
    message: Polynomial
    tests: Tuple[FactoredTest, ...] = ()
    branches: Mapping[Tuple[Sign, ...], str] = dataclass_field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, 'party', Party(self.party))
        object.__setattr__(self, 'tests', tuple(self.tests))
        object.__setattr__(self, 'branches',
                           {tuple(Sign(s) for s in key): target for key, target in dict(self.branches).items()})

    def targets(self) -> List[str]:
        return list(dict.fromkeys(self.branches.values()))

    def child_ids(self) -> List[str]:
        return [t for t in self.targets() if t not in VERDICTS]


@dataclass(frozen=True)
class Violation:
    node_id: str
    kind: str
    message: str

    def __str__(self):
        return f'[{self.kind}] node {self.node_id}: {self.message}'


@dataclass(frozen=True)
class ProtocolTree:
    varspace: VarSpace
    field: Field
    root: str
    nodes: Mapping[str, ProtocolNode]
    _cache: Dict[str, Any] = dataclass_field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, 'field', Field(self.field))
        object.__setattr__(self, 'nodes', dict(self.nodes))

    # Structure
    def parents(self) -> Dict[str, str]:
        if 'parents' not in self._cache:
            parents: Dict[str, str] = {}
            for node in self.nodes.values():
                for child in node.child_ids():
                    parents.setdefault(child, node.id)
            self._cache['parents'] = parents
        return self._cache['parents']

    def path_to(self, node_id: str) -> List[str]:
        """Node ids from the root down to node_id, both included."""
        parents = self.parents()
        path = [node_id]
        while path[-1] != self.root:
            path.append(parents[path[-1]])
        return list(reversed(path))

    def node_depth(self, node_id: str) -> int:
        return len(self.path_to(node_id))

    def validate(self) -> List[Violation]:
        if 'violations' not in self._cache:
            self._cache['violations'] = validate(self)
        return self._cache['violations']

    def ensure_valid(self) -> None:
        violations = self.validate()
        if violations:
            raise ProtocolValidationError(
                f'Invalid protocol ({len(violations)} violations): {violations[0]}', violations)

    def depth(self) -> int:
        return depth(self)

    def composed_tests(self, node_id: str) -> Tuple[FactoredTest, ...]:
        """Tests of node_id with Q_k replaced by the k-th message on its path."""
        key = f'composed:{node_id}'
        if key not in self._cache:
            messages = [self.nodes[i].message for i in self.path_to(node_id)]
            self._cache[key] = tuple(t.compose(messages) for t in self.nodes[node_id].tests)
        return self._cache[key]

    def in_frame(self, frame: Frame) -> 'ProtocolTree':
        """Same protocol with every message rewritten in the given frame."""
        frame = Frame(frame)
        if frame is self.varspace.frame:
            return self
        nodes = {
            node.id: ProtocolNode(node.id, node.party, change_frame(node.message, frame),
                                  node.tests, node.branches)
            for node in self.nodes.values()
        }
        return ProtocolTree(self.varspace.in_frame(frame), self.field, self.root, nodes)


def _message_violations(tree: ProtocolTree, node: ProtocolNode) -> List[Violation]:
    found = []
    message = node.message
    if message.varspace != tree.varspace:
        return [Violation(node.id, 'varspace', 'message is not in the tree variable space')]
    if message.field != tree.field:
        found.append(Violation(node.id, 'field', f'message field {message.field.value}'))
    if tree.varspace.frame is Frame.XZ:
        message = change_frame(message, Frame.XY)
    n_x = tree.varspace.n_x
    for index in message.used_variables():
        owned = index < n_x if node.party is Party.X else index >= n_x
        if not owned:
            found.append(Violation(
                node.id, 'party',
                f'{node.party.value}-party message uses {message.varspace.name(index)}'))
    return found


def _test_violations(tree: ProtocolTree, node: ProtocolNode, r: int) -> List[Violation]:
    found = []
    letters = alphabet(tree.field)
    for position, test in enumerate(node.tests):
        if not test.varspace.is_formal:
            found.append(Violation(node.id, 'varspace', f'test {position} is not over Q-variables'))
            continue
        if test.field != tree.field:
            found.append(Violation(node.id, 'field', f'test {position} field {test.field.value}'))
        beyond = [i for i in test.used_variables() if i >= r]
        if beyond:
            found.append(Violation(
                node.id, 'arity',
                f'test {position} references Q{beyond[-1] + 1} at depth {r}'))
    for key, target in node.branches.items():
        if len(key) != len(node.tests):
            found.append(Violation(
                node.id, 'branch-arity',
                f'branch key of length {len(key)} for {len(node.tests)} tests'))
        if any(s not in letters for s in key):
            found.append(Violation(
                node.id, 'alphabet',
                f'branch key ({",".join(s.value for s in key)}) outside the {tree.field.value} alphabet'))
        if target not in VERDICTS and target not in tree.nodes:
            found.append(Violation(node.id, 'dangling-branch', f'branch to unknown node {target}'))
    return found


def validate(tree: ProtocolTree) -> List[Violation]:
    """
    Report every violated model constraint.

    Args:
        tree: protocol tree

    Returns:
        list of Violation, empty when the tree is valid
    """
    violations: List[Violation] = []
    if tree.root not in tree.nodes:
        return [Violation(tree.root, 'structure', 'root id is not a node')]
    for node_id, node in tree.nodes.items():
        if node_id != node.id:
            violations.append(Violation(node_id, 'structure', f'keyed under {node_id} but named {node.id}'))
        if node_id in VERDICTS:
            violations.append(Violation(node_id, 'structure', 'node id collides with a verdict'))

    incoming: Dict[str, List[str]] = {}
    for node in tree.nodes.values():
        for child in node.child_ids():
            incoming.setdefault(child, []).append(node.id)
    for child, sources in incoming.items():
        if child == tree.root:
            violations.append(Violation(child, 'structure', f'root has a parent ({sources[0]})'))
        elif len(sources) > 1:
            violations.append(Violation(child, 'structure', f'multiple parents: {", ".join(sources)}'))

    depths: Dict[str, int] = {tree.root: 1}
    frontier = [tree.root]
    while frontier:
        current = frontier.pop()
        for child in tree.nodes[current].child_ids():
            if child in tree.nodes and child not in depths:
                depths[child] = depths[current] + 1
                frontier.append(child)
    for node_id in tree.nodes:
        if node_id not in depths:
            violations.append(Violation(node_id, 'structure', 'unreachable from the root'))

    for node_id in sorted(depths, key=lambda i: (depths[i], i)):
        node = tree.nodes[node_id]
        violations.extend(_message_violations(tree, node))
        violations.extend(_test_violations(tree, node, depths[node_id]))
    return violations


def depth(tree: ProtocolTree) -> int:
    """Maximum number of message nodes on a root-to-leaf path."""
    tree.ensure_valid()
    best = 0
    stack = [(tree.root, 1)]
    while stack:
        node_id, level = stack.pop()
        best = max(best, level)
        stack.extend((child, level + 1) for child in tree.nodes[node_id].child_ids())
    return best


@dataclass(frozen=True)
class Transcript:
    varspace: VarSpace
    path: Tuple[str, ...]
    messages: Tuple[Optional[Scalar], ...]
    signs: Tuple[Tuple[Sign, ...], ...]
    verdict: Verdict
    tests: Tuple[FactoredTest, ...]

    @property
    def accepted(self) -> bool:
        return self.verdict is Verdict.ACCEPT

    def same_route(self, other: 'Transcript') -> bool:
        return self.path == other.path and self.signs == other.signs and self.verdict == other.verdict

    def has_zero_sign(self) -> bool:
        return any(s is Sign.EQ for signs in self.signs for s in signs)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'path': list(self.path),
            'messages': [None if m is None else str(m) for m in self.messages],
            'signs': [[s.value for s in signs] for signs in self.signs],
            'verdict': self.verdict.value,
            'tests': [[str(f) for f in t.factors] for t in self.tests],
        }


def _follow(tree: ProtocolTree, node: ProtocolNode, signs: Tuple[Sign, ...]) -> str:
    target = node.branches.get(signs)
    if target is None:
        raise MissingBranchError(node.id, signs)
    return target


def _coerce_input(tree: ProtocolTree, point: Sequence[Any]) -> List[Scalar]:
    if len(point) != tree.varspace.size:
        raise ArityError(f'Input has {len(point)} coordinates, expected {tree.varspace.size}')
    return [as_scalar(v, tree.field) for v in point]


def run_rational(tree: ProtocolTree, point: Sequence[Any]) -> Transcript:
    """
    Deterministic traversal on an exact input.

    Args:
        tree: valid protocol tree
        point: input (rationals, or Gaussian rationals for complex trees)

    Returns:
        Transcript of the run
    """
    tree.ensure_valid()
    values = _coerce_input(tree, point)
    exchanged: List[Scalar] = []
    path, signs_seen, tests = [], [], []
    node = tree.nodes[tree.root]
    while True:
        exchanged.append(node.message.evaluate(values))
        signs = tuple(_sign_of_value(t.evaluate(exchanged), tree.field) for t in node.tests)
        path.append(node.id)
        signs_seen.append(signs)
        tests.extend(tree.composed_tests(node.id))
        target = _follow(tree, node, signs)
        if target in VERDICTS:
            return Transcript(tree.varspace, tuple(path), tuple(exchanged), tuple(signs_seen),
                              VERDICTS[target], tuple(tests))
        node = tree.nodes[target]


def run_infinitesimal(tree: ProtocolTree, point: SignPoint,
                      order: Optional[TermOrder] = None) -> Transcript:
    """
    Traversal on a signed infinitesimal point; every composed test is signed
    through its least term.
    """
    if tree.field is not Field.REAL:
        raise FieldMismatchError('Infinitesimal runs need a real protocol; realify it first')
    tree.ensure_valid()
    if point.size != tree.varspace.size:
        raise ArityError(f'Sign point has {point.size} entries, expected {tree.varspace.size}')
    if point.frame is not tree.varspace.frame:
        raise FrameError(f'Point in frame {point.frame.value}, protocol in {tree.varspace.frame.value}')
    path, signs_seen, tests = [], [], []
    node = tree.nodes[tree.root]
    while True:
        composed = tree.composed_tests(node.id)
        signs = tuple(Sign.of_int(t.sign_at(point, order)) for t in composed)
        path.append(node.id)
        signs_seen.append(signs)
        tests.extend(composed)
        target = _follow(tree, node, signs)
        if target in VERDICTS:
            return Transcript(tree.varspace, tuple(path), (None,) * len(path), tuple(signs_seen),
                              VERDICTS[target], tuple(tests))
        node = tree.nodes[target]


def run(tree: ProtocolTree, point: Union[SignPoint, Sequence[Any]],
        order: Optional[TermOrder] = None) -> Transcript:
    if isinstance(point, SignPoint):
        return run_infinitesimal(tree, point, order)
    return run_rational(tree, point)


@dataclass(frozen=True)
class ProbabilisticProtocol:
    """A finite family of protocols drawn with exact rational weights."""

    members: Tuple[Tuple[Fraction, ProtocolTree], ...]

    def __post_init__(self):
        members = tuple((Fraction(w), t) for w, t in self.members)
        object.__setattr__(self, 'members', members)
        if not members:
            raise ProtocolValidationError('A probabilistic protocol needs at least one member')
        if any(w <= 0 for w, _ in members):
            raise ProtocolValidationError('Member weights must be positive')
        total = sum(w for w, _ in members)
        if total != 1:
            raise ProtocolValidationError(f'Member weights sum to {total}, not 1')
        first = members[0][1]
        if any(t.varspace != first.varspace or t.field != first.field for _, t in members):
            raise ProtocolValidationError('Members must share variable space and field')

    @property
    def varspace(self) -> VarSpace:
        return self.members[0][1].varspace

    @property
    def field(self) -> Field:
        return self.members[0][1].field

    def depth(self) -> int:
        return max(t.depth() for _, t in self.members)

    def in_frame(self, frame: Frame) -> 'ProbabilisticProtocol':
        return ProbabilisticProtocol(tuple((w, t.in_frame(frame)) for w, t in self.members))


def acceptance_probability(pp: ProbabilisticProtocol, point: Union[SignPoint, Sequence[Any]],
                           order: Optional[TermOrder] = None) -> Fraction:
    """Exact weighted share of members that accept the input."""
    total = Fraction(0)
    for weight, tree in pp.members:
        if run(tree, point, order).accepted:
            total += weight
    return total


def path_product(t: Transcript) -> Polynomial:
    """Product of every composed testing polynomial along the path (1 if none)."""
    field_tag = t.tests[0].field if t.tests else Field.REAL
    product = Polynomial.constant(t.varspace, 1, field_tag)
    for test in t.tests:
        for factor in test.factors:
            product = product * factor
    return product


def path_factors(t: Transcript) -> List[Polynomial]:
    return [factor for test in t.tests for factor in test.factors]


def path_least_term(t: Transcript, order: Optional[TermOrder] = None) -> LeastTerm:
    """lt of the path product computed factor by factor."""
    if not t.tests:
        return LeastTerm(Fraction(1), (0,) * t.varspace.size)
    return product_least_term(path_factors(t), order)


def _complex_key_expansion(key: Tuple[Sign, ...]) -> Iterable[Tuple[Sign, ...]]:
    both_zero = (Sign.EQ, Sign.EQ)
    options = []
    for sign in key:
        if sign is Sign.EQ:
            options.append([both_zero])
        else:
            options.append([pair for pair in itertools.product(REAL_ALPHABET, repeat=2)
                            if pair != both_zero])
    for choice in itertools.product(*options):
        yield tuple(s for pair in choice for s in pair)


def realify(tree: ProtocolTree) -> ProtocolTree:
    """
    Convert a complex protocol into a real one of at most twice the depth.

    Every node v becomes v.re (message Re(a_v), no tests) followed by v.im
    (message Im(a_v)); each test P becomes the pair Re(P), Im(P) over the
    doubled exchanged values, and the complex sign "=" becomes the pair (=, =).
    """
    if tree.field is not Field.COMPLEX:
        raise FieldMismatchError('realify expects a complex protocol')
    tree.ensure_valid()
    pairing, target_space = default_pairing(tree.varspace)
    nodes: Dict[str, ProtocolNode] = {}

    def renamed(target: str) -> str:
        return target if target in VERDICTS else f'{target}.re'

    for node in tree.nodes.values():
        r = tree.node_depth(node.id)
        re_msg, im_msg = re_im_split(node.message, pairing, target_space)
        q_pairing, q_space = default_pairing(VarSpace.formal(r))
        real_tests: List[FactoredTest] = []
        for test in node.tests:
            re_test, im_test = re_im_split(fit_formal(test.expand(), r), q_pairing, q_space)
            real_tests.extend([FactoredTest.of(re_test), FactoredTest.of(im_test)])
        branches = {}
        for key, target in node.branches.items():
            for real_key in _complex_key_expansion(key):
                branches[real_key] = renamed(target)
        nodes[f'{node.id}.re'] = ProtocolNode(f'{node.id}.re', node.party, re_msg, (),
                                             {(): f'{node.id}.im'})
        nodes[f'{node.id}.im'] = ProtocolNode(f'{node.id}.im', node.party, im_msg,
                                             tuple(real_tests), branches)
    logger.debug('Realified %d complex nodes into %d real nodes', len(tree.nodes), len(nodes))
    return ProtocolTree(target_space, Field.REAL, f'{tree.root}.re', nodes)


def realify_input(point: Sequence[Any], n_x: int, n_y: int) -> List[Fraction]:
    """Real input of the realified tree for a complex input (x, y)."""
    lifted = [ComplexRational.lift(v) for v in point]
    if len(lifted) != n_x + n_y:
        raise ArityError(f'Input has {len(lifted)} coordinates, expected {n_x + n_y}')
    xs, ys = lifted[:n_x], lifted[n_x:]
    return ([v.re for v in xs] + [v.im for v in xs] + [v.re for v in ys] + [v.im for v in ys])
