"""
Zoo Module
Built-in target sets with exact membership oracles and the concrete
protocols that recognize them.
"""

import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from errors import ArityError, CapExceededError, FieldMismatchError, FrameError, UsageError
from infinitesimal import SignPoint, change_frame, sign_at
from polynomial import (
    ComplexRational,
    Field,
    Frame,
    Polynomial,
    VarSpace,
    as_scalar,
    inner_product,
    variables,
)
from protocol import (
    REAL_ALPHABET,
    FactoredTest,
    Party,
    ProbabilisticProtocol,
    ProtocolNode,
    ProtocolTree,
    Sign,
    Verdict,
    alphabet,
)
from term_order import TermOrder

logger = logging.getLogger(__name__)

KNAPSACK_PROTOCOL_CAP = 8
KNAPSACK_ORACLE_CAP = 12
EXACT_FAMILY_CAP = 8

ACCEPT = Verdict.ACCEPT.value
REJECT = Verdict.REJECT.value


class SetVariant(str, Enum):
    ORTHANT = 'orthant'
    ORTHANT_CLOSURE = 'orthant-closure'
    POLYHEDRON_S = 'polyhedron'
    ARRANGEMENT = 'arrangement'
    INNER_PRODUCT_HYPERSURFACE = 'hypersurface'
    EMPTINESS = 'emptiness'
    KNAPSACK = 'knapsack'


SQUARE_VARIANTS = {
    SetVariant.POLYHEDRON_S,
    SetVariant.INNER_PRODUCT_HYPERSURFACE,
    SetVariant.EMPTINESS,
    SetVariant.KNAPSACK,
}

SET_ALIASES = {
    'T': SetVariant.ORTHANT,
    'closure': SetVariant.ORTHANT_CLOSURE,
    'S': SetVariant.POLYHEDRON_S,
    'R': SetVariant.ARRANGEMENT,
    'U': SetVariant.INNER_PRODUCT_HYPERSURFACE,
}


def default_forms(n: int) -> Tuple[Polynomial, ...]:
    """X_i + Y_j for every pair (i, j)."""
    gens = variables(VarSpace(n, n))
    return tuple(gens[i] + gens[n + j] for i in range(n) for j in range(n))


@dataclass(frozen=True)
class SetDescriptor:
    variant: SetVariant
    n_x: int
    n_y: int
    forms: Tuple[Polynomial, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'variant', SetVariant(self.variant))
        object.__setattr__(self, 'forms', tuple(self.forms))
        if self.n_x < 0 or self.n_y < 0 or self.n_x + self.n_y < 1:
            raise ValueError('A target set needs at least one variable')
        if self.variant in SQUARE_VARIANTS and self.n_x != self.n_y:
            raise ValueError(f'{self.variant.value} requires n_x == n_y')
        if self.variant is SetVariant.ARRANGEMENT:
            if not self.forms:
                raise ValueError('An arrangement needs at least one linear form')
            space = VarSpace(self.n_x, self.n_y)
            for form in self.forms:
                if form.varspace != space:
                    raise ValueError('Arrangement forms must live in the (X, Y) space of the set')
                if form.total_degree() != 1:
                    raise ValueError(f'Arrangement form {form} is not a nonzero linear polynomial')

    @classmethod
    def named(cls, name: str, n: int, n_y: Optional[int] = None) -> 'SetDescriptor':
        """Descriptor for a CLI name such as "T", "S", "R" or "knapsack"."""
        try:
            variant = SET_ALIASES.get(name) or SetVariant(name)
        except ValueError:
            known = sorted(list(SET_ALIASES) + [v.value for v in SetVariant])
            raise UsageError(f'Unknown set {name!r}; known sets: {", ".join(known)}') from None
        n_y = n if n_y is None else n_y
        forms = default_forms(n) if variant is SetVariant.ARRANGEMENT else ()
        return cls(variant, n, n_y, forms)

    @property
    def varspace(self) -> VarSpace:
        return VarSpace(self.n_x, self.n_y)

    def to_dict(self) -> Dict[str, Any]:
        doc: Dict[str, Any] = {'variant': self.variant.value, 'n_x': self.n_x, 'n_y': self.n_y}
        if self.n_x == self.n_y:
            doc['n'] = self.n_x
        if self.forms:
            doc['forms'] = [f.to_term_list() for f in self.forms]
        return doc

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> 'SetDescriptor':
        n_x = doc.get('n_x', doc.get('n'))
        n_y = doc.get('n_y', doc.get('n'))
        space = VarSpace(n_x, n_y)
        forms = tuple(Polynomial.from_term_list(rows, space) for rows in doc.get('forms', []))
        return cls(SetVariant(doc['variant']), n_x, n_y, forms)


def _knapsack_pairs(n: int):
    """Every (I1, I2) except the pair of empty sets, as index tuples."""
    subsets = _subsets(n)
    for first in subsets:
        for second in subsets:
            if first or second:
                yield first, second


def _nonempty_subset_sums(values: Sequence[Any]) -> set:
    sums: set = set()
    for value in values:
        sums |= {s + value for s in sums} | {value}
    return sums


def membership(target: SetDescriptor, point: Sequence[Any],
               knapsack_cap: int = KNAPSACK_ORACLE_CAP) -> bool:
    """
    Exact membership by direct evaluation.

    Args:
        target: set descriptor
        point: (x, y) as exact rationals; equality-defined sets also take
            Gaussian rationals
        knapsack_cap: largest n the knapsack oracle enumerates

    Returns:
        True when the point lies in the set
    """
    if len(point) != target.n_x + target.n_y:
        raise ArityError(f'Input has {len(point)} coordinates, expected {target.n_x + target.n_y}')
    field = Field.COMPLEX if any(isinstance(v, ComplexRational) and v.im for v in point) else Field.REAL
    if field is Field.COMPLEX and target.variant in (SetVariant.ORTHANT, SetVariant.ORTHANT_CLOSURE,
                                                     SetVariant.POLYHEDRON_S):
        raise FieldMismatchError(f'{target.variant.value} is defined over the reals only')
    values = [as_scalar(v, field) for v in point]
    n_x = target.n_x
    xs, ys = values[:n_x], values[n_x:]
    variant = target.variant
    if variant is SetVariant.ORTHANT:
        return all(v > 0 for v in values)
    if variant is SetVariant.ORTHANT_CLOSURE:
        return all(v >= 0 for v in values)
    if variant is SetVariant.POLYHEDRON_S:
        return all(a + b > 0 for a, b in zip(xs, ys))
    if variant is SetVariant.ARRANGEMENT:
        return any(not form.promote(field).evaluate(values) for form in target.forms)
    if variant is SetVariant.INNER_PRODUCT_HYPERSURFACE:
        return not sum((a * b for a, b in zip(xs, ys)), as_scalar(0, field))
    if variant is SetVariant.EMPTINESS:
        return not any(a == b for a in xs for b in ys)
    if n_x > knapsack_cap:
        raise CapExceededError(f'Knapsack oracle limited to n <= {knapsack_cap}, got {n_x}')
    x_sums = _nonempty_subset_sums(xs)
    y_sums = _nonempty_subset_sums(ys)
    zero = as_scalar(0, field)
    if zero in x_sums or zero in y_sums:
        return True
    return any(-s in x_sums for s in y_sums)


def defining_polynomials(target: SetDescriptor,
                         knapsack_cap: int = KNAPSACK_ORACLE_CAP) -> List[Polynomial]:
    """Polynomials in the (X, Y) frame whose signs decide membership."""
    space = target.varspace
    gens = variables(space)
    n_x = target.n_x
    variant = target.variant
    if variant in (SetVariant.ORTHANT, SetVariant.ORTHANT_CLOSURE):
        return gens
    if variant is SetVariant.POLYHEDRON_S:
        return [gens[i] + gens[n_x + i] for i in range(n_x)]
    if variant is SetVariant.ARRANGEMENT:
        return list(target.forms)
    if variant is SetVariant.INNER_PRODUCT_HYPERSURFACE:
        return [inner_product(n_x)]
    if variant is SetVariant.EMPTINESS:
        return [gens[i] - gens[n_x + j] for i in range(n_x) for j in range(n_x)]
    if n_x > knapsack_cap:
        raise CapExceededError(f'Knapsack oracle limited to n <= {knapsack_cap}, got {n_x}')
    zero = Polynomial.zero(space)
    return [sum((gens[i] for i in first), zero) + sum((gens[n_x + j] for j in second), zero)
            for first, second in _knapsack_pairs(n_x)]


def membership_at_signpoint(target: SetDescriptor, point: SignPoint,
                            order: Optional[TermOrder] = None,
                            knapsack_cap: int = KNAPSACK_ORACLE_CAP) -> bool:
    """Membership of a signed infinitesimal point, one sign_at per defining polynomial."""
    if point.size != target.n_x + target.n_y:
        raise ArityError(f'Sign point has {point.size} entries, expected {target.n_x + target.n_y}')
    polys = defining_polynomials(target, knapsack_cap)
    if point.frame is Frame.XZ:
        if target.n_x != target.n_y:
            raise FrameError('XZ sign points need n_x == n_y')
        polys = [change_frame(g, Frame.XZ) for g in polys]
    signs = [sign_at(g, point, order) for g in polys]
    variant = target.variant
    if variant in (SetVariant.ORTHANT, SetVariant.POLYHEDRON_S):
        return all(s > 0 for s in signs)
    if variant is SetVariant.ORTHANT_CLOSURE:
        return all(s >= 0 for s in signs)
    if variant is SetVariant.EMPTINESS:
        return all(s != 0 for s in signs)
    return any(s == 0 for s in signs)


# Protocol builders
def _node_id(k: int) -> str:
    return f'v{k}'


def _q(r: int, index: int, field: Field = Field.REAL) -> Polynomial:
    return Polynomial.variable(VarSpace.formal(r), index, field)


def _reveal_messages(space: VarSpace, field: Field) -> List[Tuple[Party, Polynomial]]:
    gens = variables(space, field)
    return [(Party.X if space.is_x(i) else Party.Y, gens[i]) for i in range(space.size)]


def _chain(space: VarSpace, field: Field, messages: Sequence[Tuple[Party, Polynomial]],
           tests: Callable[[int], Tuple[FactoredTest, ...]],
           branches: Callable[[int, Optional[str]], Dict[Tuple[Sign, ...], str]]) -> ProtocolTree:
    """A path of message nodes v1..vk; branches(k, next_id) decides every edge."""
    nodes = {}
    total = len(messages)
    for k, (party, message) in enumerate(messages, start=1):
        following = _node_id(k + 1) if k < total else None
        nodes[_node_id(k)] = ProtocolNode(_node_id(k), party, message, tests(k), branches(k, following))
    return ProtocolTree(space, field, _node_id(1), nodes)


def _final_test_tree(space: VarSpace, field: Field, test: Sequence[FactoredTest],
                     verdicts: Dict[Tuple[Sign, ...], str]) -> ProtocolTree:
    """Reveal every coordinate, then decide with the given tests at the last node."""
    total = space.size

    def tests(k):
        return tuple(test) if k == total else ()

    def branches(k, following):
        return dict(verdicts) if k == total else {(): following}

    return _chain(space, field, _reveal_messages(space, field), tests, branches)


def build_orthant_det(n_x: int, n_y: int) -> ProtocolTree:
    """
    Depth n_x + n_y protocol for T: every coordinate is revealed and tested
    positive as soon as it arrives.
    """
    if n_x + n_y < 1:
        raise ValueError('The orthant needs at least one variable')
    space = VarSpace(n_x, n_y)

    def branches(k, following):
        return {(Sign.GT,): following or ACCEPT, (Sign.EQ,): REJECT, (Sign.LT,): REJECT}

    return _chain(space, Field.REAL, _reveal_messages(space, Field.REAL),
                  lambda k: (FactoredTest.of(_q(k, k - 1)),), branches)


def build_orthant_closure_det(n_x: int, n_y: int) -> ProtocolTree:
    if n_x + n_y < 1:
        raise ValueError('The orthant closure needs at least one variable')
    space = VarSpace(n_x, n_y)

    def branches(k, following):
        return {(Sign.GT,): following or ACCEPT, (Sign.EQ,): following or ACCEPT, (Sign.LT,): REJECT}

    return _chain(space, Field.REAL, _reveal_messages(space, Field.REAL),
                  lambda k: (FactoredTest.of(_q(k, k - 1)),), branches)


def _subsets(n: int) -> List[Tuple[int, ...]]:
    return [c for k in range(n + 1) for c in itertools.combinations(range(n), k)]


def orthant_member(n_x: int, n_y: int, i1: Sequence[int], i2: Sequence[int],
                   j1: Sequence[int], j2: Sequence[int]) -> ProtocolTree:
    """Depth-4 member: products over I1, I2 (X-party) and J1, J2 (Y-party), all tested > 0."""
    space = VarSpace(n_x, n_y)
    gens = variables(space)
    one = Polynomial.constant(space, 1)

    def product(indices, offset):
        result = one
        for i in indices:
            result = result * gens[offset + i]
        return result

    messages = [(Party.X, product(i1, 0)), (Party.X, product(i2, 0)),
                (Party.Y, product(j1, n_x)), (Party.Y, product(j2, n_x))]

    def branches(k, following):
        return {(Sign.GT,): following or ACCEPT, (Sign.EQ,): REJECT, (Sign.LT,): REJECT}

    return _chain(space, Field.REAL, messages, lambda k: (FactoredTest.of(_q(k, k - 1)),), branches)


def build_orthant_prob(n_x: int, n_y: int, mode: str = 'exact', seed: int = 0,
                       samples: int = 64, exact_cap: int = EXACT_FAMILY_CAP) -> ProbabilisticProtocol:
    """
    Probabilistic depth-4 protocol for T.

    Args:
        n_x, n_y: variable counts
        mode: "exact" (all 4^(n_x+n_y) subset choices) or "sampled"
        seed: generator seed for the sampled mode
        samples: number of sampled members
        exact_cap: largest n_x + n_y allowed in exact mode

    Returns:
        ProbabilisticProtocol with uniform weights
    """
    if mode == 'exact':
        if n_x + n_y > exact_cap:
            raise CapExceededError(f'Exact orthant family limited to n_x + n_y <= {exact_cap}')
        xs, ys = _subsets(n_x), _subsets(n_y)
        choices = list(itertools.product(xs, xs, ys, ys))
    elif mode == 'sampled':
        if samples < 1:
            raise ValueError('Sampled mode needs at least one member')
        rng = np.random.default_rng(seed)
        choices = []
        for _ in range(samples):
            bits = rng.integers(0, 2, size=2 * (n_x + n_y))
            masks = [bits[:n_x], bits[n_x:2 * n_x], bits[2 * n_x:2 * n_x + n_y], bits[2 * n_x + n_y:]]
            choices.append(tuple(tuple(int(i) for i in np.flatnonzero(m)) for m in masks))
    else:
        raise UsageError(f'Unknown family mode {mode!r}; use exact or sampled')
    weight = Fraction(1, len(choices))
    logger.info('Orthant family (%s): %d members', mode, len(choices))
    return ProbabilisticProtocol(tuple((weight, orthant_member(n_x, n_y, *c)) for c in choices))


def build_knapsack_det(n: int, cap: int = KNAPSACK_PROTOCOL_CAP) -> ProtocolTree:
    """
    Depth-2n protocol: both parties reveal, the last node tests the product of
    every subset-pair sum (4^n - 1 factors) for zero.
    """
    if n < 1:
        raise ValueError('knapsack needs n >= 1')
    if n > cap:
        raise CapExceededError(f'Knapsack protocol limited to n <= {cap}, got {n}')
    q_space = VarSpace.formal(2 * n)
    q = variables(q_space)
    zero = Polynomial.zero(q_space)
    factors = tuple(sum((q[i] for i in first), zero) + sum((q[n + j] for j in second), zero)
                    for first, second in _knapsack_pairs(n))
    verdicts = {(Sign.EQ,): ACCEPT, (Sign.LT,): REJECT, (Sign.GT,): REJECT}
    return _final_test_tree(VarSpace(n, n), Field.REAL, [FactoredTest(factors)], verdicts)


def build_emptiness_det(n: int, field: Field = Field.REAL) -> ProtocolTree:
    """Depth-2n protocol: reject when some Q_i - Q_{n+j} vanishes."""
    if n < 1:
        raise ValueError('emptiness needs n >= 1')
    field = Field(field)
    q = variables(VarSpace.formal(2 * n), field)
    factors = tuple(q[i] - q[n + j] for i in range(n) for j in range(n))
    verdicts = {(s,): ACCEPT for s in alphabet(field) if s is not Sign.EQ}
    verdicts[(Sign.EQ,)] = REJECT
    return _final_test_tree(VarSpace(n, n), field, [FactoredTest(factors)], verdicts)


def build_polyhedron_det(n: int) -> ProtocolTree:
    """Depth-2n protocol for S: n tests Q_i + Q_{n+i} at the last node, accept iff all positive."""
    if n < 1:
        raise ValueError('polyhedron needs n >= 1')
    q = variables(VarSpace.formal(2 * n))
    tests = [FactoredTest.of(q[i] + q[n + i]) for i in range(n)]
    verdicts = {key: (ACCEPT if all(s is Sign.GT for s in key) else REJECT)
                for key in itertools.product(REAL_ALPHABET, repeat=n)}
    return _final_test_tree(VarSpace(n, n), Field.REAL, tests, verdicts)


def build_arrangement_det(n: int, forms: Optional[Sequence[Polynomial]] = None,
                          field: Field = Field.REAL) -> ProtocolTree:
    """Depth-2n protocol for a hyperplane arrangement: accept iff the product of forms vanishes."""
    if n < 1:
        raise ValueError('arrangement needs n >= 1')
    field = Field(field)
    forms = tuple(forms) if forms else default_forms(n)
    q_space = VarSpace.formal(2 * n)
    factors = tuple(form.rebase(q_space).promote(field) for form in forms)
    verdicts = {(s,): REJECT for s in alphabet(field) if s is not Sign.EQ}
    verdicts[(Sign.EQ,)] = ACCEPT
    return _final_test_tree(VarSpace(n, n), field, [FactoredTest(factors)], verdicts)


def build_hypersurface_det(n: int) -> ProtocolTree:
    """Depth-2n protocol for U = {X_1 Y_1 + ... + X_n Y_n = 0}."""
    if n < 1:
        raise ValueError('hypersurface needs n >= 1')
    test = inner_product(n).rebase(VarSpace.formal(2 * n))
    verdicts = {(Sign.EQ,): ACCEPT, (Sign.LT,): REJECT, (Sign.GT,): REJECT}
    return _final_test_tree(VarSpace(n, n), Field.REAL, [FactoredTest.of(test)], verdicts)


def fooling_points(n: int) -> Tuple[SignPoint, List[SignPoint], List[SignPoint]]:
    """u, the points u_i (Z_i negative) and u_i^(0) (Z_i zero), all in the XZ frame."""
    if n < 1:
        raise ValueError('fooling points need n >= 1')
    u = SignPoint.positive(2 * n, Frame.XZ)
    flipped = [u.with_entry(n + i, -1) for i in range(n)]
    zeroed = [u.with_entry(n + i, 0) for i in range(n)]
    return u, flipped, zeroed


# Registry used by `zoo emit` and `mc --set`
def emit(name: str, n: int, n_y: Optional[int] = None, mode: str = 'exact', seed: int = 0,
         samples: int = 64, knapsack_cap: int = KNAPSACK_PROTOCOL_CAP):
    """Build a zoo protocol (tree or family) by name."""
    n_y = n if n_y is None else n_y
    builders: Dict[str, Callable[[], Any]] = {
        'orthant': lambda: build_orthant_det(n, n_y),
        'orthant-closure': lambda: build_orthant_closure_det(n, n_y),
        'orthant-prob': lambda: build_orthant_prob(n, n_y, mode, seed, samples),
        'knapsack': lambda: build_knapsack_det(n, knapsack_cap),
        'emptiness': lambda: build_emptiness_det(n),
        'emptiness-complex': lambda: build_emptiness_det(n, Field.COMPLEX),
        'polyhedron': lambda: build_polyhedron_det(n),
        'arrangement': lambda: build_arrangement_det(n),
        'arrangement-complex': lambda: build_arrangement_det(n, field=Field.COMPLEX),
        'hypersurface': lambda: build_hypersurface_det(n),
    }
    if name not in builders:
        raise UsageError(f'Unknown zoo protocol {name!r}; known: {", ".join(sorted(builders))}')
    return builders[name]()


ZOO_NAMES = (
    'orthant', 'orthant-closure', 'orthant-prob', 'knapsack', 'emptiness', 'emptiness-complex',
    'polyhedron', 'arrangement', 'arrangement-complex', 'hypersurface',
)

ZOO_TARGETS = {
    'orthant': SetVariant.ORTHANT,
    'orthant-closure': SetVariant.ORTHANT_CLOSURE,
    'orthant-prob': SetVariant.ORTHANT,
    'knapsack': SetVariant.KNAPSACK,
    'emptiness': SetVariant.EMPTINESS,
    'emptiness-complex': SetVariant.EMPTINESS,
    'polyhedron': SetVariant.POLYHEDRON_S,
    'arrangement': SetVariant.ARRANGEMENT,
    'arrangement-complex': SetVariant.ARRANGEMENT,
    'hypersurface': SetVariant.INNER_PRODUCT_HYPERSURFACE,
}
