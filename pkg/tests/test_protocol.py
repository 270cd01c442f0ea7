"""
Unit tests for protocol trees: validation, exact and infinitesimal runs,
probabilistic families and the complex-to-real conversion.
"""

import itertools
import math
import random
import sys
import unittest
from fractions import Fraction
from pathlib import Path

# Add the backend directory to the Python path
backend_dir = Path(__file__).parent.parent / 'backend'
sys.path.insert(0, str(backend_dir))

from errors import ArityError, FieldMismatchError, MissingBranchError, ProtocolValidationError
from infinitesimal import SignPoint, epsilon_values, sign_at
from polynomial import ComplexRational, Field, Frame, Polynomial, VarSpace, variables
from protocol import (
    FactoredTest,
    Party,
    ProbabilisticProtocol,
    ProtocolNode,
    ProtocolTree,
    Sign,
    acceptance_probability,
    depth,
    path_factors,
    path_least_term,
    path_product,
    realify,
    realify_input,
    run,
    run_infinitesimal,
    run_rational,
    validate,
)

GT, EQ, LT, NE = Sign.GT, Sign.EQ, Sign.LT, Sign.NE
POSITIVE = {(GT,): 'accept', (EQ,): 'reject', (LT,): 'reject'}


def q(r, index, field=Field.REAL):
    return Polynomial.variable(VarSpace.formal(r), index, field)


def toy_tree():
    """X-party sends X1 and accepts when it is positive (n_x = n_y = 1)."""
    space = VarSpace(1, 1)
    x, _ = variables(space)
    root = ProtocolNode('v1', Party.X, x, (FactoredTest.of(q(1, 0)),), POSITIVE)
    return ProtocolTree(space, Field.REAL, 'v1', {'v1': root})


def product_tree():
    """X1 then Y1 are revealed; accept when X1 * Y1 > 0."""
    space = VarSpace(1, 1)
    x, y = variables(space)
    v1 = ProtocolNode('v1', Party.X, x, (), {(): 'v2'})
    v2 = ProtocolNode('v2', Party.Y, y, (FactoredTest.of(q(2, 0) * q(2, 1)),), POSITIVE)
    return ProtocolTree(space, Field.REAL, 'v1', {'v1': v1, 'v2': v2})


def accept_all(space):
    node = ProtocolNode('v1', Party.X, Polynomial.constant(space, 1), (), {(): 'accept'})
    return ProtocolTree(space, Field.REAL, 'v1', {'v1': node})


def random_polynomial(rng, space, indices, max_degree=2):
    """A non-constant polynomial in the given variables with small integer coefficients."""
    while True:
        poly = Polynomial.zero(space)
        for _ in range(rng.randint(1, 3)):
            exponent = [0] * space.size
            for _ in range(rng.randint(0, max_degree)):
                exponent[rng.choice(indices)] += 1
            poly = poly + Polynomial.monomial(space, exponent, rng.choice((-3, -2, -1, 1, 2, 3)))
        if not poly.is_constant():
            return poly


def random_tree(rng, max_depth=3):
    """A valid real tree on at most three variables with factored tests and random verdicts."""
    n_x, n_y = rng.randint(1, 2), rng.randint(1, 2)
    if n_x + n_y > 3:
        n_y = 1
    space = VarSpace(n_x, n_y)
    nodes = {}

    def grow(r):
        node_id = f'v{len(nodes) + 1}'
        nodes[node_id] = None
        party = rng.choice((Party.X, Party.Y))
        owned = list(range(n_x)) if party is Party.X else list(range(n_x, n_x + n_y))
        message = random_polynomial(rng, space, owned)
        formal = VarSpace.formal(r)
        tests = tuple(
            FactoredTest(tuple(random_polynomial(rng, formal, list(range(r)))
                               for _ in range(rng.randint(1, 2))))
            for _ in range(rng.randint(0, 2)))
        branches = {}
        for key in itertools.product((LT, EQ, GT), repeat=len(tests)):
            if r < max_depth and rng.random() < 0.25:
                branches[key] = grow(r + 1)
            else:
                branches[key] = rng.choice(('accept', 'reject'))
        nodes[node_id] = ProtocolNode(node_id, party, message, tests, branches)
        return node_id

    grow(1)
    return ProtocolTree(space, Field.REAL, 'v1', nodes)


def realization(tree, signs):
    """Concrete epsilons small enough that every composed factor takes its infinitesimal sign."""
    factors = [f for node_id in tree.nodes for test in tree.composed_tests(node_id)
               for f in test.factors if not f.is_zero()]
    base = max([f.total_degree() + 1 for f in factors] + [2])
    t = 1
    for f in factors:
        magnitudes = [abs(c) for c in f.terms.values()]
        t = max(t, math.ceil(sum(magnitudes) / min(magnitudes)).bit_length() + 1)
    return epsilon_values(signs, base, t)


class ValidationTest(unittest.TestCase):

    def test_valid_trees(self):
        self.assertEqual(validate(toy_tree()), [])
        self.assertEqual(depth(toy_tree()), 1)
        self.assertEqual(product_tree().depth(), 2)

    def kinds(self, tree):
        return {v.kind for v in validate(tree)}

    def test_party_ownership(self):
        space = VarSpace(1, 1)
        _, y = variables(space)
        node = ProtocolNode('v1', Party.X, y, (FactoredTest.of(q(1, 0)),), POSITIVE)
        self.assertIn('party', self.kinds(ProtocolTree(space, Field.REAL, 'v1', {'v1': node})))

    def test_test_arity(self):
        space = VarSpace(1, 1)
        x, _ = variables(space)
        node = ProtocolNode('v1', Party.X, x, (FactoredTest.of(q(2, 1)),), POSITIVE)
        self.assertIn('arity', self.kinds(ProtocolTree(space, Field.REAL, 'v1', {'v1': node})))

    def test_unused_padding_is_allowed(self):
        space = VarSpace(1, 1)
        x, _ = variables(space)
        node = ProtocolNode('v1', Party.X, x, (FactoredTest.of(q(3, 0)),), POSITIVE)
        self.assertEqual(validate(ProtocolTree(space, Field.REAL, 'v1', {'v1': node})), [])

    def test_dangling_and_unreachable(self):
        space = VarSpace(1, 1)
        x, y = variables(space)
        v1 = ProtocolNode('v1', Party.X, x, (FactoredTest.of(q(1, 0)),),
                          {(GT,): 'v9', (EQ,): 'reject', (LT,): 'reject'})
        lonely = ProtocolNode('v2', Party.Y, y, (), {(): 'accept'})
        kinds = self.kinds(ProtocolTree(space, Field.REAL, 'v1', {'v1': v1, 'v2': lonely}))
        self.assertIn('dangling-branch', kinds)
        self.assertIn('structure', kinds)

    def test_real_signs_in_complex_tree(self):
        space = VarSpace(1, 0)
        x = Polynomial.variable(space, 0, Field.COMPLEX)
        node = ProtocolNode('v1', Party.X, x, (FactoredTest.of(q(1, 0, Field.COMPLEX)),), POSITIVE)
        self.assertIn('alphabet', self.kinds(ProtocolTree(space, Field.COMPLEX, 'v1', {'v1': node})))

    def test_run_refuses_invalid_tree(self):
        space = VarSpace(1, 1)
        _, y = variables(space)
        node = ProtocolNode('v1', Party.X, y, (), {(): 'accept'})
        tree = ProtocolTree(space, Field.REAL, 'v1', {'v1': node})
        with self.assertRaises(ProtocolValidationError) as context:
            run_rational(tree, [1, 1])
        self.assertTrue(context.exception.violations)

    def test_factored_test_needs_factors(self):
        with self.assertRaises(ValueError):
            FactoredTest(())


class RationalRunTest(unittest.TestCase):

    def test_toy_tree(self):
        tree = toy_tree()
        self.assertTrue(run_rational(tree, [1, -5]).accepted)
        rejected = run_rational(tree, [Fraction(-1, 2), 3])
        self.assertFalse(rejected.accepted)
        self.assertEqual(rejected.signs, ((LT,),))
        self.assertTrue(run_rational(tree, [0, 1]).has_zero_sign())

    def test_composed_tests(self):
        tree = product_tree()
        x, y = variables(tree.varspace)
        self.assertEqual(tree.composed_tests('v2')[0].expand(), x * y)
        transcript = run_rational(tree, [2, 3])
        self.assertEqual(transcript.path, ('v1', 'v2'))
        self.assertEqual(transcript.messages, (Fraction(2), Fraction(3)))
        self.assertTrue(transcript.accepted)
        self.assertFalse(run_rational(tree, [2, -3]).accepted)

    def test_wrong_arity(self):
        with self.assertRaises(ArityError):
            run_rational(toy_tree(), [1])

    def test_missing_branch(self):
        space = VarSpace(1, 1)
        x, _ = variables(space)
        node = ProtocolNode('v1', Party.X, x, (FactoredTest.of(q(1, 0)),), {(GT,): 'accept'})
        tree = ProtocolTree(space, Field.REAL, 'v1', {'v1': node})
        with self.assertRaises(MissingBranchError):
            run_rational(tree, [-1, 0])

    def test_transcript_dict(self):
        doc = run_rational(toy_tree(), [1, 1]).to_dict()
        self.assertEqual(doc['verdict'], 'accept')
        self.assertEqual(doc['signs'], [['>']])
        self.assertEqual(doc['path'], ['v1'])


class InfinitesimalRunTest(unittest.TestCase):

    def test_toy_tree(self):
        tree = toy_tree()
        self.assertTrue(run_infinitesimal(tree, SignPoint((1, 1))).accepted)
        self.assertTrue(run(tree, SignPoint((1, -1))).accepted)
        self.assertFalse(run(tree, SignPoint((-1, 1))).accepted)

    def test_product_tree_uses_composed_signs(self):
        tree = product_tree()
        self.assertTrue(run(tree, SignPoint((-1, -1))).accepted)
        self.assertFalse(run(tree, SignPoint((1, -1))).accepted)
        self.assertFalse(run(tree, SignPoint((0, 1))).accepted)

    def test_xz_frame(self):
        tree = product_tree().in_frame(Frame.XZ)
        self.assertIs(tree.varspace.frame, Frame.XZ)
        self.assertEqual(validate(tree), [])
        # |Z1| is infinitesimal against |X1|, so Y1 = Z1 - X1 has the sign of -X1.
        for signs in ((1, 1), (-1, 1), (1, -1)):
            transcript = run(tree, SignPoint(signs, Frame.XZ))
            self.assertFalse(transcript.accepted)
            self.assertEqual(transcript.signs[-1], (LT,))

    def test_complex_tree_rejected(self):
        space = VarSpace(1, 0)
        x = Polynomial.variable(space, 0, Field.COMPLEX)
        node = ProtocolNode('v1', Party.X, x, (FactoredTest.of(q(1, 0, Field.COMPLEX)),),
                            {(EQ,): 'accept', (NE,): 'reject'})
        tree = ProtocolTree(space, Field.COMPLEX, 'v1', {'v1': node})
        with self.assertRaises(FieldMismatchError):
            run_infinitesimal(tree, SignPoint((1,)))

    def test_path_least_term(self):
        tree = product_tree()
        transcript = run(tree, SignPoint((1, 1)))
        self.assertEqual(path_least_term(transcript).exponent, (1, 1))
        self.assertEqual(path_product(transcript), variables(tree.varspace)[0] * variables(tree.varspace)[1])
        empty = run(accept_all(VarSpace(1, 1)), SignPoint((1, 1)))
        self.assertEqual(path_least_term(empty).coefficient, 1)
        self.assertEqual(path_least_term(empty).exponent, (0, 0))


class InfinitesimalAgreementTest(unittest.TestCase):
    """Runs at a signed point and at a small enough rational realization of it coincide."""

    def test_random_trees_agree_with_realization(self):
        rng = random.Random(77)
        for _ in range(100):
            tree = random_tree(rng)
            self.assertEqual(validate(tree), [])
            for signs in itertools.product((-1, 0, 1), repeat=tree.varspace.size):
                inf = run_infinitesimal(tree, SignPoint(signs))
                exact = run_rational(tree, realization(tree, signs))
                self.assertEqual(inf.verdict, exact.verdict, f'{signs}')
                self.assertEqual(inf.path, exact.path)
                self.assertEqual(inf.signs, exact.signs)

    def test_path_product_sign_is_product_of_factor_signs(self):
        rng = random.Random(78)
        for _ in range(100):
            tree = random_tree(rng)
            for signs in itertools.product((-1, 0, 1), repeat=tree.varspace.size):
                point = SignPoint(signs)
                transcript = run_infinitesimal(tree, point)
                expected = math.prod(sign_at(f, point) for f in path_factors(transcript))
                self.assertEqual(sign_at(path_product(transcript), point), expected)


class ProbabilisticProtocolTest(unittest.TestCase):

    def test_acceptance_probability(self):
        family = ProbabilisticProtocol(((Fraction(1, 2), toy_tree()),
                                        (Fraction(1, 2), accept_all(VarSpace(1, 1)))))
        self.assertEqual(acceptance_probability(family, [1, 1]), 1)
        self.assertEqual(acceptance_probability(family, [-1, 1]), Fraction(1, 2))
        self.assertEqual(acceptance_probability(family, SignPoint((-1, 1))), Fraction(1, 2))
        self.assertEqual(family.depth(), 1)

    def test_weights(self):
        with self.assertRaises(ProtocolValidationError):
            ProbabilisticProtocol(((Fraction(1, 2), toy_tree()),))
        with self.assertRaises(ProtocolValidationError):
            ProbabilisticProtocol(((Fraction(3, 2), toy_tree()), (Fraction(-1, 2), toy_tree())))
        with self.assertRaises(ProtocolValidationError):
            ProbabilisticProtocol(())

    def test_members_share_space(self):
        with self.assertRaises(ProtocolValidationError):
            ProbabilisticProtocol(((Fraction(1, 2), toy_tree()),
                                   (Fraction(1, 2), accept_all(VarSpace(2, 1)))))


class RealifyTest(unittest.TestCase):

    def complex_zero_test(self):
        """X-party sends W1 and accepts when it vanishes."""
        space = VarSpace(1, 1)
        w = Polynomial.variable(space, 0, Field.COMPLEX)
        node = ProtocolNode('v1', Party.X, w, (FactoredTest.of(q(1, 0, Field.COMPLEX)),),
                            {(EQ,): 'accept', (NE,): 'reject'})
        return ProtocolTree(space, Field.COMPLEX, 'v1', {'v1': node})

    def test_structure(self):
        real = realify(self.complex_zero_test())
        self.assertIs(real.field, Field.REAL)
        self.assertEqual(real.varspace, VarSpace(2, 2))
        self.assertEqual(validate(real), [])
        self.assertEqual(real.depth(), 2)
        self.assertEqual(len(real.nodes['v1.im'].branches), 9)
        self.assertEqual(real.nodes['v1.im'].branches[(EQ, EQ)], 'accept')

    def test_verdicts_agree(self):
        tree = self.complex_zero_test()
        real = realify(tree)
        rng = random.Random(17)
        points = [[ComplexRational(Fraction(0), Fraction(0)), ComplexRational(Fraction(1), Fraction(2))]]
        for _ in range(100):
            points.append([ComplexRational(Fraction(rng.randint(-2, 2)), Fraction(rng.randint(-2, 2)))
                           for _ in range(2)])
        for point in points:
            expected = run_rational(tree, point).accepted
            actual = run_rational(real, realify_input(point, 1, 1)).accepted
            self.assertEqual(actual, expected, f'input {point}')

    def test_real_tree_rejected(self):
        with self.assertRaises(FieldMismatchError):
            realify(toy_tree())


if __name__ == '__main__':
    unittest.main()
