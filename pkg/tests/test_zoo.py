"""
Unit tests for the built-in target sets and their protocols.
"""

import itertools
import random
import sys
import unittest
from fractions import Fraction
from pathlib import Path

# Add the backend directory to the Python path
backend_dir = Path(__file__).parent.parent / 'backend'
sys.path.insert(0, str(backend_dir))

from errors import CapExceededError, FieldMismatchError, UsageError
from infinitesimal import SignPoint
from polynomial import ComplexRational, Field, Frame
from protocol import ProbabilisticProtocol, acceptance_probability, run, run_rational, validate
from protocol_io import deserialize, serialize
from zoo import (
    ZOO_NAMES,
    ZOO_TARGETS,
    SetDescriptor,
    SetVariant,
    build_orthant_prob,
    emit,
    fooling_points,
    membership,
    membership_at_signpoint,
)

GRID = (-1, 0, 1)


def grid(size):
    return [list(map(Fraction, p)) for p in itertools.product(GRID, repeat=size)]


class MembershipTest(unittest.TestCase):

    def test_orthant(self):
        target = SetDescriptor.named('T', 1, 1)
        self.assertTrue(membership(target, [1, 2]))
        self.assertFalse(membership(target, [1, 0]))
        self.assertTrue(membership(SetDescriptor.named('closure', 1, 1), [1, 0]))

    def test_polyhedron_and_hypersurface(self):
        self.assertTrue(membership(SetDescriptor.named('S', 2), [1, -1, 1, 2]))
        self.assertFalse(membership(SetDescriptor.named('S', 2), [1, -2, -1, 2]))
        self.assertTrue(membership(SetDescriptor.named('U', 2), [1, 1, 1, -1]))

    def test_knapsack(self):
        target = SetDescriptor.named('knapsack', 2)
        self.assertTrue(membership(target, [1, 2, -3, 5]))
        self.assertFalse(membership(target, [1, 2, 5, 7]))
        self.assertTrue(membership(target, [1, -1, 5, 7]))
        with self.assertRaises(CapExceededError):
            membership(SetDescriptor.named('knapsack', 13), [1] * 26, knapsack_cap=12)

    def test_emptiness_over_complex_points(self):
        target = SetDescriptor.named('emptiness', 1)
        i = ComplexRational(Fraction(0), Fraction(1))
        self.assertFalse(membership(target, [i, i]))
        self.assertTrue(membership(target, [i, -i]))
        with self.assertRaises(FieldMismatchError):
            membership(SetDescriptor.named('T', 1), [i, i])

    def test_descriptor_checks(self):
        with self.assertRaises(UsageError):
            SetDescriptor.named('nope', 1)
        with self.assertRaises(ValueError):
            SetDescriptor(SetVariant.KNAPSACK, 1, 2)
        doc = SetDescriptor.named('R', 2).to_dict()
        self.assertEqual(SetDescriptor.from_dict(doc), SetDescriptor.named('R', 2))

    def test_signpoint_membership(self):
        target = SetDescriptor.named('S', 1)
        u, flipped, zeroed = fooling_points(1)
        self.assertTrue(membership_at_signpoint(target, u))
        self.assertFalse(membership_at_signpoint(target, flipped[0]))
        arrangement = SetDescriptor.named('R', 1)
        self.assertFalse(membership_at_signpoint(arrangement, u))
        self.assertTrue(membership_at_signpoint(arrangement, zeroed[0]))


class ZooProtocolTest(unittest.TestCase):

    def check_rational(self, name, n):
        protocol = emit(name, n)
        target = SetDescriptor.named(ZOO_TARGETS[name].value, n)
        self.assertEqual(validate(protocol), [], name)
        for point in grid(2 * n):
            self.assertEqual(run_rational(protocol, point).accepted, membership(target, point),
                             f'{name} n={n} at {point}')

    def test_real_protocols_match_oracles(self):
        for name in ('orthant', 'orthant-closure', 'knapsack', 'emptiness', 'polyhedron',
                     'arrangement', 'hypersurface'):
            for n in (1, 2):
                with self.subTest(name=name, n=n):
                    self.check_rational(name, n)

    def test_depths(self):
        self.assertEqual(emit('orthant', 2, 3).depth(), 5)
        self.assertEqual(emit('knapsack', 3).depth(), 6)
        self.assertEqual(emit('orthant-prob', 2).depth(), 4)

    def test_complex_protocols_match_oracles(self):
        rng = random.Random(8)
        for name in ('emptiness-complex', 'arrangement-complex'):
            protocol = emit(name, 2)
            target = SetDescriptor.named(ZOO_TARGETS[name].value, 2)
            self.assertIs(protocol.field, Field.COMPLEX)
            for _ in range(60):
                point = [ComplexRational(Fraction(rng.randint(-1, 1)), Fraction(rng.randint(-1, 1)))
                         for _ in range(4)]
                self.assertEqual(run_rational(protocol, point).accepted, membership(target, point),
                                 f'{name} at {point}')

    def test_infinitesimal_runs_match_oracles(self):
        for name in ('orthant', 'orthant-closure', 'knapsack', 'polyhedron', 'arrangement', 'hypersurface'):
            protocol = emit(name, 2)
            target = SetDescriptor.named(ZOO_TARGETS[name].value, 2)
            for signs in itertools.product(GRID, repeat=4):
                point = SignPoint(signs)
                with self.subTest(name=name, signs=signs):
                    self.assertEqual(run(protocol, point).accepted, membership_at_signpoint(target, point))

    def test_xz_frame_runs(self):
        protocol = emit('polyhedron', 1).in_frame(Frame.XZ)
        target = SetDescriptor.named('S', 1)
        u, flipped, _ = fooling_points(1)
        self.assertTrue(run(protocol, u).accepted)
        self.assertEqual(run(protocol, flipped[0]).accepted, membership_at_signpoint(target, flipped[0]))

    def test_documents_round_trip(self):
        for name in ZOO_NAMES:
            protocol = emit(name, 1)
            with self.subTest(name=name):
                self.assertEqual(deserialize(serialize(protocol)), protocol)

    def test_caps_and_names(self):
        with self.assertRaises(CapExceededError):
            emit('knapsack', 9)
        with self.assertRaises(UsageError):
            emit('cube', 1)
        with self.assertRaises(CapExceededError):
            build_orthant_prob(5, 5)


class OrthantFamilyTest(unittest.TestCase):

    def check_family(self, n, points):
        family = build_orthant_prob(n, n)
        target = SetDescriptor.named('T', n)
        self.assertEqual(len(family.members), 4 ** (2 * n))
        for point in points:
            probability = acceptance_probability(family, point)
            if membership(target, point):
                self.assertEqual(probability, 1, f'{point}')
            else:
                self.assertLessEqual(probability, Fraction(1, 4), f'{point}')

    def test_small_example(self):
        family = build_orthant_prob(1, 1)
        self.assertEqual(acceptance_probability(family, [1, 1]), 1)
        self.assertEqual(acceptance_probability(family, [-1, 1]), Fraction(1, 4))

    def test_exhaustive_one_and_two(self):
        for n in (1, 2):
            self.check_family(n, grid(2 * n))

    def test_three_on_a_sample(self):
        rng = random.Random(3)
        points = [[Fraction(1)] * 6] + rng.sample(grid(6), 12)
        self.check_family(3, points)

    def test_sign_grid(self):
        family = build_orthant_prob(1, 1)
        target = SetDescriptor.named('T', 1)
        for signs in itertools.product(GRID, repeat=2):
            point = SignPoint(signs)
            probability = acceptance_probability(family, point)
            self.assertEqual(probability == 1, membership_at_signpoint(target, point))

    def test_sampled_mode_is_seeded(self):
        first = build_orthant_prob(2, 2, mode='sampled', seed=4, samples=16)
        second = build_orthant_prob(2, 2, mode='sampled', seed=4, samples=16)
        self.assertIsInstance(first, ProbabilisticProtocol)
        self.assertEqual(first, second)
        self.assertEqual(len(first.members), 16)
        self.assertEqual(acceptance_probability(first, [1, 2, 3, 4]), 1)
        with self.assertRaises(UsageError):
            build_orthant_prob(1, 1, mode='guess')


if __name__ == '__main__':
    unittest.main()
