"""
Unit tests for the hyperplane audit.
"""

import sys
import unittest
from fractions import Fraction
from pathlib import Path

# Add the backend directory to the Python path
backend_dir = Path(__file__).parent.parent / 'backend'
sys.path.insert(0, str(backend_dir))

from audit import hyperplane_audit
from errors import ArityError, UsageError
from polynomial import Field, Polynomial, VarSpace, variables
from protocol import FactoredTest, Party, ProbabilisticProtocol, ProtocolNode, ProtocolTree, Sign
from zoo import SetVariant, build_arrangement_det, build_orthant_det, build_polyhedron_det


def single(tree):
    return ProbabilisticProtocol(((Fraction(1), tree),))


def first_coordinate_tree(n):
    """Depth 1: X-party sends X1, accept when it is positive."""
    space = VarSpace(n, n)
    x1 = variables(space)[0]
    branches = {(Sign.GT,): 'accept', (Sign.EQ,): 'reject', (Sign.LT,): 'reject'}
    test = FactoredTest.of(Polynomial.variable(VarSpace.formal(1), 0))
    node = ProtocolNode('v1', Party.X, x1, (test,), branches)
    return ProtocolTree(space, Field.REAL, 'v1', {'v1': node})


def accept_everything(n):
    space = VarSpace(n, n)
    node = ProtocolNode('v1', Party.X, Polynomial.constant(space, 1), (), {(): 'accept'})
    return ProtocolTree(space, Field.REAL, 'v1', {'v1': node})


class PolyhedronAuditTest(unittest.TestCase):

    def test_correct_protocol(self):
        report = hyperplane_audit(single(build_polyhedron_det(2)), 'S')
        self.assertTrue(report.premise_holds)
        self.assertEqual(report.memberships, [True, False, False])
        self.assertEqual(report.selected, 0)
        self.assertEqual(report.required_points, 1)
        self.assertEqual(report.divisible_z, [1, 2])
        self.assertEqual(report.claim_mismatches, [])
        self.assertEqual(report.certificate.claimed_rank, 2)
        self.assertEqual(report.implied_bound, 2)
        self.assertTrue(report.consistent)
        self.assertEqual(report.member_depth, 4)

    def test_accept_everything_breaks_premise(self):
        report = hyperplane_audit(single(accept_everything(1)), 'S')
        self.assertEqual(report.table, [[True, False]])
        self.assertEqual(report.weighted_correctness, [1, 0])
        self.assertFalse(report.premise_holds)
        self.assertIsNone(report.selected)
        self.assertIn('premise fails', report.conclusion)

    def test_shallow_family(self):
        family = ProbabilisticProtocol(((Fraction(1, 2), first_coordinate_tree(4)),
                                        (Fraction(1, 2), accept_everything(4))))
        report = hyperplane_audit(family, 'S')
        self.assertEqual(report.required_points, 2)
        self.assertFalse(report.premise_holds)
        self.assertIsNone(report.selected)
        for row in report.table:
            self.assertTrue(row[0])
            self.assertEqual(sum(row[1:]), 0)

    def test_degree_cap_skips_certificate(self):
        report = hyperplane_audit(single(build_polyhedron_det(2)), 'S', degree_cap=1)
        self.assertEqual(report.selected, 0)
        self.assertIsNone(report.certificate)
        self.assertIn('exceeds cap', report.skipped)
        self.assertTrue(report.consistent)

    def test_report_dict(self):
        doc = hyperplane_audit(single(build_polyhedron_det(1)), SetVariant.POLYHEDRON_S).to_dict()
        self.assertEqual(doc['target'], 'polyhedron')
        self.assertEqual(doc['points'], ['(+,+)', '(+,-)'])
        self.assertEqual(doc['selected_member'], 0)
        self.assertEqual(doc['threshold'], '2/3')
        self.assertIsNotNone(doc['certificate'])


class ArrangementAuditTest(unittest.TestCase):

    def test_correct_protocol(self):
        report = hyperplane_audit(single(build_arrangement_det(2)), 'R')
        self.assertEqual(report.memberships, [False, True, True])
        self.assertTrue(report.premise_holds)
        self.assertEqual(report.selected, 0)
        self.assertEqual(report.divisible_z, [1, 2])
        self.assertIsNotNone(report.certificate)

    def test_bad_inputs(self):
        with self.assertRaises(UsageError):
            hyperplane_audit(single(build_polyhedron_det(1)), 'T')
        with self.assertRaises(ArityError):
            hyperplane_audit(single(build_orthant_det(2, 1)), 'S')


if __name__ == '__main__':
    unittest.main()
