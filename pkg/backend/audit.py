"""
Audit Module
Hyperplane audit of a probabilistic protocol against the polyhedron S or a
hyperplane arrangement R, in the (X, Z) coordinates.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Union

from certify import RankCertificate, generic_rank, hessian
from errors import ArityError, FieldMismatchError, ProtocolValidationError, UsageError
from infinitesimal import LeastTerm, SignPoint, change_frame
from polynomial import Field, Frame, Polynomial
from protocol import (
    DEFAULT_THRESHOLD,
    ProbabilisticProtocol,
    Transcript,
    path_factors,
    path_least_term,
    run_infinitesimal,
)
from term_order import TermOrder
from zoo import SetDescriptor, SetVariant, fooling_points, membership_at_signpoint

logger = logging.getLogger(__name__)

AUDIT_TARGETS = {'S': SetVariant.POLYHEDRON_S, 'R': SetVariant.ARRANGEMENT,
                 SetVariant.POLYHEDRON_S.value: SetVariant.POLYHEDRON_S,
                 SetVariant.ARRANGEMENT.value: SetVariant.ARRANGEMENT}

DEFAULT_DEGREE_CAP = 32


@dataclass
class AuditReport:
    target: SetVariant
    n: int
    threshold: Fraction
    points: List[SignPoint]
    memberships: List[bool]
    weights: List[Fraction]
    table: List[List[bool]]
    weighted_correctness: List[Fraction]
    premise_holds: bool
    required_points: int
    selected: Optional[int] = None
    path: List[str] = field(default_factory=list)
    member_depth: Optional[int] = None
    least_term: Optional[LeastTerm] = None
    least_term_text: str = ''
    divisible_z: List[int] = field(default_factory=list)
    claim_mismatches: List[int] = field(default_factory=list)
    certificate: Optional[RankCertificate] = None
    skipped: str = ''
    implied_bound: Optional[int] = None
    consistent: Optional[bool] = None
    conclusion: str = ''

    def to_dict(self) -> Dict[str, Any]:
        return {
            'target': self.target.value,
            'n': self.n,
            'threshold': str(self.threshold),
            'points': [str(p) for p in self.points],
            'memberships': self.memberships,
            'weights': [str(w) for w in self.weights],
            'correctness_table': self.table,
            'weighted_correctness': [str(w) for w in self.weighted_correctness],
            'premise_holds': self.premise_holds,
            'required_points': self.required_points,
            'selected_member': self.selected,
            'path': self.path,
            'member_depth': self.member_depth,
            'path_least_term': self.least_term_text or None,
            'path_least_term_exponent': list(self.least_term.exponent) if self.least_term else None,
            'divisible_z': self.divisible_z,
            'claim_mismatches': self.claim_mismatches,
            'certificate': self.certificate.to_dict() if self.certificate else None,
            'certificate_skipped': self.skipped or None,
            'implied_bound': self.implied_bound,
            'consistent': self.consistent,
            'conclusion': self.conclusion,
        }


def _target(target: Union[str, SetVariant], n: int) -> SetDescriptor:
    key = target.value if isinstance(target, SetVariant) else target
    if key not in AUDIT_TARGETS:
        raise UsageError(f'audit target must be S or R, got {key!r}')
    return SetDescriptor.named(AUDIT_TARGETS[key].value, n)


def _path_degree(factors: Sequence[Polynomial]) -> int:
    return sum(max(f.total_degree(), 0) for f in factors)


def _certify_path(transcript: Transcript, report: AuditReport, trials: int, seed: int,
                  degree_cap: int) -> None:
    factors = path_factors(transcript)
    degree = _path_degree(factors)
    if degree > degree_cap:
        report.skipped = f'path product degree {degree} exceeds cap {degree_cap}'
        logger.info('Audit rank certificate skipped: %s', report.skipped)
        return
    space = transcript.varspace
    product = Polynomial.constant(space, 1)
    for factor in factors:
        product = product * factor
    report.certificate = generic_rank(hessian(change_frame(product, Frame.XY)), trials, seed)


def hyperplane_audit(pp: ProbabilisticProtocol, target: Union[str, SetVariant] = 'S',
                     order: Optional[TermOrder] = None, threshold: Fraction = DEFAULT_THRESHOLD,
                     trials: int = 8, seed: int = 0,
                     degree_cap: int = DEFAULT_DEGREE_CAP) -> AuditReport:
    """
    Run every member at u and at the test points u_i (S) or u_i^(0) (R).

    Args:
        pp: real probabilistic protocol with n_x == n_y == n
        target: "S" or "R"
        order: term order of the (X, Z) space
        threshold: per-point correctness the family must exceed
        trials, seed: rank certificate options
        degree_cap: largest path-product degree the certificate expands

    Returns:
        AuditReport
    """
    if pp.field is not Field.REAL:
        raise FieldMismatchError('hyperplane_audit expects a real protocol family')
    space = pp.varspace
    if space.n_x != space.n_y or space.n_x < 1:
        raise ArityError('hyperplane_audit needs n_x == n_y >= 1')
    for index, (_, tree) in enumerate(pp.members):
        violations = tree.validate()
        if violations:
            raise ProtocolValidationError(f'member {index}: {violations[0]}', violations)
    n = space.n_x
    descriptor = _target(target, n)
    members = pp.in_frame(Frame.XZ).members
    u, flipped, zeroed = fooling_points(n)
    tests = flipped if descriptor.variant is SetVariant.POLYHEDRON_S else zeroed
    points = [u] + tests
    memberships = [membership_at_signpoint(descriptor, p, order) for p in points]

    table: List[List[bool]] = []
    runs: List[List[Transcript]] = []
    for _, tree in members:
        transcripts = [run_infinitesimal(tree, p, order) for p in points]
        runs.append(transcripts)
        table.append([t.accepted == m for t, m in zip(transcripts, memberships)])
    weights = [w for w, _ in members]
    weighted = [sum((w for w, row in zip(weights, table) if row[j]), Fraction(0))
                for j in range(len(points))]
    premise = all(value > threshold for value in weighted)
    required = math.ceil(n / 2)

    report = AuditReport(descriptor.variant, n, Fraction(threshold), points, memberships, weights,
                         table, weighted, premise, required)
    for index, row in enumerate(table):
        if row[0] and sum(row[1:]) >= required:
            report.selected = index
            break

    if report.selected is None:
        report.conclusion = (
            f'no member is correct on u and on at least {required} of the {n} test points; '
            + ('the correctness premise holds, so this contradicts the averaging argument'
               if premise else 'the correctness premise fails at '
               + ', '.join(str(points[j]) for j, v in enumerate(weighted) if v <= threshold)))
        logger.info('Audit: no member selected (premise %s)', premise)
        return report

    selected_tree = members[report.selected][1]
    transcript = runs[report.selected][0]
    report.path = list(transcript.path)
    report.member_depth = selected_tree.depth()
    if any(f.is_zero() for f in path_factors(transcript)):
        report.consistent = False
        report.conclusion = (f'member {report.selected} is selected but its path product at u is '
                             'identically zero, so it has no least term')
        return report
    lt = path_least_term(transcript, order)
    report.least_term = lt
    report.least_term_text = str(lt.as_polynomial(transcript.varspace))
    report.divisible_z = [i + 1 for i in range(n) if lt.exponent[n + i] >= 1]
    correct_tests = [i + 1 for i in range(n) if table[report.selected][i + 1]]
    report.claim_mismatches = [i for i in correct_tests if i not in report.divisible_z]
    _certify_path(transcript, report, trials, seed, degree_cap)

    k = len(report.divisible_z)
    rank = report.certificate.claimed_rank if report.certificate else None
    report.implied_bound = rank
    parts = [f'member {report.selected} is correct on u and on {len(correct_tests)} of {n} test points',
             f'Z_i divides lt(path product) for i in {report.divisible_z or "none"}']
    if report.claim_mismatches:
        parts.append(f'claim fails for i in {report.claim_mismatches}')
    if rank is not None:
        report.consistent = (len(transcript.path) >= rank and not report.claim_mismatches
                             and (k <= 1 or rank >= k))
        parts.append(f'certified mixed Hessian rank {rank}, so the path needs at least {rank} messages')
        parts.append(f'path length {len(transcript.path)}, member depth {report.member_depth}: '
                     + ('consistent' if report.consistent else 'INCONSISTENT'))
    else:
        report.consistent = not report.claim_mismatches
        parts.append(f'rank certificate skipped ({report.skipped})')
    report.conclusion = '; '.join(parts)
    return report
