"""
Adversary Module
Fooling pairs for protocols that claim to recognize the orthant (or its
closure) with too little communication.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple, Union

from errors import AdversaryVerificationError, FieldMismatchError
from gf2 import is_orthogonal, smallest_nullspace_vector
from infinitesimal import SignPoint
from polynomial import Field, Frame
from protocol import ProtocolTree, Transcript, run_infinitesimal
from term_order import TermOrder
from zoo import SetDescriptor, SetVariant, membership_at_signpoint

logger = logging.getLogger(__name__)

ORTHANT_TARGETS = (SetVariant.ORTHANT, SetVariant.ORTHANT_CLOSURE)


@dataclass(frozen=True)
class FoolingReport:
    """Two inputs on the same protocol path with different membership."""

    flip_vector: Tuple[int, ...]
    point_a: SignPoint
    point_b: SignPoint
    exponent_vectors: Tuple[Tuple[int, ...], ...]
    transcripts_identical: bool
    memberships: Tuple[bool, bool]
    target: SetVariant
    transcript: Transcript

    def to_dict(self) -> Dict[str, Any]:
        return {
            'kind': 'fooling-pair',
            'target': self.target.value,
            'flip_vector': list(self.flip_vector),
            'point_a': str(self.point_a),
            'point_b': str(self.point_b),
            'exponent_vectors': [list(k) for k in self.exponent_vectors],
            'transcripts_identical': self.transcripts_identical,
            'memberships': list(self.memberships),
            'verdict': self.transcript.verdict.value,
            'path': list(self.transcript.path),
            'signs': [[s.value for s in signs] for signs in self.transcript.signs],
        }


@dataclass(frozen=True)
class DirectMisclassification:
    """The protocol already errs on the all-positive point."""

    point: SignPoint
    membership: bool
    target: SetVariant
    transcript: Transcript

    def to_dict(self) -> Dict[str, Any]:
        return {
            'kind': 'direct-misclassification',
            'target': self.target.value,
            'point': str(self.point),
            'membership': self.membership,
            'verdict': self.transcript.verdict.value,
            'path': list(self.transcript.path),
        }


AdversaryResult = Optional[Union[FoolingReport, DirectMisclassification]]


def _target_descriptor(tree: ProtocolTree, target: Union[str, SetVariant]) -> SetDescriptor:
    variant = SetVariant(target)
    if variant not in ORTHANT_TARGETS:
        raise ValueError(f'orthant_adversary targets the orthant or its closure, not {variant.value}')
    return SetDescriptor(variant, tree.varspace.n_x, tree.varspace.n_y)


def _exponent_vectors(transcript: Transcript, order: Optional[TermOrder]) -> Tuple[Tuple[int, ...], ...]:
    vectors = []
    for test in transcript.tests:
        # A vanishing test keeps sign 0 under every flip.
        if any(f.is_zero() for f in test.factors):
            continue
        vectors.append(tuple(test.least_term(order).exponent))
    return tuple(vectors)


def orthant_adversary(tree: ProtocolTree, order: Optional[TermOrder] = None,
                      target: Union[str, SetVariant] = SetVariant.ORTHANT) -> AdversaryResult:
    """
    Search for a fooling pair against a protocol claiming to recognize T.

    Args:
        tree: valid real protocol over n_x + n_y variables
        order: term order for least terms
        target: orthant or orthant-closure

    Returns:
        DirectMisclassification, a verified FoolingReport, or None when the
        parity vectors of the accepting path span GF(2)^(n_x + n_y)

    Raises:
        AdversaryVerificationError: the constructed pair failed its rerun
    """
    if tree.field is not Field.REAL:
        raise FieldMismatchError('orthant_adversary expects a real protocol')
    tree.ensure_valid()
    tree = tree.in_frame(Frame.XY)
    descriptor = _target_descriptor(tree, target)
    size = tree.varspace.size
    point_a = SignPoint.positive(size)
    transcript_a = run_infinitesimal(tree, point_a, order)
    in_a = membership_at_signpoint(descriptor, point_a, order)
    if transcript_a.accepted != in_a:
        logger.info('Direct misclassification at %s (verdict %s)', point_a, transcript_a.verdict.value)
        return DirectMisclassification(point_a, in_a, descriptor.variant, transcript_a)

    vectors = _exponent_vectors(transcript_a, order)
    flip = smallest_nullspace_vector(vectors, size)
    if flip is None:
        logger.info('Exponent parities span GF(2)^%d; no fooling pair from this path', size)
        return None

    point_b = point_a.flipped(flip)
    transcript_b = run_infinitesimal(tree, point_b, order)
    in_b = membership_at_signpoint(descriptor, point_b, order)
    identical = transcript_a.same_route(transcript_b)
    if not (identical and in_a != in_b and is_orthogonal(flip, vectors)):
        raise AdversaryVerificationError(
            f'Fooling pair {point_a} / {point_b} failed verification '
            f'(identical={identical}, memberships={in_a},{in_b})')
    return FoolingReport(flip, point_a, point_b, vectors, identical, (in_a, in_b),
                         descriptor.variant, transcript_a)


def recheck_fooling_report(report: FoolingReport, tree: ProtocolTree,
                           order: Optional[TermOrder] = None) -> bool:
    """Re-run both points and re-derive every claim of the report."""
    if not any(report.flip_vector):
        return False
    tree = tree.in_frame(Frame.XY)
    descriptor = SetDescriptor(report.target, tree.varspace.n_x, tree.varspace.n_y)
    if report.point_a.flipped(report.flip_vector) != report.point_b:
        return False
    transcript_a = run_infinitesimal(tree, report.point_a, order)
    transcript_b = run_infinitesimal(tree, report.point_b, order)
    vectors = _exponent_vectors(transcript_a, order)
    memberships = (membership_at_signpoint(descriptor, report.point_a, order),
                   membership_at_signpoint(descriptor, report.point_b, order))
    return (is_orthogonal(report.flip_vector, vectors)
            and transcript_a.same_route(transcript_b)
            and memberships == report.memberships
            and memberships[0] != memberships[1])
