"""
Sampler Module
Seeded Gaussian inputs converted exactly to dyadic rationals, and the Monte
Carlo agreement harness that runs protocols against membership oracles.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Optional, Union

import numpy as np

from polynomial import ComplexRational, Field
from protocol import (
    DEFAULT_THRESHOLD,
    ProbabilisticProtocol,
    ProtocolTree,
    acceptance_probability,
    run_rational,
)
from zoo import KNAPSACK_ORACLE_CAP, SetDescriptor, SetVariant, membership

logger = logging.getLogger(__name__)

# Substreams at and above this index feed crafted inputs, never trials.
CRAFTED_STREAM = 1 << 32


def _substream(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, int(index)])


def gaussian_rational_sampler(seed: int, dim: int, index: int = 0) -> List[Fraction]:
    """
    Standard normal draws from substream (seed, index), each converted
    exactly to the dyadic rational its float64 value represents.
    """
    if dim < 1:
        raise ValueError('dim must be >= 1')
    draws = _substream(seed, index).standard_normal(dim)
    return [Fraction(float(x)) for x in draws]


def gaussian_complex_sampler(seed: int, dim: int, index: int = 0) -> List[ComplexRational]:
    parts = gaussian_rational_sampler(seed, 2 * dim, index)
    return [ComplexRational(parts[2 * i], parts[2 * i + 1]) for i in range(dim)]


def crafted_input(target: SetDescriptor, seed: int, index: int = 0) -> List[Fraction]:
    """
    A Gaussian draw moved onto the measure-zero part of the target set, where
    random inputs never land.

    Knapsack inputs get a zero-sum subset, emptiness inputs a forced
    collision, arrangement and hypersurface inputs are solved onto a form or
    onto f = 0, and orthant-type inputs get a zero coordinate or a zero
    X_i + Y_i with every other coordinate positive.
    """
    rng = _substream(seed, CRAFTED_STREAM + index)
    n_x, dim = target.n_x, target.n_x + target.n_y
    point = [Fraction(float(v)) for v in rng.standard_normal(dim)]
    variant = target.variant
    if variant is SetVariant.KNAPSACK:
        chosen = [i for i in range(dim) if rng.integers(2)] or [int(rng.integers(dim))]
        point[chosen[-1]] = -sum((point[i] for i in chosen[:-1]), Fraction(0))
    elif variant is SetVariant.EMPTINESS:
        i, j = int(rng.integers(n_x)), int(rng.integers(target.n_y))
        point[n_x + j] = point[i]
    elif variant is SetVariant.ARRANGEMENT:
        form = target.forms[int(rng.integers(len(target.forms)))]
        used = form.used_variables()
        k = used[int(rng.integers(len(used)))]
        point[k] -= form.evaluate(point) / form.derivative(k).constant_term()
    elif variant is SetVariant.INNER_PRODUCT_HYPERSURFACE:
        j = int(rng.integers(n_x))
        rest = sum((point[i] * point[n_x + i] for i in range(n_x) if i != j), Fraction(0))
        point[n_x + j] = -rest / point[j]
    else:
        point = [abs(v) for v in point]
        if variant is SetVariant.POLYHEDRON_S:
            i = int(rng.integers(n_x))
            point[n_x + i] = -point[i]
        else:
            point[int(rng.integers(dim))] = Fraction(0)
    return point


@dataclass(frozen=True)
class MonteCarloReport:
    target: Dict[str, Any]
    trials: int
    seed: int
    agreements: int
    disagreements: int
    zero_sign_events: int
    first_disagreement: Optional[int] = None
    crafted: int = 0

    @property
    def rate(self) -> Fraction:
        counted = self.agreements + self.disagreements
        return Fraction(self.agreements, counted) if counted else Fraction(1)

    @property
    def perfect(self) -> bool:
        return self.disagreements == 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'target': self.target,
            'trials': self.trials,
            'crafted': self.crafted,
            'seed': self.seed,
            'agreements': self.agreements,
            'disagreements': self.disagreements,
            'zero_sign_events': self.zero_sign_events,
            'agreement_rate': str(self.rate),
            'first_disagreement_index': self.first_disagreement,
        }


def monte_carlo(protocol: Union[ProtocolTree, ProbabilisticProtocol], target: SetDescriptor,
                trials: int, seed: int, threshold: Fraction = DEFAULT_THRESHOLD,
                knapsack_cap: int = KNAPSACK_ORACLE_CAP, crafted: int = 0) -> MonteCarloReport:
    """
    Compare protocol verdicts with the oracle on Gaussian-sampled inputs.

    Trial i draws from substream (seed, i), so results do not depend on the
    order trials are evaluated in. A disagreement on a run that met an exact
    zero sign is logged and counted separately.

    The crafted inputs (see crafted_input) run after the trials, numbered
    trials, trials + 1, ...; they hit exact zeros on purpose, so every
    disagreement on them counts.
    """
    if trials < 1:
        raise ValueError('trials must be >= 1')
    if crafted < 0:
        raise ValueError('crafted must be >= 0')
    dim = protocol.varspace.size
    if dim != target.n_x + target.n_y:
        raise ValueError(f'protocol has {dim} variables, target set {target.n_x + target.n_y}')
    complex_inputs = protocol.field is Field.COMPLEX
    agreements = disagreements = zero_events = 0
    first = None
    for index in range(trials + crafted):
        point: List[Any]
        if index >= trials:
            point = crafted_input(target, seed, index - trials)
        elif complex_inputs:
            point = gaussian_complex_sampler(seed, dim, index)
        else:
            point = gaussian_rational_sampler(seed, dim, index)
        zero_sign = False
        if isinstance(protocol, ProbabilisticProtocol):
            accepted = acceptance_probability(protocol, point) > threshold
        else:
            transcript = run_rational(protocol, point)
            accepted = transcript.accepted
            zero_sign = transcript.has_zero_sign() and index < trials
        expected = membership(target, point, knapsack_cap)
        if zero_sign:
            logger.info('Trial %d met an exact zero sign', index)
        if accepted == expected:
            agreements += 1
        elif zero_sign:
            zero_events += 1
        else:
            disagreements += 1
            if first is None:
                first = index
                logger.warning('Trial %d: protocol %s, oracle %s', index,
                               'accepts' if accepted else 'rejects', expected)
    return MonteCarloReport(target.to_dict(), trials, seed, agreements, disagreements,
                            zero_events, first, crafted)
