"""
Infinitesimal Module
Least terms, exact signs at signed infinitesimal points and the change of
coordinates Z_i = X_i + Y_i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple

from errors import ArityError, FieldMismatchError, FrameError, ZeroPolynomialError
from polynomial import Field, Frame, Polynomial, Scalar, VarSpace, variables
from term_order import TermOrder

SIGN_SYMBOLS = {'+': 1, '-': -1, '0': 0, '+1': 1, '-1': -1, '1': 1}


@dataclass(frozen=True)
class SignPoint:
    """The point (e_1 eps_1, ..., e_k eps_k) with e_i in {-1, 0, +1}."""

    signs: Tuple[int, ...]
    frame: Frame = Frame.XY

    def __post_init__(self):
        signs = tuple(int(s) for s in self.signs)
        if any(s not in (-1, 0, 1) for s in signs):
            raise ValueError(f'Sign entries must be -1, 0 or +1: {list(signs)}')
        object.__setattr__(self, 'signs', signs)
        object.__setattr__(self, 'frame', Frame(self.frame))

    @classmethod
    def parse(cls, text: str, frame: Frame = Frame.XY) -> 'SignPoint':
        """Parse "+,-,0,+" (also accepts -1/0/1 entries)."""
        try:
            signs = [SIGN_SYMBOLS[part.strip()] for part in text.split(',') if part.strip()]
        except KeyError as exc:
            raise ValueError(f'Bad sign entry {exc.args[0]!r} in {text!r}') from None
        return cls(tuple(signs), frame)

    @classmethod
    def positive(cls, size: int, frame: Frame = Frame.XY) -> 'SignPoint':
        return cls((1,) * size, frame)

    @property
    def size(self) -> int:
        return len(self.signs)

    def flipped(self, mask: Sequence[int]) -> 'SignPoint':
        return SignPoint(tuple(-s if m else s for s, m in zip(self.signs, mask)), self.frame)

    def with_entry(self, index: int, value: int) -> 'SignPoint':
        signs = list(self.signs)
        signs[index] = value
        return SignPoint(tuple(signs), self.frame)

    def zero_indices(self) -> List[int]:
        return [i for i, s in enumerate(self.signs) if s == 0]

    def __str__(self):
        return '(' + ','.join({1: '+', -1: '-', 0: '0'}[s] for s in self.signs) + ')'


@dataclass(frozen=True)
class LeastTerm:
    coefficient: Scalar
    exponent: Tuple[int, ...]

    def __mul__(self, other: 'LeastTerm') -> 'LeastTerm':
        return LeastTerm(self.coefficient * other.coefficient,
                         tuple(a + b for a, b in zip(self.exponent, other.exponent)))

    def as_polynomial(self, varspace: VarSpace, field: Field = Field.REAL) -> Polynomial:
        return Polynomial.monomial(varspace, self.exponent, self.coefficient, field)


def _order_for(g: Polynomial, order: Optional[TermOrder]) -> TermOrder:
    order = order or TermOrder.default(g.varspace.size)
    if order.size != g.varspace.size:
        raise ArityError(f'Term order has {order.size} entries for {g.varspace.size} variables')
    return order


def least_term(g: Polynomial, order: Optional[TermOrder] = None) -> LeastTerm:
    if g.is_zero():
        raise ZeroPolynomialError('The zero polynomial has no least term')
    order = _order_for(g, order)
    exponent = order.least(g.terms)
    return LeastTerm(g.terms[exponent], exponent)


def exponent_vector(g: Polynomial, order: Optional[TermOrder] = None) -> Tuple[int, ...]:
    return least_term(g, order).exponent


def product_least_term(factors: Iterable[Polynomial], order: Optional[TermOrder] = None) -> LeastTerm:
    """lt of a product as the product of least terms, without expanding."""
    result: Optional[LeastTerm] = None
    for factor in factors:
        lt = least_term(factor, order)
        result = lt if result is None else result * lt
    if result is None:
        raise ZeroPolynomialError('Empty product has no recorded variable space')
    return result


def _sign(value: Fraction) -> int:
    return (value > 0) - (value < 0)


def sign_at(g: Polynomial, p: SignPoint, order: Optional[TermOrder] = None) -> int:
    """
    Exact sign of g at a signed infinitesimal point.

    Variables with a zero entry are substituted by 0 first; the sign of what
    remains is the sign of its least term at the point.

    Args:
        g: polynomial with real coefficients
        p: point in the frame of g
        order: term order (default: least-term order of the space)

    Returns:
        -1, 0 or +1
    """
    if g.field is not Field.REAL:
        raise FieldMismatchError('Signs are undefined over the complex numbers')
    if p.size != g.varspace.size:
        raise ArityError(f'Sign point has {p.size} entries, expected {g.varspace.size}')
    if not g.varspace.is_formal and p.frame is not g.varspace.frame:
        raise FrameError(f'Point in frame {p.frame.value}, polynomial in {g.varspace.frame.value}')
    reduced = g.substitute_zero(p.zero_indices())
    if reduced.is_zero():
        return 0
    lt = least_term(reduced, order)
    sign = _sign(lt.coefficient)
    for entry, power in zip(p.signs, lt.exponent):
        if entry < 0 and power % 2:
            sign = -sign
    return sign


def change_frame(g: Polynomial, to: Frame) -> Polynomial:
    """
    Rewrite g between the (X, Y) and (X, Z) coordinates, Z_i = X_i + Y_i.
    """
    to = Frame(to)
    space = g.varspace
    if space.is_formal:
        raise FrameError('Formal variable spaces have no coordinate frame')
    if space.n_x != space.n_y:
        raise FrameError(f'Frame change needs n_x == n_y, got {space.n_x} and {space.n_y}')
    if space.frame is to:
        return g
    n = space.n_x
    target = space.in_frame(to)
    gens = variables(target, g.field)
    if to is Frame.XZ:
        args = gens[:n] + [gens[n + i] - gens[i] for i in range(n)]
    else:
        args = gens[:n] + [gens[i] + gens[n + i] for i in range(n)]
    return g.compose(args)


def epsilon_values(signs: Sequence[int], base: int, t: int) -> List[Fraction]:
    """eps_i = delta^(base^i) with delta = 2^-t, scaled by the sign entries."""
    delta = Fraction(1, 2 ** t)
    return [s * delta ** (base ** (i + 1)) if s else Fraction(0) for i, s in enumerate(signs)]


def numeric_sign(g: Polynomial, signs: Sequence[int]) -> int:
    """
    Sign of g at a concrete rational realization of the infinitesimal point.

    The realization is refined (t = 1, 2, ...) until two consecutive values
    agree, starting the agreement test no earlier than the coefficient-mass
    bound beyond which the dominant term decides.
    """
    if g.field is not Field.REAL:
        raise FieldMismatchError('Signs are undefined over the complex numbers')
    base = max(g.total_degree() + 1, 2)
    magnitudes = [abs(c) for c in g.terms.values()] or [Fraction(1)]
    ratio = sum(magnitudes) / min(magnitudes)
    floor = math.ceil(ratio).bit_length() + 1
    previous = None
    t = 1
    while True:
        current = _sign(g.evaluate(epsilon_values(signs, base, t)))
        if t > floor and current == previous:
            return current
        previous = current
        t += 1
