"""
Polynomial Module
Exact sparse multivariate polynomials over the rationals and Gaussian rationals.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from types import MappingProxyType
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from errors import (
    ArityError,
    FieldMismatchError,
    PairingError,
    VarSpaceMismatchError,
    ZeroPolynomialError,
)
from term_order import TermOrder

Rational = Fraction
Exponent = Tuple[int, ...]


class Field(str, Enum):
    REAL = 'real'
    COMPLEX = 'complex'


class Frame(str, Enum):
    XY = 'XY'
    XZ = 'XZ'


@dataclass(frozen=True, eq=False)
class ComplexRational:
    """A Gaussian rational re + i*im."""

    re: Fraction
    im: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, 're', _to_fraction(self.re))
        object.__setattr__(self, 'im', _to_fraction(self.im))

    @staticmethod
    def lift(value: Any) -> 'ComplexRational':
        if isinstance(value, ComplexRational):
            return value
        return ComplexRational(_to_fraction(value), Fraction(0))

    def conjugate(self) -> 'ComplexRational':
        return ComplexRational(self.re, -self.im)

    def norm(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def __add__(self, other):
        other = _lift_or_none(other)
        if other is None:
            return NotImplemented
        return ComplexRational(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = _lift_or_none(other)
        if other is None:
            return NotImplemented
        return ComplexRational(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        other = _lift_or_none(other)
        if other is None:
            return NotImplemented
        return other - self

    def __mul__(self, other):
        other = _lift_or_none(other)
        if other is None:
            return NotImplemented
        return ComplexRational(self.re * other.re - self.im * other.im,
                               self.re * other.im + self.im * other.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _lift_or_none(other)
        if other is None:
            return NotImplemented
        norm = other.norm()
        if norm == 0:
            raise ZeroDivisionError('complex division by zero')
        top = self * other.conjugate()
        return ComplexRational(top.re / norm, top.im / norm)

    def __rtruediv__(self, other):
        other = _lift_or_none(other)
        if other is None:
            return NotImplemented
        return other / self

    def __pow__(self, exponent: int):
        result = ComplexRational(Fraction(1))
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def __neg__(self):
        return ComplexRational(-self.re, -self.im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        other = _lift_or_none(other)
        if other is None:
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __repr__(self):
        return f'ComplexRational({self.re}, {self.im})'

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        if self.re == 0:
            return f'{self.im}i'
        sign = '+' if self.im > 0 else '-'
        return f'({self.re}{sign}{abs(self.im)}i)'


Scalar = Union[Fraction, ComplexRational]


def _to_fraction(value: Any) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise TypeError(f'Not an exact rational: {value!r}')
    return Fraction(value)


def _lift_or_none(value: Any) -> Optional[ComplexRational]:
    if isinstance(value, ComplexRational):
        return value
    if isinstance(value, (int, Fraction)) and not isinstance(value, bool):
        return ComplexRational(Fraction(value))
    return None


def as_scalar(value: Any, field: Field) -> Scalar:
    """Coerce an exact number into the scalar type of a field."""
    if field is Field.COMPLEX:
        return ComplexRational.lift(value)
    if isinstance(value, ComplexRational):
        if value.im != 0:
            raise FieldMismatchError(f'Complex value {value} in a real context')
        return value.re
    return _to_fraction(value)


def scalar_field(value: Any) -> Field:
    return Field.COMPLEX if isinstance(value, ComplexRational) else Field.REAL


@dataclass(frozen=True)
class VarSpace:
    """
    Ambient variables X_1..X_{n_x}, Y_1..Y_{n_y} (frame XY) or
    X_1..X_n, Z_1..Z_n with Z_i = X_i + Y_i (frame XZ).

    A non-empty label marks a formal space (Q for exchanged values, G for
    outer polynomials, W for complex variables); formal spaces are never
    equal to ambient ones.
    """

    n_x: int
    n_y: int = 0
    frame: Frame = Frame.XY
    label: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'frame', Frame(self.frame))
        if self.n_x < 0 or self.n_y < 0:
            raise ValueError('Variable counts must be non-negative')
        if self.frame is Frame.XZ and self.n_x != self.n_y:
            raise ValueError('Frame XZ requires n_x == n_y')

    @classmethod
    def formal(cls, size: int, label: str = 'Q') -> 'VarSpace':
        return cls(size, 0, Frame.XY, label)

    @property
    def size(self) -> int:
        return self.n_x + self.n_y

    @property
    def is_formal(self) -> bool:
        return bool(self.label)

    def in_frame(self, frame: Frame) -> 'VarSpace':
        return VarSpace(self.n_x, self.n_y, Frame(frame), self.label)

    def is_x(self, index: int) -> bool:
        return index < self.n_x

    def name(self, index: int) -> str:
        if self.label:
            return f'{self.label}{index + 1}'
        if index < self.n_x:
            return f'X{index + 1}'
        second = 'Z' if self.frame is Frame.XZ else 'Y'
        return f'{second}{index - self.n_x + 1}'


class Polynomial:
    """
    Immutable sparse polynomial in canonical form: terms keyed by exponent
    vector, no zero coefficients, iteration in ascending exponent order.
    """

    __slots__ = ('varspace', 'field', '_terms', '_hash')

    def __init__(self, varspace: VarSpace, terms: Optional[Mapping[Sequence[int], Any]] = None,
                 field: Field = Field.REAL):
        field = Field(field)
        size = varspace.size
        collected: Dict[Exponent, Scalar] = {}
        for exponent, coefficient in (terms or {}).items():
            exponent = tuple(int(e) for e in exponent)
            if len(exponent) != size:
                raise ArityError(f'Exponent {exponent} has length {len(exponent)}, expected {size}')
            if any(e < 0 for e in exponent):
                raise ValueError(f'Negative exponent in {exponent}')
            value = as_scalar(coefficient, field)
            if exponent in collected:
                value = collected[exponent] + value
            collected[exponent] = value
        self.varspace = varspace
        self.field = field
        self._terms = {e: collected[e] for e in sorted(collected) if collected[e]}
        self._hash = None

    @classmethod
    def _raw(cls, varspace: VarSpace, terms: Dict[Exponent, Scalar], field: Field) -> 'Polynomial':
        poly = cls.__new__(cls)
        poly.varspace = varspace
        poly.field = field
        poly._terms = {e: terms[e] for e in sorted(terms) if terms[e]}
        poly._hash = None
        return poly

    # Constructors
    @classmethod
    def zero(cls, varspace: VarSpace, field: Field = Field.REAL) -> 'Polynomial':
        return cls._raw(varspace, {}, Field(field))

    @classmethod
    def constant(cls, varspace: VarSpace, value: Any, field: Field = Field.REAL) -> 'Polynomial':
        return cls(varspace, {(0,) * varspace.size: value}, field)

    @classmethod
    def variable(cls, varspace: VarSpace, index: int, field: Field = Field.REAL) -> 'Polynomial':
        if not 0 <= index < varspace.size:
            raise ArityError(f'Variable index {index} out of range for {varspace.size} variables')
        exponent = [0] * varspace.size
        exponent[index] = 1
        return cls(varspace, {tuple(exponent): 1}, field)

    @classmethod
    def monomial(cls, varspace: VarSpace, exponent: Sequence[int], coefficient: Any = 1,
                 field: Field = Field.REAL) -> 'Polynomial':
        return cls(varspace, {tuple(exponent): coefficient}, field)

    # Introspection
    @property
    def terms(self) -> Mapping[Exponent, Scalar]:
        return MappingProxyType(self._terms)

    def items(self) -> List[Tuple[Exponent, Scalar]]:
        return list(self._terms.items())

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def __len__(self):
        return len(self._terms)

    def total_degree(self) -> int:
        if not self._terms:
            return -1
        return max(sum(e) for e in self._terms)

    def degree_in(self, index: int) -> int:
        return max((e[index] for e in self._terms), default=0)

    def used_variables(self) -> List[int]:
        return [i for i in range(self.varspace.size) if any(e[i] for e in self._terms)]

    def constant_term(self) -> Scalar:
        return self._terms.get((0,) * self.varspace.size, as_scalar(0, self.field))

    def is_constant(self) -> bool:
        return all(not any(e) for e in self._terms)

    # Equality
    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            if self.is_constant():
                try:
                    return self.constant_term() == other
                except TypeError:
                    return NotImplemented
            return False
        return (self.varspace == other.varspace and self.field == other.field
                and self._terms == other._terms)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.varspace, self.field, tuple(self._terms.items())))
        return self._hash

    # Arithmetic
    def _coerce(self, other: Any) -> 'Polynomial':
        if isinstance(other, Polynomial):
            if other.varspace != self.varspace:
                raise VarSpaceMismatchError(f'{self.varspace} vs {other.varspace}')
            if other.field != self.field:
                raise FieldMismatchError(f'{self.field.value} vs {other.field.value}')
            return other
        if self.field is Field.REAL and isinstance(other, ComplexRational):
            raise FieldMismatchError('Complex scalar with a real polynomial')
        return Polynomial.constant(self.varspace, other, self.field)

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self._terms)
        for e, c in other._terms.items():
            terms[e] = terms[e] + c if e in terms else c
        return Polynomial._raw(self.varspace, terms, self.field)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw(self.varspace, {e: -c for e, c in self._terms.items()}, self.field)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return self.scale(other)
        other = self._coerce(other)
        terms: Dict[Exponent, Scalar] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                product = c1 * c2
                terms[e] = terms[e] + product if e in terms else product
        return Polynomial._raw(self.varspace, terms, self.field)

    def __rmul__(self, other):
        return self.scale(other)

    def scale(self, scalar: Any) -> 'Polynomial':
        if self.field is Field.REAL and isinstance(scalar, ComplexRational):
            raise FieldMismatchError('Complex scalar with a real polynomial')
        value = as_scalar(scalar, self.field)
        return Polynomial._raw(self.varspace, {e: c * value for e, c in self._terms.items()}, self.field)

    def __pow__(self, exponent: int):
        if exponent < 0:
            raise ValueError('Negative polynomial power')
        result = Polynomial.constant(self.varspace, 1, self.field)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            exponent >>= 1
            if exponent:
                base = base * base
        return result

    # Calculus and substitution
    def derivative(self, index: int) -> 'Polynomial':
        if not 0 <= index < self.varspace.size:
            raise ArityError(f'Variable index {index} out of range for {self.varspace.size} variables')
        terms: Dict[Exponent, Scalar] = {}
        for e, c in self._terms.items():
            if e[index]:
                lowered = e[:index] + (e[index] - 1,) + e[index + 1:]
                terms[lowered] = c * e[index]
        return Polynomial._raw(self.varspace, terms, self.field)

    def evaluate(self, point: Sequence[Any]) -> Scalar:
        if len(point) != self.varspace.size:
            raise ArityError(f'Point has {len(point)} coordinates, expected {self.varspace.size}')
        values = [v if isinstance(v, (Fraction, ComplexRational)) else _to_fraction(v) for v in point]
        total: Scalar = as_scalar(0, self.field)
        for e, c in self._terms.items():
            term = c
            for value, power in zip(values, e):
                if power:
                    term = term * value ** power
            total = total + term
        return total

    def compose(self, args: Sequence['Polynomial']) -> 'Polynomial':
        """
        Substitute args[k] for the k-th variable of this polynomial.

        Args:
            args: polynomials sharing one variable space, one per variable

        Returns:
            Polynomial in the variable space of args
        """
        if len(args) != self.varspace.size:
            raise ArityError(f'compose: {len(args)} arguments for {self.varspace.size} variables')
        if not args:
            raise ArityError('compose needs at least one argument to fix the target space')
        target = args[0].varspace
        if any(a.varspace != target for a in args):
            raise VarSpaceMismatchError('compose: arguments live in different variable spaces')
        field = Field.COMPLEX if (self.field is Field.COMPLEX
                                  or any(a.field is Field.COMPLEX for a in args)) else Field.REAL
        args = [a.promote(field) for a in args]
        cache: Dict[Tuple[int, int], Polynomial] = {}

        def power(i: int, k: int) -> Polynomial:
            if (i, k) not in cache:
                cache[(i, k)] = args[i] if k == 1 else power(i, k - 1) * args[i]
            return cache[(i, k)]

        terms: Dict[Exponent, Scalar] = {}
        for e, c in self._terms.items():
            product = Polynomial.constant(target, c, field)
            for i, k in enumerate(e):
                if k:
                    product = product * power(i, k)
            for pe, pc in product._terms.items():
                terms[pe] = terms[pe] + pc if pe in terms else pc
        return Polynomial._raw(target, terms, field)

    def substitute_zero(self, indices: Iterable[int]) -> 'Polynomial':
        zeroed = set(indices)
        kept = {e: c for e, c in self._terms.items() if not any(e[i] for i in zeroed)}
        return Polynomial._raw(self.varspace, kept, self.field)

    def promote(self, field: Field) -> 'Polynomial':
        field = Field(field)
        if field is self.field:
            return self
        if field is Field.COMPLEX:
            return Polynomial._raw(self.varspace,
                                   {e: ComplexRational.lift(c) for e, c in self._terms.items()},
                                   Field.COMPLEX)
        return Polynomial(self.varspace, dict(self._terms), Field.REAL)

    def map_coefficients(self, fn, field: Field) -> 'Polynomial':
        field = Field(field)
        return Polynomial._raw(self.varspace,
                               {e: as_scalar(fn(c), field) for e, c in self._terms.items()}, field)

    def rebase(self, varspace: VarSpace) -> 'Polynomial':
        """Reinterpret the same exponent vectors in another space of equal size."""
        if varspace.size != self.varspace.size:
            raise ArityError(f'rebase: size {self.varspace.size} into {varspace.size}')
        return Polynomial._raw(varspace, dict(self._terms), self.field)

    # Text forms
    def to_term_list(self) -> List[list]:
        rows = []
        for e, c in self._terms.items():
            if self.field is Field.COMPLEX:
                rows.append([c.re.numerator, c.re.denominator, c.im.numerator, c.im.denominator, list(e)])
            else:
                rows.append([c.numerator, c.denominator, list(e)])
        return rows

    @classmethod
    def from_term_list(cls, rows: Sequence[Sequence[Any]], varspace: VarSpace,
                       field: Field = Field.REAL) -> 'Polynomial':
        field = Field(field)
        terms: Dict[Exponent, Scalar] = {}
        for row in rows:
            if len(row) == 3:
                coefficient: Scalar = Fraction(int(row[0]), int(row[1]))
            elif len(row) == 5:
                coefficient = ComplexRational(Fraction(int(row[0]), int(row[1])),
                                              Fraction(int(row[2]), int(row[3])))
                if field is Field.REAL:
                    raise FieldMismatchError('Complex term in a real polynomial')
            else:
                raise ValueError(f'Term must have 3 or 5 entries, got {len(row)}')
            exponent = tuple(int(e) for e in row[-1])
            if exponent in terms:
                raise ValueError(f'Duplicate exponent vector {list(exponent)}')
            terms[exponent] = coefficient
        return cls(varspace, terms, field)

    def __str__(self):
        if not self._terms:
            return '0'
        parts = []
        for e, c in reversed(list(self._terms.items())):
            names = []
            for i, k in enumerate(e):
                if k == 1:
                    names.append(self.varspace.name(i))
                elif k > 1:
                    names.append(f'{self.varspace.name(i)}^{k}')
            monomial = '*'.join(names)
            if not monomial:
                parts.append(str(c))
            elif c == 1:
                parts.append(monomial)
            elif c == -1:
                parts.append(f'-{monomial}')
            else:
                parts.append(f'{c}*{monomial}')
        return ' + '.join(parts).replace('+ -', '- ')

    def __repr__(self):
        return f'Polynomial({self})'


def poly_arith(op: str, g: Polynomial, h: Any = None) -> Polynomial:
    """Dispatch add / mul / neg / scale by name."""
    if op == 'add':
        return g + g._coerce(h)
    if op == 'mul':
        return g * g._coerce(h)
    if op == 'neg':
        return -g
    if op == 'scale':
        return g.scale(h)
    raise ValueError(f'Unknown polynomial operation: {op}')


def derivative(g: Polynomial, var_index: int) -> Polynomial:
    return g.derivative(var_index)


def compose(P: Polynomial, args: Sequence[Polynomial]) -> Polynomial:
    return P.compose(args)


def evaluate(g: Polynomial, point: Sequence[Any]) -> Scalar:
    return g.evaluate(point)


def variables(varspace: VarSpace, field: Field = Field.REAL) -> List[Polynomial]:
    return [Polynomial.variable(varspace, i, field) for i in range(varspace.size)]


def inner_product(n: int) -> Polynomial:
    """f = X_1 Y_1 + ... + X_n Y_n in the XY frame."""
    space = VarSpace(n, n)
    gens = variables(space)
    f = Polynomial.zero(space)
    for i in range(n):
        f = f + gens[i] * gens[n + i]
    return f


def divide_exact(divisor: Polynomial, g: Polynomial,
                 order: Optional[TermOrder] = None) -> Tuple[Polynomial, Polynomial]:
    """
    Single-divisor multivariate division.

    Repeatedly cancels the greatest remaining term of g when it is a monomial
    multiple of the divisor's greatest term; otherwise moves it to the
    remainder. g == quotient*divisor + remainder holds on return, and the
    divisor divides g exactly when the remainder is zero.

    Args:
        divisor: nonzero polynomial
        g: dividend in the same space and field
        order: term order; defaults to the least-term order of the space

    Returns:
        (quotient, remainder)
    """
    if divisor.is_zero():
        raise ZeroPolynomialError('Division by the zero polynomial')
    g_terms = divisor._coerce(g)._terms
    order = order or TermOrder.default(divisor.varspace.size)
    if order.size != divisor.varspace.size:
        raise ArityError('Term order size does not match the variable space')

    lead = order.greatest(divisor._terms)
    lead_c = divisor._terms[lead]
    remaining: Dict[Exponent, Scalar] = dict(g_terms)
    quotient: Dict[Exponent, Scalar] = {}
    remainder: Dict[Exponent, Scalar] = {}
    while remaining:
        top = order.greatest(remaining)
        c = remaining[top]
        if all(a >= b for a, b in zip(top, lead)):
            shift = tuple(a - b for a, b in zip(top, lead))
            factor = c / lead_c
            quotient[shift] = quotient[shift] + factor if shift in quotient else factor
            for e, dc in divisor._terms.items():
                target = tuple(a + b for a, b in zip(e, shift))
                value = remaining.get(target, 0) - factor * dc
                if value:
                    remaining[target] = value
                else:
                    remaining.pop(target, None)
        else:
            remainder[top] = c
            del remaining[top]
    return (Polynomial._raw(divisor.varspace, quotient, divisor.field),
            Polynomial._raw(divisor.varspace, remainder, divisor.field))


def divides(divisor: Polynomial, g: Polynomial, order: Optional[TermOrder] = None) -> bool:
    return divide_exact(divisor, g, order)[1].is_zero()


def default_pairing(varspace: VarSpace) -> Tuple[List[Tuple[int, int]], VarSpace]:
    """
    Standard complex-to-real pairing.

    Formal spaces interleave (W_j -> Q_{2j-1}, Q_{2j}); ambient spaces keep
    the X block before the Y block, real parts before imaginary parts.
    """
    if varspace.is_formal:
        target = VarSpace.formal(2 * varspace.size, varspace.label)
        return [(2 * j, 2 * j + 1) for j in range(varspace.size)], target
    n_x, n_y = varspace.n_x, varspace.n_y
    target = VarSpace(2 * n_x, 2 * n_y, varspace.frame)
    pairing = [(j, n_x + j) for j in range(n_x)]
    pairing += [(2 * n_x + j, 2 * n_x + n_y + j) for j in range(n_y)]
    return pairing, target


def re_im_split(g: Polynomial, pairing: Optional[Sequence[Tuple[int, int]]] = None,
                target: Optional[VarSpace] = None) -> Tuple[Polynomial, Polynomial]:
    """
    Real and imaginary parts of g after substituting W_j = U_j + i V_j.

    Args:
        g: polynomial whose variables are read as complex W_1..W_k
        pairing: (U_j index, V_j index) in target for every W_j
        target: real variable space receiving the pairs

    Returns:
        (re, im), real polynomials in target
    """
    if pairing is None or target is None:
        pairing, target = default_pairing(g.varspace)
    pairing = [tuple(p) for p in pairing]
    if len(pairing) != g.varspace.size:
        raise PairingError(f'Pairing covers {len(pairing)} of {g.varspace.size} complex variables')
    used = [i for pair in pairing for i in pair]
    if len(set(used)) != len(used) or any(not 0 <= i < target.size for i in used):
        raise PairingError('Pairing indices must be distinct and inside the target space')
    i_unit = ComplexRational(Fraction(0), Fraction(1))
    args = []
    for u, v in pairing:
        args.append(Polynomial.variable(target, u, Field.COMPLEX)
                    + Polynomial.variable(target, v, Field.COMPLEX).scale(i_unit))
    expanded = g.promote(Field.COMPLEX).compose(args)
    re = expanded.map_coefficients(lambda c: c.re, Field.REAL)
    im = expanded.map_coefficients(lambda c: c.im, Field.REAL)
    return re, im
