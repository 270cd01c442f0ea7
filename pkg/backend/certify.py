"""
Certify Module
Hessian and Jacobian matrices, generic-rank certificates and the lemma
checkers built on them.
"""

import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Any, Dict, Optional, Sequence, Tuple

import sympy

from errors import (
    AlgCommError,
    ArityError,
    FrameError,
    LemmaPreconditionError,
    ZeroPolynomialError,
)
from infinitesimal import change_frame, exponent_vector, least_term
from polynomial import Field, Frame, Polynomial, VarSpace, divides, inner_product
from term_order import TermOrder

logger = logging.getLogger(__name__)

DEFAULT_BOUND = 100
EXACT_RANK_LIMIT = 6


def _to_sympy(value: Fraction) -> sympy.Rational:
    return sympy.Rational(value.numerator, value.denominator)


def _to_fraction(value: Any) -> Fraction:
    value = sympy.Rational(value)
    return Fraction(int(value.p), int(value.q))


@dataclass(frozen=True)
class PolyMatrix:
    """Rectangular matrix of polynomials sharing one variable space."""

    entries: Tuple[Tuple[Polynomial, ...], ...]
    varspace: VarSpace

    def __post_init__(self):
        entries = tuple(tuple(row) for row in self.entries)
        if len({len(row) for row in entries}) > 1:
            raise ArityError('PolyMatrix rows have different lengths')
        if any(e.varspace != self.varspace for row in entries for e in row):
            raise ArityError('PolyMatrix entries live in different variable spaces')
        object.__setattr__(self, 'entries', entries)

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0]) if self.entries else 0

    @classmethod
    def zeros(cls, rows: int, cols: int, varspace: VarSpace) -> 'PolyMatrix':
        zero = Polynomial.zero(varspace)
        return cls(tuple((zero,) * cols for _ in range(rows)), varspace)

    def transpose(self) -> 'PolyMatrix':
        return PolyMatrix(tuple(zip(*self.entries)) if self.entries else (), self.varspace)

    def __matmul__(self, other: 'PolyMatrix') -> 'PolyMatrix':
        if self.cols != other.rows:
            raise ArityError(f'Cannot multiply {self.rows}x{self.cols} by {other.rows}x{other.cols}')
        zero = Polynomial.zero(self.varspace)
        product = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                total = zero
                for k in range(self.cols):
                    total = total + self.entries[i][k] * other.entries[k][j]
                row.append(total)
            product.append(tuple(row))
        return PolyMatrix(tuple(product), self.varspace)

    def compose(self, args: Sequence[Polynomial]) -> 'PolyMatrix':
        """Substitute args into every entry."""
        target = args[0].varspace
        return PolyMatrix(tuple(tuple(e.compose(args) for e in row) for row in self.entries), target)

    def is_zero(self) -> bool:
        return all(e.is_zero() for row in self.entries for e in row)

    def evaluate(self, point: Sequence[Fraction]) -> sympy.Matrix:
        return sympy.Matrix(self.rows, self.cols,
                            [_to_sympy(e.evaluate(point)) for row in self.entries for e in row])

    def to_dict(self) -> Dict[str, Any]:
        return {
            'rows': self.rows,
            'cols': self.cols,
            'n_x': self.varspace.n_x,
            'n_y': self.varspace.n_y,
            'frame': self.varspace.frame.value,
            'entries': [[e.to_term_list() for e in row] for row in self.entries],
        }

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> 'PolyMatrix':
        space = VarSpace(doc['n_x'], doc['n_y'], Frame(doc.get('frame', 'XY')))
        entries = tuple(tuple(Polynomial.from_term_list(rows, space) for rows in row)
                        for row in doc['entries'])
        return cls(entries, space)

    def __str__(self):
        return '[' + ', '.join('[' + ', '.join(str(e) for e in row) + ']' for row in self.entries) + ']'


def hessian(g: Polynomial) -> PolyMatrix:
    """n_x x n_y matrix of the mixed partials d^2 g / dX_i dY_j."""
    if g.varspace.frame is not Frame.XY:
        raise FrameError('hessian expects the (X, Y) frame; convert with change_frame first')
    if g.field is not Field.REAL:
        raise AlgCommError('hessian is defined for real polynomials')
    n_x, n_y = g.varspace.n_x, g.varspace.n_y
    firsts = [g.derivative(i) for i in range(n_x)]
    entries = tuple(tuple(firsts[i].derivative(n_x + j) for j in range(n_y)) for i in range(n_x))
    return PolyMatrix(entries, g.varspace)


def jacobian(polys: Sequence[Polynomial], var_indices: Sequence[int]) -> PolyMatrix:
    """Matrix with entry (i, j) = d polys[j] / d var_indices[i]."""
    if not polys:
        raise ArityError('jacobian needs at least one polynomial')
    space = polys[0].varspace
    entries = tuple(tuple(p.derivative(i) for p in polys) for i in var_indices)
    return PolyMatrix(entries, space)


@dataclass(frozen=True)
class RankCertificate:
    claimed_rank: int
    witness_point: Tuple[Fraction, ...]
    row_set: Tuple[int, ...]
    col_set: Tuple[int, ...]
    minor_value: Fraction
    matrix: PolyMatrix
    seed: int = 0
    trials_used: int = 0
    exact_rank: Optional[int] = None

    @property
    def bound(self) -> int:
        """Best proven lower bound on the generic rank."""
        return max(self.claimed_rank, self.exact_rank or 0)

    def to_dict(self) -> Dict[str, Any]:
        doc = {
            'claimed_rank': self.claimed_rank,
            'witness_point': [str(v) for v in self.witness_point],
            'row_set': list(self.row_set),
            'col_set': list(self.col_set),
            'minor_value': str(self.minor_value),
            'seed': self.seed,
            'trials_used': self.trials_used,
            'matrix': self.matrix.to_dict(),
        }
        if self.exact_rank is not None:
            doc['exact_rank'] = self.exact_rank
        return doc

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> 'RankCertificate':
        return cls(
            claimed_rank=int(doc['claimed_rank']),
            witness_point=tuple(Fraction(v) for v in doc['witness_point']),
            row_set=tuple(doc['row_set']),
            col_set=tuple(doc['col_set']),
            minor_value=Fraction(doc['minor_value']),
            matrix=PolyMatrix.from_dict(doc['matrix']),
            seed=int(doc.get('seed', 0)),
            trials_used=int(doc.get('trials_used', 0)),
            exact_rank=doc.get('exact_rank'),
        )


def _random_point(rng: random.Random, size: int, bound: int, q: int) -> Tuple[Fraction, ...]:
    return tuple(Fraction(rng.randint(-bound * q, bound * q), q) for _ in range(size))


def _symbolic_det(entries: Sequence[Sequence[Polynomial]], varspace: VarSpace) -> Polynomial:
    """Determinant by minor expansion over column subsets."""
    k = len(entries)
    partial: Dict[int, Polynomial] = {0: Polynomial.constant(varspace, 1)}
    for row in range(k):
        following: Dict[int, Polynomial] = {}
        for mask, value in partial.items():
            if value.is_zero():
                continue
            for col in range(k):
                if mask >> col & 1 or entries[row][col].is_zero():
                    continue
                sign = -1 if bin(mask >> (col + 1)).count('1') % 2 else 1
                term = value * entries[row][col]
                if sign < 0:
                    term = -term
                key = mask | (1 << col)
                following[key] = following[key] + term if key in following else term
        partial = following
    return partial.get((1 << k) - 1, Polynomial.zero(varspace))


def _has_nonzero_minor(M: PolyMatrix, size: int) -> bool:
    for rows in combinations(range(M.rows), size):
        for cols in combinations(range(M.cols), size):
            sub = [[M.entries[r][c] for c in cols] for r in rows]
            if not _symbolic_det(sub, M.varspace).is_zero():
                return True
    return False


def symbolic_rank(M: PolyMatrix) -> int:
    """Exact rank over the rational function field by minor expansion."""
    rank = 0
    while rank < min(M.rows, M.cols) and _has_nonzero_minor(M, rank + 1):
        rank += 1
    return rank


def generic_rank(M: PolyMatrix, trials: int = 8, seed: int = 0, exact: bool = False,
                 bound: int = DEFAULT_BOUND, q: int = 1) -> RankCertificate:
    """
    Certify a lower bound on the generic rank of M by random evaluation.

    Args:
        M: polynomial matrix
        trials: number of seeded random points tried
        seed: generator seed
        exact: also decide the generic rank symbolically (min dimension <= 6)
        bound: coordinates are drawn from [-bound, bound] with denominator q
        q: coordinate denominator

    Returns:
        RankCertificate for the best point found
    """
    if trials < 1:
        raise ValueError('generic_rank needs at least one trial')
    rng = random.Random(seed)
    full = min(M.rows, M.cols)
    best: Optional[RankCertificate] = None
    used = 0
    for used in range(1, trials + 1):
        point = _random_point(rng, M.varspace.size, bound, q)
        if M.rows == 0 or M.cols == 0:
            best = RankCertificate(0, point, (), (), Fraction(1), M, seed, used)
            break
        A = M.evaluate(point)
        _, col_pivots = A.rref()
        rank = len(col_pivots)
        if best is None or rank > best.claimed_rank:
            _, row_pivots = A.T.rref()
            rows, cols = tuple(row_pivots), tuple(col_pivots)
            minor = A.extract(list(rows), list(cols)).det() if rank else sympy.Integer(1)
            best = RankCertificate(rank, point, rows, cols, _to_fraction(minor), M, seed, used)
        if best.claimed_rank == full:
            break
    exact_rank = None
    if exact and full <= EXACT_RANK_LIMIT:
        exact_rank = symbolic_rank(M)
    elif exact:
        logger.info('Exact rank skipped: min dimension %d exceeds %d', full, EXACT_RANK_LIMIT)
    certificate = RankCertificate(best.claimed_rank, best.witness_point, best.row_set, best.col_set,
                                  best.minor_value, M, seed, used, exact_rank)
    logger.debug('generic_rank: %d after %d trials (exact=%s)', certificate.claimed_rank, used, exact_rank)
    return certificate


def recheck_certificate(certificate: RankCertificate, M: Optional[PolyMatrix] = None) -> bool:
    """Re-evaluate the witness minor independently of generic_rank."""
    M = M or certificate.matrix
    k = certificate.claimed_rank
    if len(certificate.row_set) != k or len(certificate.col_set) != k:
        return False
    if len(set(certificate.row_set)) != k or len(set(certificate.col_set)) != k:
        return False
    if any(not 0 <= r < M.rows for r in certificate.row_set):
        return False
    if any(not 0 <= c < M.cols for c in certificate.col_set):
        return False
    if len(certificate.witness_point) != M.varspace.size:
        return False
    if k == 0:
        return certificate.minor_value == 1
    sub = sympy.Matrix(k, k, [_to_sympy(M.entries[r][c].evaluate(certificate.witness_point))
                              for r in certificate.row_set for c in certificate.col_set])
    value = _to_fraction(sub.det(method='berkowitz'))
    return value != 0 and value == certificate.minor_value


def cc_lower_bound_certificate(g: Polynomial, trials: int = 8, seed: int = 0,
                               exact: bool = False) -> RankCertificate:
    return generic_rank(hessian(g), trials, seed, exact)


def cc_lower_bound(g: Polynomial, trials: int = 8, seed: int = 0, exact: bool = False) -> int:
    """
    Lower bound on the communication complexity c(g): the certified rank of
    the mixed Hessian.
    """
    return cc_lower_bound_certificate(g, trials, seed, exact).bound


@dataclass(frozen=True)
class LemmaCheck:
    holds: bool
    bound: int
    certificate: RankCertificate
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'holds': self.holds,
            'bound': self.bound,
            'certified_rank': self.certificate.bound,
            'certificate': self.certificate.to_dict(),
            **self.details,
        }


def check_divisor_lemma(n: int, m: int, h: Polynomial, trials: int = 8, seed: int = 0) -> LemmaCheck:
    """
    Certify rk H(f^m h) >= n - 3 for f = X_1 Y_1 + ... + X_n Y_n.

    Raises:
        LemmaPreconditionError: h is a multiple of f
    """
    if n < 1 or m < 1:
        raise LemmaPreconditionError('divisor lemma needs n >= 1 and m >= 1')
    f = inner_product(n)
    if h.varspace != f.varspace:
        raise ArityError(f'h must be a polynomial in X_1..X_{n}, Y_1..Y_{n}')
    if divides(f, h):
        raise LemmaPreconditionError('h is a multiple of f')
    g = (f ** m) * h
    certificate = generic_rank(hessian(g), trials, seed)
    bound = max(n - 3, 0)
    holds = certificate.claimed_rank >= bound
    if not holds:
        logger.warning('Divisor lemma not certified: rank %d < %d', certificate.claimed_rank, bound)
    return LemmaCheck(holds, bound, certificate, {'n': n, 'm': m, 'h': str(h)})


def exponent_rank(inner: Sequence[Polynomial], outer: Sequence[Polynomial],
                  order: Optional[TermOrder] = None) -> int:
    """
    Rank over Q of the exponent vectors of lt(outer_j(inner)).

    Raises:
        ZeroPolynomialError: a composition vanishes identically
    """
    if not inner:
        raise ArityError('exponent_rank needs at least one inner polynomial')
    vectors = []
    for j, G in enumerate(outer):
        composed = G.compose(list(inner))
        if composed.is_zero():
            raise ZeroPolynomialError(f'outer polynomial {j} composes to zero')
        vectors.append(list(exponent_vector(composed, order)))
    if not vectors:
        return 0
    rank = sympy.Matrix(vectors).rank()
    if rank > len(inner):
        raise AlgCommError(f'exponent vectors have rank {rank} > s = {len(inner)}')
    return int(rank)


def m_matrix(l: Sequence[int]) -> sympy.Matrix:
    """Diagonal l_i (l_i - 1), off-diagonal l_i l_j."""
    k = len(l)
    return sympy.Matrix(k, k, lambda i, j: l[i] * (l[i] - 1) if i == j else l[i] * l[j])


def m_matrix_det(l: Sequence[int]) -> Fraction:
    """Closed form (-1)^(k+1) l_1 ... l_k (l_1 + ... + l_k - 1)."""
    if not l:
        raise ArityError('m_matrix_det needs k >= 1')
    if any(v < 1 for v in l):
        raise ValueError('m_matrix_det expects positive integers')
    product = 1
    for v in l:
        product *= v
    return Fraction((-1) ** (len(l) + 1) * product * (sum(l) - 1))


def brute_force_det(l: Sequence[int]) -> Fraction:
    return Fraction(int(m_matrix(l).det(method='bareiss')))


def minor_lemma_check(P: Polynomial, k: int, trials: int = 8, seed: int = 0) -> LemmaCheck:
    """
    Certify rk(d^2 P / dX_i dY_j) >= k when Z_1 ... Z_k divides lt(P).

    Args:
        P: polynomial in the (X, Z) frame
        k: number of leading Z variables dividing lt(P), k > 1

    Raises:
        LemmaPreconditionError: k <= 1 or the divisibility fails
    """
    space = P.varspace
    if space.frame is not Frame.XZ:
        raise FrameError('minor_lemma_check expects a polynomial in the (X, Z) frame')
    if k <= 1:
        raise LemmaPreconditionError('the minor lemma needs k > 1')
    n = space.n_x
    if k > n:
        raise LemmaPreconditionError(f'k = {k} exceeds n = {n}')
    lt = least_term(P)
    missing = [i + 1 for i in range(k) if lt.exponent[n + i] < 1]
    if missing:
        raise LemmaPreconditionError(
            f'Z_{missing[0]} does not divide lt(P) = {lt.as_polynomial(space)}')
    certificate = generic_rank(hessian(change_frame(P, Frame.XY)), trials, seed)
    holds = certificate.claimed_rank >= k
    return LemmaCheck(holds, k, certificate, {'k': k, 'least_term': str(lt.as_polynomial(space))})
