"""
Term Order Module
Monomial orders given as variable priority permutations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple, Union

Exponent = Tuple[int, ...]


@dataclass(frozen=True)
class TermOrder:
    """
    Compare exponent vectors by degree in priority[0], ties broken by
    priority[1], and so on. Smaller keys are "less".

    The default priority (last variable first) makes the least term of g the
    dominant term of g at (eps_1, ..., eps_k) with eps_{i+1} infinitesimal
    relative to eps_i.
    """

    priority: Tuple[int, ...]

    def __post_init__(self):
        priority = tuple(int(i) for i in self.priority)
        if sorted(priority) != list(range(len(priority))):
            raise ValueError(f'Term order priority is not a permutation: {list(priority)}')
        object.__setattr__(self, 'priority', priority)

    @classmethod
    def default(cls, size: int) -> 'TermOrder':
        return cls(tuple(reversed(range(size))))

    @classmethod
    def parse(cls, spec: Union[str, Sequence[int], None], size: int) -> 'TermOrder':
        """
        Build an order from its file/CLI form.

        Args:
            spec: "default", None, a comma separated string or a list of indices
            size: number of variables

        Returns:
            TermOrder
        """
        if spec is None or (isinstance(spec, str) and spec.strip().lower() == 'default'):
            return cls.default(size)
        if isinstance(spec, str):
            spec = [int(part) for part in spec.split(',') if part.strip()]
        order = cls(tuple(spec))
        if order.size != size:
            raise ValueError(f'Term order has {order.size} entries, expected {size}')
        return order

    @property
    def size(self) -> int:
        return len(self.priority)

    def key(self, exponent: Sequence[int]) -> Exponent:
        return tuple(exponent[i] for i in self.priority)

    def least(self, exponents: Iterable[Exponent]) -> Exponent:
        return min(exponents, key=self.key)

    def greatest(self, exponents: Iterable[Exponent]) -> Exponent:
        return max(exponents, key=self.key)

    def to_list(self):
        return list(self.priority)
