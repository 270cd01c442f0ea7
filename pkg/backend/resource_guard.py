"""
Resource Guard Module
Checks configured size caps before a command does any work.
"""

import logging
from typing import Any, Dict, Iterable, Optional, Sequence

from config import RunConfig
from polynomial import Polynomial
from protocol import ProbabilisticProtocol, ProtocolTree

logger = logging.getLogger(__name__)


class ResourceGuard:
    """
    Enforces variable, degree and knapsack caps on command inputs.
    """

    def __init__(self, config: Optional[RunConfig] = None):
        self.config = config or RunConfig()

    @staticmethod
    def _result() -> Dict[str, Any]:
        return {'valid': True, 'warnings': [], 'errors': []}

    @staticmethod
    def _fail(result: Dict[str, Any], message: str) -> None:
        result['valid'] = False
        result['errors'].append(message)

    def validate_polynomial(self, g: Polynomial, label: str = 'polynomial') -> Dict[str, Any]:
        """
        Check variable count and total degree of a polynomial.

        Args:
            g (Polynomial): Polynomial to check
            label (str): Name used in messages

        Returns:
            Dict containing validation results
        """
        result = self._result()
        if g.varspace.size > self.config.max_vars:
            self._fail(result, f'{label} has {g.varspace.size} variables (max {self.config.max_vars})')
        if g.total_degree() > self.config.max_degree:
            self._fail(result, f'{label} has degree {g.total_degree()} (max {self.config.max_degree})')
        return result

    def validate_protocol(self, protocol: Any) -> Dict[str, Any]:
        """
        Check every tree of a protocol or family against the caps.

        Returns:
            Dict containing validation results
        """
        result = self._result()
        trees: Iterable[ProtocolTree]
        if isinstance(protocol, ProbabilisticProtocol):
            trees = [t for _, t in protocol.members]
        else:
            trees = [protocol]
        for index, tree in enumerate(trees):
            prefix = f'member {index} ' if isinstance(protocol, ProbabilisticProtocol) else ''
            if tree.varspace.size > self.config.max_vars:
                self._fail(result, f'{prefix}uses {tree.varspace.size} variables (max {self.config.max_vars})')
                continue
            for node in tree.nodes.values():
                if node.message.total_degree() > self.config.max_degree:
                    self._fail(result, f'{prefix}node {node.id}: message degree '
                                       f'{node.message.total_degree()} (max {self.config.max_degree})')
                for test in node.tests:
                    if len(test.factors) > 1:
                        degree = sum(max(f.total_degree(), 0) for f in test.factors)
                        if degree > self.config.max_degree:
                            result['warnings'].append(
                                f'{prefix}node {node.id}: factored test of degree {degree}')
                    elif test.factors[0].total_degree() > self.config.max_degree:
                        self._fail(result, f'{prefix}node {node.id}: test degree '
                                           f'{test.factors[0].total_degree()} (max {self.config.max_degree})')
        for warning in result['warnings']:
            logger.info('Resource guard: %s', warning)
        return result

    def validate_size(self, value: int, cap: int, label: str) -> Dict[str, Any]:
        result = self._result()
        if value > cap:
            self._fail(result, f'{label} = {value} exceeds the cap {cap}')
        return result

    def validate_input(self, point: Sequence[Any], expected: int) -> Dict[str, Any]:
        result = self._result()
        if len(point) != expected:
            self._fail(result, f'input has {len(point)} coordinates, expected {expected}')
        return result
