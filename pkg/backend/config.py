"""
Config Module
Run configuration from the environment (.env supported) and command-line overrides.
"""

import os
from dataclasses import dataclass, fields, replace
from fractions import Fraction
from typing import Any, Mapping, Optional

from dotenv import load_dotenv

from errors import UsageError

MAX_SEED = 2 ** 64 - 1
OUTPUT_FORMATS = ('text', 'json')

ENV_KEYS = {
    'seed': 'ALGCOMM_SEED',
    'trials': 'ALGCOMM_TRIALS',
    'max_vars': 'ALGCOMM_MAX_VARS',
    'max_degree': 'ALGCOMM_MAX_DEGREE',
    'knapsack_cap': 'ALGCOMM_KNAPSACK_CAP',
    'knapsack_oracle_cap': 'ALGCOMM_KNAPSACK_ORACLE_CAP',
    'threshold': 'ALGCOMM_THRESHOLD',
    'output_format': 'ALGCOMM_FORMAT',
    'log_level': 'ALGCOMM_LOG_LEVEL',
}


def parse_fraction(text: Any) -> Fraction:
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError):
        raise UsageError(f'Not a rational number: {text!r}') from None


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    trials: int = 8
    max_vars: int = 16
    max_degree: int = 32
    knapsack_cap: int = 8
    knapsack_oracle_cap: int = 12
    threshold: Fraction = Fraction(2, 3)
    output_format: str = 'text'
    log_level: str = 'WARNING'

    def __post_init__(self):
        if not 0 <= self.seed <= MAX_SEED:
            raise UsageError(f'seed must be a 64-bit unsigned integer, got {self.seed}')
        if self.trials < 1:
            raise UsageError('trials must be >= 1')
        for name in ('max_vars', 'max_degree', 'knapsack_cap', 'knapsack_oracle_cap'):
            if getattr(self, name) < 1:
                raise UsageError(f'{name} must be positive')
        if not 0 < self.threshold < 1:
            raise UsageError(f'threshold must lie strictly between 0 and 1, got {self.threshold}')
        if self.output_format not in OUTPUT_FORMATS:
            raise UsageError(f'output format must be one of {", ".join(OUTPUT_FORMATS)}')

    @classmethod
    def from_env(cls, environ: Optional[Mapping[str, str]] = None) -> 'RunConfig':
        """
        Build the configuration from ALGCOMM_* variables.

        Args:
            environ (Mapping): variables to read; os.environ after load_dotenv() by default

        Returns:
            RunConfig
        """
        if environ is None:
            load_dotenv()
            environ = os.environ
        values = {}
        for item in fields(cls):
            raw = environ.get(ENV_KEYS[item.name])
            if raw is None or raw == '':
                continue
            values[item.name] = _convert(item.name, raw)
        return cls(**values)

    def override(self, **changes: Any) -> 'RunConfig':
        """Return a copy with every non-None change applied."""
        applied = {k: _convert(k, v) if isinstance(v, str) else v
                   for k, v in changes.items() if v is not None}
        return replace(self, **applied)


def _convert(name: str, raw: Any) -> Any:
    if name == 'threshold':
        return parse_fraction(raw)
    if name in ('output_format', 'log_level'):
        return str(raw).strip().lower() if name == 'output_format' else str(raw).strip().upper()
    try:
        return int(str(raw).strip())
    except ValueError:
        raise UsageError(f'{ENV_KEYS[name]} must be an integer, got {raw!r}') from None
