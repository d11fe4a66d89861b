import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from apps.common.exceptions import StructureInvalid, ValueOutOfRange, VariableMismatch
from apps.graphs.models import VariableMap
from apps.scm.expressions import canonical_value
from apps.scm.models import freeze

logger = logging.getLogger(__name__)

AGGREGATORS = ('identity', 'sum', 'tuple')


class Distance(str, Enum):
    TV = 'tv'
    KL = 'kl'


class Method(str, Enum):
    PROJECTION = 'projection'
    MEDIATED = 'mediated'


@dataclass(frozen=True, eq=False)
class RangeMap:
    """alpha_{V'}: values of the preimage variables (in ``preimage`` order) -> value of ``target``.

    Either a built-in ``aggregator`` or an explicit ``table``:
      identity  single preimage variable, value passed through
      sum       arithmetic sum of the preimage values
      tuple     tuple of the preimage values (the value itself for one variable)
    """
    target: str
    preimage: Tuple[str, ...]
    aggregator: Optional[str] = None
    table: Optional[Mapping[Tuple, object]] = None

    def __post_init__(self):
        object.__setattr__(self, 'preimage', tuple(self.preimage))
        if (self.aggregator is None) == (self.table is None):
            raise StructureInvalid(f"Range map for {self.target} needs exactly one of aggregator or table")
        if self.aggregator is not None:
            if self.aggregator not in AGGREGATORS:
                raise StructureInvalid(f"Unknown aggregator {self.aggregator!r} for {self.target}")
            if self.aggregator == 'identity' and len(self.preimage) != 1:
                raise StructureInvalid(f"identity range map for {self.target} needs one preimage variable")
        else:
            table = {}
            for key, value in dict(self.table).items():
                key = freeze(key)
                if not isinstance(key, tuple):
                    key = (key,)
                if len(key) != len(self.preimage):
                    raise VariableMismatch(f"Row {key!r} of range map {self.target} has the wrong arity")
                table[key] = freeze(value)
            object.__setattr__(self, 'table', table)

    def apply(self, values: Sequence):
        values = tuple(values)
        if self.aggregator == 'identity':
            return values[0]
        if self.aggregator == 'sum':
            return canonical_value(sum(values))
        if self.aggregator == 'tuple':
            return values[0] if len(values) == 1 else values
        try:
            return self.table[values]
        except KeyError:
            raise ValueOutOfRange(f"Range map for {self.target} has no row for {values!r}")

    def apply_frame(self, frame: pd.DataFrame) -> pd.Series:
        """Column of images; a row with any missing preimage cell maps to NaN"""
        columns = list(self.preimage)
        if self.aggregator == 'identity':
            return frame[columns[0]].copy()
        if self.aggregator == 'sum':
            return frame[columns].sum(axis=1, skipna=False)
        missing = frame[columns].isna().any(axis=1)
        images = [
            np.nan if skip else self.apply(canonical_value(v) for v in row)
            for row, skip in zip(frame[columns].itertuples(index=False, name=None), missing)
        ]
        return pd.Series(images, index=frame.index, name=self.target)

    def is_identity(self) -> bool:
        if len(self.preimage) != 1:
            return False
        if self.aggregator is not None:
            return True
        return self.table is not None and all(key[0] == value for key, value in self.table.items())


@dataclass(frozen=True, eq=False)
class Embedding:
    """Non-surjective abstraction data: R, R', phi and one range map per V' in R'"""
    relevant_low: Tuple[str, ...]
    relevant_high: Tuple[str, ...]
    phi: VariableMap
    alphas: Mapping[str, RangeMap]
    name: str = ''
    low_name: str = ''
    high_name: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'relevant_low', tuple(self.relevant_low))
        object.__setattr__(self, 'relevant_high', tuple(self.relevant_high))
        object.__setattr__(self, 'alphas', dict(self.alphas))

    def alphas_for(self, targets: Sequence[str]) -> List[RangeMap]:
        return [self.alphas[t] for t in targets]

    def preimage_of(self, targets: Sequence[str], order: Sequence[str]) -> Tuple[str, ...]:
        wanted = set()
        for target in targets:
            wanted.update(self.alphas[target].preimage)
        return tuple(v for v in order if v in wanted)

    def image(self, assignment: Mapping[str, object], targets: Sequence[str]) -> Dict[str, object]:
        """High-level values of ``targets`` for a low-level assignment covering their preimages"""
        out = {}
        for target in targets:
            alpha = self.alphas[target]
            out[target] = alpha.apply(assignment[v] for v in alpha.preimage)
        return out


@dataclass(frozen=True)
class Violation:
    kind: str
    variable: str
    detail: str

    def __str__(self):
        return f"[{self.kind}] {self.variable}: {self.detail}"


@dataclass(frozen=True)
class QueryError:
    intervened: Tuple[str, ...]
    targets: Tuple[str, ...]
    low_value: Tuple
    high_value: Tuple
    distance: float
    note: str = ''

    def as_dict(self) -> Dict:
        return {
            'intervened': self.intervened,
            'targets': self.targets,
            'low_value': self.low_value,
            'high_value': self.high_value,
            'distance': self.distance,
            'note': self.note,
        }


@dataclass(frozen=True)
class ErrorReport:
    error: float
    witness: Optional[QueryError]
    per_query: Tuple[QueryError, ...]
    layer: str
    distance: str
    skipped: Tuple[Tuple[Tuple[str, ...], Tuple], ...] = ()

    def consistent(self, tol: float) -> bool:
        return self.error <= tol

    def as_dict(self, include_queries: bool = True) -> Dict:
        payload = {
            'error': self.error,
            'layer': self.layer,
            'distance': self.distance,
            'witness': self.witness.as_dict() if self.witness else None,
            'skipped': [{'intervened': x, 'low_value': v} for x, v in self.skipped],
            'query_count': len(self.per_query),
        }
        if include_queries:
            payload['per_query'] = [q.as_dict() for q in self.per_query]
        return payload


@dataclass(frozen=True)
class EmbeddingVerdict:
    ok: bool
    method: str
    violations: Tuple[str, ...] = ()
    details: Dict = field(default_factory=dict)

    def __bool__(self):
        return self.ok
