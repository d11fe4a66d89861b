import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Tuple

from django.conf import settings

from apps.common.exceptions import UnknownColumn, ValueOutOfRange
from apps.embeddings.models import Embedding
from apps.scm.models import Dataset

logger = logging.getLogger(__name__)

DEFAULT_KNN_K = getattr(settings, 'DEFAULT_KNN_K', 2)
DEFAULT_BIN_WIDTH = getattr(settings, 'DEFAULT_BIN_WIDTH', 25.0)
DEFAULT_BIN_ORIGIN = getattr(settings, 'DEFAULT_BIN_ORIGIN', 0.0)


@dataclass(frozen=True)
class KnnConfig:
    """Donors are rows observed in the imputed column; distances use min-max scaled,
    mutually observed coordinates; ties go to the lowest row index."""
    k: int = DEFAULT_KNN_K

    def __post_init__(self):
        if self.k < 1:
            raise ValueOutOfRange(f"k must be at least 1, got {self.k}")


@dataclass(frozen=True)
class BinSpec:
    """Fixed-width bins; a value v falls in the bin starting at origin + width * floor((v - origin) / width)"""
    width: float = DEFAULT_BIN_WIDTH
    origin: float = DEFAULT_BIN_ORIGIN
    widths: Mapping[str, float] = field(default_factory=dict)
    origins: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for name, width in [('*', self.width), *dict(self.widths).items()]:
            if width <= 0:
                raise ValueOutOfRange(f"Bin width for {name} must be positive, got {width}")

    def width_of(self, var: str) -> float:
        return self.widths.get(var, self.width)

    def origin_of(self, var: str) -> float:
        return self.origins.get(var, self.origin)

    def as_dict(self):
        return {'width': self.width, 'origin': self.origin, 'widths': dict(self.widths), 'origins': dict(self.origins)}


@dataclass(frozen=True, eq=False)
class MergePlan:
    inputs: Tuple[Tuple[Dataset, Embedding], ...]
    target_schema: Tuple[str, ...]
    imputer: KnnConfig = field(default_factory=KnnConfig)

    def __post_init__(self):
        object.__setattr__(self, 'inputs', tuple(tuple(pair) for pair in self.inputs))
        object.__setattr__(self, 'target_schema', tuple(self.target_schema))
        for _, e in self.inputs:
            outside = set(e.relevant_high) - set(self.target_schema)
            if outside:
                raise UnknownColumn(f"Embedding {e.name or '<unnamed>'} maps onto {sorted(outside)} outside the schema")

    @classmethod
    def build(cls, datasets: Sequence[Dataset], embeddings: Sequence[Embedding], schema=None, k: int = DEFAULT_KNN_K):
        """Schema defaults to the union of the embeddings' targets in first-seen order"""
        if schema is None:
            schema = tuple(dict.fromkeys(v for e in embeddings for v in e.relevant_high))
        return cls(tuple(zip(datasets, embeddings)), tuple(schema), KnnConfig(k))
