import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from apps.common.exceptions import StructureInvalid
from apps.embeddings.models import Embedding
from apps.scm.models import DiscreteDistribution, Scm

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MarginalProblem:
    """Marginal models M_1..M_n, one embedding per model into a shared variable set, and an optional joint candidate"""
    models: Tuple[Scm, ...]
    embeddings: Tuple[Embedding, ...]
    candidate: Optional[Scm] = None
    name: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'models', tuple(self.models))
        object.__setattr__(self, 'embeddings', tuple(self.embeddings))
        if len(self.models) != len(self.embeddings):
            raise StructureInvalid(
                f"{len(self.models)} models but {len(self.embeddings)} embeddings in problem {self.name or '<unnamed>'}"
            )
        if self.candidate is not None:
            outside = self.universe - set(self.candidate.variables)
            if outside:
                raise StructureInvalid(f"Candidate {self.candidate.name} lacks shared variables {sorted(outside)}")

    @property
    def universe(self) -> set:
        names = set()
        for e in self.embeddings:
            names.update(e.relevant_high)
        return names


# (layer, intervened X', value x', targets Y')
QueryKey = Tuple[str, Tuple[str, ...], Tuple, Tuple[str, ...]]


@dataclass(frozen=True)
class ModelSummary:
    """Everything alpha_i(M_i) fixes about the shared model"""
    index: int
    model: str
    variables: Tuple[str, ...]
    ranges: Dict[str, Tuple]
    queries: Dict[QueryKey, DiscreteDistribution]
    # L2 keys whose low interventions disagree after pushing through alpha
    ambiguous: Tuple[QueryKey, ...] = ()

    def distribution(self, layer: str, targets, intervened=(), value=()) -> DiscreteDistribution:
        return self.queries[(layer, tuple(intervened), tuple(value), tuple(targets))]

    def labels(self, layer: str = 'L1') -> List[str]:
        """Distinct queries as P(Y' | X') labels, ignoring the conditioning values"""
        return sorted({query_label(k[3], k[1]) for k in self.queries if k[0] == layer})


def query_label(targets, intervened=()) -> str:
    inner = ', '.join(targets)
    if intervened:
        inner += ' | ' + ', '.join(intervened)
    return f"P({inner})"


@dataclass(frozen=True)
class EmbeddingCheck:
    index: int
    embedding: str
    structure: Tuple[str, ...] = ()
    error: Optional[float] = None
    covers_model: bool = True
    graphical: Optional[bool] = None

    def as_dict(self) -> Dict:
        return {
            'index': self.index,
            'embedding': self.embedding,
            'structure': list(self.structure),
            'error': self.error,
            'covers_model': self.covers_model,
            'graphical': self.graphical,
        }


@dataclass(frozen=True)
class CertificationResult:
    certified: bool
    layer: str
    checks: Tuple[EmbeddingCheck, ...]
    violations: Tuple[str, ...] = ()
    overlap: Tuple[Dict, ...] = field(default_factory=tuple)

    def __bool__(self):
        return self.certified

    def as_dict(self) -> Dict:
        return {
            'certified': self.certified,
            'layer': self.layer,
            'checks': [c.as_dict() for c in self.checks],
            'violations': list(self.violations),
            'overlap': list(self.overlap),
        }
