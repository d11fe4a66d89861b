"""Fixture bundles: named models, embeddings and graphs plus assertions the
library must reproduce when the bundle is replayed through its own checkers."""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Tuple

from apps.common.exceptions import UnknownVariable
from apps.embeddings.models import Embedding
from apps.fixtures.checks import CHECKS
from apps.graphs.models import CausalGraph, VariableMap
from apps.marginal.models import MarginalProblem
from apps.scm.models import Scm

logger = logging.getLogger(__name__)

# Parameter names that reference bundle members, by member kind
REFERENCES = {
    'models': ('model', 'low', 'high', 'other'),
    'embeddings': ('embedding',),
    'graphs': ('graph', 'low_graph', 'high_graph'),
    'maps': ('phi',),
    'problems': ('problem',),
}


@dataclass(frozen=True)
class Expectation:
    """``kind`` names a checker in CHECKS; ``compare`` is one of equals, close, at_least, contains, distribution"""
    name: str
    kind: str
    params: Mapping[str, object]
    expected: object
    compare: str = 'equals'
    tol: float = 1e-12

    def holds(self, observed) -> bool:
        if self.compare == 'close':
            return abs(observed - self.expected) <= self.tol
        if self.compare == 'at_least':
            return observed >= self.expected - self.tol
        if self.compare == 'contains':
            return all(item in observed for item in self.expected)
        if self.compare == 'distribution':
            keys = set(observed) | set(self.expected)
            return all(abs(observed.get(k, 0.0) - self.expected.get(k, 0.0)) <= self.tol for k in keys)
        return observed == self.expected

    def as_dict(self) -> Dict:
        expected = self.expected
        if self.compare == 'distribution':
            expected = [[list(k), p] for k, p in expected.items()]
        return {
            'name': self.name,
            'kind': self.kind,
            'params': dict(self.params),
            'expected': expected,
            'compare': self.compare,
            'tol': self.tol,
        }


@dataclass(frozen=True)
class Failure:
    expectation: Expectation
    observed: object

    def __str__(self):
        return f"{self.expectation.name}: expected {self.expectation.expected!r}, observed {self.observed!r}"


@dataclass(frozen=True, eq=False)
class FixtureBundle:
    name: str
    models: Mapping[str, Scm] = field(default_factory=dict)
    embeddings: Mapping[str, Embedding] = field(default_factory=dict)
    graphs: Mapping[str, CausalGraph] = field(default_factory=dict)
    maps: Mapping[str, VariableMap] = field(default_factory=dict)
    problems: Mapping[str, MarginalProblem] = field(default_factory=dict)
    expected: Tuple[Expectation, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'expected', tuple(self.expected))
        for expectation in self.expected:
            for kind, keys in REFERENCES.items():
                members = getattr(self, kind)
                for key in keys:
                    ref = expectation.params.get(key)
                    if ref is not None and ref not in members:
                        raise UnknownVariable(
                            f"Expectation {expectation.name} of bundle {self.name} references unknown {kind[:-1]} {ref}"
                        )

    def replay(self, checks: Optional[Mapping[str, Callable]] = None) -> List[Failure]:
        """Re-evaluate every expectation; returns the ones that do not hold"""
        checks = checks or CHECKS
        failures = []
        for expectation in self.expected:
            observed = checks[expectation.kind](self, **expectation.params)
            if not expectation.holds(observed):
                failures.append(Failure(expectation, observed))
                logger.warning(f"Bundle {self.name}: {failures[-1]}")
        logger.info(f"Replayed bundle {self.name}: {len(self.expected) - len(failures)}/{len(self.expected)} hold")
        return failures

    def expectations_as_list(self) -> List[Dict]:
        return [e.as_dict() for e in self.expected]
