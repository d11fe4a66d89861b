import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, Mapping, Optional, Sequence, Tuple

import networkx as nx

from apps.common.exceptions import CyclicModel, UnknownVariable

logger = logging.getLogger(__name__)


def bidirected_pair(a: str, b: str) -> FrozenSet[str]:
    return frozenset((a, b))


@dataclass(frozen=True, eq=False)
class CausalGraph:
    """Acyclic directed mixed graph.

    ``vertices`` keeps declaration order for stable output; equality ignores it.
    Bidirected edges are unordered pairs and take no part in cycle detection.
    """
    vertices: Tuple[str, ...]
    directed: FrozenSet[Tuple[str, str]] = frozenset()
    bidirected: FrozenSet[FrozenSet[str]] = frozenset()

    def __post_init__(self):
        vertices = tuple(dict.fromkeys(self.vertices))
        directed = frozenset((a, b) for a, b in self.directed)
        bidirected = frozenset(frozenset(pair) for pair in self.bidirected)
        known = set(vertices)
        for a, b in directed:
            if a not in known or b not in known:
                raise UnknownVariable(f"Edge {a} -> {b} has an endpoint outside the vertex set")
            if a == b:
                raise CyclicModel(f"Self-loop on {a}")
        for pair in bidirected:
            if len(pair) != 2:
                raise CyclicModel(f"Bidirected self-loop on {set(pair)}")
            if not pair <= known:
                raise UnknownVariable(f"Bidirected edge {sorted(pair)} has an endpoint outside the vertex set")
        object.__setattr__(self, 'vertices', vertices)
        object.__setattr__(self, 'directed', directed)
        object.__setattr__(self, 'bidirected', bidirected)

        digraph = nx.DiGraph()
        digraph.add_nodes_from(vertices)
        digraph.add_edges_from(directed)
        if not nx.is_directed_acyclic_graph(digraph):
            raise CyclicModel(f"Directed part has a cycle: {nx.find_cycle(digraph)}")
        object.__setattr__(self, '_digraph', digraph)

    def __eq__(self, other):
        if not isinstance(other, CausalGraph):
            return NotImplemented
        return (set(self.vertices) == set(other.vertices)
                and self.directed == other.directed
                and self.bidirected == other.bidirected)

    def __hash__(self):
        return hash((frozenset(self.vertices), self.directed, self.bidirected))

    def __repr__(self):
        directed = sorted(self.directed)
        bidirected = sorted(tuple(sorted(p)) for p in self.bidirected)
        return f"CausalGraph(vertices={self.vertices}, directed={directed}, bidirected={bidirected})"

    @property
    def digraph(self) -> nx.DiGraph:
        """A copy of the directed part as a networkx graph"""
        return self._digraph.copy()

    def require(self, names: Iterable[str]):
        unknown = set(names) - set(self.vertices)
        if unknown:
            raise UnknownVariable(f"Unknown vertices {sorted(unknown)}")

    def parents(self, vertex: str) -> Tuple[str, ...]:
        self.require([vertex])
        return tuple(v for v in self.vertices if (v, vertex) in self.directed)

    def children(self, vertex: str) -> Tuple[str, ...]:
        self.require([vertex])
        return tuple(v for v in self.vertices if (vertex, v) in self.directed)

    def spouses(self, vertex: str) -> Tuple[str, ...]:
        self.require([vertex])
        return tuple(v for v in self.vertices if bidirected_pair(vertex, v) in self.bidirected)

    def ancestors(self, vertex: str) -> FrozenSet[str]:
        self.require([vertex])
        return frozenset(nx.ancestors(self._digraph, vertex))

    def ordered(self, names: Iterable[str]) -> Tuple[str, ...]:
        names = set(names)
        self.require(names)
        return tuple(v for v in self.vertices if v in names)

    def relabel(self, mapping: Mapping[str, str]) -> 'CausalGraph':
        """Rename vertices one-to-one"""
        rename = lambda v: mapping.get(v, v)
        return CausalGraph(
            tuple(rename(v) for v in self.vertices),
            frozenset((rename(a), rename(b)) for a, b in self.directed),
            frozenset(frozenset(rename(v) for v in pair) for pair in self.bidirected),
        )


@dataclass(frozen=True, eq=False)
class VariableMap:
    """phi: R -> R'. Totality holds by construction; surjectivity is checked separately."""
    mapping: Mapping[str, str]
    codomain: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        mapping = dict(self.mapping)
        object.__setattr__(self, 'mapping', mapping)
        codomain = tuple(dict.fromkeys(mapping.values())) if self.codomain is None \
            else tuple(dict.fromkeys(self.codomain))
        object.__setattr__(self, 'codomain', codomain)

    def __eq__(self, other):
        if not isinstance(other, VariableMap):
            return NotImplemented
        return self.mapping == other.mapping and set(self.codomain) == set(other.codomain)

    def __hash__(self):
        return hash((frozenset(self.mapping.items()), frozenset(self.codomain)))

    @classmethod
    def identity(cls, names: Sequence[str]) -> 'VariableMap':
        return cls({n: n for n in names}, tuple(names))

    @property
    def domain(self) -> Tuple[str, ...]:
        return tuple(self.mapping)

    def __call__(self, name: str) -> str:
        try:
            return self.mapping[name]
        except KeyError:
            raise UnknownVariable(f"{name} is outside the domain of the variable map")

    def preimage(self, target: str, order: Optional[Sequence[str]] = None) -> Tuple[str, ...]:
        """phi^-1(target), in ``order`` when given, else domain order"""
        order = order if order is not None else self.domain
        return tuple(v for v in order if self.mapping.get(v) == target)

    def clusters(self, order: Optional[Sequence[str]] = None) -> Dict[str, Tuple[str, ...]]:
        return {t: self.preimage(t, order) for t in self.codomain}

    def is_surjective(self) -> bool:
        return set(self.mapping.values()) == set(self.codomain)

    def is_identity(self) -> bool:
        return all(k == v for k, v in self.mapping.items())
