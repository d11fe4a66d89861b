"""Projection of mixed graphs onto relevant vertices, and cluster-DAG checks"""
import itertools
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Set, Tuple

import networkx as nx

from apps.common.exceptions import MapMismatch
from apps.graphs.models import CausalGraph, VariableMap, bidirected_pair

logger = logging.getLogger(__name__)


def topological_order(g: CausalGraph) -> Tuple[str, ...]:
    """Topological order of the directed part, ties broken by declaration order"""
    index = {v: i for i, v in enumerate(g.vertices)}
    return tuple(nx.lexicographical_topological_sort(g.digraph, key=index.__getitem__))


def mediated_reach(g: CausalGraph, start: str, relevant: FrozenSet[str]) -> Set[str]:
    """Relevant vertices reachable from ``start`` along directed paths whose
    intermediates are all outside ``relevant``"""
    reached = set()
    seen = {start}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        for child in g.children(node):
            if child in seen:
                continue
            seen.add(child)
            if child in relevant:
                reached.add(child)
            else:
                queue.append(child)
    return reached


def mediated_adjacencies(g: CausalGraph, relevant: Iterable[str]) -> FrozenSet[Tuple[str, str]]:
    relevant = frozenset(relevant)
    g.require(relevant)
    pairs = set()
    for x in g.ordered(relevant):
        pairs.update((x, y) for y in mediated_reach(g, x, relevant))
    return frozenset(pairs)


def mediated_confounders(g: CausalGraph, relevant: Iterable[str]) -> FrozenSet[FrozenSet[str]]:
    """Unordered pairs of relevant vertices sharing a hidden or observed common cause.

    A witness is either an irrelevant vertex with mediated paths into both, or
    a bidirected edge whose endpoints are the pair itself or mediate into it.
    """
    relevant = frozenset(relevant)
    g.require(relevant)

    def entry(v: str) -> Set[str]:
        return {v} if v in relevant else mediated_reach(g, v, relevant)

    pairs = set()
    for z in g.vertices:
        if z in relevant:
            continue
        reach = sorted(mediated_reach(g, z, relevant))
        pairs.update(bidirected_pair(x, y) for x, y in itertools.combinations(reach, 2))

    for edge in g.bidirected:
        a, b = tuple(edge)
        for x in entry(a):
            for y in entry(b):
                if x != y:
                    pairs.add(bidirected_pair(x, y))
    return frozenset(pairs)


def latent_project(g: CausalGraph, relevant: Iterable[str]) -> CausalGraph:
    relevant = frozenset(relevant)
    g.require(relevant)
    return CausalGraph(
        g.ordered(relevant),
        mediated_adjacencies(g, relevant),
        mediated_confounders(g, relevant),
    )


# ============ CLUSTER DAG ============

@dataclass(frozen=True)
class CdagReport:
    ok: bool
    missing_directed: Tuple[Tuple[str, str], ...] = ()
    extra_directed: Tuple[Tuple[str, str], ...] = ()
    missing_bidirected: Tuple[Tuple[str, str], ...] = ()
    extra_bidirected: Tuple[Tuple[str, str], ...] = ()

    def __bool__(self):
        return self.ok

    def violations(self) -> List[str]:
        lines = [f"missing {a} -> {b}" for a, b in self.missing_directed]
        lines += [f"extra {a} -> {b}" for a, b in self.extra_directed]
        lines += [f"missing {a} <-> {b}" for a, b in self.missing_bidirected]
        lines += [f"extra {a} <-> {b}" for a, b in self.extra_bidirected]
        return lines

    def as_dict(self) -> Dict:
        return {
            'ok': self.ok,
            'missing_directed': self.missing_directed,
            'extra_directed': self.extra_directed,
            'missing_bidirected': self.missing_bidirected,
            'extra_bidirected': self.extra_bidirected,
        }


def _sorted_pairs(pairs) -> Tuple[Tuple[str, str], ...]:
    return tuple(sorted(tuple(sorted(p)) if isinstance(p, frozenset) else tuple(p) for p in pairs))


def cluster_image(low: CausalGraph, phi: VariableMap):
    """Directed and bidirected edges the high graph must carry; intra-cluster edges are dropped"""
    directed = {(phi(a), phi(b)) for a, b in low.directed if phi(a) != phi(b)}
    bidirected = set()
    for pair in low.bidirected:
        a, b = tuple(pair)
        if phi(a) != phi(b):
            bidirected.add(bidirected_pair(phi(a), phi(b)))
    return frozenset(directed), frozenset(bidirected)


def is_cdag(low: CausalGraph, high: CausalGraph, phi: VariableMap) -> CdagReport:
    """Whether ``high`` is a cluster DAG of ``low`` under ``phi``"""
    if set(phi.domain) != set(low.vertices):
        raise MapMismatch(
            f"Variable map domain {sorted(phi.domain)} differs from low vertices {sorted(low.vertices)}"
        )
    if set(phi.codomain) != set(high.vertices) or not set(phi.mapping.values()) <= set(high.vertices):
        raise MapMismatch(
            f"Variable map codomain {sorted(phi.codomain)} differs from high vertices {sorted(high.vertices)}"
        )

    directed, bidirected = cluster_image(low, phi)
    report = CdagReport(
        ok=directed == high.directed and bidirected == high.bidirected,
        missing_directed=_sorted_pairs(directed - high.directed),
        extra_directed=_sorted_pairs(high.directed - directed),
        missing_bidirected=_sorted_pairs(bidirected - high.bidirected),
        extra_bidirected=_sorted_pairs(high.bidirected - bidirected),
    )
    if not report.ok:
        logger.debug(f"CDAG check failed: {report.violations()}")
    return report
