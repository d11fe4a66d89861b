"""Completion of a high-level SCM for a graphically consistent variable map.

Given a low-level model, phi: R -> R' and a high-level graph whose projection
onto R' is a cluster DAG of the low projection onto R, every high vertex gets
a mechanism according to its position:

  irrelevant, not an ancestor of R'   constant 0
  off R', ancestor of R'              tuple of its parents' values (relay)
  in R'                               re-runs the low mechanism of its cluster

Values of R' variables are cluster tuples in low declared order (the bare
value for singleton clusters), so ``tupling_embedding`` is the matching
embedding. Low exogenous variables are routed to high exogenous variables
whose children can see every cluster that reads them.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Sequence, Tuple

import networkx as nx

from apps.common.exceptions import NotGraphicallyConsistent, ValueOutOfRange
from apps.graphs.models import CausalGraph, VariableMap
from apps.graphs.operations import is_cdag, latent_project, mediated_reach, topological_order
from apps.scm.engine import evaluate_function, induced_graph
from apps.scm.models import ArithmeticExpr, ExogenousSpec, Scm, StructuralFunction, TabularMap, TabularPmf

logger = logging.getLogger(__name__)

IRRELEVANT, RELAY, RELEVANT = 1, 2, 3


@dataclass(frozen=True)
class Accessor:
    """Where a low value sits inside the inputs of a high mechanism"""
    source: str
    path: Tuple[int, ...] = ()

    def read(self, inputs: Mapping[str, object]):
        value = inputs[self.source]
        for index in self.path:
            value = value[index]
        return value


def _product_pmf(laws: Sequence[TabularPmf]) -> Dict[Tuple, float]:
    pmf = {}
    supports = [[(v, p) for v, p in law.table.items() if p > 0] for law in laws]
    for cell in itertools.product(*supports):
        pmf[tuple(v for v, _ in cell)] = math.prod(p for _, p in cell)
    return pmf


def _latent_ancestors(low: CausalGraph, member: str, relevant: frozenset) -> set:
    """Irrelevant vertices with a directed path into ``member`` through irrelevant vertices only"""
    found = set()
    stack = [member]
    while stack:
        node = stack.pop()
        for parent in low.parents(node):
            if parent not in relevant and parent not in found:
                found.add(parent)
                stack.append(parent)
    return found


class _Builder:
    def __init__(self, low: Scm, phi: VariableMap, graph: CausalGraph):
        self.low = low
        self.phi = phi
        self.graph = graph
        self.low_graph = induced_graph(low)
        self.relevant_low = frozenset(phi.domain)
        self.relevant_high = graph.ordered(phi.codomain)
        self.clusters = {v: phi.preimage(v, low.variables) for v in self.relevant_high}

        ancestors = set()
        for v in self.relevant_high:
            ancestors |= graph.ancestors(v)
        self.kind = {}
        for v in graph.vertices:
            if v in self.clusters:
                self.kind[v] = RELEVANT
            elif v in ancestors:
                self.kind[v] = RELAY
            else:
                self.kind[v] = IRRELEVANT
        self.endo_parents = {v: graph.parents(v) for v in graph.vertices}

    # ---- low mechanisms behind each cluster ----

    def plan_clusters(self):
        self.need = {}
        self.r_inputs = {}
        self.u_inputs = {}
        exo_order = self.low.exogenous_names
        for target, members in self.clusters.items():
            need = set(members)
            for member in members:
                need |= _latent_ancestors(self.low_graph, member, self.relevant_low)
            order = [v for v in self.low.topological_order if v in need]
            r_inputs, u_inputs = set(), set()
            for v in order:
                if v in self.low.interventions:
                    continue
                func = self.low.functions[v]
                r_inputs.update(p for p in func.endogenous_parents if p not in need)
                u_inputs.update(func.exogenous_parents)
            self.need[target] = order
            self.r_inputs[target] = [v for v in self.low.variables if v in r_inputs]
            self.u_inputs[target] = [u for u in exo_order if u in u_inputs]

    # ---- exogenous routing ----

    def _visible(self, children) -> set:
        seen = set()
        for child in children:
            if self.kind[child] == RELEVANT:
                seen.add(child)
            elif self.kind[child] == RELAY:
                seen |= mediated_reach(self.graph, child, frozenset(self.relevant_high))
        return seen

    def route_exogenous(self):
        bidirected = nx.Graph()
        bidirected.add_nodes_from(self.graph.vertices)
        bidirected.add_edges_from(tuple(pair) for pair in self.graph.bidirected)
        index = {v: i for i, v in enumerate(self.graph.vertices)}
        cliques = sorted(
            (tuple(sorted(c, key=index.__getitem__)) for c in nx.find_cliques(bidirected) if len(c) > 1),
            key=lambda c: [index[v] for v in c],
        )

        taken = set(self.graph.vertices) | set(self.low.exogenous_names)

        def fresh(base: str) -> str:
            name = base
            while name in taken:
                name += '_'
            taken.add(name)
            return name

        candidates = []
        for v in self.graph.vertices:
            if self.kind[v] == RELEVANT:
                candidates.append(('private', v, (v,)))
        for v in self.graph.vertices:
            if self.kind[v] == RELAY:
                candidates.append(('private', v, (v,)))
        for clique in cliques:
            candidates.append(('shared', '_'.join(clique), clique))

        readers = {}
        for target in self.relevant_high:
            for u in self.u_inputs[target]:
                readers.setdefault(u, set()).add(target)

        assigned = {}
        for u in self.low.exogenous_names:
            if u not in readers:
                continue
            for candidate in candidates:
                if readers[u] <= self._visible(candidate[2]):
                    assigned.setdefault(candidate, []).append(u)
                    logger.debug(f"Routing {u} to carrier {candidate[1]}")
                    break
            else:
                raise NotGraphicallyConsistent(
                    f"No exogenous carrier of the high graph reaches all of {sorted(readers[u])}, "
                    f"which share {u}"
                )

        # Cliques are materialized even when empty so their bidirected edges survive
        self.carriers = {}
        self.carried = {}
        self.exo_parents = {v: [] for v in self.graph.vertices}
        for candidate in candidates:
            kind, label, children = candidate
            if kind == 'private' and candidate not in assigned:
                continue
            name = fresh(f"U_{label}")
            self.carriers[name] = children
            self.carried[name] = assigned.get(candidate, [])
            for child in children:
                self.exo_parents[child].append(name)

        self.exogenous = []
        self.supports = {}
        for name, carried in self.carried.items():
            pmf = _product_pmf([self.low.law(u) for u in carried])
            self.exogenous.append(ExogenousSpec(name, TabularPmf(pmf)))
            self.supports[name] = tuple(pmf)

    # ---- accessors into relay values ----

    def _relay_path(self, origin: str, target: str) -> List[str]:
        nodes = {v for v in self.graph.vertices if self.kind[v] == RELAY} | {origin, target}
        try:
            return nx.shortest_path(self.graph.digraph.subgraph(nodes), origin, target)
        except nx.NetworkXNoPath:
            raise NotGraphicallyConsistent(f"No relay path from {origin} to {target} in the high graph")

    def _walk(self, path: List[str]) -> Tuple[str, Tuple[int, ...]]:
        """Source parent of path[-1] and indices leading back to path[0]'s value"""
        indices = []
        for i in range(len(path) - 2, 0, -1):
            indices.append(self.endo_parents[path[i]].index(path[i - 1]))
        return path[-2], tuple(indices)

    def endogenous_accessor(self, target: str, low_var: str) -> Accessor:
        owner = self.phi(low_var)
        source, indices = self._walk(self._relay_path(owner, target))
        members = self.clusters[owner]
        if len(members) > 1:
            indices += (members.index(low_var),)
        return Accessor(source, indices)

    def exogenous_accessor(self, target: str, u: str) -> Accessor:
        carrier = next(name for name, carried in self.carried.items() if u in carried)
        slot = self.carried[carrier].index(u)
        if carrier in self.exo_parents[target]:
            return Accessor(carrier, (slot,))
        for child in self.carriers[carrier]:
            if self.kind[child] != RELAY:
                continue
            if target not in mediated_reach(self.graph, child, frozenset(self.relevant_high)):
                continue
            path = self._relay_path(child, target)
            source, indices = self._walk(path)
            position = len(self.endo_parents[child]) + self.exo_parents[child].index(carrier)
            return Accessor(source, indices + (position, slot))
        raise NotGraphicallyConsistent(f"{target} cannot read {u} through carrier {carrier}")

    # ---- mechanisms ----

    def build(self, name: str) -> Scm:
        self.plan_clusters()
        self.route_exogenous()

        ranges = {}
        functions = {}
        for v in topological_order(self.graph):
            endo = self.endo_parents[v]
            exo = tuple(self.exo_parents[v])
            domains = [ranges[p] for p in endo] + [self.supports[u] for u in exo]
            if self.kind[v] == IRRELEVANT:
                ranges[v] = (0,)
                functions[v] = StructuralFunction(v, endo, exo, ArithmeticExpr('0'))
            elif self.kind[v] == RELAY:
                rows = {key: key for key in itertools.product(*domains)}
                ranges[v] = tuple(rows.values())
                functions[v] = StructuralFunction(v, endo, exo, TabularMap(rows))
            else:
                ranges[v] = self._cluster_range(v)
                functions[v] = StructuralFunction(v, endo, exo, self._cluster_table(v, endo + exo, domains, ranges[v]))

        endogenous = {v: ranges[v] for v in self.graph.vertices}
        return Scm(endogenous, tuple(self.exogenous), functions, name=name)

    def _cluster_range(self, target: str) -> Tuple:
        members = self.clusters[target]
        if len(members) == 1:
            return self.low.range_of(members[0])
        return tuple(itertools.product(*(self.low.range_of(m) for m in members)))

    def _cluster_table(self, target, inputs, domains, target_range) -> TabularMap:
        members = self.clusters[target]
        readers = [(v, self.endogenous_accessor(target, v)) for v in self.r_inputs[target]]
        readers += [(u, self.exogenous_accessor(target, u)) for u in self.u_inputs[target]]
        fallback = target_range[0]

        rows = {}
        unreachable = 0
        for key in itertools.product(*domains):
            values = dict(zip(inputs, key))
            env = {name: accessor.read(values) for name, accessor in readers}
            try:
                for v in self.need[target]:
                    if v in self.low.interventions:
                        env[v] = self.low.interventions[v]
                    else:
                        env[v] = evaluate_function(self.low, self.low.functions[v], env)
            except ValueOutOfRange:
                # Parent combination the low model never produces
                unreachable += 1
                rows[key] = fallback
                continue
            rows[key] = env[members[0]] if len(members) == 1 else tuple(env[m] for m in members)
        if unreachable:
            logger.debug(f"{target}: {unreachable} unreachable parent combinations mapped to {fallback!r}")
        return TabularMap(rows)


def construct_consistent_high_level(
    low: Scm,
    phi: VariableMap,
    high_graph: CausalGraph,
    name: str = '',
) -> Scm:
    """High-level SCM on ``high_graph`` whose tupling embedding has zero L2 error"""
    low.require_exact()
    high_graph.require(phi.codomain)
    relevant_high = high_graph.ordered(phi.codomain)
    report = is_cdag(
        latent_project(induced_graph(low), phi.domain),
        latent_project(high_graph, relevant_high),
        VariableMap(phi.mapping, relevant_high),
    )
    if not report:
        raise NotGraphicallyConsistent(
            f"High graph is not graphically consistent with the low model: {report.violations()}", report,
        )

    scm = _Builder(low, phi, high_graph).build(name or f"completion({low.name})")
    logger.info(
        f"Constructed {scm.name} with {len(scm.variables)} variables and {len(scm.exogenous)} exogenous carriers"
    )
    return scm
