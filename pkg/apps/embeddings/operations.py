"""Structural checks, graphical embedding checks and the embedding error"""
import itertools
import logging
import math
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx

from apps.common.exceptions import StructureInvalid, VariableMismatch, ZeroProbabilityCondition
from apps.common.workers import map_in_order
from apps.embeddings.models import (
    Distance,
    Embedding,
    EmbeddingVerdict,
    ErrorReport,
    Method,
    QueryError,
    RangeMap,
    Violation,
)
from apps.graphs.models import CausalGraph, VariableMap
from apps.graphs.operations import is_cdag, latent_project
from apps.scm.engine import induced_graph, joint_distribution, query
from apps.scm.models import DiscreteDistribution, Layer, Scm

logger = logging.getLogger(__name__)

# Enumerating alpha over huge preimage products is skipped with a warning
MAX_TOTALITY_CELLS = 1_000_000


# ============ STRUCTURE ============

def validate_structure(e: Embedding, low: Scm, high: Optional[Scm] = None) -> List[Violation]:
    """Every way ``e`` fails to be a well-formed embedding between ``low`` and ``high``"""
    violations = []
    low_vars = set(low.variables)
    for v in e.relevant_low:
        if v not in low_vars:
            violations.append(Violation('unknown-low', v, 'not a variable of the low model'))
    if high is not None:
        for v in e.relevant_high:
            if v not in high.endogenous:
                violations.append(Violation('unknown-high', v, 'not a variable of the high model'))

    if set(e.phi.domain) != set(e.relevant_low):
        violations.append(Violation(
            'phi-domain', ','.join(sorted(e.phi.domain)),
            f"phi is defined on {sorted(e.phi.domain)}, relevant set is {sorted(e.relevant_low)}",
        ))
    outside = set(e.phi.mapping.values()) - set(e.relevant_high)
    for v in sorted(outside):
        violations.append(Violation('phi-codomain', v, 'phi maps onto a variable outside R\''))
    for v in e.relevant_high:
        if not e.phi.preimage(v):
            violations.append(Violation('phi-surjective', v, 'no relevant low variable maps here'))

    if set(e.alphas) != set(e.relevant_high):
        violations.append(Violation(
            'alpha-keys', ','.join(sorted(set(e.alphas) ^ set(e.relevant_high))),
            f"range maps given for {sorted(e.alphas)}, expected {sorted(e.relevant_high)}",
        ))
    if violations:
        return violations

    order = low.variables
    for target in e.relevant_high:
        alpha = e.alphas[target]
        expected = e.phi.preimage(target, order)
        if set(alpha.preimage) != set(expected) or len(alpha.preimage) != len(expected):
            violations.append(Violation(
                'preimage', target, f"range map reads {list(alpha.preimage)}, phi gives {list(expected)}",
            ))
            continue
        violations.extend(_check_alpha_values(target, alpha, low, high))
    return violations


def _check_alpha_values(target: str, alpha: RangeMap, low: Scm, high: Optional[Scm]) -> List[Violation]:
    domains = [low.range_of(v) for v in alpha.preimage]
    if any(d is None for d in domains):
        logger.debug(f"Skipping totality of alpha_{target}: unbounded preimage range")
        return []
    cells = math.prod(len(d) for d in domains)
    if cells > MAX_TOTALITY_CELLS:
        logger.warning(f"Skipping totality of alpha_{target}: {cells} preimage cells")
        return []

    violations = []
    image = set()
    for combo in itertools.product(*domains):
        if alpha.table is not None and combo not in alpha.table:
            violations.append(Violation('totality', target, f"no row for {combo!r}"))
            continue
        image.add(alpha.apply(combo))

    target_range = high.range_of(target) if high is not None and target in high.endogenous else None
    if target_range is not None:
        for value in sorted(image - set(target_range), key=repr):
            violations.append(Violation('alpha-range', target, f"{value!r} is outside the high range"))
        if not violations:
            unreached = set(target_range) - image
            if unreached:
                violations.append(Violation(
                    'alpha-surjective', target, f"values {sorted(unreached, key=repr)} are never reached",
                ))
    return violations


def require_valid(e: Embedding, low: Scm, high: Optional[Scm] = None):
    violations = validate_structure(e, low, high)
    if violations:
        raise StructureInvalid(
            f"Embedding {e.name or '<unnamed>'} is malformed: " + '; '.join(str(v) for v in violations),
            violations,
        )


# ============ GRAPHICAL CHECK ============

def _reaches(g: CausalGraph, hidden: set, source: str, target: str) -> bool:
    """Directed path source -> ... -> target with every intermediate in ``hidden``"""
    if source == target:
        return True
    if source not in hidden:
        return False
    sub = g.digraph.subgraph(hidden | {target})
    return nx.has_path(sub, source, target)


def _mediated_edge(g: CausalGraph, hidden: set, x: str, y: str) -> bool:
    sub = g.digraph.subgraph(hidden | {x, y})
    return any(nx.has_path(sub, c, y) for c in sub.successors(x))


def _mediated_confounded(g: CausalGraph, hidden: set, x: str, y: str) -> bool:
    if any(_reaches(g, hidden, z, x) and _reaches(g, hidden, z, y) for z in hidden):
        return True
    for edge in g.bidirected:
        a, b = tuple(edge)
        if (_reaches(g, hidden, a, x) and _reaches(g, hidden, b, y)) or \
                (_reaches(g, hidden, b, x) and _reaches(g, hidden, a, y)):
            return True
    return False


def _check_mediated(low: CausalGraph, high: CausalGraph, phi: VariableMap, relevant_high) -> List[str]:
    # Pairwise path search in the graphs themselves, without building projections
    relevant_low = set(phi.domain)
    hidden_low = set(low.vertices) - relevant_low
    hidden_high = set(high.vertices) - set(relevant_high)
    clusters = {v: phi.preimage(v, low.vertices) for v in relevant_high}
    problems = []

    for xp, yp in itertools.permutations(relevant_high, 2):
        wanted = any(
            _mediated_edge(low, hidden_low, x, y) for x in clusters[xp] for y in clusters[yp]
        )
        present = _mediated_edge(high, hidden_high, xp, yp)
        if wanted != present:
            problems.append(f"{'missing' if wanted else 'extra'} {xp} -> {yp}")

    for xp, yp in itertools.combinations(relevant_high, 2):
        wanted = any(
            _mediated_confounded(low, hidden_low, x, y) for x in clusters[xp] for y in clusters[yp]
        )
        present = _mediated_confounded(high, hidden_high, xp, yp)
        if wanted != present:
            problems.append(f"{'missing' if wanted else 'extra'} {xp} <-> {yp}")
    return problems


def check_graph_embedding(
    low: CausalGraph,
    high: CausalGraph,
    phi: VariableMap,
    relevant_high: Sequence[str],
    method: Union[Method, str] = Method.PROJECTION,
) -> EmbeddingVerdict:
    """Whether the projection of ``high`` onto R' is a cluster DAG of the projection of ``low`` onto R"""
    method = Method(method)
    relevant_high = tuple(relevant_high)
    high.require(relevant_high)
    low.require(phi.domain)

    if method is Method.PROJECTION:
        report = is_cdag(
            latent_project(low, phi.domain),
            latent_project(high, relevant_high),
            VariableMap(phi.mapping, relevant_high),
        )
        return EmbeddingVerdict(report.ok, method.value, tuple(report.violations()), report.as_dict())

    problems = _check_mediated(low, high, phi, relevant_high)
    return EmbeddingVerdict(not problems, method.value, tuple(problems))


def is_embedding(
    e: Embedding,
    low: Scm,
    high: Scm,
    method: Union[Method, str] = Method.PROJECTION,
) -> EmbeddingVerdict:
    require_valid(e, low, high)
    verdict = check_graph_embedding(induced_graph(low), induced_graph(high), e.phi, e.relevant_high, method)
    logger.info(
        f"Embedding {e.name or '<unnamed>'} ({verdict.method}): "
        f"{'consistent' if verdict.ok else 'inconsistent'} {list(verdict.violations)}"
    )
    return verdict


# ============ PUSHFORWARD ============

def pushforward(alphas: Sequence[RangeMap], dist: DiscreteDistribution) -> DiscreteDistribution:
    """Image of ``dist`` under the product of ``alphas``; their preimages must cover exactly its variables"""
    needed = set()
    for alpha in alphas:
        needed.update(alpha.preimage)
    if needed != set(dist.variables):
        raise VariableMismatch(
            f"Range maps read {sorted(needed)}, distribution is over {sorted(dist.variables)}"
        )
    positions = [[dist.variables.index(v) for v in alpha.preimage] for alpha in alphas]
    out = {}
    for key, p in dist.pmf.items():
        image = tuple(alpha.apply(key[i] for i in idx) for alpha, idx in zip(alphas, positions))
        out[image] = out.get(image, 0.0) + p
    return DiscreteDistribution(tuple(alpha.target for alpha in alphas), out)


# ============ ERROR ============

def _distance(p: DiscreteDistribution, q: DiscreteDistribution, distance: Distance) -> float:
    if distance is Distance.TV:
        return p.total_variation(q)
    return p.kl_divergence(q)


def _subsets(names: Sequence[str]) -> List[Tuple[str, ...]]:
    return [combo for size in range(len(names) + 1) for combo in itertools.combinations(names, size)]


def embedding_error(
    e: Embedding,
    low: Scm,
    high: Scm,
    layer: Union[Layer, str] = Layer.L2,
    distance: Union[Distance, str] = Distance.TV,
    max_workers: Optional[int] = None,
) -> ErrorReport:
    """Maximum over X' subset of R', nonempty Y' subset of R' and low x of
    D(P_high(Y' | x') , alpha_Y' pushed P_low(phi^-1(Y') | x)) where x' = alpha(x)."""
    layer = Layer(layer)
    distance = Distance(distance)
    require_valid(e, low, high)
    low.require_exact()
    high.require_exact()
    joint_low = joint_distribution(low)
    joint_distribution(high)

    relevant_high = high.ordered(e.relevant_high)
    subsets = _subsets(relevant_high)
    target_sets = subsets[1:]
    preimages = {s: e.preimage_of(s, low.variables) for s in subsets}

    units = []
    skipped = []
    for xp in subsets:
        x_low = preimages[xp]
        domains = [low.range_of(v) for v in x_low]
        observed = joint_low.marginal(x_low) if layer is Layer.L1 else None
        for x in itertools.product(*domains):
            if observed is not None and observed.pmf.get(x, 0.0) <= 0:
                skipped.append((xp, x))
                continue
            units.append((xp, x))
    for xp, x in skipped:
        logger.warning(f"Skipping L1 query on {list(xp)}: P_low({dict(zip(preimages[xp], x))}) = 0")

    worst = 1.0 if distance is Distance.TV else math.inf

    def evaluate(unit) -> List[QueryError]:
        xp, x = unit
        low_given = dict(zip(preimages[xp], x))
        high_given = e.image(low_given, xp)
        high_value = tuple(high_given[v] for v in xp)
        rows = []
        for yp in target_sets:
            pushed = pushforward(e.alphas_for(yp), query(low, preimages[yp], layer, low_given))
            try:
                reference = query(high, yp, layer, high_given)
            except ZeroProbabilityCondition:
                logger.warning(
                    f"P_high({high_given}) = 0 while P_low({low_given}) > 0; scoring {list(yp)} as {worst}"
                )
                rows.append(QueryError(xp, yp, x, high_value, worst, 'high-level condition has probability 0'))
                continue
            rows.append(QueryError(xp, yp, x, high_value, _distance(reference, pushed, distance)))
        return rows

    per_query = [row for rows in map_in_order(evaluate, units, max_workers) for row in rows]
    if not per_query:
        logger.warning(f"No answerable queries for embedding {e.name or '<unnamed>'}")
        return ErrorReport(0.0, None, (), layer.value, distance.value, tuple(skipped))

    error = max(q.distance for q in per_query)
    witness = next(q for q in per_query if q.distance == error)
    infinite = sum(1 for q in per_query if math.isinf(q.distance))
    if infinite:
        logger.warning(f"{infinite} queries have infinite KL divergence")
    logger.info(
        f"Embedding error ({layer.value}, {distance.value}) of {e.name or '<unnamed>'}: {error} "
        f"over {len(per_query)} queries"
    )
    return ErrorReport(error, witness, tuple(per_query), layer.value, distance.value, tuple(skipped))


def abstraction_error(
    e: Embedding,
    low: Scm,
    high: Scm,
    layer: Union[Layer, str] = Layer.L2,
    distance: Union[Distance, str] = Distance.TV,
    max_workers: Optional[int] = None,
) -> ErrorReport:
    """Embedding error of a full abstraction: R covers the low model and R' the high one"""
    if set(e.relevant_low) != set(low.variables) or set(e.relevant_high) != set(high.variables):
        raise StructureInvalid(
            "An abstraction must relate every low variable to every high variable",
            [Violation('abstraction', e.name or '<unnamed>', 'R or R\' is not the full variable set')],
        )
    return embedding_error(e, low, high, layer, distance, max_workers)


# ============ BUILDERS ============

def identity_embedding(scm: Scm, variables: Optional[Iterable[str]] = None, name: str = '') -> Embedding:
    names = scm.ordered(variables) if variables is not None else scm.variables
    return Embedding(
        names, names, VariableMap({v: v for v in names}),
        {v: RangeMap(v, (v,), 'identity') for v in names}, name=name or f"identity({scm.name})",
    )


def tupling_embedding(low: Scm, phi: VariableMap, name: str = '') -> Embedding:
    """Range maps that pack each cluster into a tuple in the low model's declared order"""
    relevant_low = low.ordered(phi.domain)
    alphas = {}
    for target in phi.codomain:
        preimage = phi.preimage(target, low.variables)
        alphas[target] = RangeMap(target, preimage, 'identity' if len(preimage) == 1 else 'tuple')
    return Embedding(relevant_low, phi.codomain, phi, alphas, name=name or 'tupling')
