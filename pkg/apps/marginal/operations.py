"""Multi-resolution marginal problems: reduction, certification, identity detection"""
import itertools
import logging
from typing import Dict, List, Sequence, Union

from apps.common.exceptions import MissingCandidate, ZeroProbabilityCondition
from apps.common.tolerances import CONSISTENCY_TOLERANCE, PROBABILITY_TOLERANCE
from apps.common.workers import map_in_order
from apps.embeddings.models import Distance, Embedding
from apps.embeddings.operations import (
    check_graph_embedding,
    embedding_error,
    pushforward,
    require_valid,
    validate_structure,
)
from apps.marginal.models import CertificationResult, EmbeddingCheck, MarginalProblem, ModelSummary, query_label
from apps.scm.engine import induced_graph, joint_distribution, query
from apps.scm.models import Layer, Scm, value_sort_key

logger = logging.getLogger(__name__)


# ============ REDUCTION ============

def _subsets(names: Sequence[str]):
    return [c for size in range(len(names) + 1) for c in itertools.combinations(names, size)]


def summarize(index: int, m: Scm, e: Embedding) -> ModelSummary:
    """Image model alpha(M): ranges and every L1/L2 query over phi(R), pushed through alpha"""
    require_valid(e, m)
    m.require_exact()
    variables = tuple(e.relevant_high)
    joint = joint_distribution(m)
    image = pushforward(e.alphas_for(variables), joint.marginal(e.preimage_of(variables, m.variables)))

    ranges = {}
    for v in variables:
        values = {e.alphas[v].apply(combo) for combo in itertools.product(
            *(m.range_of(p) for p in e.alphas[v].preimage))}
        ranges[v] = tuple(sorted(values, key=value_sort_key))

    queries = {}
    ambiguous = []
    for xp in _subsets(variables):
        rest = [v for v in variables if v not in xp]
        for yp in _subsets(rest)[1:]:
            # L1: condition the pushed joint on observed high values
            observed = image.marginal(xp)
            for value, p in observed.items():
                if p > 0:
                    queries[(Layer.L1.value, xp, value, yp)] = \
                        image.condition(dict(zip(xp, value))).marginal(yp)

            # L2: intervene on every low preimage value, then push
            x_low = e.preimage_of(xp, m.variables)
            y_low = e.preimage_of(yp, m.variables)
            for x in itertools.product(*(m.range_of(v) for v in x_low)):
                given = dict(zip(x_low, x))
                value = tuple(e.image(given, xp)[v] for v in xp)
                key = (Layer.L2.value, xp, value, yp)
                pushed = pushforward(e.alphas_for(yp), query(m, y_low, Layer.L2, given))
                if key not in queries:
                    queries[key] = pushed
                elif not queries[key].approx_equal(pushed) and key not in ambiguous:
                    ambiguous.append(key)

    if ambiguous:
        logger.warning(f"Model {m.name or index}: {len(ambiguous)} L2 queries depend on the low-level intervention")
    return ModelSummary(index, m.name, variables, ranges, queries, tuple(ambiguous))


def reduce(p: MarginalProblem, max_workers: int = None) -> List[ModelSummary]:
    """One image-model summary per marginal model, all at the shared resolution"""
    items = list(enumerate(zip(p.models, p.embeddings)))
    summaries = map_in_order(lambda item: summarize(item[0], *item[1]), items, max_workers)
    logger.info(f"Reduced problem {p.name or '<unnamed>'} to {len(summaries)} summaries")
    return summaries


def fixed_queries(summaries: Sequence[ModelSummary], layer: Union[Layer, str] = Layer.L1) -> List[str]:
    """Distinct query labels fixed by the summaries taken together"""
    layer = Layer(layer).value
    labels = set()
    for summary in summaries:
        labels.update(summary.labels(layer))
    return sorted(labels)


def overlap_disagreements(summaries: Sequence[ModelSummary], tol: float = PROBABILITY_TOLERANCE) -> List[Dict]:
    """Shared-variable observational marginals that differ between two summaries"""
    found = []
    for a, b in itertools.combinations(summaries, 2):
        shared = tuple(v for v in a.variables if v in b.variables)
        if not shared:
            continue
        ours = a.distribution(Layer.L1.value, shared)
        theirs = b.distribution(Layer.L1.value, shared)
        distance = ours.total_variation(theirs)
        if distance > tol:
            found.append({'models': (a.index, b.index), 'variables': shared, 'tv': distance})
    return found


# ============ CERTIFICATION ============

def _check(index: int, m: Scm, e: Embedding, candidate: Scm, layer: Layer) -> EmbeddingCheck:
    name = e.name or f"embedding {index}"
    covers = set(e.relevant_low) == set(m.variables)
    structure = validate_structure(e, m, candidate)
    if structure:
        return EmbeddingCheck(index, name, tuple(str(v) for v in structure), covers_model=covers)
    report = embedding_error(e, m, candidate, layer, Distance.TV)
    graphical = check_graph_embedding(induced_graph(m), induced_graph(candidate), e.phi, e.relevant_high)
    return EmbeddingCheck(index, name, (), report.error, covers, graphical.ok)


def certify_solution(
    p: MarginalProblem,
    layer: Union[Layer, str],
    tol: float = CONSISTENCY_TOLERANCE,
    max_workers: int = None,
) -> CertificationResult:
    """Certificate iff every embedding is well formed, layer-consistent with the candidate and covers its model"""
    if p.candidate is None:
        raise MissingCandidate(f"Problem {p.name or '<unnamed>'} has no candidate model to certify")
    layer = Layer(layer)

    items = list(enumerate(zip(p.models, p.embeddings)))
    checks = map_in_order(lambda item: _check(item[0], *item[1], p.candidate, layer), items, max_workers)

    violations = []
    for check in checks:
        if check.structure:
            violations.append(f"{check.embedding}: structure: " + '; '.join(check.structure))
        elif check.error > tol:
            violations.append(f"{check.embedding}: {layer.value} error {check.error:.6g} exceeds {tol:g}")
        if not check.covers_model:
            violations.append(f"{check.embedding}: relevant set does not cover model {p.models[check.index].name}")

    overlap = []
    if not any(check.structure for check in checks):
        overlap = overlap_disagreements(reduce(p, max_workers))
        violations.extend(
            f"models {d['models'][0]} and {d['models'][1]} disagree on {list(d['variables'])} (TV {d['tv']:.6g})"
            for d in overlap
        )

    result = CertificationResult(not violations, layer.value, tuple(checks), tuple(violations), tuple(overlap))
    logger.info(
        f"Certification of {p.candidate.name or 'candidate'} at {layer.value}: "
        f"{'certified' if result.certified else f'{len(violations)} violations'}"
    )
    return result


def is_identity_embedding(e: Embedding, m: Scm) -> bool:
    """phi and every alpha are identities and R is all of m's variables"""
    if set(e.relevant_low) != set(m.variables):
        return False
    if not e.phi.is_identity() or set(e.relevant_high) != set(e.relevant_low):
        return False
    return all(e.alphas[v].is_identity() for v in e.relevant_high)


def restriction_matches(summary: ModelSummary, candidate: Scm, layer: Union[Layer, str]) -> bool:
    """Every query in the summary equals the candidate's answer on the same variables"""
    layer = Layer(layer)
    for (key_layer, xp, value, yp), dist in summary.queries.items():
        if key_layer != layer.value:
            continue
        try:
            answer = query(candidate, yp, layer, dict(zip(xp, value)))
        except ZeroProbabilityCondition:
            return False
        if not answer.approx_equal(dist.reorder(answer.variables)):
            logger.debug(f"Candidate differs on {query_label(yp, xp)} at {value}")
            return False
    return True
