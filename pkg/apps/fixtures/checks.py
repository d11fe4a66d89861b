"""Checkers behind fixture expectations.

Each takes the bundle and the expectation's params (member names, layers,
plain JSON values) and returns the observed value to compare.
"""
import logging

from apps.embeddings.construction import construct_consistent_high_level
from apps.embeddings.operations import (
    check_graph_embedding,
    embedding_error,
    is_embedding,
    tupling_embedding,
    validate_structure,
)
from apps.marginal.operations import certify_solution, fixed_queries, reduce
from apps.scm.engine import induced_graph, query, solve

logger = logging.getLogger(__name__)


def _embedding_error(bundle, low, high, embedding, layer='L2', distance='tv'):
    e = bundle.embeddings[embedding]
    return embedding_error(e, bundle.models[low], bundle.models[high], layer, distance).error


def _is_embedding(bundle, low, high, embedding, method='projection'):
    return is_embedding(bundle.embeddings[embedding], bundle.models[low], bundle.models[high], method).ok


def _embedding_violations(bundle, low, high, embedding, method='projection'):
    verdict = is_embedding(bundle.embeddings[embedding], bundle.models[low], bundle.models[high], method)
    return list(verdict.violations)


def _structure_ok(bundle, low, high, embedding):
    return not validate_structure(bundle.embeddings[embedding], bundle.models[low], bundle.models[high])


def _graph_embedding(bundle, low_graph, high_graph, phi, method='projection'):
    phi = bundle.maps[phi]
    return check_graph_embedding(bundle.graphs[low_graph], bundle.graphs[high_graph], phi, phi.codomain, method).ok


def _construction_error(bundle, low, phi, high_graph, layer='L2'):
    low, phi = bundle.models[low], bundle.maps[phi]
    high = construct_consistent_high_level(low, phi, bundle.graphs[high_graph])
    return embedding_error(tupling_embedding(low, phi), low, high, layer).error


def _certify(bundle, problem, layer):
    return certify_solution(bundle.problems[problem], layer).certified


def _fixed_query_count(bundle, problem, layer='L1'):
    return len(fixed_queries(reduce(bundle.problems[problem]), layer))


def _distribution(bundle, model, targets, layer='L1', given=None):
    return dict(query(bundle.models[model], targets, layer, given).pmf)


def _query_distance(bundle, model, other, targets, layer='L1', given=None):
    ours = query(bundle.models[model], targets, layer, given)
    theirs = query(bundle.models[other], targets, layer, given)
    return ours.total_variation(theirs)


def _solution(bundle, model, exogenous, variable):
    return solve(bundle.models[model], exogenous)[variable]


def _induced_graph(bundle, model, graph):
    return induced_graph(bundle.models[model]) == bundle.graphs[graph]


CHECKS = {
    'embedding_error': _embedding_error,
    'is_embedding': _is_embedding,
    'embedding_violations': _embedding_violations,
    'structure_ok': _structure_ok,
    'graph_embedding': _graph_embedding,
    'construction_error': _construction_error,
    'certify': _certify,
    'fixed_query_count': _fixed_query_count,
    'distribution': _distribution,
    'query_distance': _query_distance,
    'solution': _solution,
    'induced_graph': _induced_graph,
}
