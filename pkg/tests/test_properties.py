"""Randomized checks: the two graphical criteria agree, projection is stable and
composes, small models behave under intervention, and constructed high-level
models are exactly consistent."""
import itertools

import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis.strategies import booleans, composite, data, integers, sampled_from

from apps.embeddings.construction import construct_consistent_high_level
from apps.embeddings.operations import check_graph_embedding, embedding_error, tupling_embedding
from apps.graphs.models import CausalGraph, VariableMap, bidirected_pair
from apps.graphs.operations import cluster_image, latent_project, topological_order
from apps.scm.engine import induced_graph, joint_distribution, query
from apps.scm.models import DiscreteDistribution, ExogenousSpec, Scm, StructuralFunction, TabularMap, TabularPmf


@composite
def mixed_graphs(draw, prefix='V', min_size=2, max_size=7):
    n = draw(integers(min_size, max_size))
    vertices = tuple(f"{prefix}{i}" for i in range(n))
    pairs = list(itertools.combinations(vertices, 2))
    directed = frozenset(p for p in pairs if draw(booleans()))
    bidirected = frozenset(bidirected_pair(*p) for p in pairs if draw(booleans()))
    return CausalGraph(vertices, directed, bidirected)


@composite
def subsets(draw, names, min_size=1):
    chosen = [v for v in names if draw(booleans())]
    if len(chosen) < min_size:
        chosen = list(names[:min_size])
    return tuple(chosen)


@composite
def surjections(draw, domain, prefix):
    """phi from ``domain`` onto k targets, the first k domain elements fixing the labels"""
    k = draw(integers(1, len(domain)))
    labels = list(range(k)) + [draw(integers(0, k - 1)) for _ in domain[k:]]
    return VariableMap({v: f"{prefix}{i}" for v, i in zip(domain, labels)}, tuple(f"{prefix}{i}" for i in range(k)))


@composite
def embedding_problems(draw):
    low = draw(mixed_graphs('L'))
    relevant = draw(subsets(low.vertices))
    phi = draw(surjections(relevant, 'C'))
    k = len(phi.codomain)
    high = draw(mixed_graphs('C', min_size=k, max_size=max(k, 6)))
    relevant_high = tuple(f"C{i}" for i in range(k))
    return low, high, phi, relevant_high


@settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(embedding_problems())
def test_projection_and_mediated_criteria_agree(problem):
    low, high, phi, relevant_high = problem
    by_projection = check_graph_embedding(low, high, phi, relevant_high, 'projection')
    by_paths = check_graph_embedding(low, high, phi, relevant_high, 'mediated')
    assert by_projection.ok == by_paths.ok
    assert sorted(by_projection.violations) == sorted(by_paths.violations)


@settings(max_examples=300, deadline=None)
@given(mixed_graphs(), booleans())
def test_projection_is_idempotent(g, keep_all):
    relevant = g.vertices if keep_all else g.vertices[::2]
    once = latent_project(g, relevant)
    assert latent_project(once, relevant) == once


@settings(max_examples=300, deadline=None)
@given(mixed_graphs(), data())
def test_projection_composes_over_nested_sets(g, picks):
    outer = picks.draw(subsets(g.vertices))
    inner = picks.draw(subsets(outer))
    assert latent_project(latent_project(g, outer), inner) == latent_project(g, inner)


@settings(max_examples=300, deadline=None)
@given(mixed_graphs(), data())
def test_projection_keeps_the_topological_order(g, picks):
    relevant = set(picks.draw(subsets(g.vertices)))
    restricted = [v for v in topological_order(g) if v in relevant]
    position = {v: i for i, v in enumerate(restricted)}
    for a, b in latent_project(g, relevant).directed:
        assert position[a] < position[b]


# ============ CONSTRUCTION ============

@composite
def small_models(draw, max_size=4, max_range=3, max_parents=3):
    """Variables in declared topological order with private coins plus one optional
    coin shared by several variables"""
    n = draw(integers(1, max_size))
    names = [f"X{i}" for i in range(n)]
    ranges = {v: tuple(range(draw(integers(1, max_range)))) for v in names}
    parents = {
        v: tuple(p for p in names[:i] if draw(booleans()))[-max_parents:]
        for i, v in enumerate(names)
    }

    readers = [v for v in names if draw(booleans())]
    shared = len(readers) >= 2
    exogenous = []
    for v in names:
        weights = [draw(integers(1, 3)) for _ in range(2)]
        exogenous.append(ExogenousSpec(f"U_{v}", TabularPmf({0: weights[0] / sum(weights), 1: weights[1] / sum(weights)})))
    if shared:
        exogenous.append(ExogenousSpec('U_shared', TabularPmf({0: 0.5, 1: 0.5})))

    functions = {}
    for v in names:
        exo = (f"U_{v}",) + (('U_shared',) if shared and v in readers else ())
        domains = [ranges[p] for p in parents[v]] + [(0, 1)] * len(exo)
        rows = {key: draw(sampled_from(ranges[v])) for key in itertools.product(*domains)}
        functions[v] = StructuralFunction(v, parents[v], exo, TabularMap(rows))
    return Scm(ranges, tuple(exogenous), functions, name='random')


@composite
def construction_problems(draw):
    low = draw(small_models())
    relevant = draw(subsets(low.variables))
    # Contiguous blocks in topological order keep the cluster image acyclic
    cuts = sorted({draw(integers(1, len(relevant))) for _ in range(len(relevant))} | {len(relevant)})
    mapping, start = {}, 0
    for index, end in enumerate(cuts):
        for v in relevant[start:end]:
            mapping[v] = f"C{index}"
        start = end
    phi = VariableMap(mapping)
    directed, bidirected = cluster_image(latent_project(induced_graph(low), relevant), phi)
    return low, phi, CausalGraph(phi.codomain, directed, bidirected)


@pytest.mark.slow
@settings(max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
@given(construction_problems())
def test_constructed_model_has_zero_interventional_error(problem):
    low, phi, graph = problem
    high = construct_consistent_high_level(low, phi, graph)
    report = embedding_error(tupling_embedding(low, phi), low, high, 'L2')
    assert report.error <= 1e-9


# ============ MODELS ============

wider_models = small_models(max_size=5, max_range=4, max_parents=2)


@settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
@given(wider_models)
def test_joint_distribution_sums_to_one(m):
    assert joint_distribution(m).total == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
@given(wider_models, data())
def test_intervention_gives_a_point_mass(m, picks):
    var = picks.draw(sampled_from(m.variables))
    value = picks.draw(sampled_from(m.range_of(var)))
    done = query(m, [var], 'L2', {var: value})
    assert done.approx_equal(DiscreteDistribution.point_mass([var], [value]))


def _unconfounded_roots(m):
    return [
        v for v in m.variables
        if not m.functions[v].endogenous_parents and m.functions[v].exogenous_parents == (f"U_{v}",)
    ]


@settings(
    max_examples=200,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large, HealthCheck.filter_too_much],
)
@given(wider_models, data())
def test_intervening_on_an_unconfounded_root_matches_conditioning(m, picks):
    roots = _unconfounded_roots(m)
    assume(roots and len(m.variables) > 1)
    root = picks.draw(sampled_from(roots))
    others = [v for v in m.variables if v != root]
    seen_root = query(m, [root])
    for value in m.range_of(root):
        if seen_root.probability({root: value}) <= 0:
            continue
        seen = query(m, others, 'L1', {root: value})
        done = query(m, others, 'L2', {root: value})
        assert seen.approx_equal(done, tol=1e-9)
