"""Worked examples as fixture bundles, and their export to disk."""
import logging
from pathlib import Path
from typing import Dict

from django.conf import settings

from apps.common.reports import write_report
from apps.embeddings.models import Embedding, RangeMap
from apps.embeddings.operations import identity_embedding
from apps.embeddings.serializers import dump_embedding
from apps.fixtures.ecosystem import ecosystem_bundle, ecosystem_discrete, generate_ecosystem_datasets
from apps.fixtures.models import Expectation, FixtureBundle
from apps.graphs.models import CausalGraph, VariableMap, bidirected_pair
from apps.graphs.serializers import dump_graph
from apps.marginal.models import MarginalProblem
from apps.marginal.serializers import problem_to_dict
from apps.scm.engine import from_conditionals
from apps.scm.models import ArithmeticExpr, ExogenousSpec, Scm, StructuralFunction, TabularPmf
from apps.scm.serializers import dump_scm, write_dataset

logger = logging.getLogger(__name__)

FIXTURE_SEED = getattr(settings, 'FIXTURE_SEED', 0)


def _uniform(values):
    return TabularPmf({v: 1.0 / len(values) for v in values})


def _expr(target, endogenous, exogenous, source):
    return StructuralFunction(target, endogenous, exogenous, ArithmeticExpr(source))


# ============ CONSISTENT DATA, INCONSISTENT GRAPH ============

def counterexample_b3() -> FixtureBundle:
    """An embedding with zero interventional error whose high graph drops a causal edge.

    X takes even values only, so Z = X + Y has the parity of Y and the high
    model can let Z' copy Y' while ignoring X'. Observationally Z pins down
    X, which the high model cannot mirror, so the L1 error is 2/3.
    """
    low = Scm(
        {'X': (0, 2, 4), 'Y': (0, 1), 'Z': (0, 1, 2, 3, 4, 5)},
        (ExogenousSpec('U_X', _uniform((0, 2, 4))), ExogenousSpec('U_Y', _uniform((0, 1)))),
        {
            'X': _expr('X', (), ('U_X',), 'U_X'),
            'Y': _expr('Y', (), ('U_Y',), 'U_Y'),
            'Z': _expr('Z', ('X', 'Y'), (), 'X + Y'),
        },
        name='M',
    )
    high = Scm(
        {'Xp': (0, 2, 4), 'Yp': (0, 1), 'Zp': (0, 1)},
        (ExogenousSpec('U_Xp', _uniform((0, 2, 4))), ExogenousSpec('U_Yp', _uniform((0, 1)))),
        {
            'Xp': _expr('Xp', (), ('U_Xp',), 'U_Xp'),
            'Yp': _expr('Yp', (), ('U_Yp',), 'U_Yp'),
            'Zp': _expr('Zp', ('Yp',), (), 'Yp'),
        },
        name="M'",
    )
    phi = VariableMap({'X': 'Xp', 'Y': 'Yp', 'Z': 'Zp'})
    embedding = Embedding(
        ('X', 'Y', 'Z'), ('Xp', 'Yp', 'Zp'), phi,
        {
            'Xp': RangeMap('Xp', ('X',), table={(x,): x for x in (0, 2, 4)}),
            'Yp': RangeMap('Yp', ('Y',), table={(y,): y for y in (0, 1)}),
            'Zp': RangeMap('Zp', ('Z',), table={(z,): z % 2 for z in range(6)}),
        },
        name='parity', low_name='M', high_name="M'",
    )
    members = {'low': 'low', 'high': 'high', 'embedding': 'parity'}
    return FixtureBundle(
        'counterexample_b3',
        models={'low': low, 'high': high},
        embeddings={'parity': embedding},
        maps={'phi': phi},
        expected=(
            Expectation('interventional error', 'embedding_error', {**members, 'layer': 'L2'}, 0.0, 'close', 1e-12),
            Expectation('observational error', 'embedding_error', {**members, 'layer': 'L1'}, 2 / 3, 'close', 1e-9),
            Expectation('well formed', 'structure_ok', members, True),
            Expectation('rejected by projection', 'is_embedding', {**members, 'method': 'projection'}, False),
            Expectation('rejected by mediated paths', 'is_embedding', {**members, 'method': 'mediated'}, False),
            Expectation('names the dropped edge', 'embedding_violations', members, ['missing Xp -> Zp'], 'contains'),
        ),
    )


# ============ NON-UNIQUE JOINTS ============

C1_X = [0.4, 0.6]
C1_Y_GIVEN_X = {(0,): [0.7, 0.3], (1,): [0.4, 0.6]}
C1_Y = [0.52, 0.48]
C1_Z_GIVEN_Y = {(0,): [0.6, 0.4], (1,): [0.3, 0.7]}

# P(Z | X, Y), keyed (x, y)
C1_FIRST_JOINT = {
    (0, 0): [0.6, 0.4], (1, 0): [0.6, 0.4],
    (0, 1): [0.3, 0.7], (1, 1): [0.3, 0.7],
}
C1_SECOND_JOINT = {
    (0, 0): [0.4, 0.6], (1, 0): [5 / 6, 1 / 6],
    (0, 1): [0.2, 0.8], (1, 1): [1 / 3, 2 / 3],
}
# Rows as commonly quoted; they do not reproduce P(Z | Y) and must fail certification
C1_QUOTED_JOINT = {
    (0, 0): [0.4, 0.6], (1, 0): [11 / 15, 4 / 15],
    (0, 1): [0.2, 0.8], (1, 1): [11 / 30, 19 / 30],
}


def _c1_joint(z_rows, name):
    binary = (0, 1)
    return from_conditionals(
        ['X', 'Y', 'Z'],
        {'X': binary, 'Y': binary, 'Z': binary},
        {'Y': ('X',), 'Z': ('X', 'Y')},
        {'X': {(): C1_X}, 'Y': C1_Y_GIVEN_X, 'Z': z_rows},
        name=name,
    )


def nonuniqueness_c1() -> FixtureBundle:
    """Two marginals P(X, Y) and P(Y, Z) admit distinct joints that both certify"""
    binary = (0, 1)
    m1 = from_conditionals(['X', 'Y'], {'X': binary, 'Y': binary}, {'Y': ('X',)},
                           {'X': {(): C1_X}, 'Y': C1_Y_GIVEN_X}, name='M1')
    m2 = from_conditionals(['Y', 'Z'], {'Y': binary, 'Z': binary}, {'Z': ('Y',)},
                           {'Y': {(): C1_Y}, 'Z': C1_Z_GIVEN_Y}, name='M2')
    embeddings = (identity_embedding(m1, name='alpha1'), identity_embedding(m2, name='alpha2'))
    first = _c1_joint(C1_FIRST_JOINT, 'P1')
    second = _c1_joint(C1_SECOND_JOINT, 'P2')
    quoted = _c1_joint(C1_QUOTED_JOINT, 'P2_quoted')

    problems = {
        'first': MarginalProblem((m1, m2), embeddings, first, name='first'),
        'second': MarginalProblem((m1, m2), embeddings, second, name='second'),
        'quoted': MarginalProblem((m1, m2), embeddings, quoted, name='quoted'),
    }
    cell = {'X': 0, 'Y': 0}
    return FixtureBundle(
        'nonuniqueness_c1',
        models={'m1': m1, 'm2': m2, 'first': first, 'second': second, 'quoted': quoted},
        embeddings={'alpha1': embeddings[0], 'alpha2': embeddings[1]},
        problems=problems,
        expected=(
            Expectation('marginal of Y', 'distribution', {'model': 'm1', 'targets': ['Y']},
                        {(0,): 0.52, (1,): 0.48}, 'distribution', 1e-9),
            Expectation('marginal of Z', 'distribution', {'model': 'm2', 'targets': ['Z']},
                        {(0,): 0.456, (1,): 0.544}, 'distribution', 1e-9),
            Expectation('fixed observational queries', 'fixed_query_count', {'problem': 'first', 'layer': 'L1'}, 9),
            Expectation('first joint certifies', 'certify', {'problem': 'first', 'layer': 'L1'}, True),
            Expectation('second joint certifies', 'certify', {'problem': 'second', 'layer': 'L1'}, True),
            Expectation('quoted joint fails', 'certify', {'problem': 'quoted', 'layer': 'L1'}, False),
            Expectation('joints differ', 'query_distance',
                        {'model': 'first', 'other': 'second', 'targets': ['Z'], 'given': cell}, 0.2, 'close', 1e-9),
        ),
    )


# ============ CLUSTERS THROUGH HIDDEN MEDIATORS ============

DIAGRAM_HIGH_EDGES = (
    ('N1', 'Xp'), ('Xp', 'N2'), ('N2', 'Wp'), ('Xp', 'Yp'), ('Xp', 'N3'), ('N3', 'N4'), ('N4', 'Yp'),
    ('N5', 'Yp'), ('N5', 'Wp'), ('Yp', 'N6'), ('Xp', 'N7'), ('Wp', 'N7'), ('N2', 'N7'),
)


def diagram_low_model() -> Scm:
    binary = (0, 1)
    return Scm(
        {'X1': binary, 'X2': binary, 'Y': binary, 'W': binary, 'Z': binary},
        (
            ExogenousSpec('U_X1', TabularPmf({0: 0.5, 1: 0.5})),
            ExogenousSpec('U_X2', TabularPmf({0: 0.8, 1: 0.2})),
            ExogenousSpec('U_YW', TabularPmf({0: 0.6, 1: 0.4})),
            ExogenousSpec('U_Z', TabularPmf({0: 0.3, 1: 0.7})),
        ),
        {
            'X1': _expr('X1', (), ('U_X1',), 'U_X1'),
            'X2': _expr('X2', ('X1',), ('U_X2',), '(X1 + U_X2) % 2'),
            'Y': _expr('Y', ('X1',), ('U_YW',), 'max(X1, U_YW)'),
            'W': _expr('W', ('X2',), ('U_YW',), '(X2 + U_YW) % 2'),
            'Z': _expr('Z', ('W',), ('U_Z',), 'W * U_Z'),
        },
        name='diagram',
    )


def embedding_diagram() -> FixtureBundle:
    """Two low causes share a cluster; every high-level path between clusters runs through hidden nodes"""
    low_graph = CausalGraph(
        ('X1', 'X2', 'Y', 'W', 'Z'),
        frozenset({('X1', 'X2'), ('X2', 'W'), ('W', 'Z'), ('X1', 'Y')}),
        frozenset({bidirected_pair('Y', 'W')}),
    )
    high_graph = CausalGraph(
        ('N1', 'Xp', 'N2', 'N3', 'N4', 'N5', 'Yp', 'Wp', 'N6', 'N7'),
        frozenset(DIAGRAM_HIGH_EDGES),
    )
    phi = VariableMap({'X1': 'Xp', 'X2': 'Xp', 'Y': 'Yp', 'W': 'Wp'}, ('Xp', 'Yp', 'Wp'))
    # Without N5 nothing confounds Yp and Wp
    pruned = CausalGraph(
        high_graph.vertices,
        frozenset(edge for edge in DIAGRAM_HIGH_EDGES if edge[0] != 'N5'),
    )
    graphs = {'low': low_graph, 'high': high_graph, 'pruned': pruned}
    return FixtureBundle(
        'embedding_diagram',
        models={'low': diagram_low_model()},
        graphs=graphs,
        maps={'phi': phi},
        expected=(
            Expectation('low model graph', 'induced_graph', {'model': 'low', 'graph': 'low'}, True),
            Expectation('embeds by projection', 'graph_embedding',
                        {'low_graph': 'low', 'high_graph': 'high', 'phi': 'phi', 'method': 'projection'}, True),
            Expectation('embeds by mediated paths', 'graph_embedding',
                        {'low_graph': 'low', 'high_graph': 'high', 'phi': 'phi', 'method': 'mediated'}, True),
            Expectation('pruned graph rejected', 'graph_embedding',
                        {'low_graph': 'low', 'high_graph': 'pruned', 'phi': 'phi', 'method': 'projection'}, False),
            Expectation('completion is exact', 'construction_error',
                        {'low': 'low', 'phi': 'phi', 'high_graph': 'high', 'layer': 'L2'}, 0.0, 'close', 1e-9),
        ),
    )


# ============ REGISTRY ============

BUNDLES = {
    'counterexample_b3': counterexample_b3,
    'nonuniqueness_c1': nonuniqueness_c1,
    'embedding_diagram': embedding_diagram,
    'ecosystem': ecosystem_bundle,
    'ecosystem_discrete': ecosystem_discrete,
}


def all_bundles() -> Dict[str, FixtureBundle]:
    return {name: build() for name, build in BUNDLES.items()}


def export_fixtures(directory, seed: int = FIXTURE_SEED, with_datasets: bool = True) -> Path:
    """Write every bundle as JSON members plus an expectations file, one subdirectory per bundle.

    With ``with_datasets`` the ecosystem datasets for ``seed`` go under ``ecosystem/data``.
    """
    root = Path(directory)
    index = {}
    for name, bundle in all_bundles().items():
        out = root / name
        files = []
        for key, model in bundle.models.items():
            files.append(dump_scm(model, out / 'models' / f"{key}.json"))
        for key, embedding in bundle.embeddings.items():
            files.append(dump_embedding(embedding, out / 'embeddings' / f"{key}.json"))
        for key, graph in bundle.graphs.items():
            files.append(dump_graph(graph, out / 'graphs' / f"{key}.edges"))
        for key, problem in bundle.problems.items():
            models = {f"../models/{_member(bundle.models, m)}.json": m for m in problem.models}
            candidate = f"../models/{_member(bundle.models, problem.candidate)}.json" if problem.candidate else None
            embeddings = [f"../embeddings/{_member(bundle.embeddings, e)}.json" for e in problem.embeddings]
            payload = problem_to_dict(problem.name, list(models), embeddings, candidate)
            files.append(write_report(payload, out / 'problems' / f"{key}.json"))
        files.append(write_report(
            {'maps': {k: dict(v.mapping) for k, v in bundle.maps.items()}, 'expected': bundle.expectations_as_list()},
            out / 'expected.json',
        ))
        index[name] = [str(f.relative_to(root)) for f in files]

    if with_datasets:
        data = generate_ecosystem_datasets(seed)
        for label, dataset in (('x1', data.x1), ('x2', data.x2), ('eval', data.eval)):
            path = root / 'ecosystem' / 'data' / f"{label}.csv"
            write_dataset(dataset, path)
            index['ecosystem'].append(str(path.relative_to(root)))

    write_report({'seed': seed, 'bundles': index}, root / 'index.json')
    logger.info(f"Exported {len(index)} fixture bundles to {root}")
    return root


def _member(members, value) -> str:
    return next(key for key, candidate in members.items() if candidate is value)
