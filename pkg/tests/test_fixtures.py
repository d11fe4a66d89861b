import json

import pytest

from apps.common.exceptions import UnknownVariable, ValueOutOfRange
from apps.fixtures.catalog import BUNDLES, export_fixtures
from apps.fixtures.ecosystem import (
    M1_COLUMNS,
    M2_COLUMNS,
    ecosystem_ground_truth,
    generate_ecosystem_datasets,
    ground_truth_graph,
)
from apps.fixtures.models import Expectation, FixtureBundle
from apps.graphs.serializers import load_graph
from apps.marginal.operations import certify_solution
from apps.marginal.serializers import load_problem
from apps.scm.engine import induced_graph, joint_distribution, sample
from apps.scm.serializers import load_scm, read_dataset


@pytest.mark.parametrize('name', sorted(BUNDLES))
def test_bundle_replays_cleanly(name):
    bundle = BUNDLES[name]()
    assert bundle.expected
    failures = bundle.replay()
    assert failures == [], [str(f) for f in failures]


def test_expectation_comparisons():
    assert Expectation('a', 'solution', {}, 1.0, 'close', 1e-3).holds(1.0005)
    assert not Expectation('a', 'solution', {}, 1.0, 'close', 1e-3).holds(1.01)
    assert Expectation('b', 'embedding_violations', {}, ['x'], 'contains').holds(['y', 'x'])
    assert Expectation('c', 'distribution', {}, {(0,): 0.5, (1,): 0.5}, 'distribution', 1e-9).holds({(0,): 0.5, (1,): 0.5})
    assert not Expectation('c', 'distribution', {}, {(0,): 1.0}, 'distribution', 1e-9).holds({(1,): 1.0})


def test_bundle_rejects_dangling_references():
    with pytest.raises(UnknownVariable):
        FixtureBundle('broken', expected=(Expectation('x', 'solution', {'model': 'ghost'}, 0),))


def test_failures_are_reported(b3):
    wrong = Expectation('wrong', 'structure_ok', {'low': 'low', 'high': 'high', 'embedding': 'parity'}, False)
    bundle = FixtureBundle('wrong', b3.models, b3.embeddings, expected=(wrong,))
    failures = bundle.replay()
    assert len(failures) == 1
    assert str(failures[0]) == 'wrong: expected False, observed True'


# ============ EXPORT ============

@pytest.fixture(scope='module')
def exported(tmp_path_factory):
    return export_fixtures(tmp_path_factory.mktemp('fixtures'), with_datasets=False)


def test_export_writes_index(exported):
    index = json.loads((exported / 'index.json').read_text())
    assert set(index['bundles']) == set(BUNDLES)
    for files in index['bundles'].values():
        assert all((exported / f).is_file() for f in files)


def test_exported_members_load_back(exported, b3):
    low = load_scm(exported / 'counterexample_b3' / 'models' / 'low.json')
    assert joint_distribution(low).approx_equal(joint_distribution(b3.models['low']))
    assert load_graph(exported / 'embedding_diagram' / 'graphs' / 'pruned.edges').bidirected == frozenset()


def test_exported_problems_certify(exported):
    first = load_problem(exported / 'nonuniqueness_c1' / 'problems' / 'first.json')
    assert certify_solution(first, 'L1')
    quoted = load_problem(exported / 'nonuniqueness_c1' / 'problems' / 'quoted.json')
    assert not certify_solution(quoted, 'L1')


def test_exported_completion_certifies(exported):
    problem = load_problem(exported / 'ecosystem_discrete' / 'problems' / 'completion.json')
    assert certify_solution(problem, 'L2')


def test_expected_file_lists_every_expectation(exported, c1):
    expected = json.loads((exported / 'nonuniqueness_c1' / 'expected.json').read_text())
    assert [e['name'] for e in expected['expected']] == [e.name for e in c1.expected]


# ============ ECOSYSTEM DATA ============

def test_ground_truth_matches_its_graph():
    model = ecosystem_ground_truth()
    graph = ground_truth_graph()
    induced = induced_graph(model)
    assert set(induced.vertices) == set(graph.vertices)
    assert induced.directed == graph.directed
    assert len(graph.directed) == 11
    assert graph.bidirected == frozenset()


def test_sampled_counts_are_whole_and_non_negative():
    frame = sample(ecosystem_ground_truth(), 500, 2).frame
    for column in ('Wolves', 'Eagles', 'Humans', 'FallowDeer', 'RedDeer', 'Squirrels'):
        assert (frame[column] >= 0).all()
        assert (frame[column] % 1 == 0).all()
    assert (frame['Berries'] >= 0.1).all()



def test_generator_sizes_and_columns():
    data = generate_ecosystem_datasets(1, x1_rows=20, x2_rows=30, eval_rows=40)
    assert (len(data.x1), len(data.x2), len(data.eval)) == (20, 30, 40)
    assert data.x1.columns == M1_COLUMNS
    assert data.x2.columns == M2_COLUMNS
    assert data.x1.missing_count() == 0


def test_prose_layout_swaps_column_sets():
    data = generate_ecosystem_datasets(1, 'prose', x1_rows=20, x2_rows=30, eval_rows=40)
    assert data.x1.columns == M2_COLUMNS
    assert data.x2.columns == M1_COLUMNS
    assert len(data.x1) == 20
    with pytest.raises(ValueOutOfRange):
        generate_ecosystem_datasets(1, 'sideways')


def test_generator_is_deterministic():
    first = generate_ecosystem_datasets(9, x1_rows=50, x2_rows=50, eval_rows=50)
    second = generate_ecosystem_datasets(9, x1_rows=50, x2_rows=50, eval_rows=50)
    other = generate_ecosystem_datasets(10, x1_rows=50, x2_rows=50, eval_rows=50)
    assert first.x1.frame.equals(second.x1.frame)
    assert first.eval.frame.equals(second.eval.frame)
    assert not first.x1.frame.equals(other.x1.frame)
    # the three samples come from independent streams
    assert not first.x2.frame[['Squirrels']].head(50).equals(first.eval.frame[['Squirrels']].head(50))


@pytest.mark.slow
def test_export_with_datasets(tmp_path):
    root = export_fixtures(tmp_path, seed=3)
    x1 = read_dataset(root / 'ecosystem' / 'data' / 'x1.csv')
    assert x1.columns == M1_COLUMNS
    assert len(x1) == 2000
