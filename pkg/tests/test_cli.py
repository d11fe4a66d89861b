import importlib
import json
from io import StringIO

import pytest
from django.core.management import call_command, load_command_class
from django.core.management.base import CommandError

from apps.cli.commands import COMMAND_TABLE
from apps.fixtures.catalog import export_fixtures


def run(*args):
    out = StringIO()
    call_command(*args, stdout=out)
    return out.getvalue()


def run_failing(*args):
    out = StringIO()
    with pytest.raises(CommandError) as exc:
        call_command(*args, stdout=out)
    return exc.value.returncode, out.getvalue()


def resolve(dotted):
    module_path, _, name = dotted.rpartition('.')
    try:
        return getattr(importlib.import_module(module_path), name)
    except ModuleNotFoundError:
        # Class.method
        owner_path, _, owner = module_path.rpartition('.')
        return getattr(getattr(importlib.import_module(owner_path), owner), name)


@pytest.fixture(scope='module')
def fixtures_dir(tmp_path_factory):
    return export_fixtures(tmp_path_factory.mktemp('cli'), with_datasets=False)


# ============ COMMAND TABLE ============

def test_every_operation_resolves_once():
    paths = [p for ops in COMMAND_TABLE.values() for p in ops]
    assert len(paths) == len(set(paths))
    for path in paths:
        assert callable(resolve(path)), path


@pytest.mark.parametrize('name', sorted(COMMAND_TABLE))
def test_commands_declare_their_operations(name):
    command = load_command_class('apps.cli', name)
    assert command.operations == COMMAND_TABLE[name]


# ============ MODELS AND GRAPHS ============

def test_validate_query(fixtures_dir):
    model = fixtures_dir / 'nonuniqueness_c1' / 'models' / 'm2.json'
    output = run('validate', '--model', str(model), '--query', 'Z', '--layer', 'L1')
    assert 'Model M2: 2 variables, exact' in output


def test_validate_reports_graph_mismatch(fixtures_dir, tmp_path):
    model = fixtures_dir / 'embedding_diagram' / 'models' / 'low.json'
    graph = fixtures_dir / 'embedding_diagram' / 'graphs' / 'low.edges'
    run('validate', '--model', str(model), '--graph', str(graph))

    wrong = tmp_path / 'wrong.edges'
    wrong.write_text('vertices: X1, X2, Y, W, Z\nX1 -> X2\n')
    code, _ = run_failing('validate', '--model', str(model), '--graph', str(wrong))
    assert code == 1


def test_unreadable_model_is_a_failure(tmp_path):
    code, _ = run_failing('validate', '--model', str(tmp_path / 'missing.json'))
    assert code == 2


def test_project_onto_relevant_set(fixtures_dir, tmp_path):
    graph = fixtures_dir / 'embedding_diagram' / 'graphs' / 'high.edges'
    target = tmp_path / 'projected.edges'
    output = run('project', '--graph', str(graph), '--relevant', 'Xp,Yp,Wp', '--write-graph', str(target))
    assert 'Projected onto 3 vertices: 2 directed, 1 bidirected edges' in output
    assert 'Yp <-> Wp' in target.read_text()


def test_project_constructs_model(fixtures_dir, tmp_path):
    diagram = fixtures_dir / 'embedding_diagram'
    target = tmp_path / 'high.json'
    run('project', '--graph', str(diagram / 'graphs' / 'high.edges'), '--low', str(diagram / 'models' / 'low.json'),
        '--phi', 'X1=Xp,X2=Xp,Y=Yp,W=Wp', '--write-model', str(target))
    assert target.is_file()

    code, _ = run_failing('project', '--graph', str(diagram / 'graphs' / 'pruned.edges'),
                          '--low', str(diagram / 'models' / 'low.json'), '--phi', 'X1=Xp,X2=Xp,Y=Yp,W=Wp')
    assert code == 2


def test_constructed_model_pairs_with_written_embedding(fixtures_dir, tmp_path):
    diagram = fixtures_dir / 'embedding_diagram'
    low = str(diagram / 'models' / 'low.json')
    high, embedding = tmp_path / 'high.json', tmp_path / 'tupling.json'
    run('project', '--graph', str(diagram / 'graphs' / 'high.edges'), '--low', low,
        '--phi', 'X1=Xp,X2=Xp,Y=Yp,W=Wp', '--write-model', str(high), '--write-embedding', str(embedding))
    output = run('embed-error', '--low', low, '--high', str(high), '--embedding', str(embedding), '--layer', 'L2')
    assert 'embedding=true' in output


def test_project_checks_cluster_dag(tmp_path):
    low, high, flat = tmp_path / 'low.edges', tmp_path / 'high.edges', tmp_path / 'flat.edges'
    low.write_text('vertices: A, B, C\nA -> B\nB -> C\n')
    high.write_text('vertices: S, T\nS -> T\n')
    flat.write_text('vertices: S, T\n')
    output = run('project', '--graph', str(high), '--cluster-of', str(low), '--phi', 'A=S,B=S,C=T')
    assert 'cluster DAG: yes' in output

    code, output = run_failing('project', '--graph', str(flat), '--cluster-of', str(low), '--phi', 'A=S,B=S,C=T')
    assert code == 1
    assert 'cluster DAG: no' in output


# ============ EMBEDDINGS ============

def test_check_embedding_accepts_ecosystem(fixtures_dir):
    bundle = fixtures_dir / 'ecosystem_discrete'
    output = run('check-embedding', '--low', str(bundle / 'models' / 'm1.json'),
                 '--high', str(bundle / 'models' / 'shared.json'),
                 '--embedding', str(bundle / 'embeddings' / 'alpha1.json'), '--method', 'mediated')
    assert 'embedding=true (mediated)' in output


def test_check_embedding_on_graphs(fixtures_dir):
    graphs = fixtures_dir / 'embedding_diagram' / 'graphs'
    args = ['--low', str(graphs / 'low.edges'), '--graphs', '--phi', 'X1=Xp,X2=Xp,Y=Yp,W=Wp']
    run('check-embedding', '--high', str(graphs / 'high.edges'), *args)
    code, output = run_failing('check-embedding', '--high', str(graphs / 'pruned.edges'), *args)
    assert code == 1
    assert 'missing Wp <-> Yp' in output


def test_embed_error_flags_b3(fixtures_dir, tmp_path):
    bundle = fixtures_dir / 'counterexample_b3'
    report = tmp_path / 'b3.json'
    code, output = run_failing(
        'embed-error', '--low', str(bundle / 'models' / 'low.json'), '--high', str(bundle / 'models' / 'high.json'),
        '--embedding', str(bundle / 'embeddings' / 'parity.json'), '--out', str(report),
    )
    assert code == 1
    assert 'embedding=false' in output
    payload = json.loads(report.read_text())
    assert payload['consistent'] is True
    assert payload['embedding'] is False
    assert payload['violations'] == ['missing Xp -> Zp']


# ============ MARGINAL PROBLEMS ============

def test_certify_problems(fixtures_dir):
    problems = fixtures_dir / 'nonuniqueness_c1' / 'problems'
    output = run('certify', '--problem', str(problems / 'second.json'))
    assert '2 marginal models fix 9 L1 queries' in output
    assert 'certified=true' in output

    code, output = run_failing('certify', '--problem', str(problems / 'quoted.json'))
    assert code == 1
    assert 'certified=false' in output


# ============ DATASETS ============

def test_generate_merge_and_score(fixtures_dir, tmp_path):
    data = tmp_path / 'data'
    run('gen-ecosystem', '--seed', '4', '--out-dir', str(data),
        '--x1-rows', '40', '--x2-rows', '60', '--eval-rows', '200')
    assert {p.name for p in data.iterdir()} == {'x1.csv', 'x2.csv', 'eval.csv'}

    embeddings = fixtures_dir / 'ecosystem' / 'embeddings'
    merged = tmp_path / 'merged.csv'
    output = run(
        'merge',
        '--input', f"{data / 'x1.csv'}:{embeddings / 'alpha1.json'}",
        '--input', f"{data / 'x2.csv'}:{embeddings / 'alpha2.json'}",
        '--schema', 'Humans,Predators,Deer,Squirrels',
        '--write-data', str(merged),
    )
    assert 'Merged 2 datasets into 100 rows' in output
    assert '100 before, 0 after' in output

    report = tmp_path / 'kl.json'
    run(
        'kl',
        '--reference', f"{data / 'eval.csv'}:{embeddings / 'reference.json'}",
        '--estimate', f"merged={merged}",
        '--estimate', f"x1={data / 'x1.csv'}:{embeddings / 'alpha1.json'}",
        '--vars', 'Deer,Squirrels',
        '--out', str(report),
    )
    rows = json.loads(report.read_text())['kl']
    assert [row['estimate'] for row in rows] == ['merged', 'x1']


def test_raw_sample(tmp_path):
    run('gen-ecosystem', '--seed', '1', '--out-dir', str(tmp_path), '--raw', '25')
    header = (tmp_path / 'raw.csv').read_text().splitlines()[0]
    assert header.split(',') == ['Wolves', 'Eagles', 'Humans', 'Berries', 'FallowDeer', 'RedDeer', 'Squirrels']


# ============ FIXTURES ============

def test_fixture_replay_and_unknown_bundle():
    output = run('fixtures', 'replay', '--bundle', 'counterexample_b3')
    assert 'counterexample_b3: 6/6 hold' in output
    code, _ = run_failing('fixtures', 'replay', '--bundle', 'nope')
    assert code == 2


def test_generator_output_is_reproducible(tmp_path):
    args = ['--seed', '7', '--x1-rows', '30', '--x2-rows', '30', '--eval-rows', '30']
    run('gen-ecosystem', *args, '--out-dir', str(tmp_path / 'a'), '--out', str(tmp_path / 'a.json'))
    run('gen-ecosystem', *args, '--out-dir', str(tmp_path / 'b'), '--out', str(tmp_path / 'b.json'))
    for name in ('x1.csv', 'x2.csv', 'eval.csv'):
        assert (tmp_path / 'a' / name).read_bytes() == (tmp_path / 'b' / name).read_bytes()
