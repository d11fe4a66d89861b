import logging
import math

import numpy as np
import pytest

from apps.common.exceptions import (
    AllMissingColumn,
    AllMissingRow,
    MissingCells,
    SchemaMismatch,
    StructureMismatch,
    UnknownColumn,
    ValueOutOfRange,
)
from apps.fixtures.ecosystem import (
    SHARED_SCHEMA,
    alpha_one,
    alpha_two,
    generate_ecosystem_datasets,
    reference_embedding,
)
from apps.merging.models import BinSpec, KnnConfig, MergePlan
from apps.merging.operations import (
    concat_with_missing,
    empirical_distribution,
    kl_divergence,
    kl_table,
    knn_impute,
    merge,
    merge_report,
    transform_dataset,
)
from apps.scm.models import Dataset, DiscreteDistribution


@pytest.fixture(scope='module')
def small_ecosystem():
    return generate_ecosystem_datasets(5, x1_rows=60, x2_rows=90, eval_rows=500)


# ============ TRANSFORM / CONCAT ============

def test_transform_sums_clusters(small_ecosystem):
    x2 = small_ecosystem.x2
    out = transform_dataset(x2, alpha_two())
    assert out.columns == ('Predators', 'Deer', 'Squirrels')
    assert (out.frame['Deer'] == x2.frame['RedDeer'] + x2.frame['FallowDeer']).all()
    with pytest.raises(SchemaMismatch):
        transform_dataset(small_ecosystem.x1, alpha_two())


def test_concat_marks_absent_columns_missing():
    a = Dataset.from_rows(['A'], [[1], [2]])
    b = Dataset.from_rows(['B'], [[3]])
    merged = concat_with_missing([a, b], ['A', 'B'])
    assert merged.provenance == (0, 0, 1)
    assert merged.missing_count() == 3
    assert merged.rows == [(1, None), (2, None), (None, 3)]
    with pytest.raises(UnknownColumn):
        concat_with_missing([a], ['B'])


# ============ IMPUTATION ============

def test_knn_uses_nearest_donors():
    d = Dataset.from_rows(['A', 'B'], [[0, 0], [1, 10], [10, 100], [0.5, None]])
    filled = knn_impute(d, KnnConfig(k=2))
    assert filled.frame['B'].iloc[3] == pytest.approx(5.0)
    assert filled.missing_count() == 0
    # observed cells are untouched
    assert list(filled.frame['B'].iloc[:3]) == [0, 10, 100]


def test_knn_warns_when_donors_run_short(caplog):
    d = Dataset.from_rows(['A', 'B'], [[0, 1], [1, None]])
    with caplog.at_level(logging.WARNING, logger='apps.merging'):
        filled = knn_impute(d, KnnConfig(k=3))
    assert filled.frame['B'].iloc[1] == pytest.approx(1.0)
    assert 'fewer than k=3 donors' in caplog.text


def test_knn_refuses_empty_rows_and_columns():
    with pytest.raises(AllMissingColumn):
        knn_impute(Dataset.from_rows(['A', 'B'], [[1, None], [2, None]]))
    with pytest.raises(AllMissingRow):
        knn_impute(Dataset.from_rows(['A', 'B'], [[1, 2], [None, None]]))
    with pytest.raises(ValueOutOfRange):
        KnnConfig(k=0)


def test_merge_fills_every_cell(small_ecosystem):
    plan = MergePlan.build([small_ecosystem.x1, small_ecosystem.x2], [alpha_one(), alpha_two()], SHARED_SCHEMA)
    merged = merge(plan)
    assert len(merged) == 150
    assert merged.columns == SHARED_SCHEMA
    assert merged.missing_count() == 0

    report = merge_report(plan, merged)
    assert report['missing_before'] == 60 + 90
    assert report['parts'][0]['absent_columns'] == ['Predators']
    assert report['parts'][1]['absent_columns'] == ['Humans']
    assert report['missing_after'] == 0


def test_plan_rejects_targets_outside_schema():
    with pytest.raises(UnknownColumn):
        MergePlan.build([Dataset.from_rows(['Squirrels'], [[1]])], [alpha_two()], ['Deer', 'Squirrels'])


# ============ ESTIMATION ============

def test_empirical_distribution_bins():
    d = Dataset.from_rows(['A'], [[0], [10], [30], [55]])
    dist = empirical_distribution(d, ['A'], BinSpec(25.0))
    assert dict(dist.pmf) == {(0,): 0.5, (25,): 0.25, (50,): 0.25}
    with pytest.raises(MissingCells):
        empirical_distribution(Dataset.from_rows(['A'], [[None], [1]]), ['A'])
    with pytest.raises(ValueOutOfRange):
        BinSpec(0.0)


def test_kl_requires_matching_variables():
    p = DiscreteDistribution(('A',), {(0,): 1.0})
    q = DiscreteDistribution(('B',), {(0,): 1.0})
    with pytest.raises(StructureMismatch):
        kl_divergence(p, q)
    assert kl_divergence(p, DiscreteDistribution(('A',), {(1,): 1.0})) > 10
    assert not math.isinf(kl_divergence(p, DiscreteDistribution(('A',), {(1,): 1.0})))


def test_kl_table_skips_estimates_without_the_columns(small_ecosystem):
    reference = transform_dataset(small_ecosystem.eval, reference_embedding())
    estimates = {
        'x1': transform_dataset(small_ecosystem.x1, alpha_one()),
        'x2': transform_dataset(small_ecosystem.x2, alpha_two()),
    }
    rows = kl_table(reference, estimates, [['Humans'], ['Deer', 'Squirrels']])
    assert [(r['estimate'], r['variables']) for r in rows] == [
        ('x1', ['Humans']), ('x1', ['Deer', 'Squirrels']), ('x2', ['Deer', 'Squirrels']),
    ]
    assert all(r['kl'] >= 0 for r in rows)


# ============ POOLING ============

@pytest.mark.slow
def test_pooled_estimate_beats_both_sources():
    wins = 0
    for seed in range(10):
        data = generate_ecosystem_datasets(seed, x1_rows=2000, x2_rows=4000, eval_rows=100_000)
        reference = transform_dataset(data.eval, reference_embedding())
        plan = MergePlan.build([data.x1, data.x2], [alpha_one(), alpha_two()], SHARED_SCHEMA)
        estimates = {
            'x1': transform_dataset(data.x1, alpha_one()),
            'x2': transform_dataset(data.x2, alpha_two()),
            'merged': merge(plan),
        }
        rows = {r['estimate']: r['kl'] for r in kl_table(reference, estimates, [['Deer', 'Squirrels']])}
        wins += rows['merged'] < min(rows['x1'], rows['x2'])

        # Both sources see Deer and Squirrels on every row, so each estimate is a plain
        # histogram of the ground truth and its divergence shrinks like 1 / rows
        scaled = [rows[name] * len(estimates[name]) for name in estimates]
        assert max(scaled) <= 3 * min(scaled), (seed, rows)
    assert wins >= 9


def test_pooled_histogram_is_untouched_by_imputation(small_ecosystem):
    sources = [transform_dataset(small_ecosystem.x1, alpha_one()), transform_dataset(small_ecosystem.x2, alpha_two())]
    pooled = concat_with_missing(sources, SHARED_SCHEMA)
    merged = merge(MergePlan.build([small_ecosystem.x1, small_ecosystem.x2], [alpha_one(), alpha_two()], SHARED_SCHEMA))
    bins = BinSpec()
    assert empirical_distribution(merged, ['Deer', 'Squirrels'], bins).approx_equal(
        empirical_distribution(pooled, ['Deer', 'Squirrels'], bins)
    )
