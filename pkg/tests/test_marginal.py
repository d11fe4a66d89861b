import pytest

from apps.common.exceptions import MissingCandidate, StructureInvalid
from apps.embeddings.operations import identity_embedding
from apps.fixtures.catalog import C1_QUOTED_JOINT, C1_SECOND_JOINT, C1_X, C1_Y_GIVEN_X, C1_Z_GIVEN_Y
from apps.marginal.models import MarginalProblem
from apps.marginal.operations import (
    certify_solution,
    fixed_queries,
    is_identity_embedding,
    overlap_disagreements,
    reduce,
    restriction_matches,
)
from apps.scm.engine import from_conditionals


def test_reduction_fixes_nine_observational_queries(c1):
    summaries = reduce(c1.problems['first'])
    assert [s.model for s in summaries] == ['M1', 'M2']
    labels = fixed_queries(summaries, 'L1')
    assert len(labels) == 9
    assert 'P(Z | Y)' in labels and 'P(Y | X)' in labels
    assert summaries[1].distribution('L1', ('Z',)).probability({'Z': 0}) == pytest.approx(0.456)


def test_marginals_agree_on_y(c1):
    assert overlap_disagreements(reduce(c1.problems['first'])) == []


def test_overlap_disagreement_is_reported(c1):
    binary = (0, 1)
    skewed = from_conditionals(['Y', 'Z'], {'Y': binary, 'Z': binary}, {'Z': ('Y',)},
                               {'Y': {(): [0.5, 0.5]}, 'Z': C1_Z_GIVEN_Y}, name='skewed')
    m1 = c1.models['m1']
    problem = MarginalProblem(
        (m1, skewed), (identity_embedding(m1), identity_embedding(skewed)), c1.models['first'],
    )
    found = overlap_disagreements(reduce(problem))
    assert len(found) == 1
    assert found[0]['variables'] == ('Y',)
    assert found[0]['tv'] == pytest.approx(0.02)
    assert not certify_solution(problem, 'L1')


def test_both_joints_certify_observationally(c1):
    for name in ('first', 'second'):
        result = certify_solution(c1.problems[name], 'L1')
        assert result.certified, result.violations
        assert all(check.covers_model for check in result.checks)


def test_quoted_joint_fails(c1):
    result = certify_solution(c1.problems['quoted'], 'L1')
    assert not result
    assert any(v.startswith('alpha2') for v in result.violations)


def test_quoted_rows_mix_with_the_wrong_weights():
    # P(Z=0 | Y=y) recovered by weighting the rows with P(X) instead of P(X | Y)
    for y, expected in ((0, 0.6), (1, 0.3)):
        mixed = sum(C1_X[x] * C1_QUOTED_JOINT[(x, y)][0] for x in (0, 1))
        assert mixed == pytest.approx(expected)
        assert mixed == pytest.approx(C1_Z_GIVEN_Y[(y,)][0])

    p_y = [sum(C1_X[x] * C1_Y_GIVEN_X[(x,)][y] for x in (0, 1)) for y in (0, 1)]
    for y in (0, 1):
        weighted = sum(C1_X[x] * C1_Y_GIVEN_X[(x,)][y] * C1_SECOND_JOINT[(x, y)][0] for x in (0, 1)) / p_y[y]
        assert weighted == pytest.approx(C1_Z_GIVEN_Y[(y,)][0])


def test_second_joint_fails_interventionally(c1):
    result = certify_solution(c1.problems['second'], 'L2')
    assert not result
    # P(Z=0 | do Y=0) is 0.4 * 0.4 + 0.6 * 5/6 = 0.66 against 0.6
    assert result.checks[1].error == pytest.approx(0.06)
    assert result.checks[0].error == pytest.approx(0.0, abs=1e-12)


def test_first_joint_certifies_interventionally(c1):
    assert certify_solution(c1.problems['first'], 'L2')


def test_identity_detection(c1, b3):
    assert is_identity_embedding(c1.embeddings['alpha1'], c1.models['m1'])
    assert not is_identity_embedding(c1.embeddings['alpha1'], c1.models['m2'])
    assert not is_identity_embedding(b3.embeddings['parity'], b3.models['low'])


def test_restriction_matches(c1):
    summary = reduce(c1.problems['first'])[1]
    assert restriction_matches(summary, c1.models['first'], 'L1')
    assert restriction_matches(summary, c1.models['second'], 'L1')
    assert not restriction_matches(summary, c1.models['quoted'], 'L1')


def test_problem_shape_errors(c1):
    m1, m2 = c1.models['m1'], c1.models['m2']
    with pytest.raises(StructureInvalid):
        MarginalProblem((m1, m2), (identity_embedding(m1),))
    with pytest.raises(StructureInvalid):
        MarginalProblem((m1, m2), (identity_embedding(m1), identity_embedding(m2)), m1)
    with pytest.raises(MissingCandidate):
        certify_solution(MarginalProblem((m1,), (identity_embedding(m1),)), 'L1')
