import pytest

from apps.fixtures.catalog import counterexample_b3, embedding_diagram, nonuniqueness_c1
from apps.fixtures.ecosystem import ecosystem_discrete
from apps.scm.engine import from_conditionals
from apps.scm.models import ArithmeticExpr, ExogenousSpec, Scm, StructuralFunction, TabularMap, TabularPmf


@pytest.fixture
def chain():
    """X -> Y -> Z over binary values, Y and Z noisy copies"""
    binary = (0, 1)
    return from_conditionals(
        ['X', 'Y', 'Z'],
        {'X': binary, 'Y': binary, 'Z': binary},
        {'Y': ('X',), 'Z': ('Y',)},
        {
            'X': {(): [0.3, 0.7]},
            'Y': {(0,): [0.9, 0.1], (1,): [0.2, 0.8]},
            'Z': {(0,): [0.5, 0.5], (1,): [0.1, 0.9]},
        },
        name='chain',
    )


@pytest.fixture
def confounded():
    """X <-> Y through a shared coin, plus X -> Y"""
    return Scm(
        {'X': (0, 1), 'Y': (0, 1, 2)},
        (
            ExogenousSpec('U', TabularPmf({0: 0.5, 1: 0.5})),
            ExogenousSpec('V', TabularPmf({0: 0.25, 1: 0.75})),
        ),
        {
            'X': StructuralFunction('X', (), ('U',), ArithmeticExpr('U')),
            'Y': StructuralFunction('Y', ('X',), ('U', 'V'), TabularMap({
                (0, 0, 0): 0, (0, 0, 1): 1, (0, 1, 0): 1, (0, 1, 1): 2,
                (1, 0, 0): 0, (1, 0, 1): 1, (1, 1, 0): 2, (1, 1, 1): 2,
            })),
        },
        name='confounded',
    )


@pytest.fixture(scope='session')
def b3():
    return counterexample_b3()


@pytest.fixture(scope='session')
def c1():
    return nonuniqueness_c1()


@pytest.fixture(scope='session')
def diagram():
    return embedding_diagram()


@pytest.fixture(scope='session')
def discrete_ecosystem():
    return ecosystem_discrete()
