"""Ecosystem fixtures: the seven-species data-generation model, its dataset
generator, and a desk-scale discrete version of the two marginal models."""
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from django.conf import settings

from apps.common.exceptions import ValueOutOfRange
from apps.embeddings.models import Embedding, RangeMap
from apps.embeddings.operations import tupling_embedding
from apps.fixtures.models import Expectation, FixtureBundle
from apps.graphs.models import CausalGraph, VariableMap, bidirected_pair
from apps.marginal.models import MarginalProblem
from apps.scm.engine import sample
from apps.scm.models import ArithmeticExpr, Dataset, ExogenousSpec, NormalLaw, Scm, StructuralFunction, TabularPmf

logger = logging.getLogger(__name__)

X1_ROWS = getattr(settings, 'ECOSYSTEM_X1_ROWS', 2000)
X2_ROWS = getattr(settings, 'ECOSYSTEM_X2_ROWS', 4000)
EVAL_ROWS = getattr(settings, 'ECOSYSTEM_EVAL_ROWS', 100000)

M1_COLUMNS = ('Humans', 'Berries', 'Deer', 'Squirrels')
M2_COLUMNS = ('Wolves', 'Eagles', 'RedDeer', 'FallowDeer', 'Squirrels')
SHARED_SCHEMA = ('Humans', 'Predators', 'Deer', 'Squirrels')
LAYOUTS = ('figure', 'prose')


# ============ GROUND TRUTH ============

def _expr(target, endogenous, exogenous, source, integer_output=True):
    return StructuralFunction(target, endogenous, exogenous, ArithmeticExpr(source), integer_output)


def ecosystem_ground_truth() -> Scm:
    """Seven species with normal noise on the four roots; animal counts are rounded up"""
    exogenous = (
        ExogenousSpec('U_Wolves', NormalLaw(1.0, 0.20)),
        ExogenousSpec('U_Eagles', NormalLaw(1.0, 0.15)),
        ExogenousSpec('U_Humans', NormalLaw(1.0, 0.25)),
        ExogenousSpec('U_Berries', NormalLaw(1.0, 0.25)),
    )
    functions = {
        'Wolves': _expr('Wolves', (), ('U_Wolves',), '100 * max(U_Wolves, 0.1)'),
        'Eagles': _expr('Eagles', (), ('U_Eagles',), '10 * max(U_Eagles, 0.1)'),
        'Humans': _expr('Humans', (), ('U_Humans',), '15 * max(U_Humans, 0.1)'),
        # Berries is an abundance factor, not a count
        'Berries': _expr('Berries', (), ('U_Berries',), 'max(U_Berries, 0.1)', integer_output=False),
        'FallowDeer': _expr(
            'FallowDeer', ('Berries', 'Wolves', 'Eagles', 'Humans'), (),
            'max(300 * Berries - Wolves - 2 * Eagles - 3 * Humans, 0)',
        ),
        'RedDeer': _expr(
            'RedDeer', ('Berries', 'Wolves', 'Humans'), (),
            'max(200 * Berries - Wolves - 3 * Humans, 0)',
        ),
        'Squirrels': _expr(
            'Squirrels', ('Berries', 'Eagles', 'FallowDeer', 'Humans'), (),
            'max(200 * Berries - 5 * Eagles - 4 * Humans - 0.5 * FallowDeer, 0)',
        ),
    }
    endogenous = {v: None for v in ('Wolves', 'Eagles', 'Humans', 'Berries', 'FallowDeer', 'RedDeer', 'Squirrels')}
    return Scm(endogenous, exogenous, functions, name='ecosystem')


def ground_truth_graph() -> CausalGraph:
    return CausalGraph(
        ('Wolves', 'Eagles', 'Humans', 'Berries', 'FallowDeer', 'RedDeer', 'Squirrels'),
        frozenset({
            ('Wolves', 'RedDeer'), ('Wolves', 'FallowDeer'), ('Eagles', 'FallowDeer'), ('Eagles', 'Squirrels'),
            ('FallowDeer', 'Squirrels'), ('Berries', 'RedDeer'), ('Berries', 'FallowDeer'),
            ('Berries', 'Squirrels'), ('Humans', 'RedDeer'), ('Humans', 'FallowDeer'), ('Humans', 'Squirrels'),
        }),
    )


# ============ EMBEDDINGS INTO THE SHARED MODEL ============

def alpha_one() -> Embedding:
    """Humans, Deer and Squirrels of M1 map onto themselves"""
    names = ('Humans', 'Deer', 'Squirrels')
    return Embedding(
        names, names, VariableMap({v: v for v in names}),
        {v: RangeMap(v, (v,), 'identity') for v in names}, name='alpha1', low_name='M1', high_name="M'",
    )


def alpha_two() -> Embedding:
    """Both deer species sum into Deer, wolves and eagles into Predators"""
    phi = VariableMap({
        'Wolves': 'Predators', 'Eagles': 'Predators',
        'RedDeer': 'Deer', 'FallowDeer': 'Deer',
        'Squirrels': 'Squirrels',
    }, ('Predators', 'Deer', 'Squirrels'))
    alphas = {
        'Predators': RangeMap('Predators', ('Wolves', 'Eagles'), 'sum'),
        'Deer': RangeMap('Deer', ('RedDeer', 'FallowDeer'), 'sum'),
        'Squirrels': RangeMap('Squirrels', ('Squirrels',), 'identity'),
    }
    return Embedding(M2_COLUMNS, phi.codomain, phi, alphas, name='alpha2', low_name='M2', high_name="M'")


def reference_embedding() -> Embedding:
    """Ground truth seen at the shared resolution, for reference histograms"""
    relevant = ('Wolves', 'Eagles', 'Humans', 'FallowDeer', 'RedDeer', 'Squirrels')
    phi = VariableMap({
        'Humans': 'Humans', 'Wolves': 'Predators', 'Eagles': 'Predators',
        'RedDeer': 'Deer', 'FallowDeer': 'Deer', 'Squirrels': 'Squirrels',
    }, SHARED_SCHEMA)
    alphas = {
        'Humans': RangeMap('Humans', ('Humans',), 'identity'),
        'Predators': RangeMap('Predators', ('Wolves', 'Eagles'), 'sum'),
        'Deer': RangeMap('Deer', ('FallowDeer', 'RedDeer'), 'sum'),
        'Squirrels': RangeMap('Squirrels', ('Squirrels',), 'identity'),
    }
    return Embedding(relevant, SHARED_SCHEMA, phi, alphas, name='reference', low_name='ecosystem', high_name="M'")


def shared_graph() -> CausalGraph:
    """High-level ecosystem graph over Humans, Predators, Deer and Squirrels"""
    return CausalGraph(
        SHARED_SCHEMA,
        frozenset({
            ('Humans', 'Deer'), ('Humans', 'Squirrels'), ('Predators', 'Deer'),
            ('Predators', 'Squirrels'), ('Deer', 'Squirrels'),
        }),
        frozenset({bidirected_pair('Deer', 'Squirrels')}),
    )


# ============ DATASETS ============

@dataclass(frozen=True, eq=False)
class EcosystemData:
    x1: Dataset
    x2: Dataset
    eval: Dataset


def _m1_view(d: Dataset) -> Dataset:
    frame = d.frame
    return Dataset(pd.DataFrame({
        'Humans': frame['Humans'],
        'Berries': frame['Berries'],
        'Deer': frame['FallowDeer'] + frame['RedDeer'],
        'Squirrels': frame['Squirrels'],
    }))


def generate_ecosystem_datasets(
    seed: int,
    x1_layout: str = 'figure',
    x1_rows: int = X1_ROWS,
    x2_rows: int = X2_ROWS,
    eval_rows: int = EVAL_ROWS,
) -> EcosystemData:
    """Three independent samples of the ground truth from spawned seed streams.

    ``figure``: X1 holds M1's columns (Deer = FallowDeer + RedDeer), X2 holds M2's.
    ``prose``: the two column sets are swapped, so the 2000-row sample drops
    Humans and Berries and the 4000-row sample carries the aggregated Deer.
    """
    if x1_layout not in LAYOUTS:
        raise ValueOutOfRange(f"Unknown X1 layout {x1_layout!r}; expected one of {LAYOUTS}")
    model = ecosystem_ground_truth()
    first, second, third = np.random.SeedSequence(seed).spawn(3)
    small = sample(model, x1_rows, first)
    large = sample(model, x2_rows, second)
    reference = sample(model, eval_rows, third)

    if x1_layout == 'figure':
        x1, x2 = _m1_view(small), large.select(M2_COLUMNS)
    else:
        x1, x2 = small.select(M2_COLUMNS), _m1_view(large)
    logger.info(
        f"Generated ecosystem datasets with seed {seed} ({x1_layout} layout): "
        f"{len(x1)}/{len(x2)}/{len(reference)} rows"
    )
    return EcosystemData(x1, x2, reference)


def ecosystem_bundle() -> FixtureBundle:
    model = ecosystem_ground_truth()
    ones = {u: 1.0 for u in model.exogenous_names}
    return FixtureBundle(
        'ecosystem',
        models={'ground_truth': model},
        embeddings={'alpha1': alpha_one(), 'alpha2': alpha_two(), 'reference': reference_embedding()},
        graphs={'ground_truth': ground_truth_graph(), 'shared': shared_graph()},
        expected=(
            Expectation('induced graph matches', 'induced_graph', {'model': 'ground_truth', 'graph': 'ground_truth'}, True),
            Expectation('fallow deer at unit noise', 'solution',
                        {'model': 'ground_truth', 'exogenous': ones, 'variable': 'FallowDeer'}, 135),
            Expectation('wolves at unit noise', 'solution',
                        {'model': 'ground_truth', 'exogenous': ones, 'variable': 'Wolves'}, 100),
        ),
    )


# ============ DISCRETE ECOSYSTEM ============

def _coin(p_one=0.5):
    return TabularPmf({0: 1.0 - p_one, 1: p_one})


def discrete_m1() -> Scm:
    """Humans, Berries, Deer and Squirrels with binary species and Deer in {0, 1, 2}"""
    exogenous = (
        ExogenousSpec('U_Humans', _coin(0.4)),
        ExogenousSpec('U_Berries', _coin(0.5)),
        ExogenousSpec('U_Deer', _coin(0.5)),
        ExogenousSpec('U_Squirrels', _coin(0.3)),
    )
    functions = {
        'Humans': _expr('Humans', (), ('U_Humans',), 'U_Humans', False),
        'Berries': _expr('Berries', (), ('U_Berries',), 'U_Berries', False),
        'Deer': _expr('Deer', ('Humans', 'Berries'), ('U_Deer',), 'max(Berries + U_Deer - Humans, 0)', False),
        'Squirrels': _expr(
            'Squirrels', ('Humans', 'Berries', 'Deer'), ('U_Squirrels',),
            'min(max(Berries + U_Squirrels - Humans * Deer, 0), 1)', False,
        ),
    }
    endogenous = {'Humans': (0, 1), 'Berries': (0, 1), 'Deer': (0, 1, 2), 'Squirrels': (0, 1)}
    return Scm(endogenous, exogenous, functions, name='M1')


def discrete_m2() -> Scm:
    """Wolves, Eagles, both deer species and Squirrels; one shared noise confounds the prey"""
    exogenous = (
        ExogenousSpec('U_Wolves', _coin(0.5)),
        ExogenousSpec('U_Eagles', _coin(0.4)),
        ExogenousSpec('U_RedDeer', _coin(0.5)),
        ExogenousSpec('U_FallowDeer', _coin(0.6)),
        ExogenousSpec('U_Squirrels', _coin(0.5)),
        ExogenousSpec('U_Prey', _coin(0.3)),
    )
    functions = {
        'Wolves': _expr('Wolves', (), ('U_Wolves',), 'U_Wolves', False),
        'Eagles': _expr('Eagles', (), ('U_Eagles',), 'U_Eagles', False),
        'RedDeer': _expr('RedDeer', ('Wolves',), ('U_RedDeer', 'U_Prey'), 'max(U_RedDeer, U_Prey) * (1 - Wolves)', False),
        'FallowDeer': _expr(
            'FallowDeer', ('Wolves', 'Eagles'), ('U_FallowDeer', 'U_Prey'),
            'max(U_FallowDeer, U_Prey) * (1 - Wolves * Eagles)', False,
        ),
        'Squirrels': _expr(
            'Squirrels', ('Eagles', 'FallowDeer'), ('U_Squirrels', 'U_Prey'),
            'min(U_Squirrels + U_Prey, 1) * (1 - Eagles * FallowDeer)', False,
        ),
    }
    endogenous = {v: (0, 1) for v in M2_COLUMNS}
    return Scm(endogenous, exogenous, functions, name='M2')


def discrete_shared() -> Scm:
    """A hand-written model on the shared graph; only its graph and ranges matter for embedding checks"""
    exogenous = (
        ExogenousSpec('U_Humans', _coin(0.4)),
        ExogenousSpec('U_Predators', TabularPmf({0: 0.25, 1: 0.5, 2: 0.25})),
        ExogenousSpec('U_Prey', _coin(0.3)),
    )
    functions = {
        'Humans': _expr('Humans', (), ('U_Humans',), 'U_Humans', False),
        'Predators': _expr('Predators', (), ('U_Predators',), 'U_Predators', False),
        'Deer': _expr('Deer', ('Humans', 'Predators'), ('U_Prey',), 'max(min(2 - Humans - Predators + U_Prey, 2), 0)', False),
        'Squirrels': _expr(
            'Squirrels', ('Humans', 'Predators', 'Deer'), ('U_Prey',),
            'min(max(1 - Humans * Predators + U_Prey - Deer, 0), 1)', False,
        ),
    }
    endogenous = {'Humans': (0, 1), 'Predators': (0, 1, 2), 'Deer': (0, 1, 2), 'Squirrels': (0, 1)}
    return Scm(endogenous, exogenous, functions, name="M'")


def ecosystem_discrete() -> FixtureBundle:
    """Both ecosystem embeddings against the shared graph, plus a certified completion of M2"""
    m1, m2, shared = discrete_m1(), discrete_m2(), discrete_shared()
    # Imported here: construction pulls in the full engine stack
    from apps.embeddings.construction import construct_consistent_high_level

    alpha2 = alpha_two()
    completion = construct_consistent_high_level(m2, alpha2.phi, shared_graph(), name="M'(M2)")
    packed = tupling_embedding(m2, alpha2.phi, name='alpha2_tupled')

    expected = []
    for embedding, low in (('alpha1', 'm1'), ('alpha2', 'm2')):
        expected.append(Expectation(f"{embedding} well formed", 'structure_ok',
                                    {'low': low, 'high': 'shared', 'embedding': embedding}, True))
        for method in ('projection', 'mediated'):
            expected.append(Expectation(f"{embedding} embeds ({method})", 'is_embedding',
                                        {'low': low, 'high': 'shared', 'embedding': embedding, 'method': method}, True))
    for layer in ('L1', 'L2'):
        expected.append(Expectation(f"completion of M2 certifies at {layer}", 'certify',
                                    {'problem': 'completion', 'layer': layer}, True))
    expected.append(Expectation('completion error', 'construction_error',
                                {'low': 'm2', 'phi': 'phi2', 'high_graph': 'shared'}, 0.0, 'close', 1e-9))

    return FixtureBundle(
        'ecosystem_discrete',
        models={'m1': m1, 'm2': m2, 'shared': shared, 'completion': completion},
        embeddings={'alpha1': alpha_one(), 'alpha2': alpha2, 'alpha2_tupled': packed},
        graphs={'shared': shared_graph()},
        maps={'phi1': alpha_one().phi, 'phi2': alpha2.phi},
        problems={'completion': MarginalProblem((m2,), (packed,), completion, name='completion')},
        expected=tuple(expected),
    )
