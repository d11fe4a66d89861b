"""Exact and sampling engines for SCMs.

The exact engine enumerates the product of the tabular exogenous supports and
pushes every cell through the structural functions in topological order.
Parametric (normal) laws are only served by :func:`sample`.
"""
import dataclasses
import itertools
import logging
import math
from typing import Dict, Iterable, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd

from apps.common.exceptions import InvalidModel, UnknownVariable, ValueOutOfRange
from apps.graphs.models import CausalGraph, bidirected_pair
from apps.scm.expressions import canonical_value
from apps.scm.models import (
    ArithmeticExpr,
    Dataset,
    DiscreteDistribution,
    ExogenousSpec,
    Layer,
    NormalLaw,
    Scm,
    StructuralFunction,
    TabularMap,
    TabularPmf,
    freeze,
)

logger = logging.getLogger(__name__)

SeedLike = Union[int, np.random.SeedSequence]


# ============ GRAPH ============

def induced_graph(scm: Scm) -> CausalGraph:
    """Directed edges from endogenous parents, bidirected edges from shared exogenous parents.

    Intervened variables lose their incoming directed and bidirected incidences.
    """
    cut = set(scm.interventions)
    directed = set()
    for var, func in scm.functions.items():
        if var in cut:
            continue
        directed.update((parent, var) for parent in func.endogenous_parents)

    bidirected = set()
    for spec in scm.exogenous:
        children = [
            var for var in scm.variables
            if var not in cut and spec.name in scm.functions[var].exogenous_parents
        ]
        for a, b in itertools.combinations(children, 2):
            bidirected.add(bidirected_pair(a, b))

    return CausalGraph(scm.variables, frozenset(directed), frozenset(bidirected))


# ============ INTERVENTIONS ============

def apply_intervention(scm: Scm, assignment: Mapping[str, object]) -> Scm:
    """do(assignment): replace each assigned function with a constant"""
    if not assignment:
        return scm
    assignment = {var: freeze(value) for var, value in assignment.items()}
    for var, value in assignment.items():
        scm._check_assignment(var, value)
    return dataclasses.replace(scm, interventions={**scm.interventions, **assignment})


def _intervened(scm: Scm, assignment: Mapping[str, object]) -> Scm:
    # Memoized so repeated L2 queries reuse the intervened model's joint
    key = ('do', frozenset((k, freeze(v)) for k, v in assignment.items()))
    cached = scm._memo.get(key)
    if cached is None:
        cached = apply_intervention(scm, assignment)
        scm._memo[key] = cached
    return cached


# ============ EVALUATION ============

def evaluate_function(scm: Scm, func: StructuralFunction, values: Mapping[str, object]):
    """Value of ``func`` given values for all of its parents"""
    if isinstance(func.body, ArithmeticExpr):
        out = func.body.compiled({p: values[p] for p in func.parents})
        if func.integer_output:
            out = np.ceil(out)
        out = canonical_value(out)
    else:
        out = func.body.evaluate(tuple(values[p] for p in func.parents))

    allowed = scm.endogenous[func.target]
    if allowed is not None and out not in allowed:
        raise ValueOutOfRange(f"{func.target} evaluated to {out!r}, outside its range")
    return out


def solve(scm: Scm, exogenous: Mapping[str, object]) -> Dict[str, object]:
    """Deterministic solution of all endogenous variables for one exogenous assignment"""
    missing = [u for u in scm.exogenous_names if u not in exogenous]
    if missing:
        raise UnknownVariable(f"No value supplied for exogenous variables {missing}")

    values = dict(exogenous)
    for var in scm.topological_order:
        if var in scm.interventions:
            values[var] = scm.interventions[var]
        else:
            values[var] = evaluate_function(scm, scm.functions[var], values)
    return {var: values[var] for var in scm.variables}


def joint_distribution(scm: Scm) -> DiscreteDistribution:
    """Exact joint over the endogenous variables, in declared order"""
    cached = scm._memo.get('joint')
    if cached is not None:
        return cached

    scm.require_exact()
    names = [spec.name for spec in scm.exogenous]
    supports = [
        [(value, p) for value, p in spec.law.table.items() if p > 0]
        for spec in scm.exogenous
    ]

    pmf = {}
    for cell in itertools.product(*supports):
        prob = math.prod(p for _, p in cell)
        solution = solve(scm, {name: value for name, (value, _) in zip(names, cell)})
        key = tuple(solution[var] for var in scm.variables)
        pmf[key] = pmf.get(key, 0.0) + prob

    joint = DiscreteDistribution(scm.variables, pmf)
    scm._memo['joint'] = joint
    return joint


def query(
    scm: Scm,
    targets: Iterable[str],
    layer: Union[Layer, str] = Layer.L1,
    given: Optional[Mapping[str, object]] = None,
) -> DiscreteDistribution:
    """P(targets | given) for L1, P(targets | do(given)) for L2.

    Targets are returned in the model's declared order.
    """
    layer = Layer(layer)
    given = {var: freeze(value) for var, value in (given or {}).items()}
    targets = scm.ordered(targets)
    scm.ordered(given)

    if layer is Layer.L1:
        return joint_distribution(scm).condition(given).marginal(targets)
    return joint_distribution(_intervened(scm, given)).marginal(targets)


# ============ SAMPLING ============

def make_generator(seed: SeedLike) -> np.random.Generator:
    """Counter-based Philox generator; the only RNG the library uses"""
    sequence = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(sequence))


def box_muller(rng: np.random.Generator, n: int) -> np.ndarray:
    """Standard normal draws from two uniform streams"""
    u1 = 1.0 - rng.random(n)  # (0, 1]
    u2 = rng.random(n)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def _draw_exogenous(spec: ExogenousSpec, rng: np.random.Generator, n: int) -> np.ndarray:
    law = spec.law
    if isinstance(law, NormalLaw):
        return law.mean + law.std * box_muller(rng, n)
    values = list(law.table)
    probs = np.array([law.table[v] for v in values], dtype=float)
    index = rng.choice(len(values), size=n, p=probs / probs.sum())
    return _column(values)[index]


def _column(values: Sequence) -> np.ndarray:
    if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
        return np.asarray(values, dtype=float)
    column = np.empty(len(values), dtype=object)
    for i, value in enumerate(values):
        column[i] = value
    return column


def _sample_function(func: StructuralFunction, columns: Mapping[str, np.ndarray], n: int) -> np.ndarray:
    if isinstance(func.body, ArithmeticExpr):
        out = func.body.compiled({p: columns[p] for p in func.parents})
        out = np.broadcast_to(np.asarray(out, dtype=float), (n,)).copy()
        if func.integer_output:
            out = np.ceil(out)
        return out
    if n == 0:
        return np.empty(0)
    parents = [[canonical_value(v) for v in columns[p]] for p in func.parents]
    keys = list(zip(*parents)) if parents else [()] * n
    return _column([func.body.evaluate(key) for key in keys])


def sample(scm: Scm, n: int, seed: SeedLike) -> Dataset:
    """``n`` i.i.d. rows over the endogenous variables; bit-reproducible for a given seed"""
    if n < 0:
        raise ValueOutOfRange(f"Sample size must be non-negative, got {n}")
    rng = make_generator(seed)

    columns = {}
    for spec in scm.exogenous:
        columns[spec.name] = _draw_exogenous(spec, rng, n)

    for var in scm.topological_order:
        if var in scm.interventions:
            columns[var] = _column([scm.interventions[var]] * n) if n else np.empty(0)
        else:
            columns[var] = _sample_function(scm.functions[var], columns, n)

    frame = pd.DataFrame({var: columns[var] for var in scm.variables})
    logger.info(f"Sampled {n} rows from model {scm.name or '<unnamed>'}")
    return Dataset(frame)


# ============ CONSTRUCTION ============

def from_conditionals(
    order: Sequence[str],
    ranges: Mapping[str, Sequence],
    parents: Mapping[str, Sequence[str]],
    tables: Mapping[str, Mapping],
    name: str = '',
) -> Scm:
    """Markovian SCM reproducing the given conditional probability tables exactly.

    ``tables[var]`` maps each parent assignment (a tuple in ``parents[var]``
    order) to either a ``{value: probability}`` dict or a list aligned with
    ``ranges[var]``. Each variable gets one private exogenous variable whose
    cells are the intervals between the cumulative breakpoints of all rows,
    so ``f_var(parents, cell)`` reproduces every row.
    """
    endogenous = {var: tuple(freeze(v) for v in ranges[var]) for var in order}
    exogenous = []
    functions = {}

    for var in order:
        var_parents = tuple(parents.get(var, ()))
        values = endogenous[var]
        rows = {}
        for config in itertools.product(*(endogenous[p] for p in var_parents)):
            entry = tables[var].get(config)
            if entry is None and len(config) == 1:
                entry = tables[var].get(config[0])
            if entry is None:
                raise InvalidModel(f"No conditional for {var} given {dict(zip(var_parents, config))}")
            probs = [entry.get(v, 0.0) for v in values] if isinstance(entry, Mapping) else list(entry)
            if len(probs) != len(values):
                raise InvalidModel(f"Conditional for {var} has {len(probs)} entries, range has {len(values)}")
            if abs(sum(probs) - 1.0) > 1e-9:
                raise InvalidModel(f"Conditional for {var} given {config} sums to {sum(probs)}")
            cumulative = np.cumsum(probs)
            cumulative[-1] = 1.0
            rows[config] = cumulative

        breakpoints = np.unique(np.concatenate([[0.0, 1.0]] + list(rows.values())))
        breakpoints = breakpoints[(breakpoints >= 0.0) & (breakpoints <= 1.0)]
        widths = np.diff(breakpoints)
        cells = [i for i, w in enumerate(widths) if w > 0]

        exo_name = f"U_{var}"
        exogenous.append(ExogenousSpec(exo_name, TabularPmf({k: float(widths[i]) for k, i in enumerate(cells)})))

        table = {}
        for config, cumulative in rows.items():
            for k, i in enumerate(cells):
                midpoint = 0.5 * (breakpoints[i] + breakpoints[i + 1])
                position = int(np.searchsorted(cumulative, midpoint, side='right'))
                table[config + (k,)] = values[min(position, len(values) - 1)]
        functions[var] = StructuralFunction(var, var_parents, (exo_name,), TabularMap(table))

    return Scm(endogenous, tuple(exogenous), functions, name=name)
