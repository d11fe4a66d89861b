"""Domain types for structural causal models.

Nothing here is an ORM model: every type is an immutable dataclass and the
project runs without a database.
"""
import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
import pandas as pd
from scipy.special import rel_entr

from apps.common.exceptions import (
    ContinuousExogenous,
    CyclicModel,
    InvalidModel,
    StructureMismatch,
    UnknownVariable,
    ValueOutOfRange,
    VariableMismatch,
    ZeroProbabilityCondition,
)
from apps.common.tolerances import PMF_TOLERANCE, PROBABILITY_TOLERANCE
from apps.scm.expressions import canonical_value, compile_expression

logger = logging.getLogger(__name__)

# Cell marker for datasets; stored as NaN inside frames
MISSING = None


class Layer(str, Enum):
    L1 = 'L1'
    L2 = 'L2'


def freeze(value):
    """Turn JSON-style lists into tuples, recursively"""
    if isinstance(value, (list, tuple)):
        return tuple(freeze(v) for v in value)
    return value


def value_sort_key(value):
    """Total order over range values (numbers, labels and nested tuples)"""
    if isinstance(value, tuple):
        return (2, tuple(value_sort_key(v) for v in value))
    if isinstance(value, str):
        return (1, value)
    return (0, value)


# ============ EXOGENOUS LAWS ============

@dataclass(frozen=True)
class TabularPmf:
    table: Mapping[object, float]

    def __post_init__(self):
        table = {freeze(k): float(p) for k, p in dict(self.table).items()}
        if not table:
            raise InvalidModel("Tabular pmf has no entries")
        if any(p < 0 for p in table.values()):
            raise InvalidModel("Tabular pmf has negative probabilities")
        total = sum(table.values())
        if abs(total - 1.0) > PMF_TOLERANCE:
            raise InvalidModel(f"Tabular pmf sums to {total!r}, expected 1")
        object.__setattr__(self, 'table', table)

    @property
    def support(self) -> Tuple:
        return tuple(v for v, p in self.table.items() if p > 0)


@dataclass(frozen=True)
class NormalLaw:
    mean: float
    std: float

    def __post_init__(self):
        if self.std < 0:
            raise InvalidModel(f"Normal law with negative std {self.std}")


@dataclass(frozen=True)
class ExogenousSpec:
    name: str
    law: Union[TabularPmf, NormalLaw]

    @property
    def is_tabular(self) -> bool:
        return isinstance(self.law, TabularPmf)


# ============ STRUCTURAL FUNCTIONS ============

@dataclass(frozen=True)
class TabularMap:
    """Parent assignment -> target value; keys follow endogenous then exogenous parent order"""
    rows: Mapping[Tuple, object]

    def __post_init__(self):
        object.__setattr__(self, 'rows', {freeze(k): freeze(v) for k, v in dict(self.rows).items()})

    def evaluate(self, key: Tuple):
        try:
            return self.rows[key]
        except KeyError:
            raise InvalidModel(f"Tabular map has no row for parent values {key!r}")


@dataclass(frozen=True)
class ArithmeticExpr:
    source: str

    @property
    def compiled(self):
        return compile_expression(self.source)


@dataclass(frozen=True)
class StructuralFunction:
    target: str
    endogenous_parents: Tuple[str, ...] = ()
    exogenous_parents: Tuple[str, ...] = ()
    body: Union[TabularMap, ArithmeticExpr] = None
    # Round outputs up to integers (sampling of count-valued variables)
    integer_output: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'endogenous_parents', tuple(self.endogenous_parents))
        object.__setattr__(self, 'exogenous_parents', tuple(self.exogenous_parents))
        if self.body is None:
            raise InvalidModel(f"Function for {self.target} has no body")

    @property
    def parents(self) -> Tuple[str, ...]:
        return self.endogenous_parents + self.exogenous_parents


# ============ SCM ============

@dataclass(frozen=True, eq=False)
class Scm:
    """Finite-range SCM; a range of ``None`` marks an unbounded, sampling-only variable"""
    endogenous: Mapping[str, Optional[Tuple]]
    exogenous: Tuple[ExogenousSpec, ...]
    functions: Mapping[str, StructuralFunction]
    interventions: Mapping[str, object] = field(default_factory=dict)
    name: str = ''
    _memo: Dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        endogenous = {}
        for var, values in dict(self.endogenous).items():
            if not var:
                raise InvalidModel("Endogenous variable with empty name")
            if values is not None:
                values = freeze(values)
                if not values:
                    raise InvalidModel(f"Variable {var} has an empty range")
                if len(set(values)) != len(values):
                    raise InvalidModel(f"Variable {var} has duplicate range values")
            endogenous[var] = values
        object.__setattr__(self, 'endogenous', endogenous)
        object.__setattr__(self, 'exogenous', tuple(self.exogenous))
        object.__setattr__(self, 'functions', dict(self.functions))
        object.__setattr__(self, 'interventions', {k: freeze(v) for k, v in dict(self.interventions).items()})
        self._validate()

    # ---- validation ----

    def _validate(self):
        exo_names = [u.name for u in self.exogenous]
        if len(set(exo_names)) != len(exo_names):
            raise InvalidModel("Duplicate exogenous variable names")
        clash = set(exo_names) & set(self.endogenous)
        if clash:
            raise InvalidModel(f"Names used as both endogenous and exogenous: {sorted(clash)}")

        missing = set(self.endogenous) - set(self.functions)
        extra = set(self.functions) - set(self.endogenous)
        if missing or extra:
            raise InvalidModel(
                f"Functions must match endogenous variables (missing {sorted(missing)}, extra {sorted(extra)})"
            )

        graph = nx.DiGraph()
        graph.add_nodes_from(self.endogenous)
        for var, func in self.functions.items():
            if func.target != var:
                raise InvalidModel(f"Function registered under {var} targets {func.target}")
            for parent in func.endogenous_parents:
                if parent not in self.endogenous:
                    raise InvalidModel(f"{var} reads undeclared endogenous parent {parent}")
                graph.add_edge(parent, var)
            for parent in func.exogenous_parents:
                if parent not in exo_names:
                    raise InvalidModel(f"{var} reads undeclared exogenous parent {parent}")
            if isinstance(func.body, ArithmeticExpr):
                unknown = func.body.compiled.names - set(func.parents)
                if unknown:
                    raise InvalidModel(f"Expression for {var} references undeclared names {sorted(unknown)}")

        if not nx.is_directed_acyclic_graph(graph):
            cycle = nx.find_cycle(graph)
            raise CyclicModel(f"Model {self.name or '<unnamed>'} has a directed cycle: {cycle}")

        index = {v: i for i, v in enumerate(self.endogenous)}
        order = tuple(nx.lexicographical_topological_sort(graph, key=index.__getitem__))
        object.__setattr__(self, '_order', order)

        for var, func in self.functions.items():
            if isinstance(func.body, TabularMap):
                self._check_table(var, func)

        for var, value in self.interventions.items():
            self._check_assignment(var, value)

    def _parent_domains(self, func: StructuralFunction) -> Optional[List[Tuple]]:
        domains = []
        for parent in func.endogenous_parents:
            values = self.endogenous[parent]
            if values is None:
                return None
            domains.append(values)
        for parent in func.exogenous_parents:
            law = self.law(parent)
            if not isinstance(law, TabularPmf):
                return None
            domains.append(tuple(law.table))
        return domains

    def _check_table(self, var: str, func: StructuralFunction):
        domains = self._parent_domains(func)
        if domains is None:
            return
        target_range = self.endogenous[var]
        allowed = set(target_range) if target_range is not None else None
        for key in itertools.product(*domains):
            if key not in func.body.rows:
                raise InvalidModel(f"Tabular map for {var} is not total: no row for {key!r}")
            if allowed is not None and func.body.rows[key] not in allowed:
                raise InvalidModel(f"Tabular map for {var} outputs {func.body.rows[key]!r} outside its range")

    def _check_assignment(self, var: str, value):
        if var not in self.endogenous:
            raise UnknownVariable(f"{var} is not an endogenous variable of {self.name or 'the model'}")
        values = self.endogenous[var]
        if values is not None and value not in values:
            raise ValueOutOfRange(f"{value!r} is outside the range of {var}")

    # ---- accessors ----

    @property
    def variables(self) -> Tuple[str, ...]:
        return tuple(self.endogenous)

    @property
    def topological_order(self) -> Tuple[str, ...]:
        return self._order

    @property
    def exogenous_names(self) -> Tuple[str, ...]:
        return tuple(u.name for u in self.exogenous)

    def law(self, name: str):
        for spec in self.exogenous:
            if spec.name == name:
                return spec.law
        raise UnknownVariable(f"{name} is not an exogenous variable")

    def range_of(self, name: str) -> Optional[Tuple]:
        if name not in self.endogenous:
            raise UnknownVariable(f"{name} is not an endogenous variable")
        return self.endogenous[name]

    @property
    def is_exact(self) -> bool:
        return all(spec.is_tabular for spec in self.exogenous)

    def require_exact(self):
        parametric = [spec.name for spec in self.exogenous if not spec.is_tabular]
        if parametric:
            raise ContinuousExogenous(
                f"Model {self.name or '<unnamed>'} has parametric exogenous laws {parametric}; use sampling"
            )

    def ordered(self, names: Iterable[str]) -> Tuple[str, ...]:
        """``names`` in declared order; raises UnknownVariable for strangers"""
        names = set(names)
        unknown = names - set(self.endogenous)
        if unknown:
            raise UnknownVariable(f"Unknown variables {sorted(unknown)}")
        return tuple(v for v in self.endogenous if v in names)


# ============ DISTRIBUTIONS ============

@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    variables: Tuple[str, ...]
    pmf: Mapping[Tuple, float]

    def __post_init__(self):
        variables = tuple(self.variables)
        if len(set(variables)) != len(variables):
            raise VariableMismatch(f"Duplicate variables in distribution: {variables}")
        pmf = {}
        for key, p in dict(self.pmf).items():
            key = freeze(key)
            if not isinstance(key, tuple) or len(key) != len(variables):
                raise VariableMismatch(f"Assignment {key!r} does not match variables {variables}")
            if p < 0:
                raise ValueOutOfRange(f"Negative probability {p} for {key!r}")
            if p > 0:
                pmf[key] = pmf.get(key, 0.0) + float(p)
        object.__setattr__(self, 'variables', variables)
        object.__setattr__(self, 'pmf', pmf)

    @classmethod
    def point_mass(cls, variables: Sequence[str], values: Sequence) -> 'DiscreteDistribution':
        return cls(tuple(variables), {tuple(values): 1.0})

    @property
    def total(self) -> float:
        return sum(self.pmf.values())

    def is_normalized(self, tol: float = PROBABILITY_TOLERANCE) -> bool:
        return abs(self.total - 1.0) <= tol

    def _positions(self, names: Sequence[str]) -> List[int]:
        unknown = [n for n in names if n not in self.variables]
        if unknown:
            raise UnknownVariable(f"Variables {unknown} not in distribution over {self.variables}")
        return [self.variables.index(n) for n in names]

    def probability(self, assignment: Mapping[str, object]) -> float:
        positions = self._positions(list(assignment))
        wanted = [freeze(v) for v in assignment.values()]
        return sum(
            p for key, p in self.pmf.items()
            if all(key[i] == w for i, w in zip(positions, wanted))
        )

    def marginal(self, names: Sequence[str]) -> 'DiscreteDistribution':
        names = tuple(names)
        positions = self._positions(names)
        out = {}
        for key, p in self.pmf.items():
            sub = tuple(key[i] for i in positions)
            out[sub] = out.get(sub, 0.0) + p
        if not names:
            out = {(): self.total}
        return DiscreteDistribution(names, out)

    def condition(self, given: Mapping[str, object]) -> 'DiscreteDistribution':
        if not given:
            return self
        positions = self._positions(list(given))
        wanted = [freeze(v) for v in given.values()]
        kept = {
            key: p for key, p in self.pmf.items()
            if all(key[i] == w for i, w in zip(positions, wanted))
        }
        mass = sum(kept.values())
        if mass <= 0:
            raise ZeroProbabilityCondition(f"P({dict(given)}) = 0")
        return DiscreteDistribution(self.variables, {k: p / mass for k, p in kept.items()})

    def reorder(self, names: Sequence[str]) -> 'DiscreteDistribution':
        if set(names) != set(self.variables) or len(names) != len(self.variables):
            raise StructureMismatch(f"Cannot reorder {self.variables} as {tuple(names)}")
        return self.marginal(names)

    def _aligned(self, other: 'DiscreteDistribution') -> 'DiscreteDistribution':
        if set(other.variables) != set(self.variables):
            raise StructureMismatch(
                f"Distributions over different variables: {self.variables} vs {other.variables}"
            )
        return other if other.variables == self.variables else other.reorder(self.variables)

    def total_variation(self, other: 'DiscreteDistribution') -> float:
        other = self._aligned(other)
        keys = set(self.pmf) | set(other.pmf)
        return 0.5 * sum(abs(self.pmf.get(k, 0.0) - other.pmf.get(k, 0.0)) for k in keys)

    def kl_divergence(self, other: 'DiscreteDistribution', smoothing: float = 0.0) -> float:
        """KL(self || other) over self's support.

        ``smoothing`` replaces zero cells of ``other`` on that support; with
        no smoothing such a cell makes the divergence infinite.
        """
        other = self._aligned(other)
        keys = sorted(self.pmf, key=value_sort_key)
        p = np.array([self.pmf[k] for k in keys], dtype=float)
        q = np.array([other.pmf.get(k, 0.0) for k in keys], dtype=float)
        if smoothing > 0:
            q = np.where(q > 0, q, smoothing)
        return float(np.sum(rel_entr(p, q)))

    def approx_equal(self, other: 'DiscreteDistribution', tol: float = PROBABILITY_TOLERANCE) -> bool:
        other = self._aligned(other)
        keys = set(self.pmf) | set(other.pmf)
        return all(abs(self.pmf.get(k, 0.0) - other.pmf.get(k, 0.0)) <= tol for k in keys)

    def items(self) -> List[Tuple[Tuple, float]]:
        return sorted(self.pmf.items(), key=lambda kv: value_sort_key(kv[0]))

    def to_records(self) -> List[Dict]:
        return [
            {'assignment': dict(zip(self.variables, key)), 'probability': p}
            for key, p in self.items()
        ]

    def __repr__(self):
        return f"DiscreteDistribution({self.variables}, {dict(self.items())})"


# ============ DATASETS ============

@dataclass(frozen=True, eq=False)
class Dataset:
    """Columnar table; missing cells are NaN in ``frame`` and ``MISSING`` in ``rows``"""
    frame: pd.DataFrame
    provenance: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        frame = self.frame.copy().reset_index(drop=True)
        frame.columns = [str(c) for c in frame.columns]
        if frame.columns.duplicated().any():
            raise VariableMismatch(f"Duplicate dataset columns: {list(frame.columns)}")
        object.__setattr__(self, 'frame', frame)
        if self.provenance is not None:
            provenance = tuple(int(p) for p in self.provenance)
            if len(provenance) != len(frame):
                raise VariableMismatch("Provenance length does not match row count")
            object.__setattr__(self, 'provenance', provenance)

    @classmethod
    def from_rows(cls, columns: Sequence[str], rows: Iterable[Sequence], provenance=None) -> 'Dataset':
        rows = [list(r) for r in rows]
        for row in rows:
            if len(row) != len(columns):
                raise VariableMismatch(f"Row {row!r} does not have {len(columns)} cells")
        frame = pd.DataFrame.from_records(rows, columns=list(columns)) if rows \
            else pd.DataFrame({c: pd.Series(dtype=float) for c in columns})
        frame = frame.where(pd.notna(frame), np.nan)
        return cls(frame, provenance)

    @property
    def columns(self) -> Tuple[str, ...]:
        return tuple(self.frame.columns)

    @property
    def rows(self) -> List[Tuple]:
        out = []
        for record in self.frame.itertuples(index=False, name=None):
            out.append(tuple(MISSING if pd.isna(v) else canonical_value(v) for v in record))
        return out

    def __len__(self):
        return len(self.frame)

    def missing_mask(self) -> pd.DataFrame:
        return self.frame.isna()

    def missing_count(self) -> int:
        return int(self.frame.isna().to_numpy().sum())

    def select(self, columns: Sequence[str]) -> 'Dataset':
        return Dataset(self.frame[list(columns)], self.provenance)

