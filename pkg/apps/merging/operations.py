"""Merging of multi-resolution datasets: transform, concatenate, impute, estimate"""
import logging
from typing import Dict, List, Sequence

import numpy as np
import pandas as pd
from sklearn.preprocessing import MinMaxScaler

from apps.common.exceptions import (
    AllMissingColumn,
    AllMissingRow,
    MissingCells,
    SchemaMismatch,
    StructureMismatch,
    UnknownColumn,
)
from apps.common.tolerances import KL_SMOOTHING
from apps.common.workers import map_in_order
from apps.embeddings.models import Embedding
from apps.merging.models import BinSpec, KnnConfig, MergePlan
from apps.scm.expressions import canonical_value
from apps.scm.models import Dataset, DiscreteDistribution

logger = logging.getLogger(__name__)


# ============ TRANSFORM / CONCAT ============

def transform_dataset(d: Dataset, e: Embedding) -> Dataset:
    """Columns R' of ``e``; a missing preimage cell makes the image cell missing"""
    needed = [v for target in e.relevant_high for v in e.alphas[target].preimage]
    absent = sorted(set(needed) - set(d.columns))
    if absent:
        raise SchemaMismatch(f"Dataset lacks columns {absent} needed by embedding {e.name or '<unnamed>'}")
    frame = pd.DataFrame(
        {target: e.alphas[target].apply_frame(d.frame) for target in e.relevant_high},
        index=d.frame.index,
    )
    return Dataset(frame, d.provenance)


def concat_with_missing(parts: Sequence[Dataset], schema: Sequence[str]) -> Dataset:
    """Stack ``parts`` under ``schema``; provenance holds each row's part index"""
    schema = list(schema)
    for i, part in enumerate(parts):
        unknown = sorted(set(part.columns) - set(schema))
        if unknown:
            raise UnknownColumn(f"Part {i} has columns {unknown} outside the schema {schema}")
    if not parts:
        return Dataset(pd.DataFrame({c: pd.Series(dtype=float) for c in schema}), ())

    frame = pd.concat([part.frame.reindex(columns=schema) for part in parts], ignore_index=True)
    provenance = tuple(i for i, part in enumerate(parts) for _ in range(len(part)))
    merged = Dataset(frame, provenance)
    logger.info(
        f"Concatenated {len(parts)} parts into {len(merged)} rows, {merged.missing_count()} missing cells"
    )
    return merged


# ============ IMPUTATION ============

def _distances(scaled: np.ndarray, observed: np.ndarray, row: int) -> np.ndarray:
    """Euclidean distance from ``row`` over coordinates observed in both rows; inf when none are shared"""
    shared = observed & observed[row]
    diff = np.where(shared, scaled - scaled[row], 0.0)
    distance = np.sqrt(np.sum(diff * diff, axis=1))
    return np.where(shared.any(axis=1), distance, np.inf)


def knn_impute(d: Dataset, cfg: KnnConfig = None) -> Dataset:
    """Fill every missing cell with the mean of its k nearest donors' original values"""
    cfg = cfg or KnnConfig()
    frame = d.frame
    missing = frame.isna().to_numpy()
    if not missing.any():
        return Dataset(frame, d.provenance)

    empty_columns = [c for c, empty in zip(frame.columns, missing.all(axis=0)) if empty]
    if empty_columns:
        raise AllMissingColumn(f"Columns {empty_columns} have no observed cells")
    empty_rows = np.flatnonzero(missing.all(axis=1))
    if len(empty_rows):
        raise AllMissingRow(f"Rows {empty_rows[:10].tolist()} have no observed cells")

    values = frame.to_numpy(dtype=float)
    observed = ~missing
    scaled = MinMaxScaler().fit_transform(values)
    donors = {c: np.flatnonzero(observed[:, c]) for c in range(values.shape[1])}

    imputed = values.copy()
    short = 0
    for row in np.flatnonzero(missing.any(axis=1)):
        distance = _distances(scaled, observed, row)
        for c in np.flatnonzero(missing[row]):
            pool = donors[c]
            order = np.argsort(distance[pool], kind='stable')
            chosen = pool[order[:cfg.k]]
            if len(chosen) < cfg.k:
                short += 1
            imputed[row, c] = values[chosen, c].mean()

    out = frame.copy()
    for c in np.flatnonzero(missing.any(axis=0)):
        out[frame.columns[c]] = imputed[:, c]
    if short:
        logger.warning(f"{short} cells had fewer than k={cfg.k} donors")
    logger.info(f"Imputed {int(missing.sum())} cells with k={cfg.k}")
    return Dataset(out, d.provenance)


def merge(plan: MergePlan) -> Dataset:
    parts = map_in_order(lambda pair: transform_dataset(*pair), plan.inputs)
    merged = concat_with_missing(parts, plan.target_schema)
    return knn_impute(merged, plan.imputer)


# ============ ESTIMATION ============

def empirical_distribution(d: Dataset, variables: Sequence[str], bins: BinSpec = None) -> DiscreteDistribution:
    """Normalized histogram over fixed-width bins; keys are bin lower edges"""
    bins = bins or BinSpec()
    variables = list(variables)
    unknown = sorted(set(variables) - set(d.columns))
    if unknown:
        raise UnknownColumn(f"Dataset has no columns {unknown}")
    frame = d.frame[variables]
    if frame.isna().to_numpy().any():
        raise MissingCells(f"Columns {variables} still contain missing cells")
    if not len(frame):
        raise MissingCells("Cannot estimate a distribution from an empty dataset")

    edges = pd.DataFrame({
        v: bins.origin_of(v) + bins.width_of(v) * np.floor((frame[v].astype(float) - bins.origin_of(v)) / bins.width_of(v))
        for v in variables
    })
    counts = edges.value_counts(sort=False)
    total = float(counts.sum())
    pmf = {}
    for key, count in counts.items():
        key = key if isinstance(key, tuple) else (key,)
        pmf[tuple(canonical_value(k) for k in key)] = count / total
    return DiscreteDistribution(tuple(variables), pmf)


def kl_divergence(p: DiscreteDistribution, q: DiscreteDistribution, smoothing: float = KL_SMOOTHING) -> float:
    """KL(p || q) with ``smoothing`` in place of q's empty cells on p's support"""
    if tuple(p.variables) != tuple(q.variables):
        raise StructureMismatch(f"KL between distributions over {p.variables} and {q.variables}")
    return p.kl_divergence(q, smoothing=smoothing)


def merge_report(plan: MergePlan, merged: Dataset, kl_rows: Sequence[Dict] = ()) -> Dict:
    """Row counts per part, missingness before imputation, and an optional KL table"""
    parts = []
    missing_before = 0
    for i, (d, e) in enumerate(plan.inputs):
        transformed = transform_dataset(d, e)
        absent = [c for c in plan.target_schema if c not in e.relevant_high]
        cells = transformed.missing_count() + len(transformed) * len(absent)
        missing_before += cells
        parts.append({
            'index': i,
            'embedding': e.name,
            'rows': len(d),
            'columns': list(e.relevant_high),
            'absent_columns': absent,
            'missing_cells': cells,
        })
    return {
        'schema': list(plan.target_schema),
        'k': plan.imputer.k,
        'parts': parts,
        'rows': len(merged),
        'missing_before': missing_before,
        'missing_after': merged.missing_count(),
        'kl': list(kl_rows),
    }


def kl_table(reference: Dataset, estimates: Dict[str, Dataset], queries: Sequence[Sequence[str]], bins: BinSpec = None) -> List[Dict]:
    """One row per (estimate, query): KL from the reference histogram to the estimate's"""
    rows = []
    for variables in queries:
        truth = empirical_distribution(reference, variables, bins)
        for label, dataset in estimates.items():
            if not set(variables) <= set(dataset.columns):
                continue
            estimate = empirical_distribution(dataset, variables, bins)
            rows.append({'estimate': label, 'variables': list(variables), 'kl': kl_divergence(truth, estimate)})
    return rows
