"""JSON model files and CSV datasets.

Model file schema::

    {
      "name": "M",
      "endogenous": [{"name": "X", "range": [0, 2, 4]}, ...],   # range null = unbounded
      "exogenous": [{"name": "U_X", "law": {"type": "tabular", "pmf": [[0, 0.5], [2, 0.5]]}},
                    {"name": "U_W", "law": {"type": "normal", "mean": 1.0, "std": 0.2}}],
      "functions": [{"target": "X", "endogenous_parents": [], "exogenous_parents": ["U_X"],
                     "body": {"type": "expr", "expr": "U_X"}, "integer_output": false},
                    {"target": "Z", ..., "body": {"type": "table", "rows": [[[0, 1], 1], ...]}}],
      "interventions": {"X": 2}
    }

Tuples are written as JSON arrays and read back as tuples.
"""
import logging
from pathlib import Path

import numpy as np
import pandas as pd
from rest_framework import serializers

from apps.common.exceptions import CausalEmbedError, InvalidSpecFile
from apps.common.reports import load_json, to_jsonable, write_report
from apps.scm.models import (
    ArithmeticExpr,
    Dataset,
    ExogenousSpec,
    NormalLaw,
    Scm,
    StructuralFunction,
    TabularMap,
    TabularPmf,
    freeze,
)

logger = logging.getLogger(__name__)


def _pair_list():
    return serializers.ListField(
        child=serializers.ListField(child=serializers.JSONField(), min_length=2, max_length=2),
        required=False,
    )


class LawSerializer(serializers.Serializer):
    type = serializers.ChoiceField(choices=['tabular', 'normal'])
    pmf = _pair_list()
    mean = serializers.FloatField(required=False)
    std = serializers.FloatField(required=False, min_value=0.0)

    def validate(self, attrs):
        if attrs['type'] == 'tabular' and not attrs.get('pmf'):
            raise serializers.ValidationError("tabular law needs a non-empty 'pmf'")
        if attrs['type'] == 'normal' and ('mean' not in attrs or 'std' not in attrs):
            raise serializers.ValidationError("normal law needs 'mean' and 'std'")
        return attrs


class EndogenousSerializer(serializers.Serializer):
    name = serializers.CharField()
    range = serializers.JSONField(allow_null=True)

    def validate_range(self, value):
        if value is not None and (not isinstance(value, list) or not value):
            raise serializers.ValidationError("range must be a non-empty list or null")
        return value


class ExogenousSerializer(serializers.Serializer):
    name = serializers.CharField()
    law = LawSerializer()


class BodySerializer(serializers.Serializer):
    type = serializers.ChoiceField(choices=['table', 'expr'])
    rows = _pair_list()
    expr = serializers.CharField(required=False)

    def validate(self, attrs):
        if attrs['type'] == 'table' and 'rows' not in attrs:
            raise serializers.ValidationError("table body needs 'rows'")
        if attrs['type'] == 'expr' and not attrs.get('expr'):
            raise serializers.ValidationError("expr body needs 'expr'")
        return attrs


class FunctionSerializer(serializers.Serializer):
    target = serializers.CharField()
    endogenous_parents = serializers.ListField(child=serializers.CharField(), default=list)
    exogenous_parents = serializers.ListField(child=serializers.CharField(), default=list)
    body = BodySerializer()
    integer_output = serializers.BooleanField(default=False)


class ScmSerializer(serializers.Serializer):
    name = serializers.CharField(allow_blank=True, default='')
    endogenous = EndogenousSerializer(many=True)
    exogenous = ExogenousSerializer(many=True)
    functions = FunctionSerializer(many=True)
    interventions = serializers.DictField(child=serializers.JSONField(), default=dict)

    def create(self, validated_data):
        exogenous = []
        for item in validated_data['exogenous']:
            law = item['law']
            if law['type'] == 'normal':
                exogenous.append(ExogenousSpec(item['name'], NormalLaw(law['mean'], law['std'])))
            else:
                exogenous.append(ExogenousSpec(item['name'], TabularPmf({freeze(v): p for v, p in law['pmf']})))

        functions = {}
        for item in validated_data['functions']:
            body = item['body']
            if body['type'] == 'expr':
                parsed = ArithmeticExpr(body['expr'])
            else:
                parsed = TabularMap({freeze(key): freeze(value) for key, value in body['rows']})
            functions[item['target']] = StructuralFunction(
                item['target'],
                tuple(item['endogenous_parents']),
                tuple(item['exogenous_parents']),
                parsed,
                item['integer_output'],
            )

        endogenous = {item['name']: item['range'] for item in validated_data['endogenous']}
        return Scm(
            endogenous,
            tuple(exogenous),
            functions,
            interventions=validated_data['interventions'],
            name=validated_data['name'],
        )

    def to_representation(self, instance: Scm):
        exogenous = []
        for spec in instance.exogenous:
            if isinstance(spec.law, NormalLaw):
                law = {'type': 'normal', 'mean': spec.law.mean, 'std': spec.law.std}
            else:
                law = {'type': 'tabular', 'pmf': [[v, p] for v, p in spec.law.table.items()]}
            exogenous.append({'name': spec.name, 'law': law})

        functions = []
        for var in instance.variables:
            func = instance.functions[var]
            if isinstance(func.body, ArithmeticExpr):
                body = {'type': 'expr', 'expr': func.body.source}
            else:
                body = {'type': 'table', 'rows': [[list(k), v] for k, v in func.body.rows.items()]}
            functions.append({
                'target': var,
                'endogenous_parents': list(func.endogenous_parents),
                'exogenous_parents': list(func.exogenous_parents),
                'body': body,
                'integer_output': func.integer_output,
            })

        return to_jsonable({
            'name': instance.name,
            'endogenous': [{'name': v, 'range': r} for v, r in instance.endogenous.items()],
            'exogenous': exogenous,
            'functions': functions,
            'interventions': dict(instance.interventions),
        })


def validated(serializer_class, data, source='document', context=None):
    """Run a serializer over ``data`` and return the saved object, raising InvalidSpecFile"""
    serializer = serializer_class(data=data, context=context or {})
    if not serializer.is_valid():
        raise InvalidSpecFile(f"Invalid {source}: {serializer.errors}", serializer.errors)
    try:
        return serializer.save()
    except CausalEmbedError:
        raise
    except (TypeError, ValueError, KeyError) as e:
        raise InvalidSpecFile(f"Invalid {source}: {e}")


# ============ MODEL FILES ============

def scm_from_dict(data) -> Scm:
    return validated(ScmSerializer, data, 'model file')


def scm_to_dict(scm: Scm) -> dict:
    return ScmSerializer(scm).data


def load_scm(path) -> Scm:
    scm = scm_from_dict(load_json(path))
    logger.info(f"Loaded model {scm.name or Path(path).stem} from {path}")
    return scm


def dump_scm(scm: Scm, path) -> Path:
    return write_report(scm_to_dict(scm), path)


# ============ DATASETS ============

def read_dataset(path) -> Dataset:
    """CSV with a header row; an empty field is a missing cell"""
    try:
        frame = pd.read_csv(path, keep_default_na=False, na_values=[''])
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InvalidSpecFile(f"Cannot read dataset {path}: {e}")
    return Dataset(frame)


def write_dataset(dataset: Dataset, path) -> Path:
    """Integral numeric columns are written as integers; missing cells as empty fields"""
    frame = dataset.frame.copy()
    for column in frame.columns:
        series = frame[column]
        if pd.api.types.is_float_dtype(series):
            observed = series.dropna()
            if len(observed) and np.all(np.isfinite(observed)) and np.all(observed == np.floor(observed)):
                frame[column] = series.astype('Int64')
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, na_rep='')
    except OSError as e:
        raise InvalidSpecFile(f"Cannot write dataset {path}: {e}")
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path
