"""Embedding files.

Schema::

    {
      "name": "alpha2",
      "low": "M2", "high": "M'",
      "relevant_low": ["FallowDeer", "RedDeer", "Squirrels"],
      "relevant_high": ["Deer", "Squirrels"],
      "phi": [["FallowDeer", "Deer"], ["RedDeer", "Deer"], ["Squirrels", "Squirrels"]],
      "alphas": [
        {"target": "Deer", "preimage": ["FallowDeer", "RedDeer"], "aggregator": "sum"},
        {"target": "Squirrels", "preimage": ["Squirrels"], "table": [[[0], 0], [[1], 1]]}
      ]
    }

``aggregator`` is one of identity, sum, tuple; ``table`` rows map a preimage
tuple to a high value.
"""
import logging
from pathlib import Path

from rest_framework import serializers

from apps.common.reports import load_json, to_jsonable, write_report
from apps.embeddings.models import AGGREGATORS, Embedding, RangeMap
from apps.graphs.models import VariableMap
from apps.scm.models import freeze
from apps.scm.serializers import validated

logger = logging.getLogger(__name__)


class RangeMapSerializer(serializers.Serializer):
    target = serializers.CharField()
    preimage = serializers.ListField(child=serializers.CharField(), min_length=1)
    aggregator = serializers.ChoiceField(choices=list(AGGREGATORS), required=False)
    table = serializers.ListField(
        child=serializers.ListField(child=serializers.JSONField(), min_length=2, max_length=2),
        required=False,
    )

    def validate(self, attrs):
        if ('aggregator' in attrs) == ('table' in attrs):
            raise serializers.ValidationError(f"range map for {attrs['target']} needs exactly one of aggregator or table")
        return attrs


class EmbeddingSerializer(serializers.Serializer):
    name = serializers.CharField(allow_blank=True, default='')
    low = serializers.CharField(allow_blank=True, default='')
    high = serializers.CharField(allow_blank=True, default='')
    relevant_low = serializers.ListField(child=serializers.CharField())
    relevant_high = serializers.ListField(child=serializers.CharField())
    phi = serializers.ListField(
        child=serializers.ListField(child=serializers.CharField(), min_length=2, max_length=2),
    )
    alphas = RangeMapSerializer(many=True)

    def validate_phi(self, value):
        sources = [a for a, _ in value]
        if len(set(sources)) != len(sources):
            raise serializers.ValidationError("phi maps a low variable twice")
        return value

    def create(self, validated_data):
        alphas = {}
        for item in validated_data['alphas']:
            table = None
            if 'table' in item:
                table = {freeze(key): freeze(value) for key, value in item['table']}
            alphas[item['target']] = RangeMap(item['target'], tuple(item['preimage']), item.get('aggregator'), table)
        return Embedding(
            tuple(validated_data['relevant_low']),
            tuple(validated_data['relevant_high']),
            VariableMap(dict(validated_data['phi']), tuple(validated_data['relevant_high'])),
            alphas,
            name=validated_data['name'],
            low_name=validated_data['low'],
            high_name=validated_data['high'],
        )

    def to_representation(self, instance: Embedding):
        alphas = []
        for target in instance.relevant_high:
            alpha = instance.alphas[target]
            item = {'target': target, 'preimage': list(alpha.preimage)}
            if alpha.aggregator is not None:
                item['aggregator'] = alpha.aggregator
            else:
                item['table'] = [[list(k), v] for k, v in alpha.table.items()]
            alphas.append(item)
        return to_jsonable({
            'name': instance.name,
            'low': instance.low_name,
            'high': instance.high_name,
            'relevant_low': list(instance.relevant_low),
            'relevant_high': list(instance.relevant_high),
            'phi': [[k, v] for k, v in instance.phi.mapping.items()],
            'alphas': alphas,
        })


def embedding_from_dict(data) -> Embedding:
    return validated(EmbeddingSerializer, data, 'embedding file')


def embedding_to_dict(e: Embedding) -> dict:
    return EmbeddingSerializer(e).data


def load_embedding(path) -> Embedding:
    embedding = embedding_from_dict(load_json(path))
    logger.info(f"Loaded embedding {embedding.name or Path(path).stem} from {path}")
    return embedding


def dump_embedding(e: Embedding, path) -> Path:
    return write_report(embedding_to_dict(e), path)
