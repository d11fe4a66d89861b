"""Problem bundle files.

Schema (paths are relative to the bundle file)::

    {
      "name": "c1",
      "models": ["m1.json", "m2.json"],
      "embeddings": ["alpha1.json", "alpha2.json"],
      "candidate": "mprime.json"          # optional
    }
"""
import logging
from pathlib import Path

from rest_framework import serializers

from apps.common.reports import load_json
from apps.embeddings.serializers import load_embedding
from apps.marginal.models import MarginalProblem
from apps.scm.serializers import load_scm, validated

logger = logging.getLogger(__name__)


class ProblemSerializer(serializers.Serializer):
    name = serializers.CharField(allow_blank=True, default='')
    models = serializers.ListField(child=serializers.CharField(), min_length=1)
    embeddings = serializers.ListField(child=serializers.CharField(), min_length=1)
    candidate = serializers.CharField(required=False, allow_null=True, default=None)

    def validate(self, attrs):
        if len(attrs['models']) != len(attrs['embeddings']):
            raise serializers.ValidationError("models and embeddings must pair up one to one")
        return attrs

    def create(self, validated_data):
        base = Path(self.context.get('base', '.'))
        candidate = validated_data.get('candidate')
        return MarginalProblem(
            tuple(load_scm(base / path) for path in validated_data['models']),
            tuple(load_embedding(base / path) for path in validated_data['embeddings']),
            load_scm(base / candidate) if candidate else None,
            name=validated_data['name'],
        )


def load_problem(path) -> MarginalProblem:
    path = Path(path)
    problem = validated(ProblemSerializer, load_json(path), 'problem bundle', {'base': path.parent})
    logger.info(f"Loaded problem {problem.name or path.stem} with {len(problem.models)} marginal models")
    return problem


def problem_to_dict(name: str, models, embeddings, candidate=None) -> dict:
    """Bundle document for already written model and embedding files"""
    return {
        'name': name,
        'models': [str(m) for m in models],
        'embeddings': [str(e) for e in embeddings],
        'candidate': str(candidate) if candidate else None,
    }
