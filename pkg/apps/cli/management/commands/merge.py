from django.core.management.base import CommandError

from apps.cli.base import FAILURE, CausalCommand, split_names
from apps.cli.commands import COMMAND_TABLE
from apps.embeddings.serializers import load_embedding
from apps.merging.models import DEFAULT_KNN_K, MergePlan
from apps.merging.operations import merge, merge_report
from apps.scm.serializers import read_dataset, write_dataset


def parse_input(value: str):
    """``data.csv:embedding.json`` -> (dataset, embedding)"""
    path, sep, embedding = value.rpartition(':')
    if not sep or not path or not embedding:
        raise CommandError(f"Malformed --input {value!r}; expected DATA.csv:EMBEDDING.json", returncode=FAILURE)
    return read_dataset(path), load_embedding(embedding)


class Command(CausalCommand):
    help = 'Transform datasets to the shared resolution, concatenate them and impute the gaps'
    operations = COMMAND_TABLE['merge']

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--input', action='append', required=True,
                            help='DATA.csv:EMBEDDING.json; repeat once per dataset')
        parser.add_argument('--schema', help='Comma-separated output columns; defaults to the union of R\'')
        parser.add_argument('--k', type=int, default=DEFAULT_KNN_K)
        parser.add_argument('--write-data', required=True, help='Where to write the merged CSV')

    def run(self, **options):
        pairs = [parse_input(value) for value in options['input']]
        plan = MergePlan.build(
            [d for d, _ in pairs], [e for _, e in pairs],
            split_names(options.get('schema')) or None, options['k'],
        )
        merged = merge(plan)
        write_dataset(merged, options['write_data'])
        report = merge_report(plan, merged)
        report['output'] = options['write_data']
        return report

    def summary(self, report):
        return [
            f"Merged {len(report['parts'])} datasets into {report['rows']} rows over {', '.join(report['schema'])}",
            f"  missing cells: {report['missing_before']} before, {report['missing_after']} after imputation (k={report['k']})",
        ]
