from django.core.management.base import CommandError

from apps.cli.base import FAILURE, CausalCommand, split_names
from apps.cli.commands import COMMAND_TABLE
from apps.embeddings.serializers import load_embedding
from apps.merging.models import DEFAULT_BIN_ORIGIN, DEFAULT_BIN_WIDTH, BinSpec
from apps.merging.operations import kl_table, transform_dataset
from apps.scm.serializers import read_dataset


def _load(value: str):
    """``data.csv`` or ``data.csv:embedding.json``; the embedding maps the data to the shared resolution"""
    path, sep, embedding = value.rpartition(':')
    if sep and path and embedding.endswith('.json'):
        return transform_dataset(read_dataset(path), load_embedding(embedding))
    return read_dataset(value)


class Command(CausalCommand):
    help = 'KL divergence from a reference histogram to each estimate, per variable set'
    operations = COMMAND_TABLE['kl']

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--reference', required=True, help='DATA.csv[:EMBEDDING.json] holding the truth')
        parser.add_argument('--estimate', action='append', required=True,
                            help='LABEL=DATA.csv[:EMBEDDING.json]; repeat per estimate')
        parser.add_argument('--vars', action='append', required=True,
                            help='Comma-separated variables of one histogram; repeat per query')
        parser.add_argument('--bins', type=float, default=DEFAULT_BIN_WIDTH, help='Bin width')
        parser.add_argument('--bin-origin', type=float, default=DEFAULT_BIN_ORIGIN)

    def run(self, **options):
        reference = _load(options['reference'])
        estimates = {}
        for value in options['estimate']:
            label, sep, source = value.partition('=')
            if not sep or not label or not source:
                raise CommandError(f"Malformed --estimate {value!r}; expected LABEL=DATA.csv", returncode=FAILURE)
            estimates[label] = _load(source)
        queries = [split_names(v) for v in options['vars']]
        bins = BinSpec(options['bins'], options['bin_origin'])
        rows = kl_table(reference, estimates, queries, bins)
        return {'bins': bins.as_dict(), 'queries': queries, 'kl': rows}

    def summary(self, report):
        return [f"KL[{','.join(row['variables'])}] {row['estimate']}: {row['kl']:.4f}" for row in report['kl']]
