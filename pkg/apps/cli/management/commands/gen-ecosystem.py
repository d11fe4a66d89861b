from pathlib import Path

from apps.cli.base import CausalCommand
from apps.cli.commands import COMMAND_TABLE
from apps.fixtures.ecosystem import (
    EVAL_ROWS,
    LAYOUTS,
    X1_ROWS,
    X2_ROWS,
    ecosystem_ground_truth,
    generate_ecosystem_datasets,
)
from apps.scm.engine import sample
from apps.scm.serializers import write_dataset


class Command(CausalCommand):
    help = 'Sample the two marginal ecosystem datasets and the evaluation set from the ground truth'
    operations = COMMAND_TABLE['gen-ecosystem']

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--seed', type=int, required=True)
        parser.add_argument('--out-dir', required=True, help='Directory for x1.csv, x2.csv and eval.csv')
        parser.add_argument('--layout', choices=LAYOUTS, default='figure',
                            help="Which columns X1 keeps: M1's (figure) or M2's (prose)")
        parser.add_argument('--x1-rows', type=int, default=X1_ROWS)
        parser.add_argument('--x2-rows', type=int, default=X2_ROWS)
        parser.add_argument('--eval-rows', type=int, default=EVAL_ROWS)
        parser.add_argument('--raw', type=int, metavar='N',
                            help='Instead write N rows over all seven species to raw.csv')

    def run(self, **options):
        out = Path(options['out_dir'])
        if options.get('raw') is not None:
            raw = sample(ecosystem_ground_truth(), options['raw'], options['seed'])
            path = write_dataset(raw, out / 'raw.csv')
            return {'seed': options['seed'], 'files': {'raw': {'path': str(path), 'rows': len(raw)}}}

        data = generate_ecosystem_datasets(
            options['seed'], options['layout'], options['x1_rows'], options['x2_rows'], options['eval_rows'],
        )
        files = {}
        for label, dataset in (('x1', data.x1), ('x2', data.x2), ('eval', data.eval)):
            path = write_dataset(dataset, out / f"{label}.csv")
            files[label] = {'path': str(path), 'rows': len(dataset), 'columns': list(dataset.columns)}
        return {'seed': options['seed'], 'layout': options['layout'], 'files': files}

    def summary(self, report):
        return [f"{label}: {info['rows']} rows -> {info['path']}" for label, info in report['files'].items()]
