from apps.cli.base import CausalCommand, Verdict
from apps.cli.commands import COMMAND_TABLE
from apps.common.tolerances import CONSISTENCY_TOLERANCE
from apps.embeddings.models import Distance, Method
from apps.embeddings.operations import abstraction_error, embedding_error, is_embedding
from apps.embeddings.serializers import load_embedding
from apps.scm.serializers import load_scm


class Command(CausalCommand):
    help = 'Worst-case L1/L2 distance between embed-then-evaluate and evaluate-then-embed'
    operations = COMMAND_TABLE['embed-error']

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--low', required=True, help='Low model JSON file')
        parser.add_argument('--high', required=True, help='High model JSON file')
        parser.add_argument('--embedding', required=True, help='Embedding JSON file')
        parser.add_argument('--layer', choices=['L1', 'L2'], default='L2')
        parser.add_argument('--distance', choices=[d.value for d in Distance], default=Distance.TV.value)
        parser.add_argument('--method', choices=[m.value for m in Method], default=Method.PROJECTION.value)
        parser.add_argument('--abstraction', action='store_true', help='Require R and R\' to cover both models')
        parser.add_argument('--tol', type=float, default=CONSISTENCY_TOLERANCE)
        parser.add_argument('--all-queries', action='store_true', help='Include every query in the report')

    def run(self, **options):
        low, high = load_scm(options['low']), load_scm(options['high'])
        embedding = load_embedding(options['embedding'])
        compute = abstraction_error if options['abstraction'] else embedding_error
        result = compute(embedding, low, high, options['layer'], options['distance'])
        verdict = is_embedding(embedding, low, high, options['method'])

        report = {
            'embedding_name': embedding.name,
            **result.as_dict(include_queries=options['all_queries']),
            'consistent': result.consistent(options['tol']),
            'tol': options['tol'],
            'embedding': verdict.ok,
            'method': verdict.method,
            'violations': list(verdict.violations),
        }
        if not (report['consistent'] and verdict.ok):
            raise Verdict(
                f"error {result.error} ({'consistent' if report['consistent'] else 'inconsistent'}), "
                f"embedding={str(verdict.ok).lower()}",
                report,
            )
        return report

    def summary(self, report):
        lines = [
            f"error {report['error']} ({report['layer']}, {report['distance']})",
            f"embedding={str(report['embedding']).lower()} ({report['method']})",
        ]
        if report['witness']:
            w = report['witness']
            lines.append(f"  witness: do({w['intervened']}={w['low_value']}) on {w['targets']}")
        lines.extend(f"  {v}" for v in report['violations'])
        return lines
