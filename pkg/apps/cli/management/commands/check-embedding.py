from django.core.management.base import CommandError

from apps.cli.base import FAILURE, CausalCommand, Verdict, parse_phi, split_names
from apps.cli.commands import COMMAND_TABLE
from apps.embeddings.models import Method
from apps.embeddings.operations import check_graph_embedding, is_embedding
from apps.embeddings.serializers import load_embedding
from apps.graphs.serializers import load_graph
from apps.scm.serializers import load_scm


class Command(CausalCommand):
    help = 'Decide whether an embedding (or a variable map between two graphs) is graphically consistent'
    operations = COMMAND_TABLE['check-embedding']

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--low', help='Low model JSON, or a low edge-list file with --graphs')
        parser.add_argument('--high', help='High model JSON, or a high edge-list file with --graphs')
        parser.add_argument('--embedding', help='Embedding JSON file')
        parser.add_argument('--method', choices=[m.value for m in Method], default=Method.PROJECTION.value)
        parser.add_argument('--graphs', action='store_true', help='Treat --low and --high as edge-list files')
        parser.add_argument('--phi', help='Variable map for --graphs, e.g. X1=Xp,Y=Yp')
        parser.add_argument('--relevant-high', help='R\' for --graphs; defaults to the image of --phi')

    def run(self, **options):
        if not options.get('low') or not options.get('high'):
            raise CommandError('--low and --high are required', returncode=FAILURE)

        if options['graphs']:
            if not options.get('phi'):
                raise CommandError('--graphs needs --phi', returncode=FAILURE)
            phi = parse_phi(options['phi'])
            relevant_high = split_names(options.get('relevant_high')) or list(phi.codomain)
            verdict = check_graph_embedding(
                load_graph(options['low']), load_graph(options['high']), phi, relevant_high, options['method'],
            )
            subject = f"{options['low']} -> {options['high']}"
        else:
            if not options.get('embedding'):
                raise CommandError('--embedding is required unless --graphs is given', returncode=FAILURE)
            embedding = load_embedding(options['embedding'])
            verdict = is_embedding(embedding, load_scm(options['low']), load_scm(options['high']), options['method'])
            subject = embedding.name or options['embedding']

        report = {
            'subject': subject,
            'embedding': verdict.ok,
            'method': verdict.method,
            'violations': list(verdict.violations),
            'details': verdict.details,
        }
        if not verdict.ok:
            raise Verdict(f"{subject} is not an embedding ({verdict.method})", report)
        return report

    def summary(self, report):
        lines = [f"{report['subject']}: embedding={str(report['embedding']).lower()} ({report['method']})"]
        lines.extend(f"  {v}" for v in report['violations'])
        return lines
