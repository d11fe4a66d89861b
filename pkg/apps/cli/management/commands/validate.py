from apps.cli.base import CausalCommand, Verdict, parse_assignment, split_names
from apps.cli.commands import COMMAND_TABLE
from apps.embeddings.operations import validate_structure
from apps.embeddings.serializers import load_embedding
from apps.graphs.serializers import graph_as_dict, load_graph
from apps.scm.engine import induced_graph, query, solve
from apps.scm.serializers import load_scm


class Command(CausalCommand):
    help = 'Validate a model file; optionally compare its graph, check an embedding, or evaluate a query'
    operations = COMMAND_TABLE['validate']

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--model', required=True, help='Model JSON file')
        parser.add_argument('--graph', help='Edge-list file the induced graph must equal')
        parser.add_argument('--embedding', help='Embedding JSON file with the model as its low side')
        parser.add_argument('--high', help='High-level model for --embedding')
        parser.add_argument('--query', help='Comma-separated target variables')
        parser.add_argument('--given', help='Conditioning or intervention values, e.g. X=1,Y=0')
        parser.add_argument('--layer', choices=['L1', 'L2'], default='L1')
        parser.add_argument('--solve', help='Exogenous assignment to evaluate, e.g. U_X=1,U_Y=0')

    def run(self, **options):
        model = load_scm(options['model'])
        graph = induced_graph(model)
        report = {
            'model': model.name,
            'variables': list(model.variables),
            'ranges': {v: model.range_of(v) for v in model.variables},
            'exogenous': list(model.exogenous_names),
            'exact': model.is_exact,
            'graph': graph_as_dict(graph),
        }
        problems = []

        if options.get('graph'):
            expected = load_graph(options['graph'])
            report['graph_matches'] = graph == expected
            if not report['graph_matches']:
                problems.append(f"induced graph differs from {options['graph']}")

        if options.get('embedding'):
            embedding = load_embedding(options['embedding'])
            high = load_scm(options['high']) if options.get('high') else None
            violations = validate_structure(embedding, model, high)
            report['embedding'] = embedding.name
            report['violations'] = [str(v) for v in violations]
            problems.extend(report['violations'])

        if options.get('query'):
            dist = query(model, split_names(options['query']), options['layer'], parse_assignment(options.get('given')))
            report['query'] = {
                'targets': list(dist.variables),
                'given': parse_assignment(options.get('given')),
                'layer': options['layer'],
                'distribution': dist.to_records(),
            }

        if options.get('solve'):
            report['solution'] = solve(model, parse_assignment(options['solve']))

        report['valid'] = not problems
        if problems:
            raise Verdict(f"Model {model.name or options['model']} has {len(problems)} problems", report)
        return report

    def summary(self, report):
        lines = [
            f"Model {report['model'] or '<unnamed>'}: {len(report['variables'])} variables, "
            f"{'exact' if report['exact'] else 'sampling only'}",
        ]
        for line in report.get('violations', []):
            lines.append(f"  {line}")
        if 'query' in report:
            for record in report['query']['distribution']:
                lines.append(f"  {record}")
        if 'solution' in report:
            lines.append(f"  solution: {report['solution']}")
        return lines
