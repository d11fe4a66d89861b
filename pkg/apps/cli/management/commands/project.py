from django.core.management.base import CommandError

from apps.cli.base import FAILURE, CausalCommand, Verdict, parse_phi, split_names
from apps.cli.commands import COMMAND_TABLE
from apps.embeddings.construction import construct_consistent_high_level
from apps.embeddings.operations import tupling_embedding
from apps.embeddings.serializers import dump_embedding
from apps.graphs.models import VariableMap
from apps.graphs.operations import is_cdag, latent_project, topological_order
from apps.graphs.serializers import dump_graph, graph_as_dict, load_graph
from apps.scm.serializers import dump_scm, load_scm


class Command(CausalCommand):
    help = (
        'Latent projection of a graph onto a relevant set, a cluster-DAG check between two graphs, '
        'or construction of a high-level model on a graph'
    )
    operations = COMMAND_TABLE['project']

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--graph', help='Edge-list file to project, or the high-level graph for --low')
        parser.add_argument('--relevant', help='Comma-separated vertices to keep')
        parser.add_argument('--write-graph', help='Write the projected graph to this edge-list file')
        parser.add_argument('--cluster-of', help='Low edge-list file; checks --graph is its cluster DAG under --phi')
        parser.add_argument('--phi', help='Variable map, e.g. X1=Xp,X2=Xp,Y=Yp')
        parser.add_argument('--low', help='Low model JSON; builds a consistent high model on --graph under --phi')
        parser.add_argument('--write-model', help='Where to write the constructed model')
        parser.add_argument('--write-embedding', help='Where to write the tupling embedding that pairs with it')

    def run(self, **options):
        if not options.get('graph'):
            raise CommandError('--graph is required', returncode=FAILURE)
        graph = load_graph(options['graph'])

        if options.get('low'):
            return self._construct(graph, options)
        if options.get('cluster_of'):
            return self._cluster(graph, options)

        relevant = split_names(options.get('relevant')) or list(graph.vertices)
        projected = latent_project(graph, relevant)
        if options.get('write_graph'):
            dump_graph(projected, options['write_graph'])
        return {
            'mode': 'projection',
            'relevant': relevant,
            'graph': graph_as_dict(projected),
            'order': list(topological_order(projected)),
        }

    def _cluster(self, graph, options):
        if not options.get('phi'):
            raise CommandError('--cluster-of needs --phi', returncode=FAILURE)
        low = load_graph(options['cluster_of'])
        phi = parse_phi(options['phi'])
        report = is_cdag(low, graph, VariableMap(phi.mapping, graph.vertices))
        payload = {'mode': 'cluster', **report.as_dict()}
        if not report.ok:
            raise Verdict(f"{options['graph']} is not a cluster DAG of {options['cluster_of']}", payload)
        return payload

    def _construct(self, graph, options):
        if not options.get('phi'):
            raise CommandError('--low needs --phi', returncode=FAILURE)
        low = load_scm(options['low'])
        phi = parse_phi(options['phi'])
        high = construct_consistent_high_level(low, phi, graph)
        if options.get('write_model'):
            dump_scm(high, options['write_model'])
        if options.get('write_embedding'):
            dump_embedding(tupling_embedding(low, phi, name=f"tupling({low.name})"), options['write_embedding'])
        return {
            'mode': 'construction',
            'model': high.name,
            'variables': list(high.variables),
            'exogenous': list(high.exogenous_names),
        }

    def summary(self, report):
        if report['mode'] == 'projection':
            g = report['graph']
            return [f"Projected onto {len(g['vertices'])} vertices: "
                    f"{len(g['directed'])} directed, {len(g['bidirected'])} bidirected edges"]
        if report['mode'] == 'cluster':
            return ['cluster DAG: ' + ('yes' if report['ok'] else 'no')]
        return [f"Constructed {report['model']} over {', '.join(report['variables'])}"]
