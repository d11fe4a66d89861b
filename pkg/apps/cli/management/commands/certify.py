from apps.cli.base import CausalCommand, Verdict
from apps.cli.commands import COMMAND_TABLE
from apps.marginal.operations import (
    certify_solution,
    fixed_queries,
    is_identity_embedding,
    overlap_disagreements,
    reduce,
    restriction_matches,
)
from apps.marginal.serializers import load_problem


class Command(CausalCommand):
    help = 'Reduce a multi-resolution marginal problem and certify its candidate joint model'
    operations = COMMAND_TABLE['certify']

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--problem', required=True, help='Problem bundle JSON file')
        parser.add_argument('--layer', choices=['L1', 'L2'], default='L1')
        parser.add_argument('--list-queries', action='store_true', help='Include the fixed query labels')

    def run(self, **options):
        problem = load_problem(options['problem'])
        layer = options['layer']
        summaries = reduce(problem)
        labels = fixed_queries(summaries, layer)
        report = {
            'problem': problem.name,
            'layer': layer,
            'models': [s.model for s in summaries],
            'fixed_query_count': len(labels),
            'overlap': overlap_disagreements(summaries),
            'ambiguous': sum(len(s.ambiguous) for s in summaries),
            'identity_embeddings': [is_identity_embedding(e, m) for m, e in zip(problem.models, problem.embeddings)],
        }
        if options['list_queries']:
            report['fixed_queries'] = labels
        if problem.candidate is None:
            report['certified'] = None
            return report

        result = certify_solution(problem, layer)
        report.update(result.as_dict())
        report['candidate'] = problem.candidate.name
        report['restrictions_match'] = [restriction_matches(s, problem.candidate, layer) for s in summaries]
        if not result.certified:
            raise Verdict(f"Candidate {problem.candidate.name} is not certified at {layer}", report)
        return report

    def summary(self, report):
        lines = [f"{len(report['models'])} marginal models fix {report['fixed_query_count']} {report['layer']} queries"]
        if report['certified'] is None:
            lines.append('No candidate to certify')
        else:
            lines.append(f"candidate {report['candidate']}: certified={str(report['certified']).lower()}")
            lines.extend(f"  {v}" for v in report['violations'])
        return lines
