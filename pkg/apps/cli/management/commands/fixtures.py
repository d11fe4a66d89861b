from django.core.management.base import CommandError

from apps.cli.base import FAILURE, CausalCommand, Verdict
from apps.cli.commands import COMMAND_TABLE
from apps.fixtures.catalog import FIXTURE_SEED, all_bundles, export_fixtures


class Command(CausalCommand):
    help = 'List, replay or export the built-in worked examples'
    operations = COMMAND_TABLE['fixtures']

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('action', choices=['list', 'replay', 'export'])
        parser.add_argument('--bundle', action='append', help='Restrict replay to these bundles')
        parser.add_argument('--dir', help='Target directory for export')
        parser.add_argument('--seed', type=int, default=FIXTURE_SEED, help='Seed for the exported ecosystem datasets')
        parser.add_argument('--no-datasets', action='store_true', help='Skip the ecosystem CSV files on export')

    def run(self, **options):
        action = options['action']
        if action == 'export':
            if not options.get('dir'):
                raise CommandError('export needs --dir', returncode=FAILURE)
            root = export_fixtures(options['dir'], options['seed'], not options['no_datasets'])
            return {'action': action, 'directory': str(root), 'seed': options['seed']}

        bundles = all_bundles()
        if options.get('bundle'):
            unknown = sorted(set(options['bundle']) - set(bundles))
            if unknown:
                raise CommandError(f"Unknown bundles {unknown}; known: {sorted(bundles)}", returncode=FAILURE)
            bundles = {name: bundles[name] for name in options['bundle']}

        if action == 'list':
            return {
                'action': action,
                'bundles': {name: [e.name for e in bundle.expected] for name, bundle in bundles.items()},
            }

        results = {}
        failed = 0
        for name, bundle in bundles.items():
            failures = bundle.replay()
            failed += len(failures)
            results[name] = {'expectations': len(bundle.expected), 'failures': [str(f) for f in failures]}
        report = {'action': action, 'bundles': results, 'failed': failed}
        if failed:
            raise Verdict(f"{failed} fixture expectations do not hold", report)
        return report

    def summary(self, report):
        if report['action'] == 'export':
            return [f"Fixtures exported to {report['directory']} (seed {report['seed']})"]
        if report['action'] == 'list':
            return [f"{name}: {len(names)} expectations" for name, names in report['bundles'].items()]
        lines = []
        for name, result in report['bundles'].items():
            held = result['expectations'] - len(result['failures'])
            lines.append(f"{name}: {held}/{result['expectations']} hold")
            lines.extend(f"  {f}" for f in result['failures'])
        return lines
