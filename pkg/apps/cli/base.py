"""Shared plumbing for the management commands.

Every command builds a report dict, writes it to ``--out`` as sorted JSON,
prints a short summary, and signals a negative verdict with exit code 1.
Library errors and unreadable files exit with code 2.
"""
import logging
from typing import Dict, List, Optional

from django.core.management.base import BaseCommand, CommandError

from apps.common.exceptions import CausalEmbedError
from apps.common.reports import write_report
from apps.graphs.models import VariableMap

logger = logging.getLogger(__name__)

NEGATIVE = 1
FAILURE = 2


class Verdict(Exception):
    """Raised by ``run`` once a report is complete but its answer is negative"""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


class CausalCommand(BaseCommand):
    requires_system_checks = []
    # Library operations this command exposes, by dotted path
    operations = ()

    def add_arguments(self, parser):
        parser.add_argument('--out', help='Write the JSON report to this path')

    def run(self, **options) -> Dict:
        raise NotImplementedError

    def summary(self, report: Dict) -> List[str]:
        return []

    def handle(self, *args, **options):
        try:
            report = self.run(**options)
        except Verdict as verdict:
            self.emit(verdict.report, options.get('out'))
            raise CommandError(str(verdict), returncode=NEGATIVE)
        except CausalEmbedError as e:
            logger.error(f"{self.__module__.rsplit('.', 1)[-1]} failed: {e}")
            raise CommandError(f"{type(e).__name__}: {e}", returncode=FAILURE)
        self.emit(report, options.get('out'))

    def emit(self, report: Dict, out: Optional[str]):
        for line in self.summary(report):
            self.stdout.write(line)
        if out:
            write_report(report, out)
            self.stdout.write(f"Report written to {out}")


# ============ ARGUMENT PARSING ============

def split_names(value: Optional[str]) -> List[str]:
    """``A,B , C`` -> ['A', 'B', 'C']"""
    if not value:
        return []
    return [name.strip() for name in value.split(',') if name.strip()]


def parse_phi(value: str) -> VariableMap:
    """``X1=Xp,X2=Xp,Y=Yp`` -> VariableMap"""
    mapping = {}
    for pair in split_names(value):
        low, sep, high = pair.partition('=')
        if not sep or not low.strip() or not high.strip():
            raise CommandError(f"Malformed variable map entry {pair!r}; expected LOW=HIGH", returncode=FAILURE)
        mapping[low.strip()] = high.strip()
    if not mapping:
        raise CommandError("Empty variable map", returncode=FAILURE)
    return VariableMap(mapping)


def parse_assignment(value: Optional[str]) -> Dict[str, object]:
    """``X=1,Y=0`` -> {'X': 1, 'Y': 0}; values that look numeric become numbers"""
    assignment = {}
    for pair in split_names(value):
        name, sep, raw = pair.partition('=')
        if not sep:
            raise CommandError(f"Malformed assignment {pair!r}; expected NAME=VALUE", returncode=FAILURE)
        assignment[name.strip()] = _number(raw.strip())
    return assignment


def _number(raw: str):
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            continue
    return raw
