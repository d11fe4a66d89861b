"""Edge-list exchange format::

    # comments and blank lines are ignored
    vertices: A, B, C
    A -> B
    A <-> C

Every endpoint must be declared in a ``vertices:`` line (several are allowed).
"""
import logging
import re
from pathlib import Path

from apps.common.exceptions import CausalEmbedError, InvalidSpecFile
from apps.graphs.models import CausalGraph, bidirected_pair

logger = logging.getLogger(__name__)

_EDGE = re.compile(r'^(\S+)\s*(<->|->)\s*(\S+)$')


def parse_edge_list(text: str) -> CausalGraph:
    vertices = []
    directed = set()
    bidirected = set()
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if line.lower().startswith('vertices:'):
            names = re.split(r'[,\s]+', line.split(':', 1)[1].strip())
            vertices.extend(n for n in names if n)
            continue
        match = _EDGE.match(line)
        if not match:
            raise InvalidSpecFile(f"Line {number}: cannot parse {raw.strip()!r}")
        a, arrow, b = match.groups()
        for name in (a, b):
            if name not in vertices:
                raise InvalidSpecFile(f"Line {number}: vertex {name} is not declared")
        if arrow == '->':
            directed.add((a, b))
        else:
            bidirected.add(bidirected_pair(a, b))
    try:
        return CausalGraph(tuple(vertices), frozenset(directed), frozenset(bidirected))
    except CausalEmbedError as e:
        raise InvalidSpecFile(f"Invalid graph: {e}")


def format_edge_list(g: CausalGraph) -> str:
    index = {v: i for i, v in enumerate(g.vertices)}
    lines = ['vertices: ' + ', '.join(g.vertices)]
    for a, b in sorted(g.directed, key=lambda e: (index[e[0]], index[e[1]])):
        lines.append(f"{a} -> {b}")
    pairs = [sorted(p, key=index.__getitem__) for p in g.bidirected]
    for a, b in sorted(pairs, key=lambda p: (index[p[0]], index[p[1]])):
        lines.append(f"{a} <-> {b}")
    return '\n'.join(lines) + '\n'


def load_graph(path) -> CausalGraph:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InvalidSpecFile(f"Cannot read graph {path}: {e}")
    return parse_edge_list(text)


def dump_graph(g: CausalGraph, path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(format_edge_list(g))
    except OSError as e:
        raise InvalidSpecFile(f"Cannot write graph {path}: {e}")
    return path


def graph_as_dict(g: CausalGraph) -> dict:
    """Report form: vertices in declaration order, edges as sorted pairs"""
    return {
        'vertices': list(g.vertices),
        'directed': sorted([a, b] for a, b in g.directed),
        'bidirected': sorted(sorted(pair) for pair in g.bidirected),
    }
