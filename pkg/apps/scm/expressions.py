"""Closed-form structural function bodies.

Expressions are parsed with :mod:`ast` into a small whitelist (``+ - * / %``,
unary minus, numeric literals, variable names and the calls ``max``, ``min``,
``sum``, ``ceil``, ``floor``, ``abs``) and compiled to numpy closures so the
same body evaluates a scalar for the exact engine and a column for sampling.
"""
import ast
import logging
import operator
from functools import lru_cache, reduce
from typing import Callable, FrozenSet, Mapping

import numpy as np

from apps.common.exceptions import InvalidModel

logger = logging.getLogger(__name__)

_BINARY = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.true_divide,
    ast.Mod: np.mod,
}

_UNARY = {
    ast.USub: np.negative,
    ast.UAdd: operator.pos,
}


def _fold(func):
    def call(*args):
        if len(args) == 1:
            return args[0]
        return reduce(func, args)
    return call


_CALLS = {
    'max': _fold(np.maximum),
    'min': _fold(np.minimum),
    'sum': _fold(np.add),
    'ceil': np.ceil,
    'floor': np.floor,
    'abs': np.abs,
}


class CompiledExpression:
    """A parsed expression with the set of names it reads"""

    def __init__(self, source: str, names: FrozenSet[str], func: Callable):
        self.source = source
        self.names = names
        self._func = func

    def __call__(self, env: Mapping[str, object]):
        return self._func(env)

    def __repr__(self):
        return f"CompiledExpression({self.source!r})"


def _compile(node, names: set) -> Callable:
    if isinstance(node, ast.Expression):
        return _compile(node.body, names)

    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise InvalidModel(f"Unsupported literal {node.value!r}")
        value = node.value
        return lambda env: value

    if isinstance(node, ast.Name):
        name = node.id
        names.add(name)
        return lambda env: env[name]

    if isinstance(node, ast.BinOp):
        op = _BINARY.get(type(node.op))
        if op is None:
            raise InvalidModel(f"Unsupported operator {type(node.op).__name__}")
        left = _compile(node.left, names)
        right = _compile(node.right, names)
        return lambda env: op(left(env), right(env))

    if isinstance(node, ast.UnaryOp):
        op = _UNARY.get(type(node.op))
        if op is None:
            raise InvalidModel(f"Unsupported unary operator {type(node.op).__name__}")
        operand = _compile(node.operand, names)
        return lambda env: op(operand(env))

    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _CALLS:
            raise InvalidModel(f"Unsupported call in expression: {ast.dump(node.func)}")
        if node.keywords or not node.args:
            raise InvalidModel(f"{node.func.id}() takes positional arguments only")
        func = _CALLS[node.func.id]
        args = [_compile(arg, names) for arg in node.args]
        return lambda env: func(*(arg(env) for arg in args))

    raise InvalidModel(f"Unsupported expression element {type(node).__name__}")


@lru_cache(maxsize=512)
def compile_expression(source: str) -> CompiledExpression:
    """Parse and compile ``source``; raises InvalidModel on anything outside the whitelist"""
    try:
        tree = ast.parse(source.strip(), mode='eval')
    except SyntaxError as e:
        raise InvalidModel(f"Cannot parse expression {source!r}: {e.msg}")
    names = set()
    func = _compile(tree, names)
    return CompiledExpression(source, frozenset(names), func)


def canonical_value(value):
    """Python scalar for numpy results; integral floats become ints"""
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and value.is_integer():
        return int(value)
    return value
