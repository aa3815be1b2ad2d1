"""A small, safe arithmetic grammar for densities and kernels given as text.

Expressions are parsed with :mod:`ast` and only a whitelist of nodes is
accepted. Variables: ``u1..ud`` (or ``x1..xd`` for kernels), ``u``/``x`` as an
alias of the first coordinate when ``d == 1``, and ``r`` for the Euclidean
norm. Functions: cos, sin, tan, exp, expm1, log, log1p, sqrt, abs, tanh,
sinc (normalised, ``sin(pi t)/(pi t)``), where(cond, a, b), minimum, maximum.
Constants: pi, e. Comparison operators are allowed inside ``where``.
"""
import ast
import operator

import numpy as np

from .errors import ConfigError

_FUNCTIONS = {
    "cos": np.cos, "sin": np.sin, "tan": np.tan, "exp": np.exp,
    "expm1": np.expm1, "log": np.log, "log1p": np.log1p, "sqrt": np.sqrt,
    "abs": np.abs, "tanh": np.tanh, "sinc": np.sinc, "where": np.where,
    "minimum": np.minimum, "maximum": np.maximum,
}
_CONSTANTS = {"pi": np.pi, "e": np.e}
_BINOPS = {
    ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
    ast.Div: operator.truediv, ast.Pow: operator.pow,
}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_COMPARE = {
    ast.Lt: operator.lt, ast.LtE: operator.le, ast.Gt: operator.gt,
    ast.GtE: operator.ge,
}


class Expression:
    """Compiled expression evaluated on arrays of points of shape (n, d)."""

    def __init__(self, source, d, prefix="u"):
        self.source = source
        self.d = d
        self.prefix = prefix
        try:
            self._tree = ast.parse(source, mode="eval").body
        except SyntaxError as exc:
            raise ConfigError(f"cannot parse expression {source!r}: {exc.msg}") from None
        self._names = {f"{prefix}{i + 1}" for i in range(d)} | {"r"}
        if d == 1:
            self._names.add(prefix)
        self._check(self._tree)

    def _check(self, node):
        if isinstance(node, ast.BinOp):
            if type(node.op) not in _BINOPS:
                raise ConfigError(f"operator {type(node.op).__name__} not allowed")
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if type(node.op) not in _UNARY:
                raise ConfigError(f"operator {type(node.op).__name__} not allowed")
            self._check(node.operand)
        elif isinstance(node, ast.Compare):
            if len(node.ops) != 1 or type(node.ops[0]) not in _COMPARE:
                raise ConfigError("only single <, <=, >, >= comparisons are allowed")
            self._check(node.left)
            self._check(node.comparators[0])
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
                raise ConfigError(f"unknown function in {self.source!r}")
            if node.keywords:
                raise ConfigError("keyword arguments are not allowed")
            for arg in node.args:
                self._check(arg)
        elif isinstance(node, ast.Name):
            if node.id not in self._names and node.id not in _CONSTANTS:
                raise ConfigError(f"unknown name {node.id!r} in {self.source!r}")
        elif isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
                raise ConfigError("only numeric constants are allowed")
        else:
            raise ConfigError(f"syntax {type(node).__name__} not allowed in expressions")

    def _eval(self, node, env):
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, env),
                                          self._eval(node.right, env))
        if isinstance(node, ast.UnaryOp):
            return _UNARY[type(node.op)](self._eval(node.operand, env))
        if isinstance(node, ast.Compare):
            return _COMPARE[type(node.ops[0])](self._eval(node.left, env),
                                               self._eval(node.comparators[0], env))
        if isinstance(node, ast.Call):
            return _FUNCTIONS[node.func.id](*(self._eval(a, env) for a in node.args))
        if isinstance(node, ast.Name):
            return env[node.id] if node.id in env else _CONSTANTS[node.id]
        return float(node.value)

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        env = {f"{self.prefix}{i + 1}": points[:, i] for i in range(self.d)}
        if self.d == 1:
            env[self.prefix] = points[:, 0]
        env["r"] = np.sqrt(np.sum(points * points, axis=1))
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = self._eval(self._tree, env)
        return np.broadcast_to(np.asarray(out, dtype=float), (points.shape[0],)).copy()

    def __repr__(self):
        return f"Expression({self.source!r}, d={self.d})"
