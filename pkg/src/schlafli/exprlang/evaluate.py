"""Evaluation of parsed programs on floats, arrays or jets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jet as J
from .parser import Binary, Call, ExprProgram, Name, Num, Unary, parse

_FUNCS = {
    "sin": J.sin, "cos": J.cos, "sinh": J.sinh, "cosh": J.cosh, "tanh": J.tanh,
    "exp": J.exp, "log": J.log, "sqrt": J.sqrt, "pow": J.pow_, "atan2": J.atan2,
}


def _eval(node, env):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Name):
        if node.name == "pi":
            return np.pi
        return env[node.name]
    if isinstance(node, Unary):
        return -_eval(node.operand, env)
    if isinstance(node, Binary):
        a = _eval(node.left, env)
        b = _eval(node.right, env)
        op = node.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            if isinstance(b, J.Jet):
                return a / b
            if np.any(np.asarray(b) == 0):
                raise J.DomainError("division by zero")
            return a / b
        return J.pow_(a, b)
    if isinstance(node, Call):
        return _FUNCS[node.func](*[_eval(a, env) for a in node.args])
    raise TypeError(f"unknown node {node!r}")


def evaluate(prog: ExprProgram | str, env: dict):
    """Evaluate ``prog`` with variables bound in ``env``.

    Values in ``env`` may be floats, numpy arrays or :class:`Jet` objects.
    Returns a single value, or a list for vector programs.
    """
    if isinstance(prog, str):
        prog = parse(prog, params=[k for k in env if k not in ("u", "v", "t")])
    missing = prog.free_variables - set(env)
    if missing:
        raise KeyError(f"unbound variables: {sorted(missing)}")
    with np.errstate(all="ignore"):
        out = [_eval(n, env) for n in prog.outputs]
    return out if prog.is_vector else out[0]


@dataclass(frozen=True)
class JetValue:
    """Value and derivatives up to second order in (u, v), first in t."""

    value: np.ndarray | float
    du: np.ndarray | float
    dv: np.ndarray | float
    dt: np.ndarray | float
    duu: np.ndarray | float
    duv: np.ndarray | float
    dvv: np.ndarray | float

    @property
    def dvu(self):
        return self.duv

    @classmethod
    def from_jet(cls, x) -> "JetValue":
        if not isinstance(x, J.Jet):
            z = np.zeros_like(np.asarray(x, dtype=float))
            return cls(np.asarray(x, dtype=float), z, z, z, z, z, z)
        return cls(x.value, x.d(1, 0, 0), x.d(0, 1, 0), x.d(0, 0, 1),
                   x.d(2, 0, 0), x.d(1, 1, 0), x.d(0, 2, 0))


def eval_jet(prog: ExprProgram | str, u=0.0, v=0.0, t=0.0, params=None, order: int = 2):
    """Value and exact derivatives of ``prog`` at (u, v, t).

    ``order`` is the total Taylor order in (u, v) (at least 2); the
    t-derivative is always first order.
    """
    params = dict(params or {})
    if isinstance(prog, str):
        prog = parse(prog, params=params)
    order = max(order, 2)
    env = {
        "u": J.Jet.variable(u, "u", order),
        "v": J.Jet.variable(v, "v", order),
        "t": J.Jet.variable(t, "t", order),
    }
    env.update(params)
    out = evaluate(prog, env)
    if prog.is_vector:
        return [JetValue.from_jet(x) for x in out]
    return JetValue.from_jet(out)
