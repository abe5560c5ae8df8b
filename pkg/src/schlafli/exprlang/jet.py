"""Truncated multivariate Taylor arithmetic over the chart variables.

A :class:`Jet` carries the Taylor coefficients of a quantity in the chart
variables ``u``, ``v`` up to a fixed total order, plus a first-order
coefficient in the deformation parameter ``t``.  Coefficients may be numpy
arrays, so a single jet evaluates a whole quadrature grid at once.

Coefficients are stored as Taylor coefficients (derivative divided by the
factorials of the multi-index); :meth:`Jet.d` converts back to derivatives.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

VARIABLES = ("u", "v", "t")
DEFAULT_ORDER = 2


class DomainError(ValueError):
    """A function was evaluated outside its real domain."""


@lru_cache(maxsize=None)
def _basis(order: int):
    """Multi-indices (i, j, k) with i + j + k <= order and k <= 1."""
    idx = []
    for total in range(order + 1):
        for k in (0, 1):
            for i in range(total - k, -1, -1):
                j = total - k - i
                if j >= 0:
                    idx.append((i, j, k))
    lookup = {m: n for n, m in enumerate(idx)}
    pairs = []
    for a, ma in enumerate(idx):
        for b, mb in enumerate(idx):
            mc = (ma[0] + mb[0], ma[1] + mb[1], ma[2] + mb[2])
            c = lookup.get(mc)
            if c is not None:
                pairs.append((a, b, c))
    # group by output index for accumulation
    grouped: dict[int, list[tuple[int, int]]] = {}
    for a, b, c in pairs:
        grouped.setdefault(c, []).append((a, b))
    return tuple(idx), lookup, tuple(sorted(grouped.items()))


class Jet:
    """Truncated Taylor expansion in (u, v, t).

    Total order ``order`` in all variables, at most first order in ``t``.
    """

    __slots__ = ("coef", "order")
    __array_priority__ = 1000

    def __init__(self, coef, order: int = DEFAULT_ORDER):
        self.coef = list(coef)
        self.order = order

    # -- construction -------------------------------------------------
    @classmethod
    def constant(cls, value, order: int = DEFAULT_ORDER) -> "Jet":
        idx, _, _ = _basis(order)
        value = np.asarray(value, dtype=float)
        zero = np.zeros_like(value)
        return cls([value] + [zero] * (len(idx) - 1), order)

    @classmethod
    def variable(cls, value, name: str, order: int = DEFAULT_ORDER) -> "Jet":
        jet = cls.constant(value, order)
        if order >= 1:
            _, lookup, _ = _basis(order)
            mono = {"u": (1, 0, 0), "v": (0, 1, 0), "t": (0, 0, 1)}[name]
            jet.coef[lookup[mono]] = np.ones_like(jet.coef[0])
        return jet

    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            if other.order != self.order:
                raise ValueError("jets of different order cannot be combined")
            return other
        return Jet.constant(other, self.order)

    # -- access -------------------------------------------------------
    @property
    def value(self):
        return self.coef[0]

    def d(self, i: int = 0, j: int = 0, k: int = 0):
        """Partial derivative d^{i+j+k} / du^i dv^j dt^k."""
        _, lookup, _ = _basis(self.order)
        n = lookup.get((i, j, k))
        if n is None:
            raise ValueError(f"derivative ({i},{j},{k}) exceeds jet order {self.order}")
        return self.coef[n] * (math.factorial(i) * math.factorial(j) * math.factorial(k))

    def deriv(self, var: str) -> "Jet":
        """Jet of the partial derivative in ``var``, one order lower.

        Differentiating in t drops the t-part (only first order in t is kept).
        """
        if self.order < 1:
            raise ValueError("cannot differentiate an order-0 jet")
        axis = VARIABLES.index(var)
        idx, lookup, _ = _basis(self.order)
        lo_idx, _, _ = _basis(self.order - 1)
        zero = np.zeros_like(self.coef[0])
        out = []
        for m in lo_idx:
            up = list(m)
            up[axis] += 1
            n = lookup.get(tuple(up))
            out.append(self.coef[n] * up[axis] if n is not None else zero)
        return Jet(out, self.order - 1)

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise ValueError("cannot raise the order of a jet")
        if order == self.order:
            return self
        _, lookup, _ = _basis(self.order)
        lo_idx, _, _ = _basis(order)
        return Jet([self.coef[lookup[m]] for m in lo_idx], order)

    def shift(self) -> "Jet":
        """The jet minus its value (nilpotent part)."""
        out = Jet(self.coef, self.order)
        out.coef[0] = np.zeros_like(self.coef[0])
        return out

    # -- arithmetic ---------------------------------------------------
    def __neg__(self):
        return Jet([-c for c in self.coef], self.order)

    def __pos__(self):
        return self

    def __add__(self, other):
        if not isinstance(other, Jet):
            out = Jet(self.coef, self.order)
            out.coef[0] = self.coef[0] + other
            return out
        other = self._lift(other)
        return Jet([a + b for a, b in zip(self.coef, other.coef)], self.order)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet([c * other for c in self.coef], self.order)
        other = self._lift(other)
        _, _, grouped = _basis(self.order)
        a, b = self.coef, other.coef
        out = [None] * len(a)
        for c, terms in grouped:
            acc = a[terms[0][0]] * b[terms[0][1]]
            for i, j in terms[1:]:
                acc = acc + a[i] * b[j]
            out[c] = acc
        return Jet(out, self.order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet([c / other for c in self.coef], self.order)
        return self * reciprocal(other)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, p):
        if isinstance(p, Jet):
            return exp(p * log(self))
        if float(p) == int(p) and 0 <= int(p) <= 8:
            n = int(p)
            out = Jet.constant(np.ones_like(self.coef[0]), self.order)
            for _ in range(n):
                out = out * self
            return out
        return power(self, float(p))

    def __rpow__(self, base):
        return exp(self * np.log(base))

    def __repr__(self):
        return f"Jet(order={self.order}, value={self.coef[0]!r})"


def _compose(x, derivs) -> Jet:
    """f(x) given the derivatives f^(n)(x.value) for n = 0..order."""
    if not isinstance(x, Jet):
        return derivs[0]
    delta = x.shift()
    n = x.order
    out = Jet.constant(derivs[n] / math.factorial(n), n)
    for k in range(n - 1, -1, -1):
        out = out * delta + derivs[k] / math.factorial(k)
    return out


def _val(x):
    return x.value if isinstance(x, Jet) else np.asarray(x, dtype=float)


def _order(x):
    return x.order if isinstance(x, Jet) else 0


def _check(cond, msg):
    if np.any(cond):
        raise DomainError(msg)


def reciprocal(x):
    a = _val(x)
    _check(a == 0, "division by zero")
    return _compose(x, [(-1) ** n * math.factorial(n) / a ** (n + 1) for n in range(_order(x) + 1)])


def power(x, p: float):
    a = _val(x)
    if p != int(p):
        _check(a < 0, "fractional power of a negative number")
    if p < 0:
        _check(a == 0, "negative power of zero")
    derivs = []
    coeff = 1.0
    for n in range(_order(x) + 1):
        derivs.append(coeff * a ** (p - n) if coeff != 0 else np.zeros_like(a))
        coeff *= p - n
    return _compose(x, derivs)


def sqrt(x):
    a = _val(x)
    _check(a < 0, "sqrt of a negative number")
    if _order(x) > 0:
        _check(a == 0, "sqrt is not differentiable at zero")
    return power(x, 0.5) if isinstance(x, Jet) else np.sqrt(a)


def exp(x):
    e = np.exp(_val(x))
    return _compose(x, [e] * (_order(x) + 1))


def log(x):
    a = _val(x)
    _check(a <= 0, "log of a non-positive number")
    derivs = [np.log(a)]
    for n in range(1, _order(x) + 1):
        derivs.append((-1) ** (n - 1) * math.factorial(n - 1) / a**n)
    return _compose(x, derivs)


def sin(x):
    a = _val(x)
    s, c = np.sin(a), np.cos(a)
    cyc = [s, c, -s, -c]
    return _compose(x, [cyc[n % 4] for n in range(_order(x) + 1)])


def cos(x):
    a = _val(x)
    s, c = np.sin(a), np.cos(a)
    cyc = [c, -s, -c, s]
    return _compose(x, [cyc[n % 4] for n in range(_order(x) + 1)])


def sinh(x):
    a = _val(x)
    s, c = np.sinh(a), np.cosh(a)
    return _compose(x, [s if n % 2 == 0 else c for n in range(_order(x) + 1)])


def cosh(x):
    a = _val(x)
    s, c = np.sinh(a), np.cosh(a)
    return _compose(x, [c if n % 2 == 0 else s for n in range(_order(x) + 1)])


def tanh(x):
    if not isinstance(x, Jet):
        return np.tanh(_val(x))
    return sinh(x) / cosh(x)


def _series_from_derivative(x, value, first_derivative):
    """Compose f at x where f(a) = value and f' is a jet-capable callable.

    The higher derivatives of f are the derivatives of f' at a, which are
    read off a one-variable jet of f' (order - 1).
    """
    n = _order(x)
    if n == 0:
        return value
    a = _val(x)
    if n == 1:
        inner = [first_derivative(Jet.constant(a, 0)).value]
    else:
        probe = first_derivative(Jet.variable(a, "u", n - 1))
        inner = [probe.d(k, 0, 0) for k in range(n)]
    return _compose(x, [value] + inner)


def arctan(x):
    a = _val(x)
    return _series_from_derivative(x, np.arctan(a), lambda y: reciprocal(1.0 + y * y))


def arcsin(x):
    a = _val(x)
    _check(np.abs(a) > 1, "arcsin outside [-1, 1]")
    if _order(x) > 0:
        _check(np.abs(a) == 1, "arcsin is not differentiable at +-1")
    return _series_from_derivative(x, np.arcsin(a), lambda y: power(1.0 - y * y, -0.5))


def arccos(x):
    a = _val(x)
    _check(np.abs(a) > 1, "arccos outside [-1, 1]")
    if _order(x) > 0:
        _check(np.abs(a) == 1, "arccos is not differentiable at +-1")
    return _series_from_derivative(x, np.arccos(a), lambda y: -power(1.0 - y * y, -0.5))


def arcsinh(x):
    a = _val(x)
    return _series_from_derivative(x, np.arcsinh(a), lambda y: power(1.0 + y * y, -0.5))


def arccosh(x):
    a = _val(x)
    _check(a < 1, "arccosh below 1")
    if _order(x) > 0:
        _check(a == 1, "arccosh is not differentiable at 1")
    return _series_from_derivative(x, np.arccosh(a), lambda y: power(y * y - 1.0, -0.5))


def atan2(y, x):
    """Angle of (x, y); the expansion is taken about the base angle."""
    xv, yv = _val(x), _val(y)
    base = np.arctan2(yv, xv)
    if not isinstance(x, Jet) and not isinstance(y, Jet):
        return base
    _check((xv == 0) & (yv == 0), "atan2 at the origin")
    cross = y * xv - x * yv
    dot = x * xv + y * yv
    return arctan(cross / dot) + base


def pow_(x, y):
    if isinstance(y, Jet):
        return exp(y * log(x))
    return x**y if isinstance(x, Jet) else np.power(_val(x), y)


def value_of(x):
    return _val(x)
