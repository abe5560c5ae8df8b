"""Random well-defined programs and random junk text, for property tests."""

from __future__ import annotations

import numpy as np

_LEAVES = ("u", "v", "t")


def _const(rng) -> str:
    return f"{rng.uniform(0.3, 2.0):.3f}"


def random_program(rng: np.random.Generator, depth: int = 3) -> str:
    """A program in (u, v, t) that is smooth for |u|, |v|, |t| <= 1.

    Partial functions only receive arguments that keep them in their domain
    (log and sqrt see 1 + x^2, denominators stay away from zero).
    """
    if depth <= 0 or rng.random() < 0.2:
        return str(rng.choice(_LEAVES)) if rng.random() < 0.75 else _const(rng)
    a = random_program(rng, depth - 1)
    kind = int(rng.integers(0, 14))
    if kind < 4:
        b = random_program(rng, depth - 1)
        return f"({a} {'+-*'[kind % 3]} {b})"
    if kind == 4:
        b = random_program(rng, depth - 1)
        return f"({a} / (1.5 + sin({b})))"
    if kind == 5:
        return f"sin({a})"
    if kind == 6:
        return f"cos({a})"
    if kind == 7:
        return f"tanh({a})"
    if kind == 8:
        return f"exp(0.3 * sin({a}))"
    if kind == 9:
        return f"log(1 + {a}^2)"
    if kind == 10:
        return f"sqrt(1 + {a}^2)"
    if kind == 11:
        return f"cosh(0.5 * tanh({a}))"
    if kind == 12:
        b = random_program(rng, depth - 1)
        return f"atan2({a}, 2 + cos({b}))"
    return f"pow(1.2 + {a}^2, {rng.uniform(-1.5, 1.5):.2f})"


_JUNK = list("uvt0123456789.+-*/^(),e ") + ["sin", "cos", "pow", "atan2", "pi", "foo", "\n", "**", "1e", "x"]


def random_text(rng: np.random.Generator, max_tokens: int = 20) -> str:
    n = int(rng.integers(0, max_tokens + 1))
    return "".join(str(rng.choice(_JUNK)) for _ in range(n))
