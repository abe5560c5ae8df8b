import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from schlafli.exprlang import (
    DomainError, ExprError, ExprSyntaxError, UnknownIdentifier, eval_jet, evaluate, parse,
)
from schlafli.exprlang.generate import random_program, random_text


def test_valid_program_free_variables():
    assert parse("cosh(t)*sin(u)").free_variables == {"u", "t"}


def test_syntax_error_position():
    with pytest.raises(ExprSyntaxError) as exc:
        parse("sin(u")
    assert (exc.value.line, exc.value.col) == (1, 6)


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifier):
        parse("foo(u)")
    with pytest.raises(UnknownIdentifier):
        parse("u + w")
    assert parse("u + w", params=["w"]).free_variables == {"u", "w"}


def test_product_jet():
    j = eval_jet("u*v", 2.0, 3.0)
    assert (j.value, j.du, j.dv, j.duv, j.duu) == (6.0, 3.0, 2.0, 1.0, 0.0)


def test_sin_and_cosh_jets():
    j = eval_jet("sin(u)", 0.0)
    assert (j.value, j.du, j.duu) == (0.0, 1.0, 0.0)
    assert eval_jet("cosh(t)", t=1.0).dt == pytest.approx(math.sinh(1.0), rel=1e-15)


def test_precedence_and_associativity():
    assert evaluate(parse("2^3^2"), {}) == 512
    assert evaluate(parse("-2^2"), {}) == -4
    assert evaluate(parse("2**-1"), {}) == 0.5
    assert evaluate(parse("1 - 2 - 3"), {}) == -4
    assert evaluate(parse("pi"), {}) == math.pi


def test_vector_program():
    p = parse("[u, v*2, t]")
    assert p.is_vector and p.arity == 3
    assert evaluate(p, {"u": 1.0, "v": 2.0, "t": 3.0}) == [1.0, 4.0, 3.0]


@pytest.mark.parametrize("src,env", [("1/u", {"u": 0.0}), ("log(u)", {"u": -1.0}), ("sqrt(u)", {"u": -2.0})])
def test_domain_errors(src, env):
    with pytest.raises(DomainError):
        evaluate(parse(src), env)


def test_roundtrip_printer():
    rng = np.random.default_rng(1)
    for _ in range(100):
        src = random_program(rng, 4)
        p = parse(src)
        q = parse(p.to_source())
        env = {"u": 0.3, "v": -0.4, "t": 0.2}
        assert evaluate(q, env) == pytest.approx(evaluate(p, env), rel=1e-12)


def _fd_check(src, u, v, t, h=1e-4):
    j = eval_jet(src, u, v, t)

    def f(a, b, c):
        return float(evaluate(parse(src), {"u": a, "v": b, "t": c}))

    fd = {
        "du": (f(u + h, v, t) - f(u - h, v, t)) / (2 * h),
        "dv": (f(u, v + h, t) - f(u, v - h, t)) / (2 * h),
        "dt": (f(u, v, t + h) - f(u, v, t - h)) / (2 * h),
        "duu": (f(u + h, v, t) - 2 * f(u, v, t) + f(u - h, v, t)) / h**2,
        "dvv": (f(u, v + h, t) - 2 * f(u, v, t) + f(u, v - h, t)) / h**2,
        "duv": (f(u + h, v + h, t) - f(u + h, v - h, t) - f(u - h, v + h, t) + f(u - h, v - h, t)) / (4 * h * h),
    }
    scale = 1 + abs(float(j.value))
    for k, val in fd.items():
        assert abs(float(getattr(j, k)) - val) <= 1e-6 * scale, (src, k)


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_jet_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    src = random_program(rng, 3)
    u, v, t = rng.uniform(-1, 1, 3)
    _fd_check(src, u, v, t)


@settings(max_examples=400, deadline=None)
@given(text=st.text(max_size=40))
def test_parser_never_crashes_on_unicode(text):
    try:
        parse(text)
    except ExprError as e:
        assert e.line >= 1 and e.col >= 1


@settings(max_examples=400, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_parser_fuzz_tokens(seed):
    text = random_text(np.random.default_rng(seed), 30)
    try:
        p = parse(text)
    except ExprError as e:
        assert e.line >= 1 and e.col >= 1
        return
    try:
        evaluate(p, {"u": 0.5, "v": 0.5, "t": 0.5})
    except (DomainError, OverflowError):
        pass


def test_deep_nesting_rejected_cleanly():
    with pytest.raises(ExprSyntaxError):
        parse("(" * 5000 + "u" + ")" * 5000)
