"""Seeded random AST generation for round-trip and property tests.

Everything produced here is printable and re-parseable: attribute
identifiers come from a fixed declared pool, variables only occur under
an input binder, and the name pools are disjoint so resolution is
unambiguous.
"""

from __future__ import annotations

import random

from abcwb.syntax import (
    And,
    Arith,
    Attr,
    AttributeEnv,
    Aware,
    Bang,
    Bool,
    Cmp,
    Comp,
    FF_,
    In,
    Int,
    Lit,
    Name,
    NIL,
    Not,
    Nu,
    Or,
    Out,
    Par,
    Rand,
    Sum,
    SysPar,
    ThisAttr,
    TT_,
    TupleV,
    Upd,
)

ATTRS = ("pa", "pb", "pc")
NAMES = ("ma", "mb", "mc")
VARS = ("vx", "vy", "vz")
NUS = ("ra", "rb")

CMP_OPS = ("=", "!=", "<", "<=", ">", ">=")
ARITH_OPS = ("+", "-", "*")


def gen_value(rng: random.Random, depth: int = 1):
    k = rng.randrange(4 if depth > 0 else 3)
    if k == 0:
        return Int(rng.randrange(-2, 4))
    if k == 1:
        return Bool(rng.random() < 0.5)
    if k == 2:
        return Name(rng.choice(NAMES))
    return TupleV(tuple(gen_value(rng, depth - 1) for _ in range(rng.randrange(3))))


def gen_expr(rng: random.Random, scope, depth: int = 2):
    choices = ["lit", "attr", "this"]
    if scope:
        choices.append("var")
    if depth > 0:
        choices += ["arith", "rand"]
    k = rng.choice(choices)
    if k == "lit":
        return Lit(gen_value(rng))
    if k == "attr":
        return Attr(rng.choice(ATTRS))
    if k == "this":
        return ThisAttr(rng.choice(ATTRS))
    if k == "var":
        return gen_var(rng, scope)
    if k == "rand":
        return Rand(rng.randrange(1, 4))
    return Arith(
        rng.choice(ARITH_OPS),
        gen_expr(rng, scope, depth - 1),
        gen_expr(rng, scope, depth - 1),
    )


def _starts_with_bool(e) -> bool:
    if isinstance(e, Lit):
        return isinstance(e.value, Bool)
    if isinstance(e, Arith):
        return _starts_with_bool(e.lhs)
    return False


def gen_var(rng, scope):
    from abcwb.syntax import Var

    return Var(rng.choice(sorted(scope)))


def gen_pred(rng: random.Random, scope, depth: int = 2):
    choices = ["tt", "ff", "cmp"]
    if depth > 0:
        choices += ["and", "or", "not"]
    k = rng.choice(choices)
    if k == "tt":
        return TT_
    if k == "ff":
        return FF_
    if k == "cmp":
        op = rng.choice(CMP_OPS)
        lhs = gen_expr(rng, scope, 1)
        if op in ("<", ">"):
            # a leading bool literal would read as the truth constant
            # followed by a delimiter, so keep these comparisons off it
            while _starts_with_bool(lhs):
                lhs = gen_expr(rng, scope, 1)
        return Cmp(op, lhs, gen_expr(rng, scope, 1))
    if k == "and":
        return And(gen_pred(rng, scope, depth - 1), gen_pred(rng, scope, depth - 1))
    if k == "or":
        return Or(gen_pred(rng, scope, depth - 1), gen_pred(rng, scope, depth - 1))
    return Not(gen_pred(rng, scope, depth - 1))


def gen_proc(rng: random.Random, scope=frozenset(), depth: int = 3):
    if depth <= 0:
        return NIL
    k = rng.randrange(7)
    if k == 0:
        return NIL
    if k == 1:
        exprs = tuple(gen_expr(rng, scope, 1) for _ in range(rng.randrange(3)))
        return Out(exprs, gen_pred(rng, scope), gen_proc(rng, scope, depth - 1))
    if k == 2:
        n = rng.randrange(1, 3)
        vars_ = tuple(rng.sample(VARS, n))
        inner = scope | set(vars_)
        return In(gen_pred(rng, inner), vars_, gen_proc(rng, inner, depth - 1))
    if k == 3:
        assigns = tuple(
            (rng.choice(ATTRS), gen_expr(rng, scope, 1))
            for _ in range(rng.randrange(1, 3))
        )
        return Upd(assigns, gen_proc(rng, scope, depth - 1))
    if k == 4:
        return Aware(gen_pred(rng, scope), gen_proc(rng, scope, depth - 1))
    if k == 5:
        return Sum(gen_proc(rng, scope, depth - 1), gen_proc(rng, scope, depth - 1))
    return Par(gen_proc(rng, scope, depth - 1), gen_proc(rng, scope, depth - 1))


def gen_env(rng: random.Random):
    n = rng.randrange(3)
    return AttributeEnv.of({rng.choice(ATTRS): gen_value(rng) for _ in range(n)})


def gen_system(rng: random.Random, depth: int = 2):
    if depth <= 0 or rng.random() < 0.4:
        return Comp(gen_env(rng), gen_proc(rng))
    k = rng.randrange(3)
    if k == 0:
        return SysPar(gen_system(rng, depth - 1), gen_system(rng, depth - 1))
    if k == 1:
        return Bang(gen_system(rng, depth - 1))
    return Nu(rng.choice(NUS), gen_system(rng, depth - 1))
