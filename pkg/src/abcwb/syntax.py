"""Abstract syntax for the attribute-based broadcast calculus.

Components carry an attribute environment and a process; processes
communicate by broadcast filtered through predicates over attributes.
All nodes are immutable (frozen dataclasses) and safe to share.

A single namespace of *names* is used throughout: a name can occur as a
value atom (``Name``), as an expression placeholder awaiting substitution
(``Var``), as an input binder, or as a restriction binder.  Identifiers
matching ``_n<k>``, ``_v<k>``, ``_f<k>`` and ``_w<k>`` are reserved for
internal canonical/fresh names and rejected by the parser.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Union


RESERVED_NAME = re.compile(r"_[nvfw]\d+$")


# ---------------------------------------------------------------------------
# Values


class Value:
    """Base class for message and attribute values."""

    __slots__ = ()


@dataclass(frozen=True)
class Name(Value):
    atom: str

    def __str__(self) -> str:
        return f"'{self.atom}'"


@dataclass(frozen=True)
class Int(Value):
    n: int

    def __str__(self) -> str:
        return str(self.n)


@dataclass(frozen=True)
class Bool(Value):
    b: bool

    def __str__(self) -> str:
        return "tt" if self.b else "ff"


@dataclass(frozen=True)
class TupleV(Value):
    items: tuple[Value, ...]

    def __str__(self) -> str:
        return "<" + ", ".join(str(v) for v in self.items) + ">"


TRUE = Bool(True)
FALSE = Bool(False)


def value_sort_key(v: Value):
    """Deterministic total order over values, used for enumeration."""
    if isinstance(v, Bool):
        return (0, v.b)
    if isinstance(v, Int):
        return (1, v.n)
    if isinstance(v, Name):
        return (2, v.atom)
    if isinstance(v, TupleV):
        return (3, tuple(value_sort_key(i) for i in v.items))
    raise TypeError(v)


def names_in_value(v: Value) -> frozenset[str]:
    if isinstance(v, Name):
        return frozenset((v.atom,))
    if isinstance(v, TupleV):
        out: frozenset[str] = frozenset()
        for i in v.items:
            out |= names_in_value(i)
        return out
    return frozenset()


# ---------------------------------------------------------------------------
# Expressions


class Expression:
    __slots__ = ()


@dataclass(frozen=True)
class Lit(Expression):
    value: Value


@dataclass(frozen=True)
class Var(Expression):
    name: str


@dataclass(frozen=True)
class Attr(Expression):
    attr: str


@dataclass(frozen=True)
class ThisAttr(Expression):
    attr: str


@dataclass(frozen=True)
class Arith(Expression):
    op: str  # one of + - *
    lhs: Expression
    rhs: Expression


@dataclass(frozen=True)
class Rand(Expression):
    bound: int  # uniform draw from [0, bound)


# ---------------------------------------------------------------------------
# Predicates


class Predicate:
    __slots__ = ()


@dataclass(frozen=True)
class TT(Predicate):
    pass


@dataclass(frozen=True)
class FF(Predicate):
    pass


@dataclass(frozen=True)
class Cmp(Predicate):
    op: str  # one of = != < <= > >=
    lhs: Expression
    rhs: Expression


@dataclass(frozen=True)
class And(Predicate):
    lhs: Predicate
    rhs: Predicate


@dataclass(frozen=True)
class Or(Predicate):
    lhs: Predicate
    rhs: Predicate


@dataclass(frozen=True)
class Not(Predicate):
    inner: Predicate


TT_ = TT()
FF_ = FF()


# ---------------------------------------------------------------------------
# Processes


class Process:
    __slots__ = ()


@dataclass(frozen=True)
class Nil(Process):
    pass


@dataclass(frozen=True)
class Out(Process):
    exprs: tuple[Expression, ...]
    pred: Predicate
    cont: Process


@dataclass(frozen=True)
class In(Process):
    pred: Predicate
    vars: tuple[str, ...]
    cont: Process


@dataclass(frozen=True)
class Upd(Process):
    assigns: tuple[tuple[str, Expression], ...]
    cont: Process


@dataclass(frozen=True)
class Aware(Process):
    pred: Predicate
    cont: Process


@dataclass(frozen=True)
class Sum(Process):
    left: Process
    right: Process


@dataclass(frozen=True)
class Par(Process):
    left: Process
    right: Process


@dataclass(frozen=True)
class Call(Process):
    name: str
    args: tuple[Expression, ...] = ()


NIL = Nil()


# ---------------------------------------------------------------------------
# Attribute environments

UNDEFINED = object()  # distinguishable "unbound attribute" outcome


@dataclass(frozen=True)
class AttributeEnv:
    """Partial map from attribute identifiers to values (sorted, immutable)."""

    bindings: tuple[tuple[str, Value], ...] = ()

    @staticmethod
    def of(mapping: Mapping[str, Value] | Iterable[tuple[str, Value]] = ()) -> "AttributeEnv":
        items = dict(mapping)
        return AttributeEnv(tuple(sorted(items.items())))

    def get(self, attr: str):
        for a, v in self.bindings:
            if a == attr:
                return v
        return UNDEFINED

    def updated(self, assigns: Iterable[tuple[str, Value]]) -> "AttributeEnv":
        items = dict(self.bindings)
        for a, v in assigns:  # left-to-right, last write wins
            items[a] = v
        return AttributeEnv(tuple(sorted(items.items())))

    def keys(self) -> tuple[str, ...]:
        return tuple(a for a, _ in self.bindings)

    def __str__(self) -> str:
        return "{" + ", ".join(f"{a}:={v}" for a, v in self.bindings) + "}"


# ---------------------------------------------------------------------------
# Systems


class System:
    __slots__ = ()


@dataclass(frozen=True)
class Comp(System):
    env: AttributeEnv
    proc: Process


@dataclass(frozen=True)
class SysPar(System):
    left: System
    right: System


@dataclass(frozen=True)
class Bang(System):
    inner: System
    fuel: Optional[int] = None  # remaining unfoldings; None = not yet bounded


@dataclass(frozen=True)
class Nu(System):
    name: str
    inner: System


Definitions = dict[str, tuple[tuple[str, ...], Process]]


@dataclass
class Program:
    defs: Definitions
    main: System
    attrs: frozenset[str] = frozenset()


Node = Union[Value, Expression, Predicate, Process, System]


# ---------------------------------------------------------------------------
# Name bookkeeping


def free_names(node: Node) -> frozenset[str]:
    """Free names of a node.

    Attribute identifiers are not names; attribute *values* in an
    environment are free unless captured by a restriction.
    """
    if isinstance(node, Value):
        return names_in_value(node)
    if isinstance(node, Lit):
        return names_in_value(node.value)
    if isinstance(node, Var):
        return frozenset((node.name,))
    if isinstance(node, (Attr, ThisAttr, Rand)):
        return frozenset()
    if isinstance(node, Arith):
        return free_names(node.lhs) | free_names(node.rhs)
    if isinstance(node, (TT, FF)):
        return frozenset()
    if isinstance(node, Cmp):
        return free_names(node.lhs) | free_names(node.rhs)
    if isinstance(node, (And, Or)):
        return free_names(node.lhs) | free_names(node.rhs)
    if isinstance(node, Not):
        return free_names(node.inner)
    if isinstance(node, Nil):
        return frozenset()
    if isinstance(node, Out):
        out = free_names(node.pred) | free_names(node.cont)
        for e in node.exprs:
            out |= free_names(e)
        return out
    if isinstance(node, In):
        return (free_names(node.pred) | free_names(node.cont)) - frozenset(node.vars)
    if isinstance(node, Upd):
        out = free_names(node.cont)
        for _, e in node.assigns:
            out |= free_names(e)
        return out
    if isinstance(node, Aware):
        return free_names(node.pred) | free_names(node.cont)
    if isinstance(node, (Sum, Par)):
        return free_names(node.left) | free_names(node.right)
    if isinstance(node, Call):
        out: frozenset[str] = frozenset()
        for e in node.args:
            out |= free_names(e)
        return out
    if isinstance(node, Comp):
        out = free_names(node.proc)
        for _, v in node.env.bindings:
            out |= names_in_value(v)
        return out
    if isinstance(node, SysPar):
        return free_names(node.left) | free_names(node.right)
    if isinstance(node, Bang):
        return free_names(node.inner)
    if isinstance(node, Nu):
        return free_names(node.inner) - frozenset((node.name,))
    raise TypeError(node)


def bound_names(node: Node) -> frozenset[str]:
    if isinstance(node, (Value, Expression)):
        return frozenset()
    if isinstance(node, (TT, FF, Cmp)):
        return frozenset()
    if isinstance(node, (And, Or)):
        return bound_names(node.lhs) | bound_names(node.rhs)
    if isinstance(node, Not):
        return bound_names(node.inner)
    if isinstance(node, Nil):
        return frozenset()
    if isinstance(node, Out):
        return bound_names(node.cont)
    if isinstance(node, In):
        return frozenset(node.vars) | bound_names(node.cont)
    if isinstance(node, (Upd, Aware)):
        return bound_names(node.cont)
    if isinstance(node, (Sum, Par)):
        return bound_names(node.left) | bound_names(node.right)
    if isinstance(node, Call):
        return frozenset()
    if isinstance(node, Comp):
        return bound_names(node.proc)
    if isinstance(node, SysPar):
        return bound_names(node.left) | bound_names(node.right)
    if isinstance(node, Bang):
        return bound_names(node.inner)
    if isinstance(node, Nu):
        return frozenset((node.name,)) | bound_names(node.inner)
    raise TypeError(node)


class _Gensym:
    def __init__(self, prefix: str = "_f"):
        self.prefix = prefix
        self.counter = 0

    def fresh(self, avoid: frozenset[str]) -> str:
        while True:
            cand = f"{self.prefix}{self.counter}"
            self.counter += 1
            if cand not in avoid:
                return cand


_GENSYM = _Gensym()


def gensym(avoid: frozenset[str] = frozenset()) -> str:
    return _GENSYM.fresh(avoid)


# ---------------------------------------------------------------------------
# Substitution and renaming


def rename_value(v: Value, old: str, new: str) -> Value:
    if isinstance(v, Name):
        return Name(new) if v.atom == old else v
    if isinstance(v, TupleV):
        return TupleV(tuple(rename_value(i, old, new) for i in v.items))
    return v


def rename_free(node, old: str, new: str):
    """Rename every free occurrence of name ``old`` (atoms and vars) to ``new``."""
    if isinstance(node, Value):
        return rename_value(node, old, new)
    if isinstance(node, Lit):
        return Lit(rename_value(node.value, old, new))
    if isinstance(node, Var):
        return Var(new) if node.name == old else node
    if isinstance(node, (Attr, ThisAttr, Rand)):
        return node
    if isinstance(node, Arith):
        return Arith(node.op, rename_free(node.lhs, old, new), rename_free(node.rhs, old, new))
    if isinstance(node, (TT, FF)):
        return node
    if isinstance(node, Cmp):
        return Cmp(node.op, rename_free(node.lhs, old, new), rename_free(node.rhs, old, new))
    if isinstance(node, And):
        return And(rename_free(node.lhs, old, new), rename_free(node.rhs, old, new))
    if isinstance(node, Or):
        return Or(rename_free(node.lhs, old, new), rename_free(node.rhs, old, new))
    if isinstance(node, Not):
        return Not(rename_free(node.inner, old, new))
    if isinstance(node, Nil):
        return node
    if isinstance(node, Out):
        return Out(
            tuple(rename_free(e, old, new) for e in node.exprs),
            rename_free(node.pred, old, new),
            rename_free(node.cont, old, new),
        )
    if isinstance(node, In):
        if old in node.vars:
            return node  # shadowed
        if new in node.vars:  # would capture: alpha-rename the binder away first
            node = _alpha_in(node, new, gensym(free_names(node) | {old, new}))
        return In(rename_free(node.pred, old, new), node.vars, rename_free(node.cont, old, new))
    if isinstance(node, Upd):
        return Upd(
            tuple((a, rename_free(e, old, new)) for a, e in node.assigns),
            rename_free(node.cont, old, new),
        )
    if isinstance(node, Aware):
        return Aware(rename_free(node.pred, old, new), rename_free(node.cont, old, new))
    if isinstance(node, Sum):
        return Sum(rename_free(node.left, old, new), rename_free(node.right, old, new))
    if isinstance(node, Par):
        return Par(rename_free(node.left, old, new), rename_free(node.right, old, new))
    if isinstance(node, Call):
        return Call(node.name, tuple(rename_free(e, old, new) for e in node.args))
    if isinstance(node, Comp):
        env = AttributeEnv(tuple((a, rename_value(v, old, new)) for a, v in node.env.bindings))
        return Comp(env, rename_free(node.proc, old, new))
    if isinstance(node, SysPar):
        return SysPar(rename_free(node.left, old, new), rename_free(node.right, old, new))
    if isinstance(node, Bang):
        return Bang(rename_free(node.inner, old, new), node.fuel)
    if isinstance(node, Nu):
        if node.name == old:
            return node  # shadowed
        if node.name == new:
            fresh = gensym(free_names(node.inner) | {old, new})
            node = Nu(fresh, rename_free(node.inner, node.name, fresh))
        return Nu(node.name, rename_free(node.inner, old, new))
    raise TypeError(node)


def _alpha_in(node: In, var: str, fresh: str) -> In:
    """Alpha-convert one binder variable of an input prefix."""
    idx = node.vars.index(var)
    new_vars = node.vars[:idx] + (fresh,) + node.vars[idx + 1 :]
    return In(
        rename_free(node.pred, var, fresh),
        new_vars,
        rename_free(node.cont, var, fresh),
    )


def alpha_rename(sys: System, old: str, fresh: str) -> System:
    """Alpha-convert the outermost restriction binding ``old`` to ``fresh``.

    ``fresh`` must not occur in ``sys``.
    """
    if isinstance(sys, Nu) and sys.name == old:
        return Nu(fresh, rename_free(sys.inner, old, fresh))
    raise ValueError(f"no outermost restriction on {old!r}")


def substitute(node, subst: Mapping[str, Value]):
    """Capture-avoiding substitution of values for free variable occurrences."""
    if not subst:
        return node
    if isinstance(node, Lit):
        return node
    if isinstance(node, Var):
        v = subst.get(node.name)
        return Lit(v) if v is not None else node
    if isinstance(node, (Attr, ThisAttr, Rand)):
        return node
    if isinstance(node, Arith):
        return Arith(node.op, substitute(node.lhs, subst), substitute(node.rhs, subst))
    if isinstance(node, (TT, FF)):
        return node
    if isinstance(node, Cmp):
        return Cmp(node.op, substitute(node.lhs, subst), substitute(node.rhs, subst))
    if isinstance(node, And):
        return And(substitute(node.lhs, subst), substitute(node.rhs, subst))
    if isinstance(node, Or):
        return Or(substitute(node.lhs, subst), substitute(node.rhs, subst))
    if isinstance(node, Not):
        return Not(substitute(node.inner, subst))
    if isinstance(node, Nil):
        return node
    if isinstance(node, Out):
        return Out(
            tuple(substitute(e, subst) for e in node.exprs),
            substitute(node.pred, subst),
            substitute(node.cont, subst),
        )
    if isinstance(node, In):
        inner = {k: v for k, v in subst.items() if k not in node.vars}
        if not inner:
            return node
        incoming = frozenset().union(*(names_in_value(v) for v in inner.values()))
        for var in node.vars:
            if var in incoming:
                node = _alpha_in(node, var, gensym(free_names(node) | incoming | set(inner)))
        return In(substitute(node.pred, inner), node.vars, substitute(node.cont, inner))
    if isinstance(node, Upd):
        return Upd(
            tuple((a, substitute(e, subst)) for a, e in node.assigns),
            substitute(node.cont, subst),
        )
    if isinstance(node, Aware):
        return Aware(substitute(node.pred, subst), substitute(node.cont, subst))
    if isinstance(node, Sum):
        return Sum(substitute(node.left, subst), substitute(node.right, subst))
    if isinstance(node, Par):
        return Par(substitute(node.left, subst), substitute(node.right, subst))
    if isinstance(node, Call):
        return Call(node.name, tuple(substitute(e, subst) for e in node.args))
    raise TypeError(node)


# ---------------------------------------------------------------------------
# Pretty printing


_CMP_OPS = {"=", "!=", "<", "<=", ">", ">="}


def pretty_expr(e: Expression) -> str:
    if isinstance(e, Lit):
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Attr):
        return e.attr
    if isinstance(e, ThisAttr):
        return f"this.{e.attr}"
    if isinstance(e, Arith):
        lhs = pretty_expr(e.lhs)
        rhs = pretty_expr(e.rhs)
        if isinstance(e.lhs, Arith):
            lhs = f"({lhs})"
        if isinstance(e.rhs, Arith):
            rhs = f"({rhs})"
        return f"{lhs} {e.op} {rhs}"
    if isinstance(e, Rand):
        return f"rand({e.bound})"
    raise TypeError(e)


def pretty_pred(p: Predicate) -> str:
    if isinstance(p, TT):
        return "tt"
    if isinstance(p, FF):
        return "ff"
    if isinstance(p, Cmp):
        return f"{pretty_expr(p.lhs)} {p.op} {pretty_expr(p.rhs)}"
    if isinstance(p, And):
        return f"({pretty_pred(p.lhs)}) && ({pretty_pred(p.rhs)})"
    if isinstance(p, Or):
        return f"({pretty_pred(p.lhs)}) || ({pretty_pred(p.rhs)})"
    if isinstance(p, Not):
        return f"!({pretty_pred(p.inner)})"
    raise TypeError(p)


def pretty_proc(p: Process) -> str:
    if isinstance(p, Nil):
        return "0"
    if isinstance(p, Out):
        es = ", ".join(pretty_expr(e) for e in p.exprs)
        return f"({es})@({pretty_pred(p.pred)}).{_proc_atom(p.cont)}"
    if isinstance(p, In):
        vs = ", ".join(p.vars)
        return f"({pretty_pred(p.pred)})({vs}).{_proc_atom(p.cont)}"
    if isinstance(p, Upd):
        asg = ", ".join(f"{a} := {pretty_expr(e)}" for a, e in p.assigns)
        return f"[{asg}]{_proc_atom(p.cont)}"
    if isinstance(p, Aware):
        return f"<{pretty_pred(p.pred)}>{_proc_atom(p.cont)}"
    if isinstance(p, Sum):
        return f"{_sum_operand(p.left)} + {_sum_operand(p.right)}"
    if isinstance(p, Par):
        return f"{_par_operand(p.left)} | {_par_operand(p.right)}"
    if isinstance(p, Call):
        if p.args:
            return f"{p.name}({', '.join(pretty_expr(e) for e in p.args)})"
        return f"{p.name}()"
    raise TypeError(p)


def _proc_atom(p: Process) -> str:
    if isinstance(p, (Sum, Par)):
        return f"({pretty_proc(p)})"
    return pretty_proc(p)


def _sum_operand(p: Process) -> str:
    if isinstance(p, (Sum, Par)):
        return f"({pretty_proc(p)})"
    return pretty_proc(p)


def _par_operand(p: Process) -> str:
    if isinstance(p, (Sum, Par)):
        return f"({pretty_proc(p)})"
    return pretty_proc(p)


def pretty_system(s: System) -> str:
    if isinstance(s, Comp):
        return f"{s.env}: {_proc_atom(s.proc)}"
    if isinstance(s, SysPar):
        return f"{_sys_operand(s.left)} || {_sys_operand(s.right)}"
    if isinstance(s, Bang):
        return f"!({pretty_system(s.inner)})"
    if isinstance(s, Nu):
        return f"nu {s.name} ({pretty_system(s.inner)})"
    raise TypeError(s)


def _sys_operand(s: System) -> str:
    if isinstance(s, SysPar):
        return f"({pretty_system(s)})"
    return pretty_system(s)


def collect_attrs(node) -> frozenset[str]:
    """All attribute identifiers mentioned anywhere in a node."""
    if isinstance(node, (Value, TT, FF, Nil, Rand, Var, Lit)):
        return frozenset()
    if isinstance(node, (Attr, ThisAttr)):
        return frozenset((node.attr,))
    if isinstance(node, (Arith, Cmp, And, Or)):
        return collect_attrs(node.lhs) | collect_attrs(node.rhs)
    if isinstance(node, Not):
        return collect_attrs(node.inner)
    if isinstance(node, Out):
        out = collect_attrs(node.pred) | collect_attrs(node.cont)
        for e in node.exprs:
            out |= collect_attrs(e)
        return out
    if isinstance(node, In):
        return collect_attrs(node.pred) | collect_attrs(node.cont)
    if isinstance(node, Upd):
        out = collect_attrs(node.cont)
        for a, e in node.assigns:
            out |= frozenset((a,)) | collect_attrs(e)
        return out
    if isinstance(node, Aware):
        return collect_attrs(node.pred) | collect_attrs(node.cont)
    if isinstance(node, (Sum, Par)):
        return collect_attrs(node.left) | collect_attrs(node.right)
    if isinstance(node, Call):
        out = frozenset()
        for e in node.args:
            out |= collect_attrs(e)
        return out
    if isinstance(node, Comp):
        return frozenset(node.env.keys()) | collect_attrs(node.proc)
    if isinstance(node, SysPar):
        return collect_attrs(node.left) | collect_attrs(node.right)
    if isinstance(node, (Bang, Nu)):
        return collect_attrs(node.inner)
    raise TypeError(node)


def collect_values(node) -> frozenset[Value]:
    """All literal values mentioned anywhere in a node (tuples flattened in)."""
    out: set[Value] = set()

    def add(v: Value):
        out.add(v)
        if isinstance(v, TupleV):
            for i in v.items:
                add(i)

    def walk(n):
        if isinstance(n, Value):
            add(n)
        elif isinstance(n, Lit):
            add(n.value)
        elif isinstance(n, (Var, Attr, ThisAttr, TT, FF, Nil)):
            pass
        elif isinstance(n, (Arith, Cmp, And, Or)):
            walk(n.lhs)
            walk(n.rhs)
        elif isinstance(n, Not):
            walk(n.inner)
        elif isinstance(n, Rand):
            for k in range(n.bound):
                out.add(Int(k))
        elif isinstance(n, Out):
            for e in n.exprs:
                walk(e)
            walk(n.pred)
            walk(n.cont)
        elif isinstance(n, In):
            walk(n.pred)
            walk(n.cont)
        elif isinstance(n, Upd):
            for _, e in n.assigns:
                walk(e)
            walk(n.cont)
        elif isinstance(n, Aware):
            walk(n.pred)
            walk(n.cont)
        elif isinstance(n, (Sum, Par)):
            walk(n.left)
            walk(n.right)
        elif isinstance(n, Call):
            for e in n.args:
                walk(e)
        elif isinstance(n, Comp):
            for _, v in n.env.bindings:
                add(v)
            walk(n.proc)
        elif isinstance(n, SysPar):
            walk(n.left)
            walk(n.right)
        elif isinstance(n, (Bang, Nu)):
            walk(n.inner)

    walk(node)
    return frozenset(out)


# ---------------------------------------------------------------------------
# Alpha-canonicalization


def canonicalize(sys: System) -> System:
    """Rename all binders to canonical reserved names in traversal order.

    Two systems are alpha-equivalent iff their canonical forms are equal.
    Restriction binders become ``_n<k>``, input binders ``_v<k>``; the
    counters are shared across the whole term so numbering is positional.
    """
    counter = {"n": 0, "v": 0}

    def canon_proc(p: Process) -> Process:
        if isinstance(p, Nil):
            return p
        if isinstance(p, Out):
            return Out(p.exprs, p.pred, canon_proc(p.cont))
        if isinstance(p, In):
            for var in p.vars:
                fresh = _pick(counter, "v", free_names(p) - {var})
                if var != fresh:
                    p = _alpha_in(p, var, fresh)
            return In(p.pred, p.vars, canon_proc(p.cont))
        if isinstance(p, Upd):
            return Upd(p.assigns, canon_proc(p.cont))
        if isinstance(p, Aware):
            return Aware(p.pred, canon_proc(p.cont))
        if isinstance(p, Sum):
            return Sum(canon_proc(p.left), canon_proc(p.right))
        if isinstance(p, Par):
            return Par(canon_proc(p.left), canon_proc(p.right))
        if isinstance(p, Call):
            return p
        raise TypeError(p)

    def canon_sys(s: System) -> System:
        if isinstance(s, Comp):
            return Comp(s.env, canon_proc(s.proc))
        if isinstance(s, SysPar):
            return SysPar(canon_sys(s.left), canon_sys(s.right))
        if isinstance(s, Bang):
            return Bang(canon_sys(s.inner), s.fuel)
        if isinstance(s, Nu):
            fresh = _pick(counter, "n", free_names(s.inner) - {s.name})
            inner = s.inner if s.name == fresh else rename_free(s.inner, s.name, fresh)
            return Nu(fresh, canon_sys(inner))
        raise TypeError(s)

    def _pick(counter, kind: str, avoid: frozenset[str]) -> str:
        # skip canonical names that already occur free in the subterm; the
        # free-name set is alpha-invariant, so the choice is too
        while True:
            cand = f"_{kind}{counter[kind]}"
            counter[kind] += 1
            if cand not in avoid:
                return cand

    return canon_sys(sys)


def alpha_equal(s1: System, s2: System) -> bool:
    return canonicalize(s1) == canonicalize(s2)
