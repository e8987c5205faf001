"""Concrete syntax and parser for `.abc` files.

Layout of a file::

    # comment
    attrs: role, id, state
    def Explorer() = ...
    system:
      {role := 'explorer', id := 1}: Explorer() || ...

Process syntax: output ``(E, ...)@(Pi).P``, input ``(Pi)(x, ...).P``,
update ``[a := E, ...]P``, awareness ``<Pi>P``, choice ``+``, process
parallel ``|``.  System syntax: ``{a := v, ...}: P``, ``||``, ``!C``,
``nu x C``.  Name literals are quoted (``'qry'``); a bare identifier in an
expression is a bound variable if one is in scope, else a declared
attribute, else an error.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .syntax import (
    And,
    Arith,
    Attr,
    AttributeEnv,
    Aware,
    Bang,
    Call,
    Cmp,
    Comp,
    Expression,
    FALSE,
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
    Predicate,
    Process,
    Program,
    Rand,
    RESERVED_NAME,
    Sum,
    SysPar,
    System,
    ThisAttr,
    TRUE,
    TT_,
    TupleV,
    Upd,
    Value,
    Var,
    free_names,
)


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int, expected=()):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col
        self.expected = tuple(expected)


class ResolveError(Exception):
    pass


@dataclass
class Token:
    kind: str  # ident, int, name, punct, eof
    text: str
    line: int
    col: int


_PUNCT = [
    "||", "&&", ":=", "!=", "<=", ">=", "(", ")", "{", "}", "[", "]",
    "<", ">", ",", ".", ":", "@", "+", "-", "*", "|", "!", "=",
]

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_INT = re.compile(r"\d+")


def tokenize(text: str) -> list[Token]:
    toks: list[Token] = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c == "'":
            j = text.find("'", i + 1)
            if j < 0:
                raise ParseError("unterminated name literal", line, col)
            toks.append(Token("name", text[i + 1 : j], line, col))
            col += j - i + 1
            i = j + 1
            continue
        m = _INT.match(text, i)
        if m:
            toks.append(Token("int", m.group(), line, col))
            col += len(m.group())
            i = m.end()
            continue
        m = _IDENT.match(text, i)
        if m:
            toks.append(Token("ident", m.group(), line, col))
            col += len(m.group())
            i = m.end()
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                toks.append(Token(p, p, line, col))
                col += len(p)
                i += len(p)
                break
        else:
            raise ParseError(f"unexpected character {c!r}", line, col)
    toks.append(Token("eof", "", line, col))
    return toks


class _Parser:
    """Recursive-descent parser over the token list.

    Expressions resolve identifiers immediately: the parser threads a
    stack of bound variables and the declared attribute set.
    """

    def __init__(self, toks: list[Token], attrs: set[str]):
        self.toks = toks
        self.pos = 0
        self.attrs = attrs
        self.scope: list[str] = []  # input-bound variables
        self.nuscope: list[str] = []  # restriction-bound names

    # -- token plumbing ----------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, kind: str) -> Token:
        t = self.peek()
        if t.kind != kind:
            raise ParseError(f"expected {kind!r}, found {t.text!r}", t.line, t.col, (kind,))
        return self.next()

    def accept(self, kind: str) -> bool:
        if self.peek().kind == kind:
            self.next()
            return True
        return False

    def _matching_paren(self, start: int) -> int:
        """Index of the token after the `)` matching the `(` at ``start``."""
        depth = 0
        i = start
        while i < len(self.toks):
            k = self.toks[i].kind
            if k == "(":
                depth += 1
            elif k == ")":
                depth -= 1
                if depth == 0:
                    return i + 1
            elif k == "eof":
                break
            i += 1
        t = self.toks[start]
        raise ParseError("unbalanced parenthesis", t.line, t.col)

    # -- values and expressions --------------------------------------------

    def ident_name(self) -> str:
        t = self.expect("ident")
        if RESERVED_NAME.match(t.text):
            raise ParseError(f"identifier {t.text!r} is reserved", t.line, t.col)
        return t.text

    def value(self) -> Value:
        t = self.peek()
        if t.kind == "name":
            if RESERVED_NAME.match(t.text):
                raise ParseError(f"name {t.text!r} is reserved", t.line, t.col)
            return Name(self.next().text)
        if t.kind == "int":
            return Int(int(self.next().text))
        if t.kind == "-" and self.peek(1).kind == "int":
            self.next()
            return Int(-int(self.next().text))
        if t.kind == "ident" and t.text in ("tt", "ff"):
            self.next()
            return TRUE if t.text == "tt" else FALSE
        if t.kind == "<":
            self.next()
            items = []
            if self.peek().kind != ">":
                items.append(self.value())
                while self.accept(","):
                    items.append(self.value())
            self.expect(">")
            return TupleV(tuple(items))
        raise ParseError(f"expected a value, found {t.text!r}", t.line, t.col)

    def expr(self) -> Expression:
        lhs = self.expr_atom()
        while self.peek().kind in ("+", "-", "*"):
            op = self.next().kind
            rhs = self.expr_atom()
            lhs = Arith(op, lhs, rhs)
        return lhs

    def expr_atom(self) -> Expression:
        t = self.peek()
        if t.kind in ("name", "int") or (t.kind == "-" and self.peek(1).kind == "int"):
            return Lit(self.value())
        if t.kind == "<":
            return Lit(self.value())
        if t.kind == "(":
            self.next()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "ident":
            if t.text in ("tt", "ff"):
                return Lit(self.value())
            if t.text == "this":
                self.next()
                self.expect(".")
                return ThisAttr(self.ident_name())
            if t.text == "rand":
                self.next()
                self.expect("(")
                b = self.expect("int")
                self.expect(")")
                return Rand(int(b.text))
            name = self.ident_name()
            if name in self.scope:
                return Var(name)
            if name in self.nuscope:
                return Lit(Name(name))
            if name in self.attrs:
                return Attr(name)
            raise ResolveError(
                f"{t.line}:{t.col}: unresolvable identifier {name!r} "
                "(neither a bound variable nor a declared attribute)"
            )
        raise ParseError(f"expected an expression, found {t.text!r}", t.line, t.col)

    # -- predicates --------------------------------------------------------

    def pred(self) -> Predicate:
        lhs = self.pred_and()
        while self.accept("||"):
            lhs = Or(lhs, self.pred_and())
        return lhs

    def pred_and(self) -> Predicate:
        lhs = self.pred_atom()
        while self.accept("&&"):
            lhs = And(lhs, self.pred_atom())
        return lhs

    def pred_atom(self) -> Predicate:
        t = self.peek()
        if t.kind == "!":
            self.next()
            return Not(self.pred_atom())
        if t.kind == "ident" and t.text in ("tt", "ff"):
            # bare tt/ff is the truth constant unless it clearly starts a
            # comparison operand; a following < or > reads as a delimiter
            # (ordering is only meaningful on integers anyway)
            if self.peek(1).kind not in ("=", "!=", "<=", ">=", "+", "-", "*"):
                self.next()
                return TT_ if t.text == "tt" else FF_
        if t.kind == "(":
            # parenthesized predicate, unless it closes into a comparison;
            # a following < or > is ambiguous and decided by the contents
            after = self.toks[self._matching_paren(self.pos)].kind
            if after in ("=", "!=", "<=", ">=", "+", "-", "*"):
                pass  # expression operand of a comparison
            elif after in ("<", ">") and not self._group_is_pred(self.pos):
                pass
            else:
                self.next()
                p = self.pred()
                self.expect(")")
                return p
        lhs = self.expr()
        op = self.peek()
        if op.kind not in ("=", "!=", "<", "<=", ">", ">="):
            raise ParseError(f"expected a comparison, found {op.text!r}", op.line, op.col)
        self.next()
        rhs = self.expr()
        return Cmp(op.kind, lhs, rhs)

    def _group_is_pred(self, start: int) -> bool:
        """Whether a parenthesized group reads as a predicate.

        Logical connectives and (in)equality settle it outright; a bare
        ``<``/``>`` counts as a comparison unless it opens or closes a
        tuple literal, which only happens in expression-start position.
        """
        end = self._matching_paren(start) - 1
        if end - start == 2:
            lone = self.toks[start + 1]
            if lone.kind == "ident" and lone.text in ("tt", "ff"):
                return True
        tuple_depth = 0
        prev = None
        for i in range(start + 1, end):
            k = self.toks[i].kind
            if k in ("&&", "||", "=", "!=", "<=", ">=", "!"):
                return True
            if k == "<":
                if prev in (None, "(", ",", "+", "-", "*", "<"):
                    tuple_depth += 1
                else:
                    return True
            elif k == ">":
                if tuple_depth > 0:
                    tuple_depth -= 1
                else:
                    return True
            prev = k
        return False

    # -- processes ---------------------------------------------------------

    def proc(self) -> Process:
        lhs = self.proc_sum()
        while self.peek().kind == "|" :
            self.next()
            lhs = Par(lhs, self.proc_sum())
        return lhs

    def proc_sum(self) -> Process:
        lhs = self.proc_prefix()
        while self.accept("+"):
            lhs = Sum(lhs, self.proc_prefix())
        return lhs

    def proc_prefix(self) -> Process:
        t = self.peek()
        if t.kind == "int" and t.text == "0":
            self.next()
            return NIL
        if t.kind == "[":
            self.next()
            assigns = [self.assign()]
            while self.accept(","):
                assigns.append(self.assign())
            self.expect("]")
            return Upd(tuple(assigns), self.proc_prefix())
        if t.kind == "<":
            self.next()
            p = self.pred()
            self.expect(">")
            return Aware(p, self.proc_prefix())
        if t.kind == "(":
            after = self._matching_paren(self.pos)
            nxt = self.toks[after].kind
            if nxt == "@":
                # output prefix (E, ...)@(Pi).P
                self.next()
                exprs = []
                if self.peek().kind != ")":
                    exprs.append(self.expr())
                    while self.accept(","):
                        exprs.append(self.expr())
                self.expect(")")
                self.expect("@")
                self.expect("(")
                pi = self.pred()
                self.expect(")")
                self.expect(".")
                return Out(tuple(exprs), pi, self.proc_prefix())
            if nxt == "(":
                # input prefix (Pi)(x, ...).P
                self.next()
                pi_start = self.pos
                # bind the variables before resolving the predicate
                depth = 1
                while depth:
                    k = self.toks[self.pos].kind
                    if k == "(":
                        depth += 1
                    elif k == ")":
                        depth -= 1
                    self.pos += 1
                self.expect("(")
                vars_: list[str] = []
                if self.peek().kind != ")":
                    vars_.append(self.ident_name())
                    while self.accept(","):
                        vars_.append(self.ident_name())
                self.expect(")")
                if len(set(vars_)) != len(vars_):
                    raise ResolveError(
                        f"{t.line}:{t.col}: input variables must be pairwise distinct"
                    )
                after_vars = self.pos
                self.pos = pi_start
                self.scope.extend(vars_)
                pi = self.pred()
                self.expect(")")
                self.pos = after_vars
                self.expect(".")
                cont = self.proc_prefix()
                del self.scope[len(self.scope) - len(vars_) :]
                return In(pi, tuple(vars_), cont)
            # parenthesized process
            self.next()
            p = self.proc()
            self.expect(")")
            return p
        if t.kind == "ident":
            name = self.ident_name()
            args: list[Expression] = []
            if self.accept("("):
                if self.peek().kind != ")":
                    args.append(self.expr())
                    while self.accept(","):
                        args.append(self.expr())
                self.expect(")")
            return Call(name, tuple(args))
        raise ParseError(f"expected a process, found {t.text!r}", t.line, t.col)

    def assign(self) -> tuple[str, Expression]:
        if self.peek().kind == "ident" and self.peek().text == "this":
            self.next()
            self.expect(".")
        a = self.ident_name()
        self.attrs.add(a)  # an update target is implicitly a declared attribute
        self.expect(":=")
        return (a, self.expr())

    # -- systems -----------------------------------------------------------

    def system(self) -> System:
        lhs = self.system_atom()
        while self.accept("||"):
            lhs = SysPar(lhs, self.system_atom())
        return lhs

    def system_atom(self) -> System:
        t = self.peek()
        if t.kind == "!":
            self.next()
            return Bang(self.system_atom())
        if t.kind == "ident" and t.text == "nu":
            self.next()
            name = self.ident_name()
            self.nuscope.append(name)
            inner = self.system_atom()
            self.nuscope.pop()
            return Nu(name, inner)
        if t.kind == "{":
            self.next()
            bindings: list[tuple[str, Value]] = []
            if self.peek().kind != "}":
                bindings.append(self.env_binding())
                while self.accept(","):
                    bindings.append(self.env_binding())
            self.expect("}")
            self.expect(":")
            for a, _ in bindings:
                self.attrs.add(a)
            return Comp(AttributeEnv.of(bindings), self.proc_prefix())
        if t.kind == "(":
            self.next()
            s = self.system()
            self.expect(")")
            return s
        raise ParseError(f"expected a system, found {t.text!r}", t.line, t.col)

    def env_binding(self) -> tuple[str, Value]:
        a = self.ident_name()
        self.expect(":=")
        return (a, self.value())


def _collect_declared_attrs(toks: list[Token]) -> set[str]:
    """Pre-scan for the attrs: header, environment keys and update targets."""
    attrs: set[str] = set()
    i = 0
    while toks[i].kind != "eof":
        t = toks[i]
        if t.kind == "ident" and t.text == "attrs" and toks[i + 1].kind == ":":
            i += 2
            while toks[i].kind == "ident":
                attrs.add(toks[i].text)
                i += 1
                if toks[i].kind == ",":
                    i += 1
                else:
                    break
            continue
        if t.kind in ("{",):
            j = i + 1
            while toks[j].kind not in ("}", "eof"):
                if toks[j].kind == "ident" and toks[j + 1].kind == ":=":
                    attrs.add(toks[j].text)
                j += 1
        if t.kind == "ident" and toks[i + 1].kind == ":=":
            # update target `[a := E]` or `this.a := E`
            attrs.add(t.text)
        i += 1
    return attrs


def parse_program(text: str) -> Program:
    """Parse a full `.abc` file into a resolved program."""
    toks = tokenize(text)
    attrs = _collect_declared_attrs(toks)
    p = _Parser(toks, attrs)

    # skip the attrs: header (already collected)
    if p.peek().kind == "ident" and p.peek().text == "attrs" and p.peek(1).kind == ":":
        p.next()
        p.next()
        p.ident_name()
        while p.accept(","):
            p.ident_name()

    defs: dict[str, tuple[tuple[str, ...], Process]] = {}
    while p.peek().kind == "ident" and p.peek().text == "def":
        p.next()
        name = p.ident_name()
        params: list[str] = []
        p.expect("(")
        if p.peek().kind != ")":
            params.append(p.ident_name())
            while p.accept(","):
                params.append(p.ident_name())
        p.expect(")")
        p.expect("=")
        if name in defs:
            raise ResolveError(f"duplicate definition {name!r}")
        p.scope.extend(params)
        body = p.proc()
        del p.scope[len(p.scope) - len(params) :]
        defs[name] = (tuple(params), body)

    t = p.peek()
    if not (t.kind == "ident" and t.text == "system"):
        raise ParseError("expected a 'system:' block", t.line, t.col, ("system",))
    p.next()
    p.expect(":")
    main = p.system()
    p.expect("eof")

    program = Program(defs, main, frozenset(p.attrs))
    _resolve_calls(program)
    return program


def parse_system(text: str, defs=None, attrs=()) -> System:
    """Parse a bare system term (used by tests and inline CLI input)."""
    toks = tokenize(text)
    declared = _collect_declared_attrs(toks) | set(attrs)
    p = _Parser(toks, declared)
    sys = p.system()
    p.expect("eof")
    program = Program(dict(defs or {}), sys, frozenset(declared))
    _resolve_calls(program)
    return sys


def parse_process(text: str, attrs=(), scope=()) -> Process:
    toks = tokenize(text)
    declared = _collect_declared_attrs(toks) | set(attrs)
    p = _Parser(toks, declared)
    p.scope.extend(scope)
    proc = p.proc()
    p.expect("eof")
    return proc


def _resolve_calls(program: Program) -> None:
    """Check every call against the definition table (names and arity)."""

    def walk(node):
        if isinstance(node, Call):
            if node.name not in program.defs:
                raise ResolveError(f"unknown definition {node.name!r}")
            params, _ = program.defs[node.name]
            if len(params) != len(node.args):
                raise ResolveError(
                    f"call to {node.name!r} with {len(node.args)} argument(s), "
                    f"definition takes {len(params)}"
                )
        for attr_name in ("cont", "inner"):
            child = getattr(node, attr_name, None)
            if child is not None:
                walk(child)
        for attr_name in ("left", "right"):
            child = getattr(node, attr_name, None)
            if child is not None and isinstance(child, (Process, System)):
                walk(child)
        if isinstance(node, Comp):
            walk(node.proc)

    for name, (params, body) in program.defs.items():
        walk(body)
        fv = free_names(body) - set(params)
        # free *variables* must be covered by the parameters; bare name
        # literals are values, not variables, and are fine
        unresolved = {v for v in fv if _has_free_var(body, v)}
        if unresolved:
            raise ResolveError(
                f"definition {name!r} has free variables {sorted(unresolved)}"
            )
    walk(program.main)


def _has_free_var(node, name: str) -> bool:
    """Whether ``name`` occurs free in variable position (``Var``)."""
    if isinstance(node, Var):
        return node.name == name
    if isinstance(node, (Lit, Attr, ThisAttr, Rand)):
        return False
    if isinstance(node, (Arith, Cmp, And, Or)):
        return _has_free_var(node.lhs, name) or _has_free_var(node.rhs, name)
    if isinstance(node, Not):
        return _has_free_var(node.inner, name)
    if isinstance(node, Out):
        return (
            any(_has_free_var(e, name) for e in node.exprs)
            or _has_free_var(node.pred, name)
            or _has_free_var(node.cont, name)
        )
    if isinstance(node, In):
        if name in node.vars:
            return False
        return _has_free_var(node.pred, name) or _has_free_var(node.cont, name)
    if isinstance(node, Upd):
        return any(_has_free_var(e, name) for _, e in node.assigns) or _has_free_var(
            node.cont, name
        )
    if isinstance(node, Aware):
        return _has_free_var(node.pred, name) or _has_free_var(node.cont, name)
    if isinstance(node, (Sum, Par)):
        return _has_free_var(node.left, name) or _has_free_var(node.right, name)
    if isinstance(node, Call):
        return any(_has_free_var(e, name) for e in node.args)
    return False
