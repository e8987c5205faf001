"""Single-component transition steps: sends, receives and discards.

A component is an attribute environment paired with a process.  Sends
evaluate the message under the local environment and close every
``this.`` reference in the carried predicate.  An incoming message is
either received (possibly in several alternative ways) or discarded;
these outcomes are mutually exclusive and total.

Attribute updates guard their action: the assignments are evaluated
under the environment in force when the update is reached, and commit
in the same step as the guarded send or receive.  A discard leaves the
component, including any pending updates, untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

from .attributes import (
    UndefinedClosure,
    close_predicate,
    eval_expr,
    satisfies,
)
from .syntax import (
    UNDEFINED,
    AttributeEnv,
    Aware,
    Call,
    Definitions,
    In,
    Nil,
    Out,
    Par,
    Predicate,
    Process,
    Sum,
    Upd,
    Value,
    substitute,
)


@dataclass(frozen=True)
class COut:
    """A component's send: carried predicate (already closed) and payload."""

    pred: Predicate
    values: tuple[Value, ...]


@dataclass(frozen=True)
class Receives:
    """All alternative acceptance outcomes for one incoming message."""

    entries: tuple[tuple[AttributeEnv, Process], ...]


class Discards:
    """The component ignores the message and is left unchanged."""

    def __repr__(self) -> str:
        return "DISCARDS"


DISCARDS = Discards()


def unfold_call(call: Call, env: AttributeEnv, defs: Definitions, rng=None):
    """Instantiate a definition body; ``None`` if an argument is undefined."""
    params, body = defs[call.name]
    values = []
    for e in call.args:
        v = eval_expr(e, env, rng)
        if v is UNDEFINED:
            return None
        values.append(v)
    return substitute(body, dict(zip(params, values)))


def output_steps(
    env: AttributeEnv, proc: Process, defs: Definitions, rng=None
) -> list[tuple[COut, AttributeEnv, Process]]:
    """All send transitions of a component, with their resulting state.

    The payload expressions are evaluated under the local environment;
    a send whose payload or closed predicate needs an unbound attribute
    is simply not enabled.
    """
    if isinstance(proc, (Nil, In)):
        return []
    if isinstance(proc, Out):
        values = []
        for e in proc.exprs:
            v = eval_expr(e, env, rng)
            if v is UNDEFINED:
                return []
            values.append(v)
        try:
            pred = close_predicate(proc.pred, env)
        except UndefinedClosure:
            return []
        return [(COut(pred, tuple(values)), env, proc.cont)]
    if isinstance(proc, Upd):
        committed = _commit(env, proc.assigns, rng)
        if committed is None:
            return []
        return output_steps(committed, proc.cont, defs, rng)
    if isinstance(proc, Aware):
        if satisfies(env, proc.pred):
            return output_steps(env, proc.cont, defs, rng)
        return []
    if isinstance(proc, Sum):
        return output_steps(env, proc.left, defs, rng) + output_steps(
            env, proc.right, defs, rng
        )
    if isinstance(proc, Par):
        out = []
        for label, env2, cont in output_steps(env, proc.left, defs, rng):
            out.append((label, env2, Par(cont, proc.right)))
        for label, env2, cont in output_steps(env, proc.right, defs, rng):
            out.append((label, env2, Par(proc.left, cont)))
        return out
    if isinstance(proc, Call):
        body = unfold_call(proc, env, defs, rng)
        if body is None:
            return []
        return output_steps(env, body, defs, rng)
    raise TypeError(proc)


def _commit(env: AttributeEnv, assigns, rng):
    """Evaluate assignments under ``env``; ``None`` if any is undefined."""
    out = []
    for a, e in assigns:
        v = eval_expr(e, env, rng)
        if v is UNDEFINED:
            return None
        out.append((a, v))
    return env.updated(out)


def deliver(
    env: AttributeEnv,
    proc: Process,
    sender_pred: Predicate,
    values: tuple[Value, ...],
    defs: Definitions,
    rng=None,
):
    """Offer one message to a component: ``Receives(...)`` or ``DISCARDS``.

    A receive needs both checks to pass: the receiver's own predicate
    under the instantiated message, and the sender's predicate against
    the receiver's environment.  Parallel threads inside one component
    compete: exactly one of them consumes the message per outcome.
    """
    if isinstance(proc, (Nil, Out)):
        return DISCARDS
    if isinstance(proc, In):
        if len(proc.vars) != len(values):
            return DISCARDS
        theta = dict(zip(proc.vars, values))
        own = substitute(proc.pred, theta)
        if satisfies(env, own) and satisfies(env, sender_pred):
            return Receives(((env, substitute(proc.cont, theta)),))
        return DISCARDS
    if isinstance(proc, Upd):
        committed = _commit(env, proc.assigns, rng)
        if committed is None:
            return DISCARDS
        inner = deliver(committed, proc.cont, sender_pred, values, defs, rng)
        if isinstance(inner, Receives):
            return inner
        return DISCARDS  # the pending update is not committed on a discard
    if isinstance(proc, Aware):
        if satisfies(env, proc.pred):
            return deliver(env, proc.cont, sender_pred, values, defs, rng)
        return DISCARDS
    if isinstance(proc, Sum):
        left = deliver(env, proc.left, sender_pred, values, defs, rng)
        right = deliver(env, proc.right, sender_pred, values, defs, rng)
        entries = []
        if isinstance(left, Receives):
            entries.extend(left.entries)
        if isinstance(right, Receives):
            entries.extend(right.entries)
        if entries:
            return Receives(tuple(entries))
        return DISCARDS
    if isinstance(proc, Par):
        left = deliver(env, proc.left, sender_pred, values, defs, rng)
        right = deliver(env, proc.right, sender_pred, values, defs, rng)
        entries = []
        if isinstance(left, Receives):
            for env2, cont in left.entries:
                entries.append((env2, Par(cont, proc.right)))
        if isinstance(right, Receives):
            for env2, cont in right.entries:
                entries.append((env2, Par(proc.left, cont)))
        if entries:
            return Receives(tuple(entries))
        return DISCARDS
    if isinstance(proc, Call):
        body = unfold_call(proc, env, defs, rng)
        if body is None:
            return DISCARDS
        return deliver(env, body, sender_pred, values, defs, rng)
    raise TypeError(proc)
