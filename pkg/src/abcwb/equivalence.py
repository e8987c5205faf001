"""Observables and bisimilarity checking over bounded state spaces.

Since a component cannot refuse a broadcast (it either consumes it or
ignores it, and both count as handling), input moves are part of the
behaviour.  The checker closes the explored space under a finite stock
of stimulus messages: every broadcast either system can actually emit,
plus unrestricted messages over the value universe at each input arity
occurring in the terms.  This finite quantification is exact whenever
distinguishing messages can be built from mentioned values, which holds
for equality-based predicates; it is the documented approximation
otherwise.

Bisimilarity is computed as a relational fixpoint: start from all state
pairs and repeatedly delete pairs with an unmatchable move.  The round
in which a pair dies gives a minimal-depth distinguishing strategy,
which is reported as a nested witness.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .attributes import Universe, fingerprint, UniverseTooLarge
from .component import Receives
from .explorer import canon_label, label_text, state_rng
from .syntax import (
    Definitions,
    In,
    Out,
    Predicate,
    System,
    TT_,
    Value,
    canonicalize,
    pretty_system,
    value_sort_key,
)
from .system import SIn, SOut, TAU, set_fuel, sys_deliver, system_steps


def barbs(sys: System, defs: Definitions, universe: Universe = None) -> set:
    """Immediate observables: fingerprints and arities of enabled sends."""
    if universe is None:
        universe = Universe.for_systems([sys])
    rng = state_rng(0, sys)
    out = set()
    for lab, _ in system_steps(sys, defs, universe, rng):
        if isinstance(lab, SOut):
            out.add((fingerprint(lab.pred, universe), len(lab.values)))
    return out


def _input_arities(sys: System) -> set[int]:
    arities: set[int] = set()

    def walk(node):
        if isinstance(node, In):
            arities.add(len(node.vars))
        for attr in ("cont", "inner", "proc", "left", "right"):
            child = getattr(node, attr, None)
            if child is not None and not isinstance(child, (str, tuple, Predicate)):
                walk(child)

    walk(sys)
    return arities


DEFAULT_MESSAGE_BUDGET = 2000


def stimulus_messages(
    systems, defs: Definitions, universe: Universe, budget: int = DEFAULT_MESSAGE_BUDGET
) -> list[tuple[Predicate, tuple[Value, ...]]]:
    """Baseline input stimuli: unrestricted sends over the universe."""
    widths: set[int] = set()
    for s in systems:
        widths |= _input_arities(s)
    for _, (_, body) in sorted(defs.items()):
        widths |= _input_arities(body)
    values = sorted(universe.values, key=value_sort_key)
    msgs: list[tuple[Predicate, tuple[Value, ...]]] = []
    for w in sorted(widths):
        count = len(values) ** w
        if len(msgs) + count > budget:
            raise UniverseTooLarge(
                f"stimulus set would exceed {budget} messages; shrink the universe"
            )
        for combo in itertools.product(values, repeat=w):
            msgs.append((TT_, combo))
    return msgs


@dataclass
class _Space:
    """Joint explored space of the two systems under comparison."""

    succ: dict  # state -> dict[canonical label, frozenset of states]
    truncated: bool
    reasons: list


def _explore_pair(
    roots,
    defs: Definitions,
    universe: Universe,
    *,
    repl_bound: int,
    max_states: int,
    seed: int,
    message_budget: int,
) -> tuple[list[System], _Space]:
    """Explore both systems under outputs, silent steps, and stimuli.

    The stimulus pool starts from the arity baseline and grows with
    every output either side is seen to emit, re-offered to already
    visited states until a fixpoint.
    """
    inits = [canonicalize(set_fuel(r, repl_bound)) for r in roots]
    messages: list[tuple[Predicate, tuple[Value, ...]]] = []
    msg_keys: set = set()
    for pred, vals in stimulus_messages(roots, defs, universe, message_budget):
        key = (fingerprint(pred, universe), vals)
        if key not in msg_keys:
            msg_keys.add(key)
            messages.append((pred, vals))

    succ: dict[System, dict] = {}
    reasons: list[str] = []
    truncated = False
    states: list[System] = []
    queue: list[System] = []
    offered: dict[System, int] = {}  # how many stimuli each state has seen

    def add_state(s: System) -> bool:
        nonlocal truncated
        if s in succ:
            return True
        if len(states) >= max_states:
            truncated = True
            if "state budget exhausted" not in reasons:
                reasons.append("state budget exhausted")
            return False
        succ[s] = {}
        offered[s] = 0
        states.append(s)
        queue.append(s)
        return True

    def record(s: System, lab_key: tuple, t: System):
        if add_state(t):
            succ[s].setdefault(lab_key, set()).add(t)

    for init in inits:
        add_state(init)

    def add_message(pred, vals):
        key = (fingerprint(pred, universe), vals)
        if key in msg_keys:
            return
        if len(messages) >= message_budget:
            nonlocal truncated
            truncated = True
            if "stimulus budget exhausted" not in reasons:
                reasons.append("stimulus budget exhausted")
            return
        msg_keys.add(key)
        messages.append((pred, vals))

    pos = 0
    while True:
        progressed = False
        while pos < len(queue):
            s = queue[pos]
            pos += 1
            progressed = True
            rng = state_rng(seed, s)
            notes: list[str] = []
            for lab, t in system_steps(s, defs, universe, rng, notes):
                if isinstance(lab, SOut):
                    add_message(lab.pred, lab.values)
                record(s, canon_label(lab, universe), canonicalize(t))
            for note in notes:
                truncated = True
                if note not in reasons:
                    reasons.append(note)
        # offer any not-yet-offered stimuli to every known state
        for s in list(states):
            n = offered[s]
            if n >= len(messages):
                continue
            progressed = True
            rng = state_rng(seed, s)
            for pred, vals in messages[n:]:
                key = canon_label(SIn(pred, vals), universe)
                for t in sys_deliver(s, pred, vals, defs, universe, rng):
                    record(s, key, canonicalize(t))
            offered[s] = len(messages)
        if not progressed and pos >= len(queue):
            break

    frozen = {s: {k: frozenset(v) for k, v in d.items()} for s, d in succ.items()}
    return inits, _Space(frozen, truncated, reasons)


@dataclass
class BisimResult:
    equivalent: bool
    witness: dict | None
    truncated: bool
    reasons: list[str] = field(default_factory=list)


def _refine(space: _Space, weak: bool):
    """Partition refinement by successor signatures.

    Returns the (possibly saturated) successor map, the final block
    assignment, and the partition history; two states are related iff
    they end up in the same block.
    """
    succ = space.succ
    if weak:
        succ = _weak_closure(succ)
    states = list(succ)
    block = {s: 0 for s in states}
    history = [block]
    while True:
        keys: dict = {}
        refined = {}
        for s in states:
            sig = frozenset(
                (lab, block[t]) for lab, ts in succ[s].items() for t in ts
            )
            key = (block[s], sig)
            refined[s] = keys.setdefault(key, len(keys))
        if len(keys) == len(set(block.values())):
            return succ, refined, history
        block = refined
        history.append(block)


def _sep_round(p, q, history) -> int:
    """First refinement round that put p and q in different blocks."""
    for i, block in enumerate(history):
        if block[p] != block[q]:
            return i
    return len(history)  # never separated


def _mismatch(p, q, succ, block):
    """An attacker move from p that q cannot answer into the same block."""
    for lab, targets in succ[p].items():
        answers = succ[q].get(lab, frozenset())
        for t in targets:
            if not any(block[t] == block[u] for u in answers):
                return (lab, t, answers)
    return None


def _weak_closure(succ):
    """Saturate: tau* a tau* for visible moves, tau* for silent ones."""
    states = list(succ)
    tclo: dict = {}
    for s in states:
        seen = {s}
        stack = [s]
        while stack:
            cur = stack.pop()
            for t in succ[cur].get(("tau",), frozenset()):
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        tclo[s] = frozenset(seen)
    weak: dict = {}
    for s in states:
        d: dict = {("tau",): set(tclo[s])}
        for mid in tclo[s]:
            for lab, targets in succ[mid].items():
                if lab == ("tau",):
                    continue
                acc = d.setdefault(lab, set())
                for t in targets:
                    acc |= tclo[t]
        weak[s] = {k: frozenset(v) for k, v in d.items()}
    return weak


def _build_witness(p, q, succ, block, history, depth=0):
    if depth > 50:
        return {"note": "witness truncated"}
    for first, second, side in ((p, q, "left"), (q, p, "right")):
        miss = _mismatch(first, second, succ, block)
        if miss:
            lab, t, answers = miss
            node = {
                "side": side,
                "label": label_text(lab),
                "from": pretty_system(first),
                "to": pretty_system(t),
            }
            if answers:
                # every answer is already distinguished from t; recurse
                # on one separated as early as possible
                u = min(answers, key=lambda u: _sep_round(t, u, history))
                node["continues"] = _build_witness(
                    t, u, succ, block, history, depth + 1
                )
            else:
                node["continues"] = None  # the move is missing outright
            return node
    return None


def bisimilar(
    s1: System,
    s2: System,
    defs: Definitions,
    universe: Universe = None,
    *,
    weak: bool = False,
    repl_bound: int = 3,
    max_states: int = 2000,
    seed: int = 0,
    message_budget: int = DEFAULT_MESSAGE_BUDGET,
) -> BisimResult:
    """Decide (strong or weak) bisimilarity on the bounded joint space."""
    if universe is None:
        universe = Universe.for_systems([s1, s2])
    # identical states are related by the identity bisimulation; skip
    # the joint exploration entirely in that case
    if canonicalize(set_fuel(s1, repl_bound)) == canonicalize(set_fuel(s2, repl_bound)):
        return BisimResult(True, None, False, [])
    (i1, i2), space = _explore_pair(
        (s1, s2),
        defs,
        universe,
        repl_bound=repl_bound,
        max_states=max_states,
        seed=seed,
        message_budget=message_budget,
    )
    succ, block, history = _refine(space, weak)
    if block[i1] == block[i2]:
        return BisimResult(True, None, space.truncated, space.reasons)
    witness = _build_witness(i1, i2, succ, block, history)
    return BisimResult(False, witness, space.truncated, space.reasons)


def strong_bisimilar(s1, s2, defs, universe=None, **kw) -> BisimResult:
    return bisimilar(s1, s2, defs, universe, weak=False, **kw)


def weak_bisimilar(s1, s2, defs, universe=None, **kw) -> BisimResult:
    return bisimilar(s1, s2, defs, universe, weak=True, **kw)


# ---------------------------------------------------------------------------
# Sampled congruence checks


def sample_contexts(values, seed: int = 0):
    """A small deterministic family of one-hole system contexts."""
    from .syntax import (
        AttributeEnv,
        Bang,
        Comp,
        Lit,
        NIL,
        Nu,
        SysPar,
    )

    vals = sorted(values, key=value_sort_key)
    listener = Comp(AttributeEnv.of({}), In(TT_, ("_ctxv",), NIL))
    payload = (Lit(vals[0]),) if vals else ()
    shouter = Comp(AttributeEnv.of({}), Out(payload, TT_, NIL))
    return [
        ("[.] || listener", lambda h: SysPar(h, listener)),
        ("shouter || [.]", lambda h: SysPar(shouter, h)),
        ("nu _ctxn ([.])", lambda h: Nu("_ctxn", h)),
        ("!([.])", lambda h: Bang(h)),
    ]


def random_contexts(values, seed: int = 0, count: int = 100):
    """Randomly nested one-hole contexts over the context grammar
    hole | hole par C | C par hole | restriction | replication."""
    import random as _random

    from .syntax import AttributeEnv, Bang, Comp, Lit, NIL, Nu, Out as _Out, SysPar

    rng = _random.Random(seed)
    vals = sorted(values, key=value_sort_key)

    def rand_component():
        kind = rng.randrange(3)
        attr_env = AttributeEnv.of({"cx": vals[rng.randrange(len(vals))]} if vals else {})
        if kind == 0:
            return Comp(attr_env, NIL)
        if kind == 1:
            payload = (Lit(vals[rng.randrange(len(vals))]),) if vals else ()
            return Comp(attr_env, _Out(payload, TT_, NIL))
        return Comp(attr_env, In(TT_, ("_ctxv",), NIL))

    out = []
    for i in range(count):
        # fix the layer structure now so both systems get the same context
        layers = []
        for _ in range(rng.randrange(1, 4)):
            op = rng.randrange(4)
            comp = rand_component() if op in (0, 1) else None
            layers.append((op, comp))

        def build(h, layers=tuple(layers)):
            for op, comp in layers:
                if op == 0:
                    h = SysPar(h, comp)
                elif op == 1:
                    h = SysPar(comp, h)
                elif op == 2:
                    h = Nu("_ctxn", h)
                else:
                    h = Bang(h, 1)
            return h

        desc = f"random context #{i} ops={[op for op, _ in layers]}"
        out.append((desc, build))
    return out


def congruence_sample(
    s1: System,
    s2: System,
    defs: Definitions,
    universe: Universe = None,
    *,
    weak: bool = False,
    repl_bound: int = 2,
    max_states: int = 2000,
    seed: int = 0,
    count: int = None,
) -> list[tuple[str, BisimResult]]:
    """Check that plugging both systems into sampled contexts preserves
    the verdict of the raw comparison.

    With ``count`` unset a small fixed family is used; otherwise that
    many randomly nested contexts are generated from the seed.
    """
    if universe is None:
        universe = Universe.for_systems([s1, s2])
    if count is None:
        contexts = sample_contexts(universe.values, seed)
    else:
        contexts = random_contexts(universe.values, seed, count)
    out = []
    for desc, ctx in contexts:
        res = bisimilar(
            ctx(s1),
            ctx(s2),
            defs,
            universe,
            weak=weak,
            repl_bound=repl_bound,
            max_states=max_states,
            seed=seed,
        )
        out.append((desc, res))
    return out
