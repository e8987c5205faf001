"""Command line interface.

Exit codes: 0 success / property holds, 1 negative verdict,
2 inconclusive (bounds were hit before an answer), 3 usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import sys as _sys

from .attributes import Universe, UniverseTooLarge
from .bpi import (
    check_barb_correspondence,
    check_correspondence,
    check_divergence_correspondence,
    check_name_invariance,
    encode_program,
    parse_bpi,
    BpiParseError,
)
from .equivalence import barbs, bisimilar
from .explorer import (
    build_lts,
    env_has,
    label_text,
    lts_to_json,
    lts_to_text,
    random_trace,
    reachable_matching,
    witness_path as _witness_path,
)
from .parser import ParseError, ResolveError, parse_program
from .syntax import Bool, Int, Name, pretty_system


def _load(path: str):
    try:
        with open(path) as f:
            return parse_program(f.read())
    except FileNotFoundError:
        print(f"error: no such file: {path}", file=_sys.stderr)
        raise SystemExit(3)
    except (ParseError, ResolveError) as e:
        print(f"error: {path}: {e}", file=_sys.stderr)
        raise SystemExit(3)


def _parse_value(text: str):
    if text.startswith("'") and text.endswith("'"):
        return Name(text[1:-1])
    if text in ("tt", "ff"):
        return Bool(text == "tt")
    try:
        return Int(int(text))
    except ValueError:
        return Name(text)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="abcwb",
        description="workbench for an attribute-based broadcast calculus",
    )
    ap.add_argument("--seed", type=int, default=0, help="run seed (echoed in reports)")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p_parse = sub.add_parser("parse", help="parse a file and print the system")
    p_parse.add_argument("file")

    p_step = sub.add_parser("step", help="show the immediate steps of a system")
    p_step.add_argument("file")
    p_step.add_argument("--repl-bound", type=int, default=3)

    p_exp = sub.add_parser("explore", help="build the bounded transition graph")
    p_exp.add_argument("file")
    p_exp.add_argument("--max-states", type=int, default=10_000)
    p_exp.add_argument("--max-depth", type=int, default=None)
    p_exp.add_argument("--repl-bound", type=int, default=3)
    p_exp.add_argument("--format", choices=("text", "json"), default="text")

    p_trace = sub.add_parser("trace", help="one random walk through a system")
    p_trace.add_argument("file")
    p_trace.add_argument("--steps", type=int, default=20)
    p_trace.add_argument("--repl-bound", type=int, default=3)

    p_barbs = sub.add_parser("barbs", help="immediate observables of a system")
    p_barbs.add_argument("file")

    p_bisim = sub.add_parser("bisim", help="compare two files for bisimilarity")
    p_bisim.add_argument("left")
    p_bisim.add_argument("right")
    p_bisim.add_argument("--weak", action="store_true")
    p_bisim.add_argument("--max-states", type=int, default=2000)
    p_bisim.add_argument("--repl-bound", type=int, default=3)

    p_reach = sub.add_parser(
        "reach", help="search explored states for attr=value in some component"
    )
    p_reach.add_argument("file")
    p_reach.add_argument("query", help="attr=value, e.g. role='rescuer' or count=3")
    p_reach.add_argument("--max-states", type=int, default=10_000)
    p_reach.add_argument("--max-depth", type=int, default=None)
    p_reach.add_argument("--repl-bound", type=int, default=3)

    p_enc = sub.add_parser("encode", help="translate a broadcast pi term")
    p_enc.add_argument("file")

    p_chk = sub.add_parser(
        "check-encoding", help="verify the translation of a broadcast pi term"
    )
    p_chk.add_argument("file")
    p_chk.add_argument("--depth", type=int, default=6)

    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        # argparse uses 2 for usage errors; 2 means "inconclusive" here
        raise SystemExit(3 if e.code else 0)

    try:
        return _dispatch(args)
    except UniverseTooLarge as e:
        print(f"error: resource bound exceeded: {e}", file=_sys.stderr)
        return 2


def _dispatch(args) -> int:
    if args.cmd == "parse":
        prog = _load(args.file)
        for name, (params, body) in sorted(prog.defs.items()):
            from .syntax import pretty_proc

            print(f"def {name}({', '.join(params)}) = {pretty_proc(body)}")
        print(pretty_system(prog.main))
        return 0

    if args.cmd == "step":
        prog = _load(args.file)
        from .explorer import state_rng
        from .syntax import canonicalize
        from .system import set_fuel, system_steps

        universe = Universe.for_program(prog)
        init = canonicalize(set_fuel(prog.main, args.repl_bound))
        print(f"# seed {args.seed}")
        rng = state_rng(args.seed, init)
        for lab, succ in system_steps(init, prog.defs, universe, rng):
            print(f"{label_text(lab)}\n    -> {pretty_system(succ)}")
        return 0

    if args.cmd == "explore":
        prog = _load(args.file)
        universe = Universe.for_program(prog)
        lts = build_lts(
            prog.main,
            prog.defs,
            universe,
            seed=args.seed,
            max_states=args.max_states,
            max_depth=args.max_depth,
            repl_bound=args.repl_bound,
        )
        print(lts_to_json(lts) if args.format == "json" else lts_to_text(lts))
        return 0

    if args.cmd == "trace":
        prog = _load(args.file)
        universe = Universe.for_program(prog)
        print(f"# seed {args.seed}")
        for lab, state in random_trace(
            prog.main,
            prog.defs,
            universe,
            seed=args.seed,
            steps=args.steps,
            repl_bound=args.repl_bound,
        ):
            print(f"{lab}\n    -> {pretty_system(state)}")
        return 0

    if args.cmd == "barbs":
        prog = _load(args.file)
        universe = Universe.for_program(prog)
        for fp, arity in sorted(barbs(prog.main, prog.defs, universe)):
            print(f"barb: arity {arity}, predicate key {fp}")
        return 0

    if args.cmd == "bisim":
        left = _load(args.left)
        right = _load(args.right)
        defs = {**left.defs, **right.defs}
        universe = Universe.for_systems([left.main, right.main])
        res = bisimilar(
            left.main,
            right.main,
            defs,
            universe,
            weak=args.weak,
            repl_bound=args.repl_bound,
            max_states=args.max_states,
            seed=args.seed,
        )
        kind = "weakly" if args.weak else "strongly"
        print(f"# seed {args.seed}")
        if res.equivalent:
            if res.truncated:
                print(f"{kind} bisimilar on the truncated space "
                      f"({'; '.join(res.reasons)}); inconclusive")
                return 2
            print(f"{kind} bisimilar")
            return 0
        print(f"not {kind} bisimilar")
        print(json.dumps(res.witness, indent=2))
        return 1

    if args.cmd == "reach":
        prog = _load(args.file)
        if "=" not in args.query:
            print("error: query must look like attr=value", file=_sys.stderr)
            return 3
        attr, _, val = args.query.partition("=")
        value = _parse_value(val.strip())
        universe = Universe.for_program(prog)
        lts = build_lts(
            prog.main,
            prog.defs,
            universe,
            seed=args.seed,
            max_states=args.max_states,
            max_depth=args.max_depth,
            repl_bound=args.repl_bound,
        )
        print(f"# seed {args.seed}")
        hit = reachable_matching(lts, lambda s: env_has(s, attr.strip(), value))
        if hit is not None:
            print(f"reached at state {hit}: {pretty_system(lts.states[hit])}")
            print("witness trace:")
            for line in _witness_path(lts, hit):
                print(f"  {line}")
            return 0
        if lts.truncated:
            print(f"not reached within bounds ({'; '.join(lts.reasons)})")
            return 2
        print("not reachable")
        return 1

    if args.cmd in ("encode", "check-encoding"):
        try:
            with open(args.file) as f:
                term = parse_bpi(f.read())
        except FileNotFoundError:
            print(f"error: no such file: {args.file}", file=_sys.stderr)
            return 3
        except BpiParseError as e:
            print(f"error: {args.file}: {e}", file=_sys.stderr)
            return 3
        if args.cmd == "encode":
            prog = encode_program(term)
            from .syntax import pretty_proc

            for name, (params, body) in sorted(prog.defs.items()):
                print(f"def {name}({', '.join(params)}) = {pretty_proc(body)}")
            print("system:")
            print(f"  {pretty_system(prog.main)}")
            return 0
        res = check_correspondence(term, depth=args.depth)
        barbs_ok = check_barb_correspondence(term)
        div_ok = check_divergence_correspondence(term)
        inv_ok = check_name_invariance(term)
        print(f"step bijection: {'ok' if res.ok else 'FAIL'} "
              f"({res.checked_pairs} pairs, truncated: {res.truncated})")
        for f_ in res.failures[:10]:
            print(f"  {f_}")
        print(f"barb correspondence: {'ok' if barbs_ok else 'FAIL'}")
        print(f"divergence correspondence: {'ok' if div_ok else 'FAIL'}")
        print(f"renaming invariance: {'ok' if inv_ok else 'FAIL'}")
        if not (res.ok and barbs_ok and div_ok and inv_ok):
            return 1
        return 2 if res.truncated else 0

    raise AssertionError(args.cmd)


if __name__ == "__main__":
    raise SystemExit(main())
