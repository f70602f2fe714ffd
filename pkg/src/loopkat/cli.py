"""Command line front end.

Exit codes: 0 valid, 1 refuted, 2 unknown, 3 usage or parse error.
"""
from __future__ import annotations

import argparse
import json
import sys

from .afa_build import build_lambda_bin
from .decide import MODES, Witness, choose_width, decide_equation, decide_inequation, describe
from .loop_automaton import compile_term
from .oracle import OracleRefuted, oracle_decide
from .structure import Block, DecompString, Structure, eval_term, glue, load_json
from .term import ExtensionConfig, TermError, Top, desugar, letters_of, parse_comparison, parse_term, walk, wrap_for_decision

EXIT_VALID, EXIT_REFUTED, EXIT_UNKNOWN, EXIT_USAGE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _names(text: str | None) -> tuple[str, ...]:
    if not text:
        return ()
    return tuple(x.strip() for x in text.split(",") if x.strip())


def _config(args, texts) -> ExtensionConfig:
    cfg = ExtensionConfig.infer(texts, _names(args.tests), _names(args.converse), _names(args.nominals))
    extra = _names(args.letters)
    if extra:
        cfg = ExtensionConfig(tuple(dict.fromkeys(extra + cfg.letters)), cfg.tests, cfg.converse, cfg.nominals)
    return cfg


def _add_class_flags(p):
    p.add_argument("--letters", help="comma-separated extra base letters")
    p.add_argument("--tests", help="comma-separated test letters")
    p.add_argument("--converse", help="comma-separated letters with a converse")
    p.add_argument("--nominals", help="comma-separated nominal letters")
    p.add_argument("--format", choices=("text", "json"), default="text")


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="loopkat", description="Decide (in)equations of Kleene algebra with graph loops over relations.")
    sub = top.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("decide", help='decide "lhs <= rhs" or "lhs == rhs"')
    p.add_argument("comparison")
    _add_class_flags(p)
    p.add_argument("--mode", choices=MODES, default="auto")
    p.add_argument("--max-blocks", type=int, default=None)
    p.add_argument("--k", type=int, default=None, help="override the decomposition width")
    p.add_argument("--verify-witness", metavar="FILE", help="only check the witness in FILE")

    p = sub.add_parser("oracle", help="search small structures for a counterexample")
    p.add_argument("comparison")
    _add_class_flags(p)
    p.add_argument("--max-vertices", type=int, default=None)

    p = sub.add_parser("compile", help="dump the loop-automaton or the binary 2AFA of a term")
    p.add_argument("term")
    _add_class_flags(p)
    p.add_argument("--target", choices=("loop", "lambda-bin"), default="loop")
    p.add_argument("--wrap", action="store_true", help="wrap the term as in the decision procedure")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--dot", action="store_true", help="Graphviz output (loop target only)")

    p = sub.add_parser("eval", help="evaluate a term on a structure or decomposition string")
    p.add_argument("--structure", required=True, metavar="FILE")
    p.add_argument("--term", required=True)
    _add_class_flags(p)
    return top


def _emit(args, text: str, data) -> None:
    if args.format == "json":
        print(json.dumps(data, indent=2))
    else:
        print(text)


def _cmd_decide(args) -> int:
    cfg = _config(args, [args.comparison])
    lhs, op, rhs = parse_comparison(args.comparison, cfg)
    options = {"mode": args.mode, "max_blocks": args.max_blocks, "k": args.k}
    if args.verify_witness:
        wit = Witness.from_json(load_json(args.verify_witness))
        options["witness"] = wit
        if op == "==":
            v = decide_inequation(lhs, rhs, cfg, **options)
            if v.kind != "refuted":
                v = decide_inequation(rhs, lhs, cfg, **options)
        else:
            v = decide_inequation(lhs, rhs, cfg, **options)
    elif op == "<=":
        v = decide_inequation(lhs, rhs, cfg, **options)
    else:
        v = decide_equation(lhs, rhs, cfg, **options)
    _emit(args, describe(v), v.to_json())
    return v.exit_code


def _cmd_oracle(args) -> int:
    cfg = _config(args, [args.comparison]).without_reserved()
    lhs, op, rhs = parse_comparison(args.comparison, cfg)
    bound = args.max_vertices
    if bound is None:
        bound = 3 if len(cfg.letters) <= 1 else 2
    sides = [(lhs, rhs)] if op == "<=" else [(lhs, rhs), (rhs, lhs)]
    for a, b in sides:
        res = oracle_decide(a, b, cfg, bound)
        if isinstance(res, OracleRefuted):
            data = {"verdict": "refuted", "engine": "oracle", "structure": res.structure.to_json(), "pair": list(res.pair)}
            _emit(args, f"refuted by a {len(res.structure.vertices)}-vertex structure at pair {res.pair}\n{json.dumps(res.structure.to_json())}", data)
            return EXIT_REFUTED
    data = {"verdict": "unknown", "engine": "oracle", "bound": bound}
    _emit(args, f"no counterexample with at most {bound} vertices", data)
    return EXIT_UNKNOWN


def _cmd_compile(args) -> int:
    cfg = _config(args, [args.term])
    t = desugar(parse_term(args.term, cfg), cfg)
    if args.wrap:
        t_c = wrap_for_decision(t, cfg)
    elif any(isinstance(n, Top) for n in walk(t)):
        raise UsageError("terms with top need --wrap to be compiled")
    else:
        t_c = t
    a = compile_term(t_c)
    if args.target == "loop":
        if args.dot:
            print(a.to_dot())
        else:
            print(json.dumps(a.to_json(), indent=2))
        return 0
    if args.dot:
        raise UsageError("--dot is only available for the loop target")
    k = args.k if args.k is not None else choose_width(t, cfg)
    print(json.dumps(build_lambda_bin(k, cfg, a).to_json()))
    return 0


def _cmd_eval(args) -> int:
    data = load_json(args.structure)
    cfg = _config(args, [args.term]).without_reserved()
    if "blocks" in data or isinstance(data, list):
        blocks = data["blocks"] if isinstance(data, dict) else data
        k = data.get("k") if isinstance(data, dict) else None
        s = glue(DecompString(tuple(Block.from_json(b, k) for b in blocks))).structure
    else:
        s = Structure.from_json(data)
    t = desugar(parse_term(args.term, cfg), cfg)
    missing = letters_of(t) - set(s.edges)
    pairs = sorted(eval_term(s, t), key=repr)
    out = {"term": args.term, "pairs": [[_plain(u), _plain(v)] for u, v in pairs]}
    text = "\n".join(f"{u} -> {v}" for u, v in pairs) or "(empty relation)"
    if missing:
        out["empty_letters"] = sorted(missing)
    _emit(args, text, out)
    return 0


def _plain(v):
    return list(v) if isinstance(v, tuple) else v


COMMANDS = {"decide": _cmd_decide, "oracle": _cmd_oracle, "compile": _cmd_compile, "eval": _cmd_eval}


def run_cli(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"loopkat: usage error: {exc}", file=sys.stderr)
    except TermError as exc:
        print(f"loopkat: parse error: {exc}", file=sys.stderr)
    except (ValueError, KeyError, OSError) as exc:
        print(f"loopkat: error: {exc}", file=sys.stderr)
    return EXIT_USAGE


def main() -> None:
    sys.exit(run_cli())
