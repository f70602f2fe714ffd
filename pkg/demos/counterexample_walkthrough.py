"""Walk through a width-4 counter-model for an inequation with nested loops.

Run: python3 demos/counterexample_walkthrough.py
"""
from __future__ import annotations

import pathlib

from loopkat.decide import Witness, choose_width, decide_inequation, describe, verify_witness
from loopkat.loop_automaton import compile_term, eval_decomposed, explain
from loopkat.structure import eval_term, load_json
from loopkat.term import ExtensionConfig, desugar, format_term, intersection_width, parse_term

ROOT = pathlib.Path(__file__).resolve().parent.parent
LHS = "((a;(b+)^;a)^;c)+"
RHS = "(a;(b|b;b);a;c*)|(c;a;b;a;c*)"


def main() -> None:
    cfg = ExtensionConfig(("a", "b", "c"))
    t1 = desugar(parse_term(LHS, cfg), cfg)
    t2 = desugar(parse_term(RHS, cfg), cfg)
    print("left :", format_term(t1))
    print("right:", format_term(t2))
    print(f"intersection width of the left side: {intersection_width(t1)}, search width k = {choose_width(t1, cfg)}")

    wit = Witness.from_json(load_json(ROOT / "fixtures" / "loop_counterexample.json"))
    print(f"\nthe witness has {len(wit.w)} blocks:")
    for i, b in enumerate(wit.w.blocks, 1):
        edges = ", ".join(f"{a}{sorted(r)}" for a, r in sorted(b.edges.items()) if r)
        print(f"  block {i}: universe {sorted(b.universe)}  {edges}")

    g = wit.glued
    s = g.structure
    print(f"\nglued structure: {len(s.vertices)} vertices")
    x, y = g.class_of[wit.x], g.class_of[wit.y]
    in1 = (x, y) in eval_term(s, t1)
    in2 = (x, y) in eval_term(s, t2)
    print(f"pair {wit.x} -> {wit.y}: in left = {in1}, in right = {in2}")

    # the loop at x lives inside block 1, so the block-local evaluator can explain it
    inner = desugar(parse_term("(a;(b+)^;a)^", cfg), cfg)
    a = compile_term(inner)
    rel = eval_decomposed(wit.w, a, trace=True)
    quad = (a.source, x, a.target, x)
    print(f"\n{format_term(inner)} holds at x: {quad in rel}; derivation (first lines):")
    for line in explain(rel, quad)[:12]:
        print("  " + line)

    print("\nwitness check:", verify_witness(wit, LHS, RHS, cfg))
    print(describe(decide_inequation(LHS, RHS, cfg, witness=wit)))


if __name__ == "__main__":
    main()
