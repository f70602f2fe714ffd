"""Loop-free inequations reduce to language inclusion of regular expressions.

Run: python3 demos/loop_free_fast_path.py
"""
from __future__ import annotations

from loopkat.inclusion import Refuted, decide_loop_free
from loopkat.term import ExtensionConfig, parse_term

AB = ExtensionConfig(("a", "b"))

PAIRS = [
    ("a;(b;a)*", "(a;b)*;a"),
    ("(a|b)*", "(a*;b*)*"),
    ("(a;b)*", "a*;b*"),
    ("a*;b*", "(a|b)*"),
    ("a;b", "b;a"),
]


def main() -> None:
    for left, right in PAIRS:
        res = decide_loop_free(parse_term(left, AB), parse_term(right, AB))
        if isinstance(res, Refuted):
            word = " ".join(res.witness) or "(empty word)"
            print(f"{left} <= {right}: refuted by the word {word}")
        else:
            print(f"{left} <= {right}: valid, antichain of {len(list(res.certificate))} macro-states")


if __name__ == "__main__":
    main()
