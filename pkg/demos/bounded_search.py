"""Bounded counter-model search on a handful of loop inequations.

Run: python3 demos/bounded_search.py
"""
from __future__ import annotations

import time

from loopkat.decide import decide_text, describe
from loopkat.term import ExtensionConfig

CASES = [
    ("a^ <= id", ExtensionConfig(("a",))),
    ("id <= a^", ExtensionConfig(("a",))),
    ("(a;a)^ <= a^", ExtensionConfig(("a",))),
    ("(a+)^ <= (a;a)+", ExtensionConfig(("a",))),
    ("a;a;a <= a | a;a", ExtensionConfig(("a",))),
    ("dom(a);a == a", ExtensionConfig(("a",))),
    ("b | not(b) == id", ExtensionConfig(("a",), tests=("b",))),
    ("c <= c~", ExtensionConfig(converse=("c",))),
]


def main() -> None:
    for text, cfg in CASES:
        started = time.perf_counter()
        v = decide_text(text, cfg, max_blocks=2)
        elapsed = time.perf_counter() - started
        print(f"== {text}   ({elapsed:.2f}s)")
        print("   " + describe(v).replace("\n", "\n   "))
    print("\nwidening the bound can turn 'unknown' into a refutation (forced bounded mode, k = 2):")
    for bound in (3, 4, 5):
        v = decide_text("a;a;a <= a | a;a", ExtensionConfig(("a",)), mode="bounded", max_blocks=bound)
        print(f"  bound {bound}: {v.kind}")

if __name__ == "__main__":
    main()
