from __future__ import annotations

import json

import pytest

from loopkat.decide import (
    DEFAULT_MAX_BLOCKS,
    Verdict,
    Witness,
    choose_width,
    decide_equation,
    decide_inequation,
    decide_text,
    describe,
    path_witness,
    verify_witness,
)
from loopkat.structure import Block, DecompString, load_json
from loopkat.term import ExtensionConfig, desugar, parse_term

LHS = "((a;(b+)^;a)^;c)+"
RHS = "(a;(b|b;b);a;c*)|(c;a;b;a;c*)"
ABC = ExtensionConfig(("a", "b", "c"))


def fixture_witness(fixture_dir) -> Witness:
    return Witness.from_json(load_json(fixture_dir / "loop_counterexample.json"))


def test_choose_width():
    assert choose_width(desugar(parse_term(LHS, ABC), ABC), ABC) == 4
    assert choose_width(parse_term("a", ABC), ABC) == 2
    nom = ExtensionConfig(("a",), nominals=("l",))
    assert choose_width(parse_term("a^", nom), nom) == 4


def test_fast_path_valid():
    v = decide_text("a <= a|b", ExtensionConfig(("a", "b")))
    assert v.kind == "valid" and v.engine == "loop-free" and v.exit_code == 0


def test_fast_path_refutation_is_a_path():
    v = decide_text("a;b <= b;a", ExtensionConfig(("a", "b")))
    assert v.kind == "refuted" and v.engine == "loop-free"
    assert verify_witness(v.witness, "a;b", "b;a", ExtensionConfig(("a", "b")))


def test_path_witness_shape():
    w = path_witness(("a", "b", "a"))
    assert [len(b.universe) for b in w.w.blocks] == [2, 1, 2, 1, 2]
    assert len(w.glued.vertices) == 4
    eps = path_witness(())
    assert len(eps.w) == 1 and eps.x == eps.y


def test_supplied_witness(fixture_dir):
    wit = fixture_witness(fixture_dir)
    v = decide_inequation(LHS, RHS, ABC, witness=wit)
    assert v.kind == "refuted" and v.engine == "verify" and v.exit_code == 1
    assert v.k == 4


def test_verify_witness_examples(fixture_dir):
    wit = fixture_witness(fixture_dir)
    assert verify_witness(wit, LHS, RHS, ABC)
    swapped = verify_witness(wit, RHS, LHS, ABC)
    assert not swapped and swapped.reason == "pair-not-in-lhs"
    # drop one c-edge
    blocks = list(wit.w.blocks)
    b = blocks[2]
    blocks[2] = Block(b.k, b.universe, {a: r for a, r in b.edges.items() if a != "c"})
    broken = Witness(DecompString(tuple(blocks)), wit.x, wit.y)
    assert not verify_witness(broken, LHS, RHS, ABC)


def test_verify_witness_is_stable(fixture_dir):
    wit = fixture_witness(fixture_dir)
    assert verify_witness(wit, LHS, RHS, ABC) and verify_witness(wit, LHS, RHS, ABC)


def test_verify_witness_bad_reference(fixture_dir):
    wit = fixture_witness(fixture_dir)
    bad = Witness(wit.w, (2, 3), wit.y)
    res = verify_witness(bad, LHS, RHS, ABC)
    assert not res and "no such vertex" in res.reason


def test_rejected_witness_gives_unknown(fixture_dir):
    wit = fixture_witness(fixture_dir)
    v = decide_inequation(RHS, LHS, ABC, witness=wit)
    assert v.kind == "unknown" and "rejected" in v.note


def test_notable_law_unknown_in_bounded_mode():
    cfg = ExtensionConfig(("a",))
    v = decide_inequation("(a+)^", "(a;a)+", cfg, mode="bounded", max_blocks=2)
    assert v.kind == "unknown" and v.k == 3 and v.bound == 2 and v.exit_code == 2


def test_bounded_refutation():
    cfg = ExtensionConfig(("a",))
    v = decide_inequation("a", "0", cfg, mode="bounded", max_blocks=1)
    assert v.kind == "refuted" and len(v.witness.w) == 1


def test_equations():
    ab = ExtensionConfig(("a", "b"))
    assert decide_equation("a", "a", ab).kind == "valid"
    v = decide_equation("a", "b", ab)
    assert v.kind == "refuted" and len(v.witness.w) == 1
    assert decide_text("a;(b;a)* == (a;b)*;a", ab).kind == "valid"


def test_equation_reverse_direction_noted():
    cfg = ExtensionConfig(("a",))
    v = decide_equation("a", "a|a;a", cfg)
    assert v.kind == "refuted" and "reverse" in v.note


def test_loop_terms_never_valid_from_bounded():
    cfg = ExtensionConfig(("a",))
    for mode in ("auto", "bounded"):
        v = decide_inequation("a^", "id", cfg, mode=mode, max_blocks=2)
        assert v.kind in ("unknown", "valid")
        if v.kind == "valid":
            assert v.engine == "full-micro"


def test_tests_class():
    cfg = ExtensionConfig(("a",), tests=("b",))
    v = decide_inequation("b", "0", cfg, max_blocks=1)
    assert v.kind == "refuted" and v.witness.conditions == {"Test": True}
    held = decide_inequation("b | not(b)", "id", cfg, mode="bounded", max_blocks=1)
    assert held.kind == "unknown"
    held = decide_inequation("id", "b | not(b)", cfg, mode="bounded", max_blocks=1)
    assert held.kind == "unknown"


def test_converse_class():
    cfg = ExtensionConfig(converse=("c",))
    v = decide_inequation("c", "c~", cfg, max_blocks=1)
    assert v.kind == "refuted" and v.witness.conditions == {"Conv": True}
    assert decide_inequation("c", "c~~", cfg, mode="bounded", max_blocks=1).kind == "unknown"


def test_nominal_class():
    cfg = ExtensionConfig(("a",), nominals=("l",))
    v = decide_inequation("id", "l", cfg, max_blocks=1)
    assert v.kind == "refuted" and v.witness.conditions == {"Nom": True}
    assert decide_inequation("l", "id", cfg, mode="bounded", max_blocks=1).kind == "unknown"


def test_domain_law_is_not_refuted():
    cfg = ExtensionConfig(("a",))
    assert decide_inequation("dom(a);a", "a", cfg, mode="bounded", max_blocks=1).kind == "unknown"
    refuted = decide_inequation("dom(a)", "a", cfg, max_blocks=1)
    assert refuted.kind == "refuted"


def test_invalid_options():
    cfg = ExtensionConfig(("a",))
    with pytest.raises(ValueError):
        decide_inequation("a", "a", cfg, mode="fast")
    with pytest.raises(ValueError):
        decide_inequation("a", "a", cfg, max_blocks=0)


def test_reserved_letters_rejected():
    cfg = ExtensionConfig(("a",))
    from loopkat.term import Var

    with pytest.raises(ValueError):
        decide_inequation(Var("$top"), Var("a"), cfg)


def test_full_mode_reports_micro_limit():
    cfg = ExtensionConfig(("a",))
    v = decide_inequation("a", "a", cfg, mode="full")
    assert v.kind == "unknown" and v.engine == "full-micro" and "micro limit" in v.note


def test_verdict_json_round_trip(fixture_dir):
    v = decide_inequation(LHS, RHS, ABC, witness=fixture_witness(fixture_dir))
    data = json.loads(v.dumps())
    assert set(data) == {"verdict", "engine", "witness", "bound", "mode", "k", "note"}
    back = Verdict.from_json(data)
    assert back.kind == v.kind and back.witness.w == v.witness.w
    assert back.witness.x == v.witness.x and back.witness.y == v.witness.y
    assert "witness: 5 block(s)" in describe(v)


def test_default_bound():
    cfg = ExtensionConfig(("a",))
    v = decide_inequation("a;a", "a;a", cfg, mode="bounded")
    assert v.bound == DEFAULT_MAX_BLOCKS
