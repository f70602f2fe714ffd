from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given

from loopkat.structure import (
    Block,
    DecodeError,
    DecompString,
    Structure,
    block_filters,
    block_length,
    class_violations,
    decode_block,
    decode_string,
    encode_block,
    encode_string,
    enumerate_blocks,
    eval_matrix,
    eval_term,
    glue,
    reflexive_transitive_closure,
)
from loopkat.term import ExtensionConfig, Loop, Star, Var, parse_term

from conftest import blocks, core_terms, decomp_strings

AB = ("a", "b")


def test_loop_on_self_loop():
    s = Structure(("x",), {"a": {("x", "x")}})
    assert eval_term(s, Loop(Var("a"))) == {("x", "x")}


def test_absent_letter_is_empty():
    s = Structure((1, 2), {"a": {(1, 2)}})
    assert eval_term(s, Var("b")) == frozenset()


def test_structure_validation():
    with pytest.raises(ValueError):
        Structure((), {})
    with pytest.raises(ValueError):
        Structure((1,), {"a": {(1, 2)}})
    with pytest.raises(ValueError):
        Block(2, frozenset({3}))
    with pytest.raises(ValueError):
        Block(2, frozenset())
    with pytest.raises(ValueError):
        DecompString(())


def test_glue_three_blocks():
    def blk(u, v):
        return Block(3, frozenset({u, v}), {"a": {(u, v)}, "b": {(v, u)}})

    g = glue(DecompString((blk(1, 2), blk(2, 3), blk(3, 1))))
    assert g.vertices == ((1, 1), (1, 2), (2, 3), (3, 1))
    assert g.structure.rel("a") == {((1, 1), (1, 2)), ((1, 2), (2, 3)), ((2, 3), (3, 1))}
    assert g.structure.rel("b") == {(v, u) for u, v in g.structure.rel("a")}
    assert g.class_of[(3, 3)] == (2, 3)


def test_glue_single_and_disjoint():
    b = Block(2, frozenset({1, 2}), {"a": {(1, 2)}})
    g = glue(DecompString((b,)))
    assert g.vertices == ((1, 1), (1, 2))
    g2 = glue(DecompString((Block(2, frozenset({1})), Block(2, frozenset({2})))))
    assert len(g2.vertices) == 2 and not g2.structure.edges


def test_glue_chains_only_through_adjacent_blocks():
    w = DecompString((Block(2, frozenset({1})), Block(2, frozenset({2})), Block(2, frozenset({1}))))
    g = glue(w)
    assert g.class_of[(1, 1)] != g.class_of[(3, 1)]


def test_enumerate_block_counts():
    assert len(list(enumerate_blocks(1, ("a",)))) == 2
    assert len(list(enumerate_blocks(2, ("a",)))) == 20
    assert len(list(enumerate_blocks(2, AB))) == 264


def test_enumeration_is_code_ordered_and_distinct():
    codes = [encode_block(b, AB) for b in enumerate_blocks(2, AB)]
    assert codes == sorted(codes)
    assert len(set(codes)) == len(codes)


def test_encoding_worked_example():
    b = Block(3, frozenset({1, 2}), {"a": {(1, 1), (1, 2)}, "b": {(2, 1)}})
    assert encode_block(b, AB) == "110" + "110000000" + "000100000"
    assert decode_block("110110000000000100000", 3, AB) == b


def test_encoding_trivial():
    assert encode_block(Block(2, frozenset({1, 2})), ("a",)) == "110000"
    assert decode_block("100000", 2, ("a",)) == Block(2, frozenset({1}))


def test_encoding_uses_working_alphabet_of_config():
    cfg = ExtensionConfig(AB, reserved=False)
    b = Block(2, frozenset({1}), {"b": {(1, 1)}})
    assert encode_block(b, cfg) == "10" + "0000" + "1000"


def test_decode_errors_are_distinct():
    with pytest.raises(DecodeError, match="length"):
        decode_block("10000", 2, ("a",))
    with pytest.raises(DecodeError, match="empty universe"):
        decode_block("000000", 2, ("a",))
    with pytest.raises(DecodeError, match="outside the universe"):
        decode_block("100100", 2, ("a",))
    with pytest.raises(DecodeError):
        decode_string("1000001", 2, ("a",))


def test_encode_rejects_foreign_letters():
    with pytest.raises(ValueError):
        encode_block(Block(2, frozenset({1}), {"z": {(1, 1)}}), AB)


def test_round_trip_rel2():
    for b in enumerate_blocks(2, AB):
        bits = encode_block(b, AB)
        assert len(bits) == block_length(2, 2)
        assert decode_block(bits, 2, AB) == b


@given(decomp_strings(3, AB, 4))
def test_string_round_trip(w):
    assert decode_string(encode_string(w, AB), 3, AB) == w


@given(blocks(3, ("a", "b", "c")))
def test_code_length(b):
    assert len(encode_block(b, ("a", "b", "c"))) == 3 + 3 * 9


def _powers_closure(m):
    n = m.shape[0]
    acc = np.eye(n, dtype=bool)
    cur = np.eye(n, dtype=bool)
    for _ in range(n):
        cur = (cur.astype(int) @ m.astype(int)) > 0
        acc |= cur
    return acc


@given(decomp_strings(2, AB, 3), core_terms(AB, max_leaves=4))
def test_star_is_reflexive_transitive_closure(w, t):
    s = glue(w).structure
    inner = eval_matrix(s, t)
    assert (eval_matrix(s, Star(t)) == _powers_closure(inner)).all()
    assert (reflexive_transitive_closure(inner) == _powers_closure(inner)).all()


@given(decomp_strings(2, AB, 4))
def test_glue_restricts_to_each_block(w):
    # on consistent strings each block is recovered from the gluing
    g = glue(w)
    consistent = "Incon" not in block_filters(w, ExtensionConfig(AB, reserved=False))
    for i, b in enumerate(w.blocks, start=1):
        cls = {x: g.class_of[(i, x)] for x in b.universe}
        back = {v: x for x, v in cls.items()}
        for a in AB:
            image = {(cls[u], cls[v]) for u, v in b.rel(a)}
            restricted = {(u, v) for u, v in g.structure.rel(a) if u in back and v in back}
            assert image <= restricted
            if consistent and len(w) <= 2:
                assert image == restricted


@given(decomp_strings(2, AB, 4))
def test_glue_is_union_of_images(w):
    g = glue(w)
    for a in AB:
        union = set()
        for i, b in enumerate(w.blocks, start=1):
            union |= {(g.class_of[(i, u)], g.class_of[(i, v)]) for u, v in b.rel(a)}
        assert g.structure.rel(a) == union
    assert set(g.vertices) == {g.class_of[(i, x)] for i, b in enumerate(w.blocks, start=1) for x in b.universe}


def test_filter_examples():
    cfg = ExtensionConfig(("a",), reserved=False)
    assert block_filters(DecompString((Block(2, frozenset({1})), Block(2, frozenset({2})))), cfg) == {"Inac"}
    w = DecompString((Block(2, frozenset({1, 2}), {"a": {(2, 2)}}), Block(2, frozenset({2}))))
    assert block_filters(w, cfg) == {"Incon"}


def test_filter_top_and_clean_block():
    cfg = ExtensionConfig(("a",), tests=("b",))
    full = set(itertools.product((1, 2), repeat=2))
    good = Block(2, frozenset({1, 2}), {"$top": full, "b": {(1, 1)}, "!b": {(2, 2)}})
    assert block_filters(DecompString((good,)), cfg) == set()
    bad = Block(2, frozenset({1, 2}), {"$top": {(1, 1)}, "b": {(1, 1)}, "!b": {(1, 1), (2, 2)}})
    assert block_filters(DecompString((bad,)), cfg) == {"Top", "Test"}


def test_filter_converse():
    cfg = ExtensionConfig(converse=("c",), reserved=False)
    ok = Block(2, frozenset({1, 2}), {"c": {(1, 2)}, "c~": {(2, 1)}})
    bad = Block(2, frozenset({1, 2}), {"c": {(1, 2)}, "c~": {(1, 2)}})
    assert block_filters(DecompString((ok,)), cfg) == set()
    assert block_filters(DecompString((bad,)), cfg) == {"Conv"}


def test_filter_nominal():
    cfg = ExtensionConfig(nominals=("l",), reserved=False)
    loop = Block(2, frozenset({1, 2}), {"l": {(1, 1)}})
    plain = Block(2, frozenset({1, 2}))
    assert block_filters(DecompString((loop, loop)), cfg) == set()
    # Incon only: the middle block drops the loop on a shared vertex
    assert block_filters(DecompString((loop, plain, loop)), cfg) == {"Incon"}
    assert "Nom" in block_filters(DecompString((plain,)), cfg)
    # the span between two carriers loses the vertex
    gap = Block(2, frozenset({2}))
    assert "Nom" in block_filters(DecompString((loop, gap, loop)), cfg)
    other = Block(2, frozenset({1, 2}), {"l": {(2, 2)}})
    assert "Nom" in block_filters(DecompString((loop, other)), cfg)
    off = Block(2, frozenset({1, 2}), {"l": {(1, 2)}})
    assert "Nom" in block_filters(DecompString((off,)), cfg)


def test_class_violations_on_structures():
    cfg = ExtensionConfig(tests=("b",), converse=("c",), nominals=("l",), reserved=False)
    s = Structure((1, 2), {"b": {(1, 1)}, "!b": {(2, 2)}, "c": {(1, 2)}, "c~": {(2, 1)}, "l": {(2, 2)}})
    assert class_violations(s, cfg) == set()
    s2 = Structure((1, 2), {"b": {(1, 1)}, "c": {(1, 2)}, "l": {(1, 1), (2, 2)}})
    assert class_violations(s2, cfg) == {"Test", "Conv", "Nom"}


def test_json_round_trips():
    s = Structure((1, 2), {"a": {(1, 2)}})
    assert Structure.from_json(s.to_json()) == s
    w = DecompString((Block(2, frozenset({1, 2}), {"a": {(1, 2)}}), Block(2, frozenset({2}))))
    assert DecompString.from_json(w.to_json()) == w
    assert DecompString.from_json({"blocks": w.to_json()}) == w


def test_fixture_counter_structure(fixture_dir):
    from loopkat.structure import load_json

    data = load_json(fixture_dir / "loop_counterexample.json")
    w = DecompString(tuple(Block.from_json(b, data["k"]) for b in data["blocks"]))
    cfg = ExtensionConfig(("a", "b", "c"), reserved=False)
    from loopkat.term import desugar

    t1 = desugar(parse_term("((a;(b+)^;a)^;c)+", cfg), cfg)
    t2 = desugar(parse_term("(a;(b|b;b);a;c*)|(c;a;b;a;c*)", cfg), cfg)
    g = glue(w)
    x, y = g.class_of[tuple(data["x"])], g.class_of[tuple(data["y"])]
    assert (x, y) in eval_term(g.structure, t1)
    assert (x, y) not in eval_term(g.structure, t2)
