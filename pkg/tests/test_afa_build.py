from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import given, strategies as st

from loopkat.afa_build import (
    build_filter_afas,
    build_lambda,
    build_lambda_bin,
    lambda_bin_autolen_closed_form,
    lambda_state_count,
    union_afa,
    valid_encoding_afa,
)
from loopkat.loop_automaton import compile_term, eval_decomposed, semantics
from loopkat.structure import (
    Block,
    DecodeError,
    DecompString,
    block_filters,
    decode_string,
    encode_string,
    enumerate_blocks,
    glue,
)
from loopkat.term import ExtensionConfig, parse_term
from loopkat.two_afa import LEFT, TRUE, Atom, Or, TwoAfa, autolen, holds_at, membership

from _gen import consistent_string, random_automaton, random_string, words

A = ("a",)
AB = ("a", "b")


def glued_nonempty(w, a) -> bool:
    g = glue(w)
    first = g.block_classes[0]
    return any(x in first and y in first for x, y in semantics(g.structure, a))


def test_state_count():
    a = compile_term(parse_term("a", ExtensionConfig(A)))
    lam = build_lambda(2, a)
    assert lambda_state_count(2, a) == 33
    assert len(list(lam.states())) == 33


def test_k_must_be_two():
    a = compile_term(parse_term("a", ExtensionConfig(A)))
    for build in (lambda: build_lambda(1, a), lambda: build_lambda_bin(1, A, a), lambda: build_filter_afas(1, ExtensionConfig(A))):
        with pytest.raises(ValueError):
            build()


def test_initial_rule():
    a = compile_term(parse_term("a", ExtensionConfig(A)))
    f = build_lambda(2, a).delta("init", LEFT)
    expected = {Atom(("?", x, a.source, y, a.target), 1) for x in (1, 2) for y in (1, 2)}
    assert isinstance(f, Or) and set(f.items) == expected


def test_reflexive_rule():
    a = compile_term(parse_term("a", ExtensionConfig(A)))
    f = build_lambda(2, a).delta(("ok", 1, a.source, 1, a.source), Block(2, frozenset({1})))
    assert f == TRUE or TRUE in f.items


@given(st.integers(0, 10_000))
def test_block_claims_match_decomposed_runs(seed):
    rng = random.Random(seed)
    a = random_automaton(rng, rng.randint(1, 3))
    w = random_string(rng, 2, AB, max_len=3)
    rel = eval_decomposed(w, a)
    g = glue(w)
    lam = build_lambda(2, a)
    j = rng.randint(1, len(w))
    uni = sorted(w.blocks[j - 1].universe)
    x, y = rng.choice(uni), rng.choice(uni)
    p, q = rng.choice(a.states), rng.choice(a.states)
    claim = holds_at(lam, list(w.blocks), (("ok", x, p, y, q), j))
    assert claim == ((p, g.class_of[(j, x)], q, g.class_of[(j, y)]) in rel)


def test_language_exhaustive_small():
    rng = random.Random(11)
    autos = [compile_term(parse_term(t, ExtensionConfig(A))) for t in ("a", "a^", "a;a", "(a;a)^", "a*;a^")]
    autos += [random_automaton(rng, 3, A) for _ in range(3)]
    blks = list(enumerate_blocks(2, A))
    strings = [DecompString((b,)) for b in blks] + [DecompString(p) for p in itertools.product(blks[::3], repeat=2)]
    for a in autos:
        lam = build_lambda(2, a)
        for w in strings:
            assert membership(lam, list(w.blocks)) == glued_nonempty(w, a)


@given(st.integers(0, 10_000))
def test_binary_matches_block_alphabet(seed):
    rng = random.Random(seed)
    a = random_automaton(rng, rng.randint(1, 3), A)
    w = random_string(rng, 2, A, max_len=2)
    lam = build_lambda(2, a)
    lam_bin = build_lambda_bin(2, A, a)
    assert membership(lam_bin, encode_string(w, A)) == membership(lam, list(w.blocks))


def test_binary_rejects_invalid_codes():
    a = compile_term(parse_term("id", ExtensionConfig(A)))
    lam_bin = build_lambda_bin(2, A, a)
    good = encode_string(DecompString((Block(2, frozenset({1, 2})),)), A)
    assert membership(lam_bin, good)
    assert not membership(lam_bin, good[:-1])
    assert not membership(lam_bin, "100100")       # edge bit outside the universe
    assert not membership(lam_bin, "000000")       # empty universe
    assert not membership(lam_bin, "")


def _decodable(bits, k, letters):
    try:
        decode_string(bits, k, letters)
        return True
    except DecodeError:
        return False


def test_valid_encoding_language():
    v = valid_encoding_afa(2, A)
    for w in words("01", 12):
        bits = "".join(w)
        assert membership(v, bits) == _decodable(bits, 2, A)


def test_filter_examples():
    cfg = ExtensionConfig(A, reserved=False)
    inac, incon = build_filter_afas(2, cfg)
    w1 = DecompString((Block(2, frozenset({1})), Block(2, frozenset({2}))))
    assert membership(inac, encode_string(w1, cfg))
    w2 = DecompString((Block(2, frozenset({1, 2}), {"a": {(2, 2)}}), Block(2, frozenset({2}))))
    assert membership(incon, encode_string(w2, cfg))
    assert not membership(inac, encode_string(w2, cfg))


def test_default_filter_selection():
    assert len(build_filter_afas(2, ExtensionConfig(A, reserved=False))) == 2
    assert len(build_filter_afas(2, ExtensionConfig(A))) == 3
    cfg = ExtensionConfig(A, tests=("b",), converse=("c",), nominals=("l",))
    assert len(build_filter_afas(2, cfg)) == 6
    with pytest.raises(ValueError):
        build_filter_afas(2, cfg, ["Bogus"])


FILTER_CFGS = [
    ExtensionConfig(A, reserved=False),
    ExtensionConfig(A),
    ExtensionConfig(tests=("b",), reserved=False),
    ExtensionConfig(converse=("c",), reserved=False),
    ExtensionConfig(nominals=("l",), reserved=False),
]


@given(st.integers(0, 10_000), st.sampled_from(range(len(FILTER_CFGS))))
def test_filters_match_predicates(seed, ci):
    cfg = FILTER_CFGS[ci]
    rng = random.Random(seed)
    gen = consistent_string if rng.random() < 0.6 else random_string
    w = gen(rng, 2, cfg.working, max_len=3, density=rng.choice((0.15, 0.4, 0.7)))
    violated = block_filters(w, cfg)
    names = ["Inac", "Incon"] + (["Top"] if "$top" in cfg.working else []) + (["Test"] if cfg.tests else [])
    names += (["Conv"] if cfg.converse else []) + (["Nom"] if cfg.nominals else [])
    bits = encode_string(w, cfg)
    for name, afa in zip(names, build_filter_afas(2, cfg)):
        assert membership(afa, bits) == (name in violated), name


def test_union_semantics():
    rng = random.Random(3)
    a = compile_term(parse_term("a", ExtensionConfig(A)))
    parts = build_filter_afas(2, ExtensionConfig(A, reserved=False)) + [build_lambda_bin(2, A, a)]
    u = union_afa(parts)
    for _ in range(200):
        n = rng.choice((6, 12, 18, rng.randint(0, 18)))
        bits = "".join(rng.choice("01") for _ in range(n))
        assert membership(u, bits) == any(membership(p, bits) for p in parts)
    everything = TwoAfa.from_table("t", {("t", LEFT): TRUE}, ("0", "1"))
    u2 = union_afa([parts[0], everything])
    assert all(membership(u2, "".join(w)) for w in words("01", 4))
    with pytest.raises(ValueError):
        union_afa([])


@pytest.mark.parametrize("text", ["a", "a^", "a;b*", "(a;b)^|b", "(a;(b;a)^)^"])
def test_closed_form_autolen(text):
    cfg = ExtensionConfig(AB)
    from loopkat.term import wrap_for_decision

    a = compile_term(wrap_for_decision(parse_term(text, cfg), cfg))
    for k in (2, 3):
        assert autolen(build_lambda_bin(k, cfg, a)) == lambda_bin_autolen_closed_form(k, cfg, a)


def test_binary_json_dump():
    a = compile_term(parse_term("a", ExtensionConfig(A)))
    data = build_lambda_bin(2, A, a).to_json()
    assert data["alphabet"] == ["0", "1"] and data["delta"]
