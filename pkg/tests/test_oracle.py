from __future__ import annotations

import pytest

from loopkat.oracle import NoCounterexampleUpTo, OracleRefuted, brute_language_upto, enumerate_structures, oracle_decide
from loopkat.structure import class_violations, eval_term
from loopkat.term import TermError, ExtensionConfig, desugar, parse_term

A = ExtensionConfig(("a",), reserved=False)


def count(letters, n, cfg=None):
    return sum(1 for _ in enumerate_structures(letters, n, cfg))


def test_counts():
    assert count(("a",), 1) == 2
    assert count(("a",), 2) == 18
    tests = ExtensionConfig(tests=("b",), reserved=False)
    # the complement is derived and b itself must be a sub-identity
    assert count((), 2, tests) == 2 + 4


def test_class_enumeration_is_valid():
    cfg = ExtensionConfig(tests=("b",), converse=("c",), nominals=("l",), reserved=False)
    seen = 0
    for s in enumerate_structures((), 2, cfg):
        assert not class_violations(s, cfg)
        seen += 1
    # b: sub-identity (2 on 1 vertex, 4 on 2); c: free; l: one self-loop
    assert seen == 2 * 2 * 1 + 4 * 16 * 2


def test_bad_arguments():
    with pytest.raises(ValueError):
        list(enumerate_structures(("a",), 0))
    with pytest.raises(ValueError):
        list(enumerate_structures(("z",), 1, A))


def test_laws_and_refutations():
    p = lambda t: parse_term(t, A)
    assert isinstance(oracle_decide(p("a^"), p("id"), A, 2), NoCounterexampleUpTo)
    res = oracle_decide(p("a"), p("0"), A, 3)
    assert isinstance(res, OracleRefuted) and len(res.structure.vertices) == 1
    assert res.pair in eval_term(res.structure, p("a"))
    res = oracle_decide(p("(a+)^"), p("(a;a)+"), A, 3)
    assert res == NoCounterexampleUpTo(3, 530)


def test_top_is_native():
    t1 = desugar(parse_term("dom(a)", A), A)
    assert isinstance(oracle_decide(t1, parse_term("a;top", A), A, 3), NoCounterexampleUpTo)
    assert isinstance(oracle_decide(parse_term("top", A), parse_term("a|id", A), A, 2), OracleRefuted)


def test_brute_language():
    p = lambda t: parse_term(t, ExtensionConfig(("a", "b"), reserved=False))
    assert brute_language_upto(p("a*"), 2) == {(), ("a",), ("a", "a")}
    assert brute_language_upto(p("0"), 5) == set()
    assert brute_language_upto(p("(a|b);a"), 2) == {("a", "a"), ("b", "a")}
    assert brute_language_upto(p("a+"), 2) == {("a",), ("a", "a")}
    with pytest.raises(TermError):
        brute_language_upto(p("a^"), 2)
